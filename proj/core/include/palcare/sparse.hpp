#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace palcare {

/// Non-owning view of one sparse row.
struct SparseRow {
    std::span<const int32_t> indices;
    std::span<const double> values;

    size_t nnz() const { return indices.size(); }
};

/// Sorted indices with parallel values; stored values are finite and non-zero.
struct SparseVector {
    std::vector<int32_t> indices;
    std::vector<double> values;

    size_t nnz() const { return indices.size(); }
    SparseRow view() const { return {indices, values}; }
    std::vector<double> to_dense(size_t dim) const;

    /// Throws Error(Validation) if an invariant is broken for dimension `dim`.
    void validate(size_t dim) const;

    bool operator==(const SparseVector&) const = default;
};

/// Compressed sparse row matrix, appended one row at a time.
class SparseMatrix {
public:
    SparseMatrix() = default;
    explicit SparseMatrix(size_t cols) : cols_(cols) {}

    void append_row(const SparseVector& row);

    size_t rows() const { return row_ptr_.size() - 1; }
    size_t cols() const { return cols_; }
    size_t nnz() const { return indices_.size(); }
    SparseRow row(size_t r) const;

    /// Text triplet format: a `rows cols nnz` header line, a line with those
    /// three numbers, then one `row col value` line per stored entry.
    void write(const std::filesystem::path& path) const;
    static SparseMatrix read(const std::filesystem::path& path);

    bool operator==(const SparseMatrix&) const = default;

private:
    size_t cols_ = 0;
    std::vector<size_t> row_ptr_{0};
    std::vector<int32_t> indices_;
    std::vector<double> values_;
};

}  // namespace palcare
