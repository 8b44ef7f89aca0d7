#include "palcare/sparse.hpp"

#include <cmath>
#include <string>

#include "palcare/error.hpp"
#include "palcare/text.hpp"

namespace palcare {

std::vector<double> SparseVector::to_dense(size_t dim) const {
    std::vector<double> dense(dim, 0.0);
    for (size_t k = 0; k < indices.size(); ++k) {
        dense.at(static_cast<size_t>(indices[k])) = values[k];
    }
    return dense;
}

void SparseVector::validate(size_t dim) const {
    if (indices.size() != values.size()) {
        throw Error(ErrorKind::Validation, "sparse vector: index/value length mismatch");
    }
    for (size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] < 0 || static_cast<size_t>(indices[k]) >= dim) {
            throw Error(ErrorKind::Validation, "sparse vector: index out of range");
        }
        if (k > 0 && indices[k] <= indices[k - 1]) {
            throw Error(ErrorKind::Validation, "sparse vector: indices not strictly increasing");
        }
        if (!std::isfinite(values[k]) || values[k] == 0.0) {
            throw Error(ErrorKind::Validation, "sparse vector: values must be finite and non-zero");
        }
    }
}

void SparseMatrix::append_row(const SparseVector& row) {
    row.validate(cols_);
    indices_.insert(indices_.end(), row.indices.begin(), row.indices.end());
    values_.insert(values_.end(), row.values.begin(), row.values.end());
    row_ptr_.push_back(indices_.size());
}

SparseRow SparseMatrix::row(size_t r) const {
    const size_t begin = row_ptr_.at(r);
    const size_t end = row_ptr_.at(r + 1);
    return {std::span<const int32_t>(indices_).subspan(begin, end - begin),
            std::span<const double>(values_).subspan(begin, end - begin)};
}

void SparseMatrix::write(const std::filesystem::path& path) const {
    auto out = text::open_output(path);
    out << "rows\tcols\tnnz\n" << rows() << '\t' << cols_ << '\t' << nnz() << '\n';
    for (size_t r = 0; r < rows(); ++r) {
        for (size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            out << r << '\t' << indices_[k] << '\t' << text::format_double(values_[k]) << '\n';
        }
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

SparseMatrix SparseMatrix::read(const std::filesystem::path& path) {
    text::LineReader reader(path);
    std::string line;
    if (!reader.next(line) || line != "rows\tcols\tnnz" || !reader.next(line)) {
        throw Error(ErrorKind::Parse, reader.where() + ": missing sparse matrix header");
    }
    auto dims = text::split(line);
    if (dims.size() != 3) throw Error(ErrorKind::Parse, reader.where() + ": bad dimensions");
    const auto rows = static_cast<size_t>(text::parse_int(dims[0], reader.where()));
    SparseMatrix m(static_cast<size_t>(text::parse_int(dims[1], reader.where())));
    const auto nnz = static_cast<size_t>(text::parse_int(dims[2], reader.where()));

    SparseVector current;
    size_t current_row = 0;
    auto flush_until = [&](size_t target) {
        while (m.rows() < target) {
            m.append_row(current);
            current = {};
        }
    };
    while (reader.next(line)) {
        if (line.empty()) continue;
        auto f = text::split(line);
        if (f.size() != 3) throw Error(ErrorKind::Parse, reader.where() + ": expected 3 fields");
        auto r = static_cast<size_t>(text::parse_int(f[0], reader.where()));
        if (r < current_row || r >= rows) {
            throw Error(ErrorKind::Parse, reader.where() + ": row out of order or range");
        }
        if (r != current_row) {
            flush_until(r);
            current_row = r;
        }
        current.indices.push_back(static_cast<int32_t>(text::parse_int(f[1], reader.where())));
        current.values.push_back(text::parse_double(f[2], reader.where()));
    }
    flush_until(rows);
    if (m.nnz() != nnz) {
        throw Error(ErrorKind::Parse, path.string() + ": header nnz does not match entries");
    }
    return m;
}

}  // namespace palcare
