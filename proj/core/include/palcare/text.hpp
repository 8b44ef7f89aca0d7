#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace palcare::text {

/// Splits on a single delimiter, keeping empty fields.
std::vector<std::string_view> split(std::string_view line, char delim = '\t');

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

double parse_double(std::string_view field, const std::string& context);
long long parse_int(std::string_view field, const std::string& context);

/// Line-oriented reader that tracks 1-based line numbers for error messages.
class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path);

    bool next(std::string& line);
    size_t line_number() const { return line_number_; }
    const std::filesystem::path& path() const { return path_; }
    std::string where() const;

private:
    std::filesystem::path path_;
    std::ifstream in_;
    size_t line_number_ = 0;
};

/// Opens a file for writing or throws an Io error naming the path.
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);

}  // namespace palcare::text
