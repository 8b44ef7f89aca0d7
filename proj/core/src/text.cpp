#include "palcare/text.hpp"

#include <charconv>
#include <cmath>

#include "palcare/error.hpp"

namespace palcare::text {

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string format_double(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ptr);
}

double parse_double(std::string_view field, const std::string& context) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() ||
        !std::isfinite(value)) {
        throw Error(ErrorKind::Parse,
                    context + ": expected a finite number, got '" + std::string(field) + "'");
    }
    return value;
}

long long parse_int(std::string_view field, const std::string& context) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(ErrorKind::Parse,
                    context + ": expected an integer, got '" + std::string(field) + "'");
    }
    return value;
}

LineReader::LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) {
        throw Error(ErrorKind::Io, "cannot open " + path.string() + " for reading");
    }
}

bool LineReader::next(std::string& line) {
    if (!std::getline(in_, line)) {
        return false;
    }
    ++line_number_;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return true;
}

std::string LineReader::where() const {
    return path_.string() + ":" + std::to_string(line_number_);
}

std::ofstream open_output(const std::filesystem::path& path, bool binary) {
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    }
    return out;
}

}  // namespace palcare::text
