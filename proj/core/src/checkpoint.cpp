#include <bit>
#include <cstring>
#include <fstream>

#include "palcare/error.hpp"
#include "palcare/model.hpp"
#include "palcare/text.hpp"

namespace palcare {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'L', 'C', 'A', 'R', 'E', 'M'};
constexpr uint32_t kFormatVersion = 1;
constexpr uint32_t kMaxTokenLength = 4096;

class LittleEndianWriter {
public:
    explicit LittleEndianWriter(std::ostream& out) : out_(out) {}

    void u32(uint32_t v) { bytes(v, 4); }
    void u64(uint64_t v) { bytes(v, 8); }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    void str(std::string_view s) {
        u32(static_cast<uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

private:
    void bytes(uint64_t v, int n) {
        char buf[8];
        for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out_.write(buf, n);
    }
    std::ostream& out_;
};

class LittleEndianReader {
public:
    LittleEndianReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    uint32_t u32() { return static_cast<uint32_t>(bytes(4)); }
    uint64_t u64() { return bytes(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        uint32_t n = u32();
        if (n > kMaxTokenLength) fail("string field too long");
        std::string s(n, '\0');
        in_.read(s.data(), n);
        if (!in_) fail("truncated string field");
        return s;
    }
    [[noreturn]] void fail(const std::string& why) {
        throw Error(ErrorKind::Parse, source_ + ": " + why);
    }

private:
    uint64_t bytes(int n) {
        unsigned char buf[8];
        in_.read(reinterpret_cast<char*>(buf), n);
        if (!in_) fail("truncated checkpoint");
        uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= uint64_t(buf[i]) << (8 * i);
        return v;
    }
    std::istream& in_;
    std::string source_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MLPParams& params,
                     std::string_view vocabulary_checksum) {
    auto out = text::open_output(path, /*binary=*/true);
    LittleEndianWriter w(out);
    out.write(kMagic, sizeof(kMagic));
    w.u32(kFormatVersion);
    w.u64(params.input_dim());
    auto hidden = params.hidden_dims();
    w.u32(static_cast<uint32_t>(hidden.size()));
    for (size_t width : hidden) w.u64(width);
    w.str(activation_token(params.activation));
    w.str(vocabulary_checksum);
    for (const auto& layer : params.layers) {
        for (double v : layer.weights) w.f64(v);
        for (double v : layer.bias) w.f64(v);
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for reading");
    LittleEndianReader r(in, path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("not a palcare checkpoint");
    if (uint32_t version = r.u32(); version != kFormatVersion) {
        r.fail("unsupported checkpoint version " + std::to_string(version));
    }
    const uint64_t input_dim = r.u64();
    const uint32_t n_hidden = r.u32();
    if (input_dim == 0 || n_hidden == 0 || n_hidden > 1024) r.fail("implausible model shape");
    std::vector<size_t> widths;
    for (uint32_t i = 0; i < n_hidden; ++i) widths.push_back(r.u64());
    auto activation = parse_activation(r.str());
    if (!activation) r.fail("unknown activation");

    Checkpoint ckpt;
    ckpt.vocabulary_checksum = r.str();
    ckpt.params.activation = *activation;
    size_t in_dim = input_dim;
    widths.push_back(1);
    for (size_t out_dim : widths) {
        if (out_dim == 0 || out_dim > (1u << 20)) r.fail("implausible layer width");
        DenseLayer layer(in_dim, out_dim);
        for (double& v : layer.weights) v = r.f64();
        for (double& v : layer.bias) v = r.f64();
        ckpt.params.layers.push_back(std::move(layer));
        in_dim = out_dim;
    }
    if (in.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes after parameters");
    if (!ckpt.params.all_finite()) r.fail("non-finite parameters");
    return ckpt;
}

}  // namespace palcare
