#include "semran/codec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "semran/sim/errors.hpp"

namespace semran::codec {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
    std::uint64_t u(int n) {
        if (pos_ + static_cast<std::size_t>(n) > b_.size()) throw CheckpointError("checkpoint truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    double f64() { return std::bit_cast<double>(u(8)); }
    std::size_t pos() const { return pos_; }

private:
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const CodecParams& p) {
    std::vector<std::uint8_t> out;
    out.reserve(32 + 8 * p.n_params());
    for (char c : {'S', 'R', 'C', 'K'}) out.push_back(static_cast<std::uint8_t>(c));
    put_u32(out, kCheckpointFormat);
    put_u32(out, static_cast<std::uint32_t>(p.d));
    put_u32(out, static_cast<std::uint32_t>(p.D));
    put_u64(out, p.version);
    put_u64(out, p.parent_version);
    for (const auto* block : {&p.W, &p.b, &p.Phi, &p.c})
        for (double v : *block) put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

CodecParams deserialize(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "SRCK", 4) != 0) throw CheckpointError("bad checkpoint magic");
    Reader r(bytes);
    r.u(4);
    if (r.u(4) != kCheckpointFormat) throw CheckpointError("unsupported checkpoint format");
    const int d = static_cast<int>(r.u(4));
    const int D = static_cast<int>(r.u(4));
    if (d <= 0 || D <= 0 || d > 4096 || D > 4096) throw CheckpointError("implausible checkpoint dimensions");
    CodecParams p = CodecParams::zeros(d, D);
    p.version = r.u(8);
    p.parent_version = r.u(8);
    for (auto* block : {&p.W, &p.b, &p.Phi, &p.c})
        for (auto& v : *block) v = r.f64();
    if (r.pos() != bytes.size()) throw CheckpointError("trailing bytes in checkpoint");
    return p;
}

std::uint64_t hash_bytes(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_checkpoint(const CodecParams& p, const std::filesystem::path& path) {
    const auto bytes = serialize(p);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

CodecParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot read checkpoint '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace semran::codec
