#include "trimnet/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "trimnet/config.hpp"
#include "trimnet/errors.hpp"

namespace trimnet {
namespace {

constexpr std::array<unsigned char, 4> kMagic{'T', 'R', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

void append_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void append_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void append_f64(std::vector<unsigned char>& buf, double d) {
    append_u64(buf, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
    const std::vector<unsigned char>& bytes;
    const std::string& path;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            throw FormatError(path + ": truncated checkpoint (need " + std::to_string(n) +
                              " bytes at offset " + std::to_string(pos) + ", have " +
                              std::to_string(bytes.size() - pos) + ")");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
        return s;
    }
};

// fn(tensor&) over every parameter tensor in canonical order.
template <typename Net, typename Fn>
void for_each_tensor(Net& net, Fn&& fn) {
    for (auto& layer : net.layers) {
        std::visit(
            [&](auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, DenseLayer> || std::is_same_v<T, Conv2dLayer>) {
                    fn(l.weight);
                    fn(l.bias);
                }
            },
            layer);
    }
}

}  // namespace

std::uint32_t crc32(std::span<const unsigned char> bytes) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (unsigned char b : bytes) crc = table[(crc ^ b) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void save_checkpoint(const Network& net, const std::string& path) {
    net.validate();
    const std::string arch = describe_architecture(net);

    std::vector<unsigned char> buf;
    buf.reserve(32 + arch.size() + net.param_count() * 8);
    buf.insert(buf.end(), kMagic.begin(), kMagic.end());
    append_u32(buf, kVersion);
    append_u32(buf, static_cast<std::uint32_t>(arch.size()));
    buf.insert(buf.end(), arch.begin(), arch.end());
    append_u64(buf, net.param_count());
    for_each_tensor(net, [&](const Tensor& t) {
        for (std::size_t i = 0; i < t.size(); ++i) append_f64(buf, t[i]);
    });
    append_u32(buf, crc32(buf));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError(path + ": write failed");
}

Network load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                           std::istreambuf_iterator<char>()};
    if (in.bad()) throw FormatError(path + ": read failed");
    if (bytes.size() < 4) throw FormatError(path + ": file too short for a checkpoint");

    Reader r{bytes, path};
    const std::string magic = r.str(4);
    if (!std::equal(kMagic.begin(), kMagic.end(), magic.begin()))
        throw FormatError(path + ": not a checkpoint (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version) +
                          " (this build reads version " + std::to_string(kVersion) + ")");

    // Verify the trailing CRC before trusting any lengths read below.
    if (bytes.size() < 4) throw FormatError(path + ": truncated checkpoint");
    const std::uint32_t stored =
        std::uint32_t(bytes[bytes.size() - 4]) | (std::uint32_t(bytes[bytes.size() - 3]) << 8) |
        (std::uint32_t(bytes[bytes.size() - 2]) << 16) |
        (std::uint32_t(bytes[bytes.size() - 1]) << 24);
    const std::uint32_t computed =
        crc32(std::span<const unsigned char>(bytes.data(), bytes.size() - 4));
    if (stored != computed)
        throw FormatError(path + ": checksum mismatch (file is corrupt)");

    const std::uint32_t arch_len = r.u32();
    const std::string arch = r.str(arch_len);
    Network net = network_from_architecture(arch);

    const std::uint64_t params = r.u64();
    if (params != net.param_count())
        throw FormatError(path + ": parameter count " + std::to_string(params) +
                          " does not match architecture \"" + arch + "\" (" +
                          std::to_string(net.param_count()) + ")");
    for_each_tensor(net, [&](Tensor& t) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.f64();
    });
    if (r.pos != bytes.size() - 4)
        throw FormatError(path + ": trailing bytes after parameters");
    return net;
}

}  // namespace trimnet
