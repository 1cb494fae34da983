#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "splatfix/error.hpp"
#include "splatfix/io.hpp"

namespace splatfix::io {
namespace {

void put_le(std::vector<unsigned char>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
    }
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return v;
}

constexpr std::size_t kHeaderSize = 8 + 4 + 8;
constexpr std::size_t kRecordSize = 4 * kParamsPerGaussian;

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const GaussianSet& set) {
    std::vector<unsigned char> buf(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    put_le(buf, kCheckpointVersion, 4);
    put_le(buf, set.size(), 8);
    for (const Gaussian& g : set.gaussians()) {
        for (double v : g.params()) {
            put_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw DataError(path.string() + ": cannot write checkpoint");
    }
}

GaussianSet read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(path.string() + ": cannot open checkpoint");
    }
    const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
    if (buf.size() < kHeaderSize || std::memcmp(buf.data(), kCheckpointMagic, 8) != 0) {
        throw DataError(path.string() + ": not a checkpoint file");
    }
    const auto version = static_cast<std::uint32_t>(get_le(buf.data() + 8, 4));
    if (version != kCheckpointVersion) {
        throw DataError(path.string() + ": checkpoint version " + std::to_string(version) +
                        " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint64_t count = get_le(buf.data() + 12, 8);
    if (count > (buf.size() - kHeaderSize) / kRecordSize ||
        buf.size() != kHeaderSize + count * kRecordSize) {
        throw DataError(path.string() + ": checkpoint size does not match its Gaussian count");
    }
    GaussianSet set;
    const unsigned char* p = buf.data() + kHeaderSize;
    for (std::uint64_t i = 0; i < count; ++i) {
        GaussianParams params;
        for (std::size_t k = 0; k < kParamsPerGaussian; ++k, p += 4) {
            params[k] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(p, 4)));
        }
        set.push_back(Gaussian::from_params(params));
    }
    return set;
}

}  // namespace splatfix::io
