#include "tnlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace tnlab {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

RngStream RngStream::split(std::uint64_t member, std::string_view purpose) const {
    // FNV-1a over the purpose tag, then mixed with the parent stream and member.
    std::uint64_t tag = 0xcbf29ce484222325ull;
    for (char c : purpose) {
        tag ^= static_cast<unsigned char>(c);
        tag *= 0x100000001b3ull;
    }
    const std::uint64_t id = splitmix64(splitmix64(stream_ ^ tag) + member);
    return RngStream(seed_, id);
}

std::array<std::uint32_t, 4> RngStream::block(std::uint64_t step, std::uint64_t index) const {
    const std::uint64_t key64 = splitmix64(seed_ ^ splitmix64(stream_));
    return philox4x32({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                       static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)},
                      {static_cast<std::uint32_t>(key64), static_cast<std::uint32_t>(key64 >> 32)});
}

std::pair<double, double> RngStream::uniforms(std::uint64_t step, std::uint64_t index) const {
    const auto b = block(step, index);
    const std::uint64_t a = ((static_cast<std::uint64_t>(b[0]) << 32) | b[1]) >> 11;
    const std::uint64_t c = ((static_cast<std::uint64_t>(b[2]) << 32) | b[3]) >> 11;
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    return {(static_cast<double>(a) + 0.5) * kScale, (static_cast<double>(c) + 0.5) * kScale};
}

std::pair<double, double> RngStream::normals(std::uint64_t step, std::uint64_t index) const {
    const auto [u1, u2] = uniforms(step, index);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace tnlab
