#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>

namespace tnlab {

/// Philox4x32-10 block: a pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based random stream keyed by (seed, stream id).
///
/// Every draw is addressed by (step, index): the same address always yields
/// the same numbers, independent of call order or thread.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    /// Derived stream for a (member, purpose) pair.
    RngStream split(std::uint64_t member, std::string_view purpose) const;

    std::array<std::uint32_t, 4> block(std::uint64_t step, std::uint64_t index) const;
    /// Two independent uniforms in (0, 1).
    std::pair<double, double> uniforms(std::uint64_t step, std::uint64_t index) const;
    /// Two independent standard normals.
    std::pair<double, double> normals(std::uint64_t step, std::uint64_t index) const;

    bool operator==(const RngStream& other) const = default;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
};

/// Purposes used across the library when splitting experiment seeds.
namespace purpose {
inline constexpr std::string_view common_noise = "common-noise";
inline constexpr std::string_view idiosyncratic = "idiosyncratic";
inline constexpr std::string_view initial_data = "initial-data";
inline constexpr std::string_view acw = "acw";
}  // namespace purpose

}  // namespace tnlab
