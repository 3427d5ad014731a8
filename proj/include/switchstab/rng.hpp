#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace switchstab {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * @brief Counter-based random stream.
 *
 * The k-th output is mix64(key + (k+1)·γ), so a stream is fully determined
 * by its key and position. Independent streams are derived from a master
 * seed and a path of integer labels (operation, replica, ...).
 */
class Stream {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}

    /// Stream keyed by (seed, labels...). Distinct label paths give unrelated keys.
    static constexpr Stream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) noexcept {
        std::uint64_t key = mix64(seed ^ 0x6A09E667F3BCC909ULL);
        for (std::uint64_t label : labels) key = mix64(key ^ mix64(label + kGamma));
        return Stream(key);
    }

    constexpr std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGamma); }

    /// Uniform on (0, 1], 53-bit resolution.
    constexpr double uniform_open0() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Exponential with the given rate, by inversion of a (0,1] uniform.
    double exponential(double rate) noexcept { return -std::log(uniform_open0()) / rate; }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Labels separating the streams used by different Monte Carlo operations.
namespace stream_label {
inline constexpr std::uint64_t kLyapunov = 1;
inline constexpr std::uint64_t kPropagatorNorm = 2;
inline constexpr std::uint64_t kMonotoneCheck = 3;
inline constexpr std::uint64_t kPathSample = 4;
}  // namespace stream_label

}  // namespace switchstab
