#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace totsim {

/// Seeded 64-bit Mersenne Twister with a portable bounded draw.
///
/// std::uniform_int_distribution is implementation-defined, so draws go through
/// Lemire's multiply-and-reject method instead; the same seed yields the same
/// sequence with every standard library.
class Rng {
public:
    static constexpr std::string_view algorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). `bound` must be positive.
    std::uint64_t uniform_below(std::uint64_t bound);

    /// Independent stream derived from a base seed and a stream label.
    static Rng derive(std::uint64_t seed, std::string_view stream);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x);

}  // namespace totsim
