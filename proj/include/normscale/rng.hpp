#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace normscale {

// std::mt19937_64's output sequence is fixed by the C++ standard; the
// standard distributions are not, so index and normal draws are derived here.
// Bump the version whenever any draw below changes.
inline constexpr std::string_view kGeneratorName = "mt19937_64+lemire-bounded+box-muller";
inline constexpr int kGeneratorVersion = 1;

class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, bound) by Lemire's multiply-and-reject.
    std::uint64_t uniform_index(std::uint64_t bound) {
        if (bound <= 1) return 0;
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform double in (0, 1]: 53 high bits, shifted off zero.
    double uniform_open0() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // One Box-Muller draw per call; the sine partner is discarded so every
    // call consumes exactly two engine outputs.
    double normal(double mean, double stddev) {
        const double u1 = uniform_open0();
        const double u2 = uniform_open0();
        constexpr double two_pi = 6.283185307179586476925286766559;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * radius * std::cos(two_pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace normscale
