#ifndef LLBAR_RANDOM_HPP
#define LLBAR_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

#include "llbar/spectral.hpp"

namespace llbar {

// Counter-based generator. Every draw is a pure function of (key, counter),
// so a coefficient's value does not depend on iteration order, thread
// count, grid size or retained band:
//
//   mix(z)       = SplitMix64 finaliser
//   draw(k, c)   = mix(k + (c + 1) * 0x9E3779B97F4A7C15)
//   uniform(k,c) = (draw(k, c) >> 11) * 2^-53
//   gauss(k, c)  = sqrt(-2 ln(1 - uniform(k, 2c))) * cos(2 pi uniform(k, 2c + 1))
//   key(seed, s) = mix(mix(seed) ^ (s * 0xD1B54A32D192ED03 + 1))

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 1));
}

constexpr std::uint64_t draw(std::uint64_t key, std::uint64_t counter) {
    return mix64(key + (counter + 1) * golden_gamma);
}

inline double uniform01(std::uint64_t key, std::uint64_t counter) {
    return static_cast<double>(draw(key, counter) >> 11) * 0x1.0p-53;
}

inline double gaussian(std::uint64_t key, std::uint64_t counter) {
    const double u1 = 1.0 - uniform01(key, 2 * counter);
    const double u2 = uniform01(key, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Counter for component c of mode k; independent of the retained band.
constexpr std::uint64_t mode_counter(const Index3& k, int c) {
    const std::uint64_t packed = (static_cast<std::uint64_t>(k[0]) << 40) |
                                 (static_cast<std::uint64_t>(k[1]) << 20) |
                                 static_cast<std::uint64_t>(k[2]);
    return packed * 3 + static_cast<std::uint64_t>(c);
}

/// Gaussian coefficients scaled by amplitude * (1 + lambda_k)^(-decay/2) on
/// the modes 0 <= k_j < band_j; decay = 0 is the flat law.
inline SpectralField random_spectral(const GridSpec& grid, Index3 band, double decay,
                                     double amplitude, std::uint64_t key) {
    require(decay >= 0.0, "random_spectral: decay exponent must be >= 0");
    SpectralField s(grid, band);
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
        const Index3 k = s.mode_index(m);
        const double w = amplitude * std::pow(1.0 + s.eigenvalue(k), -0.5 * decay);
        double* c = s.at(m);
        for (int i = 0; i < 3; ++i) c[i] = w * gaussian(key, mode_counter(k, i));
    }
    return s;
}

} // namespace llbar

#endif // LLBAR_RANDOM_HPP
