#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace ambc
{

/// SplitMix64 finalizer. Stable across platforms and releases.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a list of tags.
///
/// seed' = mix64(... mix64(mix64(seed) ^ tag0) ^ tag1 ...). Used for the
/// per-link, per-BD tap streams and for per-realization channel seeds.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept
{
    std::uint64_t h = mix64(seed);
    for (std::uint64_t t : tags)
        h = mix64(h ^ t);
    return h;
}

/// Circularly-symmetric complex Gaussian sampler (Box-Muller on a
/// std::mt19937_64 stream, whose output sequence is fixed by the standard).
class ComplexGaussian
{
public:
    explicit ComplexGaussian(std::uint64_t seed) : engine_(seed) {}

    /// One CN(0, variance) draw; real and imaginary parts each carry variance/2.
    std::complex<double> operator()(double variance)
    {
        const double u1 = 1.0 - unit(); // (0, 1]
        const double u2 = unit();
        const double radius = std::sqrt(-variance * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

private:
    // 53-bit uniform on [0, 1); std::uniform_real_distribution is not portable.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
};

} // namespace ambc
