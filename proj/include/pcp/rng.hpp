#pragma once

#include <cmath>
#include <cstdint>

namespace pcp {

/// splitmix64 step; also used as the mixing function for derived seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from (seed, stream index); used for
/// per-cell and per-replicate substreams so work can be split freely without
/// changing results.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL);
    std::uint64_t out = splitmix64(s);
    splitmix64(s);
    return out ^ s;
}

/// Small counter-based generator: a splitmix64 stream.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform on (0, 1): 53-bit mantissa, never exactly 0.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

namespace detail {

inline long poisson_inversion(double mean, CounterRng& rng) {
    // sequential search on the CDF; adequate for small means
    const double q = std::exp(-mean);
    double p = q, cdf = q;
    const double u = rng.uniform();
    long k = 0;
    while (u > cdf) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
        if (p < 1e-300 && cdf < u) break; // guard against stalls far in the tail
    }
    return k;
}

// Hoermann's PTRS transformed-rejection sampler, for mean >= 10.
inline long poisson_ptrs(double mean, CounterRng& rng) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = kf * loglam - mean - std::lgamma(kf + 1.0);
        if (lhs <= rhs) return static_cast<long>(kf);
    }
}

} // namespace detail

/// One Poisson draw: inversion below mean 10, PTRS rejection above.
inline long poisson_draw(double mean, CounterRng& rng) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) return detail::poisson_inversion(mean, rng);
    return detail::poisson_ptrs(mean, rng);
}

} // namespace pcp
