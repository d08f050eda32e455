#pragma once
// Seedable random streams with platform-stable output.
//
// std::*_distribution algorithms are implementation-defined, so every
// sampler here is built directly on the mt19937_64 bit stream. A campaign
// holds one seed; per-cycle streams are derived with a splitmix64 hash so
// any cycle can be replayed without running the ones before it.

#include <cmath>
#include <cstdint>
#include <random>

namespace dmag {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal via polar Box-Muller; caches the second deviate
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Binomial as a sum of Bernoulli trials: O(n) but exact and stable
    // across platforms. n stays small in campaigns (50 per basis); the
    // 10^5..10^6 draws only appear in convergence tests.
    std::uint64_t binomial(std::uint64_t n, double p) {
        if (p <= 0.0) return 0;
        if (p >= 1.0) return n;
        std::uint64_t k = 0;
        for (std::uint64_t i = 0; i < n; ++i)
            k += bernoulli(p) ? 1u : 0u;
        return k;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Deterministic substream derivation: stream(seed, cycle, purpose) is
// independent of how many other streams were drawn before it.
inline RandomStream derive_stream(std::uint64_t seed, std::uint64_t index,
                                  std::uint64_t purpose = 0) {
    const std::uint64_t mixed =
        splitmix64(seed ^ splitmix64(index ^ splitmix64(purpose + 0x51ed2701)));
    return RandomStream(mixed);
}

} // namespace dmag
