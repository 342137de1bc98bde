#pragma once

#include <cstdint>
#include <random>

namespace regimekit {

/// 64-bit seed. Identical seeds give bit-identical streams on every platform.
struct Seed {
    std::uint64_t value = 0;
};

/// SplitMix64 finalizer; used to derive substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of substream `stream` of `parent`: splitmix64(splitmix64(parent) ^ splitmix64(stream + 1)).
constexpr Seed substream(Seed parent, std::uint64_t stream) noexcept {
    return Seed{splitmix64(splitmix64(parent.value) ^ splitmix64(stream + 1))};
}

/// Inverse of the standard normal CDF (Wichura, AS 241 PPND16; relative accuracy ~1e-16).
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

/// Portable generator: std::mt19937_64 (fully specified by the C++ standard) feeding
/// 53-bit uniforms and inverse-CDF Gaussians. The standard library distributions are
/// deliberately not used because their algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(Seed seed) : engine_(seed.value) {}

    /// Uniform on the open interval (0, 1).
    double uniform() {
        // 53 random mantissa bits, shifted half a step off zero.
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return normal_quantile(uniform()); }

    /// Draw an index from a discrete distribution given by `probs` (need not be normalized).
    template <typename Probabilities>
    int categorical(const Probabilities& probs) {
        double total = 0.0;
        for (auto p : probs) total += p;
        const double u = uniform() * total;
        double acc = 0.0;
        int last_positive = 0;
        int i = 0;
        for (auto p : probs) {
            if (p > 0.0) last_positive = i;
            acc += p;
            if (u < acc) return i;
            ++i;
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace regimekit
