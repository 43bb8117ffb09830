#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "ppca/errors.hpp"

namespace ppca {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

}  // namespace detail

/// xoshiro256++ with distribution samplers. Every draw sequence is a pure
/// function of the 64-bit seed, so substreams derived from distinct keys
/// are reproducible independently of scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s += detail::kGolden;
            word = detail::mix64(s);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw strictly inside (0, 1); safe to pass to log().
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Poisson draw: sequential inversion below mean 10, Hormann's
    /// transformed rejection (PTRD) above. Both are exact and consume a
    /// deterministic draw sequence per call.
    std::int64_t poisson(double mean) {
        if (!(mean >= 0.0) || !std::isfinite(mean))
            throw validation_error("poisson: mean must be finite and non-negative");
        if (mean == 0.0) return 0;
        if (mean < 10.0) return poisson_inversion(mean);
        return poisson_ptrd(mean);
    }

    /// Gamma(shape, scale) via Marsaglia-Tsang squeeze.
    double gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0))
            throw validation_error("gamma: shape and scale must be positive");
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    /// Negative binomial (success probability p, stop after the r-th
    /// failure) as a Poisson-Gamma mixture; mean r p / (1 - p).
    std::int64_t negbin(double r, double p) {
        if (!(r > 0.0) || !(p > 0.0) || !(p < 1.0))
            throw validation_error("negbin: need r > 0 and p in (0, 1)");
        return poisson(gamma(r, p / (1.0 - p)));
    }

    /// Binomial(m, q) by m Bernoulli draws.
    std::int64_t binomial(std::int64_t m, double q) {
        if (m < 0 || !(q >= 0.0) || !(q <= 1.0))
            throw validation_error("binomial: need m >= 0 and q in [0, 1]");
        std::int64_t k = 0;
        for (std::int64_t i = 0; i < m; ++i) k += bernoulli(q) ? 1 : 0;
        return k;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::int64_t poisson_inversion(double mean) {
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::int64_t k = 0;
        // The cap is unreachable for mean < 10; it guards degenerate fp states.
        while (u > cdf && k < 2000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    std::int64_t poisson_ptrd(double mean) {
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        for (;;) {
            const double u = uniform() - 0.5;
            double v = uniform();
            const double us = 0.5 - std::abs(u);
            const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
            if (k < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * log_mean - mean - std::lgamma(k + 1.0))
                return static_cast<std::int64_t>(k);
        }
    }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Substream roles; distinct kinds never collide even for equal indices.
enum class StreamKind : std::uint64_t {
    latent = 0,    // latent normals + conditional count draws
    zi_mask = 1,   // zero-inflation Bernoulli masks
    augment = 2,   // augmentation replicate noise
    iid = 3,       // iid baseline draws
    design = 4,    // random orthogonal design matrices
};

/// Root of a reproducible stream family. A substream is derived purely
/// from (seed, index, kind), so per-observation generation is independent
/// of thread count and iteration order.
class SeededStream {
public:
    explicit SeededStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    Rng substream(std::uint64_t index, StreamKind kind = StreamKind::latent) const {
        std::uint64_t s = detail::mix64(seed_ + detail::kGolden * (index + 1));
        s = detail::mix64(s + detail::kGolden * (static_cast<std::uint64_t>(kind) + 1));
        return Rng(s);
    }

    /// Derived child family, e.g. one per benchmark replicate.
    SeededStream fork(std::uint64_t key) const {
        return SeededStream(detail::mix64(seed_ ^ (detail::kGolden * (key + 0x1234567))));
    }

private:
    std::uint64_t seed_;
};

}  // namespace ppca
