#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ppca/matrix.hpp"
#include "ppca/parallel.hpp"
#include "ppca/rng.hpp"
#include "ppca/types.hpp"

namespace ppca {

/// Largest admissible conditional cell mean; exp of an unconstrained
/// Gaussian can explode and sampling should fail loudly when it does.
inline constexpr double kMaxCellMean = 1e12;

/// iid count baseline distributions for the interpretation tests and the
/// augmentation noise.
struct IidDist {
    enum class Kind { poisson, negbin, binomial };

    Kind kind = Kind::poisson;
    double lambda = 1.0;   // poisson mean
    double r = 1.0;        // negbin failures
    double p = 0.5;        // negbin success probability
    std::int64_t m = 1;    // binomial trials
    double q = 0.5;        // binomial success probability

    static IidDist poisson(double lambda) {
        if (!(lambda >= 0.0)) throw validation_error("iid poisson: lambda must be >= 0");
        IidDist d;
        d.kind = Kind::poisson;
        d.lambda = lambda;
        return d;
    }
    static IidDist negbin(double r, double p) {
        if (!(r > 0.0) || !(p > 0.0) || !(p < 1.0))
            throw validation_error("iid negbin: need r > 0 and p in (0, 1)");
        IidDist d;
        d.kind = Kind::negbin;
        d.r = r;
        d.p = p;
        return d;
    }
    static IidDist binomial(std::int64_t m, double q) {
        if (m < 1 || !(q >= 0.0) || !(q <= 1.0))
            throw validation_error("iid binomial: need m >= 1 and q in [0, 1]");
        IidDist d;
        d.kind = Kind::binomial;
        d.m = m;
        d.q = q;
        return d;
    }

    std::int64_t draw(Rng& g) const {
        switch (kind) {
            case Kind::poisson: return g.poisson(lambda);
            case Kind::negbin: return g.negbin(r, p);
            case Kind::binomial: return g.binomial(m, q);
        }
        return 0;
    }

    double mean() const {
        switch (kind) {
            case Kind::poisson: return lambda;
            case Kind::negbin: return r * p / (1.0 - p);
            case Kind::binomial: return static_cast<double>(m) * q;
        }
        return 0.0;
    }
};

namespace detail {

/// Latent draw for one observation; Z = tau * L1^(1/2) G L2^(1/2) with G
/// standard normal, so Cov(vec Z) = tau^2 (Lambda2 (x) Lambda1).
inline Matrix draw_latent(const PlnParams& params, Rng& g) {
    const std::size_t d1 = params.d1(), d2 = params.d2();
    const double tau = std::sqrt(params.tau2);
    Matrix z(d1, d2);
    for (std::size_t a = 0; a < d1; ++a) {
        const double sa = std::sqrt(params.lambda1[a]);
        for (std::size_t b = 0; b < d2; ++b)
            z(a, b) = tau * sa * std::sqrt(params.lambda2[b]) * g.normal();
    }
    return z;
}

inline void draw_pln_counts(const PlnParams& params, const Matrix& z, std::size_t obs, Rng& g,
                            std::int64_t* out) {
    const Matrix signal = params.u1 * z * params.u2.transposed();
    const std::size_t p1 = params.p1(), p2 = params.p2();
    for (std::size_t j = 0; j < p1; ++j)
        for (std::size_t k = 0; k < p2; ++k) {
            const double mean = std::exp(params.mu(j, k) + signal(j, k));
            if (!(mean <= kMaxCellMean))
                throw sampling_error("sample_pln: cell mean overflow at (obs=" +
                                     std::to_string(obs) + ", row=" + std::to_string(j) +
                                     ", col=" + std::to_string(k) + ")");
            out[j * p2 + k] = g.poisson(mean);
        }
}

}  // namespace detail

/// n latent matrices Z_i; observation i depends only on substream(i).
inline std::vector<Matrix> sample_latent(const PlnParams& params, std::size_t n,
                                         const SeededStream& stream) {
    require_valid(params, "sample_latent");
    std::vector<Matrix> out(n);
    parallel_for(n, [&](std::size_t i) {
        Rng g = stream.substream(i, StreamKind::latent);
        out[i] = detail::draw_latent(params, g);
    });
    return out;
}

struct PlnSample {
    CountTensor counts;
    std::vector<Matrix> latent;  // the Z_i behind each observation
};

/// Counts from the conditional-Poisson model, with the generating latent
/// matrices returned alongside for oracle checks.
inline PlnSample sample_pln(const PlnParams& params, std::size_t n, const SeededStream& stream) {
    require_valid(params, "sample_pln");
    const std::size_t cells = params.p1() * params.p2();
    std::vector<std::int64_t> data(n * cells);
    std::vector<Matrix> latent(n);
    parallel_for(n, [&](std::size_t i) {
        Rng g = stream.substream(i, StreamKind::latent);
        latent[i] = detail::draw_latent(params, g);
        detail::draw_pln_counts(params, latent[i], i, g, data.data() + i * cells);
    });
    return PlnSample{CountTensor(n, params.p1(), params.p2(), std::move(data)),
                     std::move(latent)};
}

/// Zero-inflated counts x = b .* y. The Poisson part y shares the
/// substream of sample_pln and the Bernoulli masks use a separate one, so
/// pi == 1 reproduces sample_pln bitwise.
inline CountTensor sample_zipln(const PlnParams& params, const ZeroInflationMask& mask,
                                std::size_t n, const SeededStream& stream) {
    require_valid(params, "sample_zipln");
    if (mask.pi.rows() != params.p1() || mask.pi.cols() != params.p2())
        throw validation_error("sample_zipln: mask shape does not match parameters");
    const std::size_t p1 = params.p1(), p2 = params.p2();
    const std::size_t cells = p1 * p2;
    std::vector<std::int64_t> data(n * cells);
    parallel_for(n, [&](std::size_t i) {
        Rng g = stream.substream(i, StreamKind::latent);
        const Matrix z = detail::draw_latent(params, g);
        detail::draw_pln_counts(params, z, i, g, data.data() + i * cells);
        Rng mg = stream.substream(i, StreamKind::zi_mask);
        for (std::size_t j = 0; j < p1; ++j)
            for (std::size_t k = 0; k < p2; ++k) {
                const double pi = mask.pi(j, k);
                const bool keep = pi >= 1.0 ? true : mg.bernoulli(pi);
                if (!keep) data[i * cells + j * p2 + k] = 0;
            }
    });
    return CountTensor(n, p1, p2, std::move(data));
}

/// All n*p1*p2 entries iid from the given count distribution.
inline CountTensor sample_iid(const IidDist& dist, std::size_t n, std::size_t p1, std::size_t p2,
                              const SeededStream& stream) {
    const std::size_t cells = p1 * p2;
    std::vector<std::int64_t> data(n * cells);
    parallel_for(n, [&](std::size_t i) {
        Rng g = stream.substream(i, StreamKind::iid);
        for (std::size_t c = 0; c < cells; ++c) data[i * cells + c] = dist.draw(g);
    });
    return CountTensor(n, p1, p2, std::move(data));
}

/// Real-valued draws from the additive-noise model X = mu + U1 Z U2' + eps.
inline std::vector<Matrix> sample_gaussian(const GaussianParams& params, std::size_t n,
                                           const SeededStream& stream) {
    require_valid(params.base, "sample_gaussian");
    if (!(params.sigma2 > 0.0)) throw validation_error("sample_gaussian: sigma2 must be positive");
    const double sigma = std::sqrt(params.sigma2);
    const std::size_t p1 = params.base.p1(), p2 = params.base.p2();
    std::vector<Matrix> out(n);
    parallel_for(n, [&](std::size_t i) {
        Rng g = stream.substream(i, StreamKind::latent);
        const Matrix z = detail::draw_latent(params.base, g);
        Matrix x = params.base.u1 * z * params.base.u2.transposed();
        for (std::size_t j = 0; j < p1; ++j)
            for (std::size_t k = 0; k < p2; ++k)
                x(j, k) += params.base.mu(j, k) + sigma * g.normal();
        out[i] = std::move(x);
    });
    return out;
}

/// Rounds real observations to the nearest integer count; used to feed
/// continuous-model draws through the count-data pipeline. Values that
/// round below zero are rejected.
inline CountTensor quantize_counts(const std::vector<Matrix>& observations) {
    if (observations.empty()) throw validation_error("quantize_counts: empty sample");
    const std::size_t n = observations.size();
    const std::size_t p1 = observations[0].rows(), p2 = observations[0].cols();
    std::vector<std::int64_t> data(n * p1 * p2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p1; ++j)
            for (std::size_t k = 0; k < p2; ++k) {
                const double rounded = std::nearbyint(observations[i](j, k));
                if (rounded < 0.0)
                    throw validation_error("quantize_counts: negative value at obs " +
                                           std::to_string(i));
                data[(i * p1 + j) * p2 + k] = static_cast<std::int64_t>(rounded);
            }
    return CountTensor(n, p1, p2, std::move(data));
}

/// Haar-distributed random orthogonal matrix: QR of an iid normal matrix
/// with the R diagonal sign-corrected.
inline Matrix haar_orthogonal(std::size_t p, Rng& g) {
    Matrix a(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) a(i, j) = g.normal();
    return householder_q(std::move(a));
}

}  // namespace ppca
