#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ppca/matrix.hpp"
#include "ppca/moments.hpp"
#include "ppca/nelder_mead.hpp"
#include "ppca/parallel.hpp"
#include "ppca/types.hpp"

namespace ppca {

namespace detail {

inline constexpr double kExpOverflow = 700.0;  // exp argument bound

/// Vectorized view of the model: U = U2 (x) U1, m = vec(mu) and the
/// diagonal quadratic weights 1 / (tau^2 lambda).
struct LatentContext {
    Matrix u;       // p x d
    Vector m;       // p
    Vector quad_w;  // d, = 1 / (tau2 * (lambda2 (x) lambda1))
    std::size_t p = 0;
    std::size_t d = 0;

    static LatentContext make(const PlnParams& params) {
        LatentContext ctx;
        ctx.p = params.p1() * params.p2();
        ctx.d = params.d1() * params.d2();
        ctx.u = Matrix(ctx.p, ctx.d);
        // Kronecker product respecting the column-major vec convention:
        // vec(U1 Z U2') = (U2 (x) U1) vec(Z).
        const std::size_t p1 = params.p1(), p2 = params.p2();
        const std::size_t d1 = params.d1(), d2 = params.d2();
        for (std::size_t k = 0; k < p2; ++k)
            for (std::size_t j = 0; j < p1; ++j)
                for (std::size_t b = 0; b < d2; ++b)
                    for (std::size_t a = 0; a < d1; ++a)
                        ctx.u(k * p1 + j, b * d1 + a) = params.u2(k, b) * params.u1(j, a);
        ctx.m.resize(ctx.p);
        for (std::size_t k = 0; k < p2; ++k)
            for (std::size_t j = 0; j < p1; ++j) ctx.m[k * p1 + j] = params.mu(j, k);
        ctx.quad_w.resize(ctx.d);
        for (std::size_t b = 0; b < d2; ++b)
            for (std::size_t a = 0; a < d1; ++a) {
                const double lambda = params.lambda2[b] * params.lambda1[a];
                if (!(lambda > 0.0))
                    throw validation_error("latent: lambda entries must be positive");
                ctx.quad_w[b * d1 + a] = 1.0 / (params.tau2 * lambda);
            }
        return ctx;
    }

    Vector linear_predictor(const Vector& z) const {
        Vector h = m;
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t a = 0; a < d; ++a) h[j] += u(j, a) * z[a];
        return h;
    }

    double quadratic(const Vector& z) const {
        double q = 0.0;
        for (std::size_t a = 0; a < d; ++a) q += quad_w[a] * z[a] * z[a];
        return 0.5 * q;
    }
};

/// Density core; overflow yields -inf when `throwing` is false so line
/// searches can treat an exploded trial point as a rejected step.
inline double log_density_impl(const LatentContext& ctx, const Vector& z, const Vector& x,
                               bool throwing) {
    const Vector h = ctx.linear_predictor(z);
    double value = -ctx.quadratic(z);
    for (std::size_t j = 0; j < ctx.p; ++j) {
        if (h[j] > kExpOverflow) {
            if (throwing)
                throw estimation_error("log_cond_density: exp overflow at component " +
                                       std::to_string(j));
            return -std::numeric_limits<double>::infinity();
        }
        value += x[j] * h[j] - std::exp(h[j]) - x[j] * ctx.m[j];
    }
    return value;
}

inline double zi_log_density_impl(const LatentContext& ctx, const Vector& z, const Vector& x,
                                  const Vector& pi, bool throwing) {
    const Vector h = ctx.linear_predictor(z);
    double value = -ctx.quadratic(z);
    for (std::size_t j = 0; j < ctx.p; ++j) {
        if (h[j] > kExpOverflow) {
            if (throwing)
                throw estimation_error("zi_log_cond_density: exp overflow at component " +
                                       std::to_string(j));
            return -std::numeric_limits<double>::infinity();
        }
        const double cell_mean = std::exp(h[j]);
        if (x[j] != 0.0) {
            value += x[j] * (h[j] - ctx.m[j]) - cell_mean;
        } else if (pi[j] == 1.0) {
            value += -cell_mean;  // log(exp(-mean)) without the round trip
        } else {
            value += std::log1p(pi[j] * std::expm1(-cell_mean));
        }
    }
    return value;
}

struct GradHess {
    Vector grad;
    Matrix neg_hess;  // -H, symmetric positive definite
};

inline GradHess grad_neg_hess_impl(const LatentContext& ctx, const Vector& z, const Vector& ux) {
    const Vector h = ctx.linear_predictor(z);
    Vector weights(ctx.p);
    for (std::size_t j = 0; j < ctx.p; ++j) {
        if (h[j] > kExpOverflow)
            throw estimation_error("grad_hess: exp overflow at component " + std::to_string(j));
        weights[j] = std::exp(h[j]);
    }
    GradHess out;
    out.grad.assign(ctx.d, 0.0);
    for (std::size_t a = 0; a < ctx.d; ++a) {
        double s = 0.0;
        for (std::size_t j = 0; j < ctx.p; ++j) s += ctx.u(j, a) * weights[j];
        out.grad[a] = ux[a] - s - ctx.quad_w[a] * z[a];
    }
    out.neg_hess = Matrix(ctx.d, ctx.d);
    for (std::size_t a = 0; a < ctx.d; ++a)
        for (std::size_t b = a; b < ctx.d; ++b) {
            double s = 0.0;
            for (std::size_t j = 0; j < ctx.p; ++j) s += ctx.u(j, a) * weights[j] * ctx.u(j, b);
            if (a == b) s += ctx.quad_w[a];
            out.neg_hess(a, b) = s;
            out.neg_hess(b, a) = s;
        }
    return out;
}

}  // namespace detail

/// Log conditional density of the latent vector given the observation
/// (normalized with C = 0): x'Uz - 1'exp(m + Uz) - z'Lambda^-1 z / (2 tau^2).
inline double log_cond_density(const Vector& z, const Vector& x, const PlnParams& params) {
    const auto ctx = detail::LatentContext::make(params);
    if (z.size() != ctx.d || x.size() != ctx.p)
        throw validation_error("log_cond_density: dimension mismatch");
    // The m-offset convention keeps the x'Uz form: add back x'm.
    const Vector h0 = ctx.linear_predictor(z);
    double value = -ctx.quadratic(z);
    for (std::size_t j = 0; j < ctx.p; ++j) {
        if (h0[j] > detail::kExpOverflow)
            throw estimation_error("log_cond_density: exp overflow at component " +
                                   std::to_string(j));
        value += x[j] * (h0[j] - ctx.m[j]) - std::exp(h0[j]);
    }
    return value;
}

/// Gradient U'x - U'exp(h) - Lambda^-1 z / tau^2 and the (negative
/// definite) Hessian -U'diag(exp h)U - Lambda^-1 / tau^2.
inline std::pair<Vector, Matrix> grad_hess(const Vector& z, const Vector& x,
                                           const PlnParams& params) {
    const auto ctx = detail::LatentContext::make(params);
    if (z.size() != ctx.d || x.size() != ctx.p)
        throw validation_error("grad_hess: dimension mismatch");
    const Vector ux = tmul(ctx.u, x);
    detail::GradHess gh = detail::grad_neg_hess_impl(ctx, z, ux);
    Matrix hess = std::move(gh.neg_hess);
    for (double& v : hess.data()) v = -v;
    return {std::move(gh.grad), std::move(hess)};
}

struct MapResult {
    Vector z;
    bool converged = false;
    int iterations = 0;
};

namespace detail {

inline MapResult map_score_impl(const LatentContext& ctx, const Vector& x,
                                const ScoreOptions& opts) {
    Vector z(ctx.d, 0.0);
    if (opts.init) {
        if (opts.init->size() != ctx.d)
            throw validation_error("map_score: warm start has wrong dimension");
        z = *opts.init;
    }
    const Vector ux = tmul(ctx.u, x);
    double value = log_density_impl(ctx, z, x, /*throwing=*/true);

    MapResult out;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const GradHess gh = grad_neg_hess_impl(ctx, z, ux);
        if (norm2(gh.grad) <= opts.grad_tol) {
            out.converged = true;
            break;
        }
        const Vector step = spd_solve(gh.neg_hess, gh.grad);
        // Predicted gain of the quadratic model; once it falls below the
        // fp resolution of the objective the line search cannot observe an
        // increase, but the full Newton step still contracts the gradient
        // quadratically, so it is taken unconditionally.
        const double predicted = 0.5 * dot(gh.grad, step);
        const double fp_floor = 1e-12 * (1.0 + std::abs(value));
        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= opts.max_halvings; ++halving) {
            Vector trial(ctx.d);
            for (std::size_t a = 0; a < ctx.d; ++a) trial[a] = z[a] + scale * step[a];
            const double trial_value = log_density_impl(ctx, trial, x, /*throwing=*/false);
            const bool below_resolution =
                halving == 0 && predicted <= fp_floor && std::isfinite(trial_value);
            if (trial_value > value || below_resolution) {
                z = std::move(trial);
                value = trial_value;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        out.iterations = iter + 1;
        if (!accepted) break;
    }
    if (!out.converged) {
        const GradHess gh = grad_neg_hess_impl(ctx, z, ux);
        out.converged = norm2(gh.grad) <= opts.grad_tol;
    }
    out.z = std::move(z);
    return out;
}

}  // namespace detail

/// Latent score as the maximizer of the conditional log density (damped
/// Newton). Non-convergence is reported through the flag, not an error.
inline MapResult map_score(const Vector& x, const PlnParams& params,
                           const ScoreOptions& opts = {}) {
    if (opts.max_iter < 1 || !(opts.grad_tol > 0.0))
        throw validation_error("map_score: invalid options");
    const auto ctx = detail::LatentContext::make(params);
    if (x.size() != ctx.p) throw validation_error("map_score: observation has wrong dimension");
    return detail::map_score_impl(ctx, x, opts);
}

namespace detail {

template <typename PerObservation>
ScoreSet assemble_scores(const CountTensor& data, std::size_t d, PerObservation&& score_one) {
    const std::size_t n = data.n();
    ScoreSet set;
    set.scores = Matrix(n, d);
    set.converged.assign(n, 0);
    set.iterations.assign(n, 0);
    parallel_for(n, [&](std::size_t i) {
        MapResult res = score_one(i);
        for (std::size_t a = 0; a < d; ++a) set.scores(i, a) = res.z[a];
        set.converged[i] = res.converged ? 1 : 0;
        set.iterations[i] = res.iterations;
    });
    std::size_t n_converged = 0;
    for (auto flag : set.converged) n_converged += flag;
    if (n_converged == 0) throw estimation_error("score_sample: no observation converged");
    // Center on the converged rows only; non-converged rows are shifted by
    // the same means and stay flagged.
    for (std::size_t a = 0; a < d; ++a) {
        CompensatedSum sum;
        for (std::size_t i = 0; i < n; ++i)
            if (set.converged[i]) sum.add(set.scores(i, a));
        const double mean = sum.value() / static_cast<double>(n_converged);
        for (std::size_t i = 0; i < n; ++i) set.scores(i, a) -= mean;
    }
    return set;
}

}  // namespace detail

/// Scores for every observation, centered over the converged rows.
inline ScoreSet score_sample(const CountTensor& data, const PlnParams& params,
                             const ScoreOptions& opts = {}) {
    if (data.p1() != params.p1() || data.p2() != params.p2())
        throw validation_error("score_sample: data shape does not match parameters");
    const auto ctx = detail::LatentContext::make(params);
    return detail::assemble_scores(data, ctx.d, [&](std::size_t i) {
        return detail::map_score_impl(ctx, data.vec_observation(i), opts);
    });
}

/// Zero-inflated log conditional density (C = 0); pi vectorized
/// column-major like the observation.
inline double zi_log_cond_density(const Vector& z, const Vector& x, const PlnParams& params,
                                  const Vector& pi) {
    const auto ctx = detail::LatentContext::make(params);
    if (z.size() != ctx.d || x.size() != ctx.p || pi.size() != ctx.p)
        throw validation_error("zi_log_cond_density: dimension mismatch");
    for (double v : pi)
        if (!(v > 0.0) || !(v <= 1.0))
            throw validation_error("zi_log_cond_density: pi entries must lie in (0, 1]");
    return detail::zi_log_density_impl(ctx, z, x, pi, /*throwing=*/true);
}

/// Latent score under the zero-inflated model. The density is non-concave,
/// so the maximization is a Nelder-Mead search started at the regular-model
/// score (a cheap concave surrogate for the basin).
inline MapResult zi_map_score(const Vector& x, const PlnParams& params, const Vector& pi,
                              const ScoreOptions& opts = {}) {
    const auto ctx = detail::LatentContext::make(params);
    if (x.size() != ctx.p || pi.size() != ctx.p)
        throw validation_error("zi_map_score: dimension mismatch");
    for (double v : pi)
        if (!(v > 0.0) || !(v <= 1.0))
            throw validation_error("zi_map_score: pi entries must lie in (0, 1]");
    const MapResult newton = detail::map_score_impl(ctx, x, opts);
    const auto objective = [&](const Vector& z) {
        return detail::zi_log_density_impl(ctx, z, x, pi, /*throwing=*/false);
    };
    const NelderMeadResult nm = nelder_mead_maximize(objective, newton.z, 0.1, 1e-8, 2000);
    MapResult out;
    out.z = nm.x;
    out.converged = nm.converged;
    out.iterations = nm.evaluations;
    return out;
}

/// Sample-level zero-inflated scoring with the same centering contract as
/// score_sample.
inline ScoreSet zi_score_sample(const CountTensor& data, const PlnParams& params,
                                const Matrix& pi, const ScoreOptions& opts = {}) {
    if (data.p1() != params.p1() || data.p2() != params.p2())
        throw validation_error("zi_score_sample: data shape does not match parameters");
    if (pi.rows() != params.p1() || pi.cols() != params.p2())
        throw validation_error("zi_score_sample: pi shape does not match parameters");
    const auto ctx = detail::LatentContext::make(params);
    Vector pi_vec(ctx.p);
    for (std::size_t k = 0; k < params.p2(); ++k)
        for (std::size_t j = 0; j < params.p1(); ++j) pi_vec[k * params.p1() + j] = pi(j, k);
    for (double v : pi_vec)
        if (!(v > 0.0) || !(v <= 1.0))
            throw validation_error("zi_score_sample: pi entries must lie in (0, 1]");
    return detail::assemble_scores(data, ctx.d, [&](std::size_t i) {
        const Vector x = data.vec_observation(i);
        const MapResult newton = detail::map_score_impl(ctx, x, opts);
        const auto objective = [&](const Vector& z) {
            return detail::zi_log_density_impl(ctx, z, x, pi_vec, /*throwing=*/false);
        };
        const NelderMeadResult nm = nelder_mead_maximize(objective, newton.z, 0.1, 1e-8, 2000);
        MapResult out;
        out.z = nm.x;
        out.converged = nm.converged;
        out.iterations = nm.evaluations;
        return out;
    });
}

/// Linear scores U'(x - m) of the additive-noise model.
inline Vector gaussian_score(const Vector& x, const GaussianParams& params) {
    const auto ctx = detail::LatentContext::make(params.base);
    if (x.size() != ctx.p) throw validation_error("gaussian_score: dimension mismatch");
    Vector centered(ctx.p);
    for (std::size_t j = 0; j < ctx.p; ++j) centered[j] = x[j] - ctx.m[j];
    return tmul(ctx.u, centered);
}

}  // namespace ppca
