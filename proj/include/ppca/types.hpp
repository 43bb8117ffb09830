#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ppca/errors.hpp"
#include "ppca/matrix.hpp"

namespace ppca {

enum class Side { left, right };

inline std::string to_string(Side side) { return side == Side::left ? "left" : "right"; }

/// n observations of p1 x p2 count matrices. Immutable after construction;
/// safe to share across threads.
class CountTensor {
public:
    CountTensor(std::size_t n, std::size_t p1, std::size_t p2, std::vector<std::int64_t> data)
        : n_(n), p1_(p1), p2_(p2), data_(std::move(data)) {
        if (n_ < 2) throw validation_error("CountTensor: need n >= 2 observations");
        if (p1_ < 1 || p2_ < 1) throw validation_error("CountTensor: need p1 >= 1 and p2 >= 1");
        if (data_.size() != n_ * p1_ * p2_)
            throw validation_error("CountTensor: data size does not match n*p1*p2");
        for (std::int64_t v : data_)
            if (v < 0) throw validation_error("CountTensor: negative entry");
    }

    std::size_t n() const { return n_; }
    std::size_t p1() const { return p1_; }
    std::size_t p2() const { return p2_; }

    std::int64_t operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * p1_ + j) * p2_ + k];
    }

    const std::vector<std::int64_t>& data() const { return data_; }

    /// Transposes every observation (rows and columns swap roles).
    CountTensor transposed() const {
        std::vector<std::int64_t> t(data_.size());
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < p1_; ++j)
                for (std::size_t k = 0; k < p2_; ++k)
                    t[(i * p2_ + k) * p1_ + j] = (*this)(i, j, k);
        return CountTensor(n_, p2_, p1_, std::move(t));
    }

    Matrix observation(std::size_t i) const {
        Matrix m(p1_, p2_);
        for (std::size_t j = 0; j < p1_; ++j)
            for (std::size_t k = 0; k < p2_; ++k) m(j, k) = static_cast<double>((*this)(i, j, k));
        return m;
    }

    /// Column-major vectorization of observation i.
    Vector vec_observation(std::size_t i) const {
        Vector v(p1_ * p2_);
        for (std::size_t k = 0; k < p2_; ++k)
            for (std::size_t j = 0; j < p1_; ++j)
                v[k * p1_ + j] = static_cast<double>((*this)(i, j, k));
        return v;
    }

private:
    std::size_t n_;
    std::size_t p1_;
    std::size_t p2_;
    std::vector<std::int64_t> data_;
};

/// Parameters of the count factor model: cell means exp(mu + U1 Z U2')
/// with Z drawn from a matrix normal whose covariance factors are
/// tau^2 Lambda1 and Lambda2 (diagonal, positive, descending).
struct PlnParams {
    Matrix mu;       // p1 x p2
    Matrix u1;       // p1 x d1, orthonormal columns
    Matrix u2;       // p2 x d2, orthonormal columns
    Vector lambda1;  // d1 positive reals, descending
    Vector lambda2;  // d2 positive reals, descending
    double tau2 = 1.0;
    // Population parameters satisfy sum(lambda1) = p1 and sum(lambda2) = p2;
    // estimates from truncated spectra do not and carry canonical = false.
    bool canonical = true;

    std::size_t p1() const { return mu.rows(); }
    std::size_t p2() const { return mu.cols(); }
    std::size_t d1() const { return lambda1.size(); }
    std::size_t d2() const { return lambda2.size(); }
};

/// Additive-noise analogue: X = mu + U1 Z U2' + eps with isotropic eps.
struct GaussianParams {
    PlnParams base;
    double sigma2 = 1.0;
};

/// Per-cell observation probabilities of the zero-inflated model.
struct ZeroInflationMask {
    Matrix pi;  // p1 x p2, entries in (0, 1]

    explicit ZeroInflationMask(Matrix values) : pi(std::move(values)) {
        for (double v : pi.data())
            if (!(v > 0.0) || !(v <= 1.0))
                throw validation_error("ZeroInflationMask: entries must lie in (0, 1]");
    }
};

/// One skipped log-ratio term of an S entry: column ell of entry (j, k)
/// had a non-positive required sample moment.
struct SkippedTerm {
    std::size_t j;
    std::size_t k;
    std::size_t ell;
};

/// Estimated overdispersion matrices S1, S2 and the tau^2 they imply.
struct SPair {
    Matrix s1;  // p1 x p1, exactly symmetric
    Matrix s2;  // p2 x p2, exactly symmetric
    double tau2 = 0.0;
    std::vector<SkippedTerm> skipped1;
    std::vector<SkippedTerm> skipped2;
};

/// Estimated latent scores, vectorized column-major per observation and
/// centered over the converged rows.
struct ScoreSet {
    Matrix scores;                       // n x (d1*d2)
    std::vector<std::uint8_t> converged; // n flags
    std::vector<int> iterations;         // n Newton iteration counts
};

/// Augmentation objective curve and the selected latent dimension.
struct AugmentationCurve {
    Side side = Side::left;
    std::size_t r = 0;                // appended noise rows per replicate
    std::size_t s = 0;                // replicates requested
    Vector phi;                       // values phi(0..p)
    Vector mean_beta_sq;              // replicate-averaged ||beta_k||^2, k = 1..p+r
    Vector mean_eigenvalues;          // replicate-averaged lambda_k, k = 1..p+r
    std::size_t selected = 0;         // smallest argmin of phi
    std::size_t dropped_replicates = 0;
};

/// Newton / simplex controls for latent score estimation.
struct ScoreOptions {
    int max_iter = 100;
    double grad_tol = 1e-8;
    int max_halvings = 30;
    std::optional<Vector> init;  // defaults to zero
};

struct CanonicalizeResult {
    Vector lambda1;
    Vector lambda2;
    double tau2;
};

namespace detail {

inline Vector sorted_descending(Vector v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[order[i]];
    return out;
}

inline double canonical_scale(const Vector& lambda, std::size_t p) {
    double sum = 0.0;
    for (double v : lambda) sum += v;
    const double scale = static_cast<double>(p) / sum;
    // Snap near-unit rescalings to the identity so that repeated
    // canonicalization is exactly idempotent.
    return std::abs(scale - 1.0) <= 1e-13 ? 1.0 : scale;
}

}  // namespace detail

/// Resolves the (Sigma1, Sigma2) -> (t Sigma1, t^-1 Sigma2) scale ambiguity:
/// rescales the factors so sum(lambda1) = p1 and sum(lambda2) = p2 and
/// absorbs both scale factors into tau2. The Kronecker products
/// tau2 * lambda1[a] * lambda2[b] are preserved.
inline CanonicalizeResult canonicalize(const Vector& raw_lambda1, const Vector& raw_lambda2,
                                       double raw_tau2, std::size_t p1, std::size_t p2) {
    if (raw_lambda1.empty() || raw_lambda2.empty())
        throw validation_error("canonicalize: lambda vectors must be non-empty");
    for (double v : raw_lambda1)
        if (!(v > 0.0)) throw validation_error("canonicalize: lambda1 entries must be positive");
    for (double v : raw_lambda2)
        if (!(v > 0.0)) throw validation_error("canonicalize: lambda2 entries must be positive");
    if (!(raw_tau2 > 0.0)) throw validation_error("canonicalize: tau2 must be positive");
    if (raw_lambda1.size() > p1 || raw_lambda2.size() > p2)
        throw validation_error("canonicalize: more factors than dimensions");

    const double s1 = detail::canonical_scale(raw_lambda1, p1);
    const double s2 = detail::canonical_scale(raw_lambda2, p2);
    CanonicalizeResult out;
    out.lambda1 = raw_lambda1;
    out.lambda2 = raw_lambda2;
    if (s1 != 1.0)
        for (double& v : out.lambda1) v *= s1;
    if (s2 != 1.0)
        for (double& v : out.lambda2) v *= s2;
    out.lambda1 = detail::sorted_descending(std::move(out.lambda1));
    out.lambda2 = detail::sorted_descending(std::move(out.lambda2));
    out.tau2 = raw_tau2 / (s1 * s2);
    return out;
}

/// Reports every violated PlnParams invariant; an empty list means valid.
inline std::vector<std::string> validate(const PlnParams& params) {
    std::vector<std::string> violations;
    const std::size_t p1 = params.p1(), p2 = params.p2();
    const std::size_t d1 = params.d1(), d2 = params.d2();

    if (p1 == 0 || p2 == 0) violations.push_back("mu is empty");
    if (d1 > p1) violations.push_back("d1 exceeds p1");
    if (d2 > p2) violations.push_back("d2 exceeds p2");
    if (params.u1.rows() != p1 || params.u1.cols() != d1)
        violations.push_back("U1 has wrong shape");
    if (params.u2.rows() != p2 || params.u2.cols() != d2)
        violations.push_back("U2 has wrong shape");
    if (!(params.tau2 > 0.0)) violations.push_back("tau2 not positive");

    for (double v : params.mu.data())
        if (!std::isfinite(v)) {
            violations.push_back("mu has non-finite entries");
            break;
        }

    auto check_orthonormal = [&](const Matrix& u, const char* name) {
        if (u.rows() == 0 || u.cols() == 0) return;
        for (std::size_t a = 0; a < u.cols(); ++a)
            for (std::size_t b = a; b < u.cols(); ++b) {
                double g = 0.0;
                for (std::size_t i = 0; i < u.rows(); ++i) g += u(i, a) * u(i, b);
                const double target = a == b ? 1.0 : 0.0;
                if (std::abs(g - target) > 1e-10) {
                    violations.push_back(std::string(name) + " not orthonormal");
                    return;
                }
            }
    };
    check_orthonormal(params.u1, "U1");
    check_orthonormal(params.u2, "U2");

    auto check_lambda = [&](const Vector& lambda, std::size_t p, const char* name) {
        for (double v : lambda)
            if (!(v > 0.0)) {
                violations.push_back(std::string(name) + " not strictly positive");
                break;
            }
        for (std::size_t i = 1; i < lambda.size(); ++i)
            if (lambda[i] > lambda[i - 1]) {
                violations.push_back(std::string(name) + " not descending");
                break;
            }
        if (params.canonical) {
            double sum = 0.0;
            for (double v : lambda) sum += v;
            if (std::abs(sum - static_cast<double>(p)) > 1e-10 * std::max<double>(1, p))
                violations.push_back(std::string(name) + " sum violates trace constraint");
        }
    };
    check_lambda(params.lambda1, p1, "lambda1");
    check_lambda(params.lambda2, p2, "lambda2");

    return violations;
}

/// validate() + throw; used where invalid parameters cannot proceed.
inline void require_valid(const PlnParams& params, const char* where) {
    const auto violations = validate(params);
    if (!violations.empty()) {
        std::string msg = std::string(where) + ": invalid parameters:";
        for (const auto& v : violations) msg += " [" + v + "]";
        throw validation_error(msg);
    }
}

}  // namespace ppca
