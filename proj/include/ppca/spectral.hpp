#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ppca/eigen_sym.hpp"
#include "ppca/matrix.hpp"
#include "ppca/types.hpp"

namespace ppca {

/// Loadings and latent-scale factors read off the spectra of S1/tau^2 and
/// S2/tau^2. The lambda values are not renormalized to the population
/// trace constraint; truncated spectra would bias tau^2-dependent
/// quantities downstream.
struct LoadingExtract {
    Matrix u1;
    Matrix u2;
    Vector lambda1;
    Vector lambda2;
    std::vector<std::uint8_t> floored1;  // lambda1 entries raised to the floor
    std::vector<std::uint8_t> floored2;
    Vector spectrum1;  // full eigenvalues of S1/tau^2, descending
    Vector spectrum2;
};

namespace detail {

inline void extract_side(const Matrix& s, double tau2, std::size_t d, Matrix& u, Vector& lambda,
                         std::vector<std::uint8_t>& floored, Vector& spectrum) {
    const EigenSym eig = eigen_sym(s);
    const std::size_t p = s.rows();
    spectrum.resize(p);
    for (std::size_t i = 0; i < p; ++i) spectrum[i] = eig.values[i] / tau2;
    // S need not be positive semi-definite; eigenvalues kept for reporting,
    // but the Lambda used downstream must stay invertible.
    const double floor = 1e-8 * std::max(1.0, spectrum.empty() ? 1.0 : spectrum[0]);
    u = Matrix(p, d);
    lambda.resize(d);
    floored.assign(d, 0);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t i = 0; i < p; ++i) u(i, a) = eig.vectors(i, a);
        if (spectrum[a] < floor) {
            lambda[a] = floor;
            floored[a] = 1;
        } else {
            lambda[a] = spectrum[a];
        }
    }
}

}  // namespace detail

/// Leading d1/d2 eigenpairs of S1/tau^2 and S2/tau^2, with lambda values
/// floored at 1e-8 * max(1, top eigenvalue) so Lambda^-1 exists downstream.
inline LoadingExtract extract_loadings(const SPair& s, std::size_t d1, std::size_t d2) {
    if (!(s.tau2 > 0.0)) throw estimation_error("extract_loadings: tau2 must be positive");
    if (d1 < 1 || d1 > s.s1.rows() || d2 < 1 || d2 > s.s2.rows())
        throw validation_error("extract_loadings: dimensions out of range");
    LoadingExtract out;
    detail::extract_side(s.s1, s.tau2, d1, out.u1, out.lambda1, out.floored1, out.spectrum1);
    detail::extract_side(s.s2, s.tau2, d2, out.u2, out.lambda2, out.floored2, out.spectrum2);
    return out;
}

/// Assembles estimated PlnParams from loadings and a mean estimate.
/// Estimated lambdas violate the population trace constraint by design,
/// hence canonical = false.
inline PlnParams make_estimated_params(const LoadingExtract& loadings, const Matrix& mu,
                                       double tau2) {
    PlnParams params;
    params.mu = mu;
    params.u1 = loadings.u1;
    params.u2 = loadings.u2;
    params.lambda1 = loadings.lambda1;
    params.lambda2 = loadings.lambda2;
    params.tau2 = tau2;
    params.canonical = false;
    return params;
}

/// Sample left/right covariance matrix of the observations treated as
/// reals: (1/p2) average of (X - mean)(X - mean)' with divisor n.
inline Matrix gaussian_cov(const CountTensor& x, Side side) {
    if (side == Side::right) return gaussian_cov(x.transposed(), Side::left);
    const std::size_t n = x.n(), p1 = x.p1(), p2 = x.p2();
    Matrix mean(p1, p2);
    for (std::size_t j = 0; j < p1; ++j)
        for (std::size_t k = 0; k < p2; ++k) {
            CompensatedSum sum;
            for (std::size_t i = 0; i < n; ++i) sum.add(static_cast<double>(x(i, j, k)));
            mean(j, k) = sum.value() / static_cast<double>(n);
        }
    Matrix cov(p1, p1);
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(p2));
    for (std::size_t j = 0; j < p1; ++j)
        for (std::size_t k = j; k < p1; ++k) {
            CompensatedSum sum;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t ell = 0; ell < p2; ++ell)
                    sum.add((static_cast<double>(x(i, j, ell)) - mean(j, ell)) *
                            (static_cast<double>(x(i, k, ell)) - mean(k, ell)));
            const double value = sum.value() * scale;
            cov(j, k) = value;
            cov(k, j) = value;
        }
    return cov;
}

}  // namespace ppca
