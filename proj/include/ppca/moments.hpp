#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ppca/matrix.hpp"
#include "ppca/parallel.hpp"
#include "ppca/types.hpp"

namespace ppca {

/// Sample factorial moments and second-order cross moments. All averages
/// use compensated summation in a fixed observation order, so results do
/// not depend on how the work is partitioned.
struct FactorialMoments {
    Matrix m1;  // p1 x p2 cell means of x
    Matrix m2;  // p1 x p2 cell means of x(x-1)
    Matrix m3;  // p1 x p2 cell means of x(x-1)(x-2)
    std::vector<Matrix> cross_left;   // per column ell: p1 x p1 means of x_{j ell} x_{k ell}
    std::vector<Matrix> cross_right;  // per row ell: p2 x p2 means of x_{ell j} x_{ell k}
};

namespace detail {

struct LeftMoments {
    Matrix m1;                       // p1 x p2
    Matrix m2;                       // p1 x p2
    Matrix m3;                       // p1 x p2
    std::vector<Matrix> cross_left;  // p2 matrices of p1 x p1
};

inline LeftMoments left_moments(const CountTensor& x) {
    const std::size_t n = x.n(), p1 = x.p1(), p2 = x.p2();
    const double nd = static_cast<double>(n);
    LeftMoments lm;
    lm.m1 = Matrix(p1, p2);
    lm.m2 = Matrix(p1, p2);
    lm.m3 = Matrix(p1, p2);
    lm.cross_left.assign(p2, Matrix(p1, p1));

    parallel_for(p2, [&](std::size_t ell) {
        for (std::size_t j = 0; j < p1; ++j) {
            CompensatedSum s1, s2, s3;
            for (std::size_t i = 0; i < n; ++i) {
                const double v = static_cast<double>(x(i, j, ell));
                s1.add(v);
                s2.add(v * (v - 1.0));
                s3.add(v * (v - 1.0) * (v - 2.0));
            }
            lm.m1(j, ell) = s1.value() / nd;
            lm.m2(j, ell) = s2.value() / nd;
            lm.m3(j, ell) = s3.value() / nd;
            for (std::size_t k = j; k < p1; ++k) {
                CompensatedSum cross;
                for (std::size_t i = 0; i < n; ++i)
                    cross.add(static_cast<double>(x(i, j, ell)) *
                              static_cast<double>(x(i, k, ell)));
                const double mean = cross.value() / nd;
                lm.cross_left[ell](j, k) = mean;
                lm.cross_left[ell](k, j) = mean;
            }
        }
    });
    return lm;
}

}  // namespace detail

inline FactorialMoments factorial_moments(const CountTensor& x) {
    detail::LeftMoments left = detail::left_moments(x);
    detail::LeftMoments right = detail::left_moments(x.transposed());
    FactorialMoments fm;
    fm.m1 = std::move(left.m1);
    fm.m2 = std::move(left.m2);
    fm.m3 = std::move(left.m3);
    fm.cross_left = std::move(left.cross_left);
    fm.cross_right = std::move(right.cross_left);
    return fm;
}

/// One off-diagonal column term of an S entry.
inline double s_offdiag_term(double cross, double mean_j, double mean_k) {
    return std::log(cross / (mean_j * mean_k));
}

/// One diagonal column term; pi = 1 recovers the regular model.
inline double s_diag_term(double m2, double m1, double pi = 1.0) {
    return std::log(pi * m2 / (m1 * m1));
}

struct SEstimate {
    Matrix s;  // exactly symmetric
    std::vector<SkippedTerm> skipped;
};

/// Overdispersion matrix estimator. Each entry averages per-column
/// log-ratio terms; a term is skipped (and recorded) when any required
/// sample moment is non-positive, which sparse counts routinely produce.
/// When pi is given, diagonal terms carry the per-cell pi factor of the
/// zero-inflated model and off-diagonals are unchanged.
inline SEstimate estimate_s(const CountTensor& x, Side side,
                            const std::optional<Matrix>& pi = std::nullopt) {
    if (side == Side::right) {
        std::optional<Matrix> pi_t;
        if (pi) pi_t = pi->transposed();
        return estimate_s(x.transposed(), Side::left, pi_t);
    }
    const std::size_t p1 = x.p1(), p2 = x.p2();
    if (pi && (pi->rows() != p1 || pi->cols() != p2))
        throw validation_error("estimate_s: pi shape does not match data");

    const detail::LeftMoments lm = detail::left_moments(x);
    SEstimate out;
    out.s = Matrix(p1, p1);
    std::vector<std::vector<SkippedTerm>> skipped_rows(p1);

    parallel_for(p1, [&](std::size_t j) {
        for (std::size_t k = j; k < p1; ++k) {
            CompensatedSum terms;
            std::size_t valid = 0;
            for (std::size_t ell = 0; ell < p2; ++ell) {
                if (j == k) {
                    const double pjl = pi ? (*pi)(j, ell) : 1.0;
                    const double m1 = lm.m1(j, ell);
                    const double m2 = lm.m2(j, ell);
                    if (m1 > 0.0 && m2 > 0.0 && pjl > 0.0) {
                        terms.add(s_diag_term(m2, m1, pjl));
                        ++valid;
                    } else {
                        skipped_rows[j].push_back({j, k, ell});
                    }
                } else {
                    const double cross = lm.cross_left[ell](j, k);
                    const double mj = lm.m1(j, ell);
                    const double mk = lm.m1(k, ell);
                    if (cross > 0.0 && mj > 0.0 && mk > 0.0) {
                        terms.add(s_offdiag_term(cross, mj, mk));
                        ++valid;
                    } else {
                        skipped_rows[j].push_back({j, k, ell});
                    }
                }
            }
            if (valid == 0)
                throw estimation_error("estimate_s: entry (" + std::to_string(j) + ", " +
                                       std::to_string(k) + ") has no valid column terms");
            const double value = terms.value() / static_cast<double>(valid);
            out.s(j, k) = value;
            out.s(k, j) = value;
        }
    });
    for (auto& rows : skipped_rows)
        out.skipped.insert(out.skipped.end(), rows.begin(), rows.end());
    return out;
}

/// tau^2 from the trace identity tr(S1)/(2 p1) + tr(S2)/(2 p2).
inline double estimate_tau2(const Matrix& s1, const Matrix& s2) {
    const double value = s1.trace() / (2.0 * static_cast<double>(s1.rows())) +
                         s2.trace() / (2.0 * static_cast<double>(s2.rows()));
    if (!(value > 0.0)) throw estimation_error("estimate_tau2: non-positive tau2");
    return value;
}

/// Both sides plus tau^2 in one pass; the pi matrix (if any) feeds the
/// zero-inflated diagonal terms.
inline SPair estimate_spair(const CountTensor& x,
                            const std::optional<Matrix>& pi = std::nullopt) {
    SEstimate left = estimate_s(x, Side::left, pi);
    SEstimate right = estimate_s(x, Side::right, pi);
    SPair pair;
    pair.s1 = std::move(left.s);
    pair.s2 = std::move(right.s);
    pair.tau2 = estimate_tau2(pair.s1, pair.s2);
    pair.skipped1 = std::move(left.skipped);
    pair.skipped2 = std::move(right.skipped);
    return pair;
}

/// Cellwise mean-parameter estimator of the regular model.
inline double mu_cell_regular(double m1, double m2) {
    return 2.0 * std::log(m1) - 0.5 * std::log(m2);
}

/// Cellwise mean-parameter estimator of the zero-inflated model; needs
/// third factorial moments, which cancel the unknown pi.
inline double mu_cell_zero_inflated(double m1, double m2, double m3) {
    return -2.5 * std::log(m1) + 4.0 * std::log(m2) - 1.5 * std::log(m3);
}

/// Cellwise observation-probability estimator of the zero-inflated model.
inline double pi_cell(double m1, double m2, double m3) {
    return m1 * m1 * m1 * m3 / (m2 * m2 * m2);
}

struct MuEstimate {
    Matrix mu;                        // invalid cells hold NaN
    std::vector<std::uint8_t> valid;  // row-major p1*p2 flags
};

inline MuEstimate estimate_mu(const CountTensor& x, bool zero_inflated = false) {
    const detail::LeftMoments lm = detail::left_moments(x);
    const std::size_t p1 = x.p1(), p2 = x.p2();
    MuEstimate out;
    out.mu = Matrix(p1, p2, std::numeric_limits<double>::quiet_NaN());
    out.valid.assign(p1 * p2, 0);
    for (std::size_t j = 0; j < p1; ++j)
        for (std::size_t k = 0; k < p2; ++k) {
            const double m1 = lm.m1(j, k), m2 = lm.m2(j, k), m3 = lm.m3(j, k);
            if (zero_inflated) {
                if (m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
                    out.mu(j, k) = mu_cell_zero_inflated(m1, m2, m3);
                    out.valid[j * p2 + k] = 1;
                }
            } else {
                if (m1 > 0.0 && m2 > 0.0) {
                    out.mu(j, k) = mu_cell_regular(m1, m2);
                    out.valid[j * p2 + k] = 1;
                }
            }
        }
    return out;
}

struct PiEstimate {
    Matrix raw;                       // unconstrained estimates, NaN where invalid
    Matrix clamped;                   // raw clamped into the interval (if requested)
    std::vector<std::uint8_t> valid;  // row-major p1*p2 flags (m2 > 0)
    bool has_clamp = false;
};

/// Observation-probability estimates. The library reports raw values;
/// clamping into an interval (the practical [0.05, 1] device) is applied
/// only when an interval is passed.
inline PiEstimate estimate_pi(const CountTensor& x,
                              std::optional<std::pair<double, double>> clamp = std::nullopt) {
    const detail::LeftMoments lm = detail::left_moments(x);
    const std::size_t p1 = x.p1(), p2 = x.p2();
    PiEstimate out;
    out.raw = Matrix(p1, p2, std::numeric_limits<double>::quiet_NaN());
    out.clamped = out.raw;
    out.valid.assign(p1 * p2, 0);
    out.has_clamp = clamp.has_value();
    for (std::size_t j = 0; j < p1; ++j)
        for (std::size_t k = 0; k < p2; ++k) {
            const double m2 = lm.m2(j, k);
            if (!(m2 > 0.0)) continue;
            const double value = pi_cell(lm.m1(j, k), m2, lm.m3(j, k));
            out.raw(j, k) = value;
            out.valid[j * p2 + k] = 1;
            if (clamp) out.clamped(j, k) = std::min(clamp->second, std::max(clamp->first, value));
        }
    return out;
}

}  // namespace ppca
