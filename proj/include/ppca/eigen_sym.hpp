#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ppca/errors.hpp"
#include "ppca/matrix.hpp"

namespace ppca {

/// Eigendecomposition A = vectors * diag(values) * vectors'.
/// Values are descending (ties keep the pre-sort order) and each
/// eigenvector is sign-fixed so its largest-magnitude entry is positive.
struct EigenSym {
    Vector values;
    Matrix vectors;  // columns aligned with values
};

/// Cyclic Jacobi rotations for symmetric matrices. Dimensions in this
/// project stay below a few hundred, where Jacobi is accurate and keeps
/// the computed eigenvectors orthogonal to machine precision.
/// Stops when the off-diagonal Frobenius norm drops below 1e-12 * ||A||
/// or after 100 sweeps.
inline EigenSym eigen_sym(const Matrix& a) {
    if (a.rows() != a.cols()) throw validation_error("eigen_sym: matrix not square");
    for (double v : a.data())
        if (!std::isfinite(v)) throw validation_error("eigen_sym: non-finite entry");

    const std::size_t n = a.rows();
    Matrix m = a;
    Matrix v = Matrix::identity(n);
    const double tol = 1e-12 * a.frobenius_norm();

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * m(p, q) * m(p, q);
        if (std::sqrt(off) <= tol) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (apq == 0.0) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double shrink = s / (1.0 + c);

                m(p, p) -= t * apq;
                m(q, q) += t * apq;
                m(p, q) = 0.0;
                m(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double mrp = m(r, p);
                    const double mrq = m(r, q);
                    m(r, p) = mrp - s * (mrq + shrink * mrp);
                    m(r, q) = mrq + s * (mrp - shrink * mrq);
                    m(p, r) = m(r, p);
                    m(q, r) = m(r, q);
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vrp = v(r, p);
                    const double vrq = v(r, q);
                    v(r, p) = vrp - s * (vrq + shrink * vrp);
                    v(r, q) = vrq + s * (vrp - shrink * vrq);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return m(x, x) > m(y, y); });

    EigenSym out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = m(src, src);
        std::size_t peak = 0;
        double peak_abs = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mag = std::abs(v(i, src));
            if (mag > peak_abs) {
                peak_abs = mag;
                peak = i;
            }
        }
        const double sign = v(peak, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * v(i, src);
    }
    return out;
}

}  // namespace ppca
