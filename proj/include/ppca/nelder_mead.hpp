#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "ppca/matrix.hpp"

namespace ppca {

struct NelderMeadResult {
    Vector x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Derivative-free simplex maximization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). The initial
/// simplex is the start point plus `spread` along each coordinate.
/// Converged when the spread of vertex function values drops below `tol`
/// before `max_evals` evaluations are spent.
template <typename F>
NelderMeadResult nelder_mead_maximize(F&& f, const Vector& init, double spread, double tol,
                                      int max_evals) {
    const std::size_t d = init.size();
    int evals = 0;
    auto g = [&](const Vector& z) {
        ++evals;
        return -f(z);  // minimize the negated objective
    };

    std::vector<Vector> vertex(d + 1, init);
    for (std::size_t i = 0; i < d; ++i) vertex[i + 1][i] += spread;
    std::vector<double> value(d + 1);
    for (std::size_t i = 0; i <= d; ++i) value[i] = g(vertex[i]);

    std::vector<std::size_t> order(d + 1);
    auto sort_vertices = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    };

    bool converged = false;
    while (evals < max_evals) {
        sort_vertices();
        const std::size_t best = order[0], worst = order[d];
        if (value[worst] - value[best] < tol) {
            converged = true;
            break;
        }

        Vector centroid(d, 0.0);
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == worst) continue;
            for (std::size_t c = 0; c < d; ++c) centroid[c] += vertex[i][c];
        }
        for (double& c : centroid) c /= static_cast<double>(d);

        Vector reflected(d);
        for (std::size_t c = 0; c < d; ++c)
            reflected[c] = centroid[c] + (centroid[c] - vertex[worst][c]);
        const double f_reflected = g(reflected);

        if (f_reflected < value[best]) {
            Vector expanded(d);
            for (std::size_t c = 0; c < d; ++c)
                expanded[c] = centroid[c] + 2.0 * (reflected[c] - centroid[c]);
            const double f_expanded = g(expanded);
            if (f_expanded < f_reflected) {
                vertex[worst] = std::move(expanded);
                value[worst] = f_expanded;
            } else {
                vertex[worst] = std::move(reflected);
                value[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < value[order[d - 1]]) {
            vertex[worst] = std::move(reflected);
            value[worst] = f_reflected;
            continue;
        }

        const bool outside = f_reflected < value[worst];
        Vector contracted(d);
        const Vector& toward = outside ? reflected : vertex[worst];
        for (std::size_t c = 0; c < d; ++c)
            contracted[c] = centroid[c] + 0.5 * (toward[c] - centroid[c]);
        const double f_contracted = g(contracted);
        if (f_contracted < (outside ? f_reflected : value[worst])) {
            vertex[worst] = std::move(contracted);
            value[worst] = f_contracted;
            continue;
        }

        for (std::size_t i = 1; i <= d; ++i) {
            const std::size_t v = order[i];
            for (std::size_t c = 0; c < d; ++c)
                vertex[v][c] = vertex[best][c] + 0.5 * (vertex[v][c] - vertex[best][c]);
            value[v] = g(vertex[v]);
        }
    }

    sort_vertices();
    NelderMeadResult out;
    out.x = vertex[order[0]];
    out.value = -value[order[0]];
    out.evaluations = evals;
    out.converged = converged;
    return out;
}

}  // namespace ppca
