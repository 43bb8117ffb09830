#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ppca/eigen_sym.hpp"
#include "ppca/matrix.hpp"
#include "ppca/moments.hpp"
#include "ppca/parallel.hpp"
#include "ppca/rng.hpp"
#include "ppca/sampler.hpp"
#include "ppca/spectral.hpp"
#include "ppca/types.hpp"

namespace ppca {

/// Appends r rows of unit-mean Poisson noise to every observation (left
/// side); the right side transposes, augments and transposes back.
inline CountTensor augment(const CountTensor& data, Side side, std::size_t r, Rng& g) {
    if (r < 1) throw validation_error("augment: need r >= 1");
    if (side == Side::right) return augment(data.transposed(), Side::left, r, g).transposed();
    const std::size_t n = data.n(), p1 = data.p1(), p2 = data.p2();
    std::vector<std::int64_t> out(n * (p1 + r) * p2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p1; ++j)
            for (std::size_t k = 0; k < p2; ++k)
                out[(i * (p1 + r) + j) * p2 + k] = data(i, j, k);
        for (std::size_t j = p1; j < p1 + r; ++j)
            for (std::size_t k = 0; k < p2; ++k)
                out[(i * (p1 + r) + j) * p2 + k] = g.poisson(1.0);
    }
    return CountTensor(n, p1 + r, p2, std::move(out));
}

struct PhiCurve {
    Vector phi;            // values for k = 0..p
    std::size_t argmin;    // smallest minimizing k
};

/// Augmentation objective
///   phi(k) = sum_{j<=k} ||beta_j||^2 + lambda_{k+1} / (1 + sum_{j<=k+1} lambda_j)
/// with ||beta_0|| = 0. Eigenvalues of S may be negative and enter as-is;
/// the smallest-argmin contract holds regardless.
inline PhiCurve phi_from_spectrum(const Vector& eigenvalues, const Vector& beta_sq,
                                  std::size_t p) {
    if (eigenvalues.size() < p + 1)
        throw validation_error("phi_from_spectrum: need at least p+1 eigenvalues");
    if (beta_sq.size() < p) throw validation_error("phi_from_spectrum: need at least p beta values");
    PhiCurve out;
    out.phi.resize(p + 1);
    double beta_cum = 0.0;
    double ev_cum = 0.0;
    for (std::size_t k = 0; k <= p; ++k) {
        if (k > 0) beta_cum += beta_sq[k - 1];
        ev_cum += eigenvalues[k];
        out.phi[k] = beta_cum + eigenvalues[k] / (1.0 + ev_cum);
    }
    out.argmin = 0;
    for (std::size_t k = 1; k <= p; ++k)
        if (out.phi[k] < out.phi[out.argmin]) out.argmin = k;
    return out;
}

enum class DimEstimator { poisson, gaussian };

/// Latent dimension by predictor augmentation: s replicates of
/// (augment -> S or Cov -> eigendecompose), replicate-averaged eigenvalues
/// and trailing-coordinate masses, then the phi objective. Replicates that
/// fail the S computation are dropped and counted; all failing is an error.
inline AugmentationCurve estimate_dim(const CountTensor& data, Side side, std::size_t r,
                                      std::size_t s, DimEstimator estimator,
                                      const SeededStream& stream) {
    if (r < 1 || s < 1) throw validation_error("estimate_dim: need r >= 1 and s >= 1");
    if (side == Side::right) {
        AugmentationCurve curve =
            estimate_dim(data.transposed(), Side::left, r, s, estimator, stream);
        curve.side = Side::right;
        return curve;
    }

    const std::size_t p = data.p1();
    const std::size_t total = p + r;
    std::vector<Vector> eigenvalues(s);
    std::vector<Vector> beta_sq(s);
    std::vector<std::uint8_t> failed(s, 0);

    parallel_for(s, [&](std::size_t rep) {
        Rng g = stream.substream(rep, StreamKind::augment);
        const CountTensor augmented = augment(data, Side::left, r, g);
        Matrix matrix;
        try {
            matrix = estimator == DimEstimator::poisson
                         ? estimate_s(augmented, Side::left).s
                         : gaussian_cov(augmented, Side::left);
        } catch (const estimation_error&) {
            failed[rep] = 1;
            return;
        }
        const EigenSym eig = eigen_sym(matrix);
        eigenvalues[rep] = eig.values;
        Vector mass(total);
        for (std::size_t k = 0; k < total; ++k) {
            double b = 0.0;
            for (std::size_t i = p; i < total; ++i) b += eig.vectors(i, k) * eig.vectors(i, k);
            mass[k] = b;
        }
        beta_sq[rep] = std::move(mass);
    });

    std::size_t kept = 0;
    for (std::size_t rep = 0; rep < s; ++rep) kept += failed[rep] ? 0 : 1;
    if (kept == 0) throw estimation_error("estimate_dim: every augmentation replicate failed");

    AugmentationCurve curve;
    curve.side = side;
    curve.r = r;
    curve.s = s;
    curve.dropped_replicates = s - kept;
    curve.mean_eigenvalues.assign(total, 0.0);
    curve.mean_beta_sq.assign(total, 0.0);
    for (std::size_t k = 0; k < total; ++k) {
        CompensatedSum ev_sum, beta_sum;
        for (std::size_t rep = 0; rep < s; ++rep) {
            if (failed[rep]) continue;
            ev_sum.add(eigenvalues[rep][k]);
            beta_sum.add(beta_sq[rep][k]);
        }
        curve.mean_eigenvalues[k] = ev_sum.value() / static_cast<double>(kept);
        curve.mean_beta_sq[k] = beta_sum.value() / static_cast<double>(kept);
    }
    const PhiCurve phi = phi_from_spectrum(curve.mean_eigenvalues, curve.mean_beta_sq, p);
    curve.phi = phi.phi;
    curve.selected = phi.argmin;
    return curve;
}

}  // namespace ppca
