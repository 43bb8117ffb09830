#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ppca/matrix.hpp"
#include "ppca/parallel.hpp"
#include "ppca/rng.hpp"

namespace ppca {

/// j-th factorial moment of the scalar model x | z ~ Po{exp(mu + sigma z)}:
/// exp(j mu + j^2 sigma^2 / 2).
inline double pln_factorial_moment(int j, double mu, double sigma2) {
    if (j < 1) throw validation_error("pln_factorial_moment: need j >= 1");
    if (!(sigma2 >= 0.0)) throw validation_error("pln_factorial_moment: sigma2 must be >= 0");
    const double jd = static_cast<double>(j);
    return std::exp(jd * mu + 0.5 * jd * jd * sigma2);
}

/// Asymptotic variance of sqrt(n) (s_n1 - s_11) in the scalar model,
/// assembled from the first four factorial moments.
inline double asym_var_s11(double mu, double sigma2) {
    const double m1 = pln_factorial_moment(1, mu, sigma2);
    const double m2 = pln_factorial_moment(2, mu, sigma2);
    const double m3 = pln_factorial_moment(3, mu, sigma2);
    const double m4 = pln_factorial_moment(4, mu, sigma2);
    return -4.0 / m1 + 4.0 * m2 / (m1 * m1) - 4.0 * m3 / (m1 * m2) + 2.0 / m2 +
           4.0 * m3 / (m2 * m2) + m4 / (m2 * m2) - 1.0;
}

struct McVerifyResult {
    double empirical_var = 0.0;  // variance of sqrt(n) (s_n - s) over replicates
    double formula_var = 0.0;    // asym_var_s11 at the same parameters
    double ratio = 0.0;          // empirical / formula
    std::size_t dropped = 0;     // replicates with a degenerate second moment
};

/// Monte-Carlo check of the limiting variance: simulates `reps` samples of
/// size n from the scalar model and compares the empirical variance of the
/// centered, scaled diagonal statistic against the closed form.
inline McVerifyResult mc_verify(double mu, double sigma2, std::size_t n, std::size_t reps,
                                const SeededStream& stream) {
    if (n < 100 || reps < 100) throw validation_error("mc_verify: need n >= 100 and reps >= 100");
    const double sigma = std::sqrt(sigma2);
    const double s_pop = std::log(pln_factorial_moment(2, mu, sigma2) /
                                  (pln_factorial_moment(1, mu, sigma2) *
                                   pln_factorial_moment(1, mu, sigma2)));
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    std::vector<double> h(reps, 0.0);
    std::vector<std::uint8_t> kept(reps, 0);
    parallel_for(reps, [&](std::size_t rep) {
        Rng g = stream.substream(rep, StreamKind::iid);
        CompensatedSum sum1, sum2;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(g.poisson(std::exp(mu + sigma * g.normal())));
            sum1.add(x);
            sum2.add(x * (x - 1.0));
        }
        const double m1 = sum1.value() / static_cast<double>(n);
        const double m2 = sum2.value() / static_cast<double>(n);
        if (!(m1 > 0.0) || !(m2 > 0.0)) return;  // degenerate replicate, dropped
        h[rep] = sqrt_n * (std::log(m2 / (m1 * m1)) - s_pop);
        kept[rep] = 1;
    });

    std::size_t n_kept = 0;
    CompensatedSum mean_sum;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        if (!kept[rep]) continue;
        ++n_kept;
        mean_sum.add(h[rep]);
    }
    if (n_kept < 2) throw estimation_error("mc_verify: all replicates degenerate");
    const double mean = mean_sum.value() / static_cast<double>(n_kept);
    CompensatedSum var_sum;
    for (std::size_t rep = 0; rep < reps; ++rep)
        if (kept[rep]) var_sum.add((h[rep] - mean) * (h[rep] - mean));

    McVerifyResult out;
    out.empirical_var = var_sum.value() / static_cast<double>(n_kept - 1);
    out.formula_var = asym_var_s11(mu, sigma2);
    out.ratio = out.empirical_var / out.formula_var;
    out.dropped = reps - n_kept;
    return out;
}

}  // namespace ppca
