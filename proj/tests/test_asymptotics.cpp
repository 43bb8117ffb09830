#include <catch2/catch.hpp>

#include <cmath>

#include "ppca/asymptotics.hpp"
#include "ppca/matrix.hpp"
#include "ppca/rng.hpp"

using namespace ppca;

TEST_CASE("factorial moments of the scalar model", "[asymptotics]") {
    for (int j : {1, 2, 3, 4}) CHECK(pln_factorial_moment(j, 0.0, 0.0) == 1.0);
    CHECK(pln_factorial_moment(2, 0.0, 1.0) == Approx(std::exp(2.0)).epsilon(1e-15));
    CHECK(pln_factorial_moment(2, 0.0, 1.0) == Approx(7.389056).margin(1e-6));
    // Order one coincides with the marginal mean formula exp(mu + sigma2/2).
    CHECK(pln_factorial_moment(1, 0.3, 0.4) == Approx(std::exp(0.3 + 0.2)).epsilon(1e-15));
    CHECK_THROWS_AS(pln_factorial_moment(0, 0.0, 0.0), validation_error);
}

TEST_CASE("asymptotic variance at the Poisson point", "[asymptotics]") {
    CHECK(asym_var_s11(0.0, 0.0) == 2.0);
}

TEST_CASE("asymptotic variance is positive over a parameter grid", "[asymptotics]") {
    for (double mu : {-1.0, -0.5, 0.0, 0.5, 1.0})
        for (double sigma2 : {0.0, 0.1, 0.25, 0.5, 1.0}) CHECK(asym_var_s11(mu, sigma2) > 0.0);
}

TEST_CASE("asymptotic variance agrees with the delta-method assembly", "[asymptotics]") {
    for (double mu : {-0.5, 0.0, 0.4})
        for (double sigma2 : {0.0, 0.3, 0.8}) {
            const double m1 = pln_factorial_moment(1, mu, sigma2);
            const double m2 = pln_factorial_moment(2, mu, sigma2);
            const double m3 = pln_factorial_moment(3, mu, sigma2);
            const double m4 = pln_factorial_moment(4, mu, sigma2);
            // Covariance of (m_n1, m_n2) via the raw-moment relations, then
            // the gradient (-2/m1, 1/m2) of (a, b) -> log(b/a^2).
            const double s11 = m1 + m2 - m1 * m1;
            const double s12 = 2.0 * m2 + m3 - m1 * m2;
            const double s22 = 2.0 * m2 + 4.0 * m3 + m4 - m2 * m2;
            const double g1 = -2.0 / m1, g2 = 1.0 / m2;
            const double assembled = g1 * g1 * s11 + 2.0 * g1 * g2 * s12 + g2 * g2 * s22;
            CHECK(asym_var_s11(mu, sigma2) ==
                  Approx(assembled).epsilon(1e-12));
        }
}

TEST_CASE("raw and factorial moments obey the expansion identities", "[asymptotics]") {
    // x^2 = x + x(x-1) and friends hold pointwise, so the sample versions
    // agree to rounding; the population versions agree within Monte-Carlo
    // error of the simulated moments.
    Rng g(333);
    const double lambda = 1.3;
    const std::size_t n = 200000;
    CompensatedSum t1, t2, t3, t4, m1, m2, m3, m4;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(g.poisson(lambda));
        t1.add(x);
        t2.add(x * x);
        t3.add(x * x * x);
        t4.add(x * x * x * x);
        m1.add(x);
        m2.add(x * (x - 1));
        m3.add(x * (x - 1) * (x - 2));
        m4.add(x * (x - 1) * (x - 2) * (x - 3));
    }
    const double nd = static_cast<double>(n);
    CHECK(t2.value() / nd == Approx((m1.value() + m2.value()) / nd).epsilon(1e-12));
    CHECK(t3.value() / nd ==
          Approx((m1.value() + 3.0 * m2.value() + m3.value()) / nd).epsilon(1e-12));
    CHECK(t4.value() / nd ==
          Approx((m1.value() + 7.0 * m2.value() + 6.0 * m3.value() + m4.value()) / nd)
              .epsilon(1e-12));

    // Against the Poisson population factorial moments lambda^j, within 4 SE.
    const auto se = [&](double fourth_moment_scale) {
        return 4.0 * fourth_moment_scale / std::sqrt(nd);
    };
    CHECK(m1.value() / nd == Approx(lambda).margin(se(std::sqrt(lambda))));
    CHECK(m2.value() / nd == Approx(lambda * lambda).margin(se(4.0)));
    CHECK(m3.value() / nd == Approx(std::pow(lambda, 3)).margin(se(15.0)));
    CHECK(m4.value() / nd == Approx(std::pow(lambda, 4)).margin(se(80.0)));
}

TEST_CASE("mc_verify matches the closed form at a non-degenerate point", "[asymptotics][slow]") {
    const McVerifyResult res = mc_verify(0.0, 0.25, 5000, 2000, SeededStream(404));
    CHECK(res.formula_var == asym_var_s11(0.0, 0.25));
    CHECK(res.ratio > 0.8);
    CHECK(res.ratio < 1.2);
    CHECK(res.dropped == 0);
}

TEST_CASE("mc_verify spread shrinks with more replicates", "[asymptotics][slow]") {
    const auto spread = [&](std::size_t reps, std::uint64_t salt) {
        double lo = 1e300, hi = -1e300;
        for (std::uint64_t run = 0; run < 6; ++run) {
            const double ratio =
                mc_verify(0.0, 0.0, 400, reps, SeededStream(salt + run)).ratio;
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        return hi - lo;
    };
    CHECK(spread(1200, 50) < spread(150, 10));
}

TEST_CASE("mc_verify input validation", "[asymptotics]") {
    CHECK_THROWS_AS(mc_verify(0.0, 0.0, 50, 2000, SeededStream(1)), validation_error);
    CHECK_THROWS_AS(mc_verify(0.0, 0.0, 5000, 50, SeededStream(1)), validation_error);
}

TEST_CASE("mc_verify rejects fully degenerate samples", "[asymptotics]") {
    // mu = -12 makes every count zero, so every replicate lacks a second
    // moment and is dropped.
    CHECK_THROWS_AS(mc_verify(-12.0, 0.0, 100, 100, SeededStream(2)), estimation_error);
}
