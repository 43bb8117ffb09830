#include <catch2/catch.hpp>

#include <cmath>

#include "ppca/moments.hpp"
#include "ppca/rng.hpp"
#include "ppca/sampler.hpp"
#include "ppca/spectral.hpp"

using namespace ppca;

namespace {

SPair spair_of(Matrix s1, Matrix s2, double tau2) {
    SPair pair;
    pair.s1 = std::move(s1);
    pair.s2 = std::move(s2);
    pair.tau2 = tau2;
    return pair;
}

PlnParams two_block_params() {
    // d = (1, 5) with distinct lambda2 so eigenvectors are identified.
    PlnParams params;
    params.mu = Matrix(10, 5, 0.0);
    params.u1 = Matrix(10, 1, 1.0 / std::sqrt(10.0));
    Rng g(4242);
    params.u2 = haar_orthogonal(5, g);
    params.lambda1 = {10.0};
    params.lambda2 = {1.5, 1.25, 1.0, 0.75, 0.5};
    params.tau2 = 1.0;
    params.canonical = true;
    return params;
}

}  // namespace

TEST_CASE("extract_loadings on a rank-one S", "[spectral]") {
    const std::size_t p = 6;
    const auto loadings = extract_loadings(spair_of(Matrix(p, p, 1.0), Matrix::identity(3), 1.0),
                                           1, 1);
    CHECK(loadings.lambda1[0] == Approx(static_cast<double>(p)).epsilon(1e-12));
    for (std::size_t i = 0; i < p; ++i)
        CHECK(loadings.u1(i, 0) == Approx(1.0 / std::sqrt(static_cast<double>(p))).epsilon(1e-10));
}

TEST_CASE("extract_loadings on a diagonal S", "[spectral]") {
    Matrix s1(2, 2, 0.0);
    s1(0, 0) = 3.0;
    s1(1, 1) = 1.0;
    const auto loadings = extract_loadings(spair_of(s1, Matrix::identity(2), 1.0), 1, 1);
    CHECK(loadings.lambda1[0] == Approx(3.0).epsilon(1e-12));
    CHECK(std::abs(loadings.u1(0, 0)) == Approx(1.0).epsilon(1e-10));
    CHECK(loadings.u1(1, 0) == Approx(0.0).margin(1e-10));
}

TEST_CASE("extract_loadings floors negative and tiny eigenvalues", "[spectral]") {
    Matrix s1(2, 2, 0.0);
    s1(0, 0) = 2.0;
    s1(1, 1) = -0.5;
    const auto loadings = extract_loadings(spair_of(s1, Matrix::identity(2), 1.0), 2, 1);
    CHECK(loadings.floored1[0] == 0);
    CHECK(loadings.floored1[1] == 1);
    CHECK(loadings.lambda1[1] == Approx(1e-8 * 2.0).epsilon(1e-12));
    CHECK(loadings.spectrum1[1] == Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("extract_loadings validates its inputs", "[spectral]") {
    const SPair pair = spair_of(Matrix::identity(3), Matrix::identity(2), 1.0);
    CHECK_THROWS_AS(extract_loadings(spair_of(Matrix::identity(3), Matrix::identity(2), 0.0), 1, 1),
                    estimation_error);
    CHECK_THROWS_AS(extract_loadings(pair, 4, 1), validation_error);
    CHECK_THROWS_AS(extract_loadings(pair, 1, 3), validation_error);
}

TEST_CASE("estimated loadings approach the true subspace", "[spectral]") {
    const PlnParams params = two_block_params();
    const auto sample = sample_pln(params, 20000, SeededStream(301));
    const SPair pair = estimate_spair(sample.counts);
    const auto loadings = extract_loadings(pair, 1, 5);
    // d1 = 1: the principal angle is the arccos of the inner product.
    double inner = 0.0;
    for (std::size_t i = 0; i < 10; ++i) inner += loadings.u1(i, 0) * params.u1(i, 0);
    CHECK(std::acos(std::min(1.0, std::abs(inner))) < 0.1);
}

TEST_CASE("projector estimates converge under tied eigenvalues", "[spectral][slow]") {
    // lambda2 all equal: individual eigenvectors are not identified but the
    // projector U2 U2' is.
    PlnParams params;
    params.mu = Matrix(6, 4, 0.0);
    params.u1 = Matrix(6, 1, 1.0 / std::sqrt(6.0));
    Rng g(99);
    const Matrix w = haar_orthogonal(4, g);
    params.u2 = Matrix(4, 2);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t a = 0; a < 2; ++a) params.u2(i, a) = w(i, a);
    params.lambda1 = {6.0};
    params.lambda2 = {2.0, 2.0};
    params.tau2 = 1.0;
    params.canonical = true;
    const Matrix projector_true = params.u2 * params.u2.transposed();

    const auto projector_error = [&](std::size_t n, std::uint64_t seed) {
        const auto sample = sample_pln(params, n, SeededStream(seed));
        const auto loadings = extract_loadings(estimate_spair(sample.counts), 1, 2);
        const Matrix projector = loadings.u2 * loadings.u2.transposed();
        return (projector - projector_true).frobenius_norm();
    };
    std::vector<double> small(11), large(11);
    for (std::uint64_t rep = 0; rep < 11; ++rep) {
        small[rep] = projector_error(1000, 500 + rep);
        large[rep] = projector_error(4000, 900 + rep);
    }
    std::sort(small.begin(), small.end());
    std::sort(large.begin(), large.end());
    const double ratio = large[5] / small[5];
    CHECK(ratio > 0.5 * 0.65);
    CHECK(ratio < 0.5 * 1.35);
}

TEST_CASE("gaussian_cov basics", "[spectral]") {
    // Constant data has zero covariance.
    const CountTensor constant(4, 2, 3, std::vector<std::int64_t>(24, 5));
    CHECK(gaussian_cov(constant, Side::left).max_abs() == 0.0);

    // Scalar case: the plain sample variance with divisor n.
    const CountTensor scalar(4, 1, 1, {1, 2, 3, 6});
    const double mean = 3.0;
    double var = 0.0;
    for (double v : {1.0, 2.0, 3.0, 6.0}) var += (v - mean) * (v - mean);
    var /= 4.0;
    CHECK(gaussian_cov(scalar, Side::left)(0, 0) == Approx(var).epsilon(1e-14));
}

TEST_CASE("gaussian_cov equals the naive oracle", "[spectral]") {
    Rng g(55);
    std::vector<std::int64_t> data(6 * 3 * 2);
    for (auto& v : data) v = g.poisson(3.0);
    const CountTensor x(6, 3, 2, data);
    const Matrix cov = gaussian_cov(x, Side::left);

    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k) {
            double mean_j[2] = {0, 0}, mean_k[2] = {0, 0};
            for (std::size_t ell = 0; ell < 2; ++ell) {
                for (std::size_t i = 0; i < 6; ++i) {
                    mean_j[ell] += static_cast<double>(x(i, j, ell)) / 6.0;
                    mean_k[ell] += static_cast<double>(x(i, k, ell)) / 6.0;
                }
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t ell = 0; ell < 2; ++ell)
                    acc += (static_cast<double>(x(i, j, ell)) - mean_j[ell]) *
                           (static_cast<double>(x(i, k, ell)) - mean_k[ell]);
            CHECK(cov(j, k) == Approx(acc / 12.0).margin(1e-12));
        }

    const Matrix right = gaussian_cov(x, Side::right);
    CHECK(right.rows() == 2);
    CHECK(right.data() == gaussian_cov(x.transposed(), Side::left).data());
}
