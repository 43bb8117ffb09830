#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>

#include "ppca/matrix.hpp"
#include "ppca/rng.hpp"
#include "ppca/types.hpp"

using namespace ppca;

namespace {

PlnParams identity_params(std::size_t p1, std::size_t p2) {
    PlnParams params;
    params.mu = Matrix(p1, p2, 0.0);
    params.u1 = Matrix::identity(p1);
    params.u2 = Matrix::identity(p2);
    params.lambda1.assign(p1, 1.0);
    params.lambda2.assign(p2, 1.0);
    params.tau2 = 1.0;
    return params;
}

}  // namespace

TEST_CASE("canonicalize leaves canonical inputs unchanged", "[model-core]") {
    const auto res = canonicalize({1.0, 1.0}, {1.0}, 1.0, 2, 1);
    CHECK(res.lambda1 == Vector{1.0, 1.0});
    CHECK(res.lambda2 == Vector{1.0});
    CHECK(res.tau2 == 1.0);
}

TEST_CASE("canonicalize rescales and absorbs the factors into tau2", "[model-core]") {
    const auto res = canonicalize({2.0, 2.0}, {3.0}, 1.0, 2, 1);
    CHECK(res.lambda1 == Vector{1.0, 1.0});
    CHECK(res.lambda2 == Vector{1.0});
    CHECK(res.tau2 == 6.0);
}

TEST_CASE("canonicalize preserves the Kronecker covariance", "[model-core]") {
    Rng g(42);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d1 = 1 + g.next_u64() % 4;
        const std::size_t d2 = 1 + g.next_u64() % 3;
        Vector l1(d1), l2(d2);
        for (double& v : l1) v = 0.05 + 3.0 * g.uniform();
        for (double& v : l2) v = 0.05 + 3.0 * g.uniform();
        const double tau2 = 0.1 + 2.0 * g.uniform();
        const auto res = canonicalize(l1, l2, tau2, d1 + 2, d2 + 1);

        // Same multiset of products tau2 * l1_a * l2_b on both sides.
        std::vector<double> before, after;
        for (double a : l1)
            for (double b : l2) before.push_back(tau2 * a * b);
        for (double a : res.lambda1)
            for (double b : res.lambda2) after.push_back(res.tau2 * a * b);
        std::sort(before.begin(), before.end());
        std::sort(after.begin(), after.end());
        for (std::size_t i = 0; i < before.size(); ++i)
            CHECK(after[i] == Approx(before[i]).epsilon(1e-12));

        double sum1 = 0.0, sum2 = 0.0;
        for (double v : res.lambda1) sum1 += v;
        for (double v : res.lambda2) sum2 += v;
        CHECK(sum1 == Approx(static_cast<double>(d1 + 2)).epsilon(1e-12));
        CHECK(sum2 == Approx(static_cast<double>(d2 + 1)).epsilon(1e-12));
    }
}

TEST_CASE("canonicalize is exactly idempotent", "[model-core]") {
    Rng g(7);
    for (int trial = 0; trial < 50; ++trial) {
        Vector l1 = {0.3 + g.uniform(), 0.3 + g.uniform(), 0.3 + g.uniform()};
        Vector l2 = {0.3 + g.uniform(), 0.3 + g.uniform()};
        const auto once = canonicalize(l1, l2, 1.7, 5, 4);
        const auto twice = canonicalize(once.lambda1, once.lambda2, once.tau2, 5, 4);
        CHECK(twice.lambda1 == once.lambda1);
        CHECK(twice.lambda2 == once.lambda2);
        CHECK(twice.tau2 == once.tau2);
    }
}

TEST_CASE("canonicalize rejects non-positive input", "[model-core]") {
    CHECK_THROWS_AS(canonicalize({1.0, 0.0}, {1.0}, 1.0, 2, 1), validation_error);
    CHECK_THROWS_AS(canonicalize({1.0}, {-2.0}, 1.0, 1, 1), validation_error);
    CHECK_THROWS_AS(canonicalize({1.0}, {1.0}, 0.0, 1, 1), validation_error);
}

TEST_CASE("validate accepts the identity configuration", "[model-core]") {
    CHECK(validate(identity_params(3, 2)).empty());
}

TEST_CASE("validate reports non-orthonormal loadings", "[model-core]") {
    PlnParams params = identity_params(3, 2);
    params.u1(0, 0) = 2.0;
    const auto violations = validate(params);
    REQUIRE_FALSE(violations.empty());
    CHECK(std::any_of(violations.begin(), violations.end(),
                      [](const std::string& v) { return v == "U1 not orthonormal"; }));
}

TEST_CASE("validate reports unsorted lambdas", "[model-core]") {
    PlnParams params = identity_params(3, 2);
    params.lambda1 = {0.5, 1.5, 1.0};
    const auto violations = validate(params);
    CHECK(std::any_of(violations.begin(), violations.end(),
                      [](const std::string& v) { return v == "lambda1 not descending"; }));
}

TEST_CASE("validate checks the trace constraint only for canonical params", "[model-core]") {
    PlnParams params = identity_params(3, 2);
    params.lambda1 = {2.0, 1.0, 0.5};  // sums to 3.5, not p1 = 3
    CHECK_FALSE(validate(params).empty());
    params.canonical = false;
    CHECK(validate(params).empty());
}

TEST_CASE("CountTensor enforces its invariants", "[model-core]") {
    CHECK_THROWS_AS(CountTensor(1, 1, 1, {0}), validation_error);
    CHECK_THROWS_AS(CountTensor(2, 1, 1, {0, -1}), validation_error);
    CHECK_THROWS_AS(CountTensor(2, 1, 1, {0}), validation_error);

    const CountTensor x(2, 2, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    CHECK(x(1, 0, 2) == 8);
    const CountTensor t = x.transposed();
    CHECK(t.p1() == 3);
    CHECK(t.p2() == 2);
    CHECK(t(1, 2, 0) == x(1, 0, 2));
    CHECK(t.transposed().data() == x.data());

    // vec stacks the columns.
    const Vector v = x.vec_observation(0);
    CHECK(v == Vector{0.0, 3.0, 1.0, 4.0, 2.0, 5.0});
}

TEST_CASE("ZeroInflationMask rejects out-of-range probabilities", "[model-core]") {
    CHECK_THROWS_AS(ZeroInflationMask{Matrix(1, 1, 0.0)}, validation_error);
    CHECK_THROWS_AS(ZeroInflationMask{Matrix(1, 1, 1.5)}, validation_error);
    CHECK_NOTHROW(ZeroInflationMask{Matrix(2, 2, 1.0)});
}
