#include <catch2/catch.hpp>

#include <cmath>

#include "ppca/eigen_sym.hpp"
#include "ppca/matrix.hpp"
#include "ppca/rng.hpp"
#include "ppca/sampler.hpp"

using namespace ppca;

namespace {

Matrix random_symmetric(std::size_t n, Rng& g) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = 2.0 * g.uniform() - 1.0;
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

}  // namespace

TEST_CASE("eigen_sym on the identity", "[eigen]") {
    const auto eig = eigen_sym(Matrix::identity(3));
    for (double v : eig.values) CHECK(v == Approx(1.0).margin(1e-14));
}

TEST_CASE("eigen_sym on the rank-one ones matrix", "[eigen]") {
    const auto eig = eigen_sym(Matrix(3, 3, 1.0));
    CHECK(eig.values[0] == Approx(3.0).margin(1e-12));
    CHECK(eig.values[1] == Approx(0.0).margin(1e-12));
    CHECK(eig.values[2] == Approx(0.0).margin(1e-12));
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(eig.vectors(i, 0) == Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("eigen_sym reconstructs random symmetric matrices", "[eigen]") {
    Rng g(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_symmetric(6, g);
        const auto eig = eigen_sym(a);
        const Matrix rebuilt =
            eig.vectors * Matrix::diag(eig.values) * eig.vectors.transposed();
        CHECK((rebuilt - a).max_abs() <= 1e-9 * std::max(1.0, a.frobenius_norm()));

        // Columns orthonormal to 1e-10.
        for (std::size_t c1 = 0; c1 < 6; ++c1)
            for (std::size_t c2 = c1; c2 < 6; ++c2) {
                double dot_cc = 0.0;
                for (std::size_t i = 0; i < 6; ++i) dot_cc += eig.vectors(i, c1) * eig.vectors(i, c2);
                CHECK(std::abs(dot_cc - (c1 == c2 ? 1.0 : 0.0)) < 1e-10);
            }

        // Eigenvalue sum equals the trace.
        double sum = 0.0;
        for (double v : eig.values) sum += v;
        CHECK(sum == Approx(a.trace()).margin(1e-9 * a.frobenius_norm()));

        // Descending order and the sign convention.
        for (std::size_t i = 1; i < 6; ++i) CHECK(eig.values[i] <= eig.values[i - 1] + 1e-12);
        for (std::size_t c = 0; c < 6; ++c) {
            double peak = 0.0;
            for (std::size_t i = 0; i < 6; ++i)
                if (std::abs(eig.vectors(i, c)) > std::abs(peak)) peak = eig.vectors(i, c);
            CHECK(peak > 0.0);
        }
    }
}

TEST_CASE("eigen_sym sign ties resolve to the lowest index", "[eigen]") {
    // Eigenvector of the -1 eigenvalue of [[0,1],[1,0]] has tied-magnitude
    // entries; the first one must come out positive.
    Matrix a(2, 2, 0.0);
    a(0, 1) = a(1, 0) = 1.0;
    const auto eig = eigen_sym(a);
    CHECK(eig.values[0] == Approx(1.0).margin(1e-12));
    CHECK(eig.values[1] == Approx(-1.0).margin(1e-12));
    CHECK(eig.vectors(0, 1) > 0.0);
    CHECK(eig.vectors(1, 1) < 0.0);
}

TEST_CASE("eigen_sym rejects non-finite entries", "[eigen]") {
    Matrix a(2, 2, 0.0);
    a(0, 1) = a(1, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(eigen_sym(a), validation_error);
}

TEST_CASE("spd_solve solves positive definite systems", "[matrix]") {
    Rng g(5);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix b(4, 4);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) b(i, j) = g.normal();
        Matrix a = b.transposed() * b;
        for (std::size_t i = 0; i < 4; ++i) a(i, i) += 1.0;
        Vector rhs(4);
        for (double& v : rhs) v = g.normal();
        const Vector x = spd_solve(a, rhs);
        const Vector back = a * x;
        for (std::size_t i = 0; i < 4; ++i) CHECK(back[i] == Approx(rhs[i]).margin(1e-9));
    }
    CHECK_THROWS_AS(spd_solve(Matrix(2, 2, 0.0), Vector{1.0, 1.0}), estimation_error);
}

TEST_CASE("kron matches the small worked example", "[matrix]") {
    const Matrix a{{1.0, 2.0}, {3.0, 4.0}};
    const Matrix b{{0.0, 5.0}};
    const Matrix k = kron(a, b);
    REQUIRE(k.rows() == 2);
    REQUIRE(k.cols() == 4);
    CHECK(k(0, 1) == 5.0);
    CHECK(k(0, 3) == 10.0);
    CHECK(k(1, 1) == 15.0);
    CHECK(k(1, 3) == 20.0);
}

TEST_CASE("haar_orthogonal produces orthogonal matrices", "[matrix]") {
    Rng g(17);
    for (std::size_t p : {3, 7, 12}) {
        const Matrix w = haar_orthogonal(p, g);
        const Matrix gram = w.transposed() * w;
        CHECK((gram - Matrix::identity(p)).max_abs() < 1e-12);
    }
}

TEST_CASE("compensated sums survive cancellation-heavy inputs", "[matrix]") {
    CompensatedSum sum;
    sum.add(1.0);
    for (int i = 0; i < 10; ++i) sum.add(1e-17);
    CHECK(sum.value() == Approx(1.0 + 1e-16).epsilon(1e-18));
}
