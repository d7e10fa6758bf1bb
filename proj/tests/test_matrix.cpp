#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "periodica/errors.hpp"
#include "periodica/matrix.hpp"

#include <cmath>
#include <random>

using namespace periodica;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Matrix m(r, c);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (double& v : m.raw()) v = nd(rng);
    return m;
}

double penrose_error(const Matrix& a, const Matrix& x) {
    // max violation over the four Moore-Penrose conditions
    Matrix ax = matmul(a, x);
    Matrix xa = matmul(x, a);
    double e = max_abs(sub(matmul(ax, a), a));
    e = std::max(e, max_abs(sub(matmul(xa, x), x)));
    e = std::max(e, max_abs(sub(transpose(ax), ax)));
    e = std::max(e, max_abs(sub(transpose(xa), xa)));
    return e;
}

} // namespace

TEST_CASE("matmul against hand-computed product") {
    Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
    Matrix b(3, 2, {7, 8, 9, 10, 11, 12});
    Matrix c = matmul(a, b);
    CHECK(c(0, 0) == doctest::Approx(58));
    CHECK(c(0, 1) == doctest::Approx(64));
    CHECK(c(1, 0) == doctest::Approx(139));
    CHECK(c(1, 1) == doctest::Approx(154));
    CHECK_THROWS_AS(matmul(a, a), InvalidDimension);
}

TEST_CASE("matmul_nt and matmul_tn agree with explicit transposes") {
    Matrix a = random_matrix(4, 3, 1);
    Matrix b = random_matrix(5, 3, 2);
    CHECK(max_abs(sub(matmul_nt(a, b), matmul(a, transpose(b)))) < 1e-14);
    Matrix c = random_matrix(4, 5, 3);
    CHECK(max_abs(sub(matmul_tn(a, c), matmul(transpose(a), c))) < 1e-14);
}

TEST_CASE("interpolation matrix: equal sizes give the identity") {
    CHECK(max_abs(sub(interp_matrix(3, 3), identity(3))) == 0.0);
    CHECK(max_abs(sub(interp_matrix(7, 7), identity(7))) == 0.0);
}

TEST_CASE("interpolation matrix: 2 -> 3 inserts the midpoint") {
    Matrix x(1, 2, {0.0, 2.0});
    Matrix y = matmul(x, interp_matrix(2, 3));
    REQUIRE(y.cols() == 3);
    CHECK(y(0, 0) == doctest::Approx(0.0));
    CHECK(y(0, 1) == doctest::Approx(1.0));
    CHECK(y(0, 2) == doctest::Approx(2.0));
}

TEST_CASE("interpolation matrix: 3 -> 2 keeps the endpoints") {
    Matrix x(1, 3, {0.0, 1.0, 2.0});
    Matrix y = matmul(x, interp_matrix(3, 2));
    REQUIRE(y.cols() == 2);
    CHECK(y(0, 0) == doctest::Approx(0.0));
    CHECK(y(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("interpolation matrix columns sum to 1") {
    for (auto [s, d] : {std::pair<std::size_t, std::size_t>{48, 96},
                        {48, 12},
                        {24, 48},
                        {5, 17},
                        {17, 5},
                        {1, 4}}) {
        Matrix a = interp_matrix(s, d);
        REQUIRE(a.rows() == s);
        REQUIRE(a.cols() == d);
        for (std::size_t j = 0; j < d; ++j) {
            double col = 0.0;
            for (std::size_t i = 0; i < s; ++i) col += a(i, j);
            CHECK(col == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("interpolation preserves constant signals") {
    Matrix x(1, 48, std::vector<double>(48, 3.25));
    Matrix y = matmul(x, interp_matrix(48, 96));
    for (std::size_t j = 0; j < 96; ++j) CHECK(y(0, j) == doctest::Approx(3.25));
}

TEST_CASE("pinv satisfies the four Penrose conditions") {
    SUBCASE("tall") {
        Matrix a = random_matrix(8, 3, 10);
        CHECK(penrose_error(a, pinv(a)) < 1e-10);
    }
    SUBCASE("wide") {
        Matrix a = random_matrix(3, 8, 11);
        CHECK(penrose_error(a, pinv(a)) < 1e-10);
    }
    SUBCASE("square invertible") {
        Matrix a = random_matrix(5, 5, 12);
        CHECK(penrose_error(a, pinv(a)) < 1e-9);
    }
    SUBCASE("rank deficient") {
        Matrix b = random_matrix(6, 2, 13);
        Matrix c = random_matrix(2, 6, 14);
        Matrix a = matmul(b, c);  // rank 2, 6x6
        CHECK(penrose_error(a, pinv(a)) < 1e-9);
    }
}

TEST_CASE("pinv of a square invertible matrix is its inverse") {
    Matrix a(2, 2, {2, 0, 0, 4});
    Matrix x = pinv(a);
    CHECK(x(0, 0) == doctest::Approx(0.5));
    CHECK(x(1, 1) == doctest::Approx(0.25));
    CHECK(x(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("upsampling interpolation has full row rank: A * pinv(A) = I") {
    for (auto [s, d] : {std::pair<std::size_t, std::size_t>{48, 96}, {24, 48}, {12, 48}}) {
        Matrix a = interp_matrix(s, d);
        CHECK(max_abs(sub(matmul(a, pinv(a)), identity(s))) < 1e-10);
    }
}

TEST_CASE("pinv rejects non-finite input") {
    Matrix a(2, 2, {1.0, 2.0, std::nan(""), 4.0});
    CHECK_THROWS_AS(pinv(a), InvalidValue);
}

TEST_CASE("frobenius norm and max_abs") {
    Matrix a(1, 2, {3.0, -4.0});
    CHECK(frobenius_norm(a) == doctest::Approx(5.0));
    CHECK(max_abs(a) == doctest::Approx(4.0));
}
