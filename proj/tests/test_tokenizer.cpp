#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "periodica/errors.hpp"
#include "periodica/tokenizer.hpp"

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

double population_std(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    return std::sqrt(var / static_cast<double>(x.size()));
}

} // namespace

TEST_CASE("instance normalization on hand examples") {
    SUBCASE("constant series maps to zeros") {
        auto [y, rec] = revin_normalize({1.0, 1.0, 1.0});
        CHECK(rec.mean == doctest::Approx(1.0));
        CHECK(rec.std == doctest::Approx(1e-5));  // clamped
        for (double v : y) CHECK(v == doctest::Approx(0.0));
    }
    SUBCASE("two-point series") {
        auto [y, rec] = revin_normalize({0.0, 2.0});
        CHECK(y[0] == doctest::Approx(-1.0));
        CHECK(y[1] == doctest::Approx(1.0));
        CHECK(rec.mean == doctest::Approx(1.0));
        CHECK(rec.std == doctest::Approx(1.0));
    }
    SUBCASE("round trip") {
        std::vector<double> x = {3.1, -2.0, 7.5, 0.0, 4.4};
        auto [y, rec] = revin_normalize(x);
        auto back = revin_denormalize(y, rec);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-6));
        }
    }
    SUBCASE("too short") {
        CHECK_THROWS_AS(revin_normalize({1.0}), InsufficientHistory);
    }
}

TEST_CASE("patchify geometry") {
    std::vector<double> x(240);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);

    SUBCASE("exact multiple: 240 / 24 -> 10 x 24") {
        PatchGrid g = patchify(x, 24);
        CHECK(g.n_patches == 10);
        CHECK(g.cycle_length == 24);
        CHECK(g.dropped_prefix == 0);
        CHECK(g.patches.rows() == 10);
        CHECK(g.patches.cols() == 24);
        // rows ordered oldest to newest, anchored at the last point
        CHECK(g.patches(0, 0) == doctest::Approx(0.0));
        CHECK(g.patches(9, 23) == doctest::Approx(239.0));
    }
    SUBCASE("remainder drops the oldest points") {
        std::vector<double> y(250);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i);
        PatchGrid g = patchify(y, 24);
        CHECK(g.n_patches == 10);
        CHECK(g.dropped_prefix == 10);
        CHECK(g.patches(0, 0) == doctest::Approx(10.0));
        CHECK(g.patches(9, 23) == doctest::Approx(249.0));
    }
    SUBCASE("needs at least two patches") {
        CHECK_THROWS_AS(patchify(std::vector<double>(20, 0.0), 24),
                        InsufficientHistory);
    }
    SUBCASE("flatten inverts patchify on exact multiples") {
        PatchGrid g = patchify(x, 24);
        for (std::size_t i = 0; i < 240; ++i) {
            CHECK(g.patches.raw()[i] == doctest::Approx(x[i]));
        }
    }
}

TEST_CASE("resize is the identity at the reference size") {
    Matrix theta = random_matrix(48, 16, 1);
    for (auto mode : {ResizeMode::flex, ResizeMode::linear}) {
        Matrix out = flex_resize(theta, 48, mode);
        CHECK(max_abs(sub(out, theta)) == 0.0);
    }
}

TEST_CASE("flex downsampling by 4 equals 0.5 * pinv(A) * theta") {
    // ref 48 -> target 12: delta = sqrt(48/12) = 2, so the transform is
    // (1/2) * pinv(interp_matrix(48, 12)).
    Matrix theta = random_matrix(48, 8, 2);
    Matrix expect = matmul(scale(pinv(interp_matrix(48, 12)), 0.5), theta);
    Matrix got = flex_resize(theta, 12, ResizeMode::flex);
    CHECK(got.rows() == 12);
    CHECK(max_abs(sub(got, expect)) < 1e-12);
}

TEST_CASE("linear mode is plain transposed interpolation") {
    Matrix theta = random_matrix(48, 8, 3);
    Matrix expect = matmul(transpose(interp_matrix(48, 96)), theta);
    CHECK(max_abs(sub(flex_resize(theta, 96, ResizeMode::linear), expect)) < 1e-12);
}

TEST_CASE("upsampling consistency: x A A+ theta = x theta") {
    // interp_matrix(48, 96) has full row rank, so A A+ = I and resizing a
    // projection up then applying it to the interpolated signal matches the
    // original projection on the original signal.
    Matrix a = interp_matrix(48, 96);
    Matrix ap = pinv(a);
    Matrix theta = random_matrix(48, 8, 4);
    for (std::uint64_t s = 0; s < 100; ++s) {
        Matrix x = random_matrix(1, 48, 100 + s);
        Matrix lhs = matmul(matmul(matmul(x, a), ap), theta);
        Matrix rhs = matmul(x, theta);
        CHECK(max_abs(sub(lhs, rhs)) < 1e-5);
    }
}

TEST_CASE("flex solution minimizes the interpolation-consistency residual") {
    // theta' = delta^-1 A+ theta is the least-squares solution of
    // A theta' ~ delta^-1 theta (column-wise); any perturbation has a
    // residual at least as large.
    const std::size_t ref = 48, target = 12;
    Matrix a = interp_matrix(ref, target);  // 48 x 12
    Matrix theta = random_matrix(ref, 6, 5);
    const double inv_delta = 1.0 / std::sqrt(static_cast<double>(ref) / target);
    Matrix best = flex_resize(theta, target, ResizeMode::flex);  // 12 x 6
    double base_res = frobenius_norm(sub(matmul(a, best), scale(theta, inv_delta)));

    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd(0.0, 0.1);
    for (int trial = 0; trial < 1000; ++trial) {
        Matrix pert = best;
        for (double& v : pert.raw()) v += nd(rng);
        double res = frobenius_norm(sub(matmul(a, pert), scale(theta, inv_delta)));
        CHECK(res >= base_res - 1e-12);
    }
}

TEST_CASE("delta bounds the std shrinkage of interpolation") {
    // For x ~ N(0, I) of length 48 resized to 12 via x * A, the std ratio
    // std(x) / std(xA) stays below delta * 1.05 on average, delta = 2.
    const std::size_t ref = 48, target = 12;
    Matrix a = interp_matrix(ref, target);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    double mean_ratio = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(ref);
        for (double& v : x) v = nd(rng);
        Matrix xm(1, ref, x);
        Matrix y = matmul(xm, a);
        mean_ratio += population_std(x) / population_std(y.raw());
    }
    mean_ratio /= n;
    CHECK(mean_ratio <= 2.0 * 1.05);
}

TEST_CASE("embed and unembed round shapes") {
    FlexWeights w;
    w.reference_size = 48;
    w.theta_e = random_matrix(48, 16, 10);
    w.theta_d = random_matrix(48, 16, 11);

    std::vector<double> x(10 * 24);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    for (double& v : x) v = nd(rng);

    PatchGrid g = patchify(x, 24);
    Matrix tokens = embed_patches(g, w, ResizeMode::flex);
    CHECK(tokens.rows() == 10);
    CHECK(tokens.cols() == 16);

    Matrix z = random_matrix(4, 16, 13);
    auto out = unembed_tokens(z, w, 24, 90, ResizeMode::flex);
    CHECK(out.size() == 90);

    // horizon larger than K * P is rejected
    CHECK_THROWS_AS(unembed_tokens(z, w, 24, 97, ResizeMode::flex), InvalidDimension);
}

TEST_CASE("embedding matches the manual product") {
    FlexWeights w;
    w.reference_size = 48;
    w.theta_e = random_matrix(48, 16, 20);
    w.theta_d = w.theta_e;

    std::vector<double> x(5 * 12);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.1 * i);
    PatchGrid g = patchify(x, 12);
    Matrix expect = matmul(g.patches, flex_resize(w.theta_e, 12, ResizeMode::flex));
    Matrix got = embed_patches(g, w, ResizeMode::flex);
    CHECK(max_abs(sub(got, expect)) < 1e-12);
}

TEST_CASE("resize cache returns identical transforms") {
    ResizeCache cache;
    const Matrix& a = cache.get(48, 12, ResizeMode::flex);
    const Matrix& b = cache.get(48, 12, ResizeMode::flex);
    CHECK(&a == &b);
    CHECK(max_abs(sub(a, resize_transform(48, 12, ResizeMode::flex))) == 0.0);
    cache.clear();
    const Matrix& c = cache.get(48, 12, ResizeMode::flex);
    CHECK(max_abs(sub(c, resize_transform(48, 12, ResizeMode::flex))) == 0.0);
}
