#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "periodica/errors.hpp"
#include "periodica/periodicity.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace periodica;

namespace {

std::vector<double> sine(std::size_t length, double period, double amp = 1.0,
                         double phase = 0.0) {
    std::vector<double> x(length);
    for (std::size_t t = 0; t < length; ++t) {
        x[t] = amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period +
                              phase);
    }
    return x;
}

} // namespace

TEST_CASE("pure sinusoid, period 24, L = 240") {
    auto est = find_period_fft(sine(240, 24.0), 2, 120);
    CHECK(est.cycle_length == 24);
    CHECK(est.source == PeriodSource::fft);
    CHECK(est.confidence > 0.5);
}

TEST_CASE("constant input falls back to the reference patch size") {
    std::vector<double> x(240, 5.0);
    auto est = find_period_fft(x);
    CHECK(est.source == PeriodSource::fallback);
    CHECK(est.cycle_length == 48);

    auto est2 = find_period_fft(x, 2, 0, 24);
    CHECK(est2.cycle_length == 24);
}

TEST_CASE("mixture: the dominant amplitude wins") {
    auto x = sine(240, 24.0);
    auto weak = sine(240, 8.0, 0.3);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += weak[i];
    CHECK(find_period_fft(x).cycle_length == 24);
}

TEST_CASE("too short input is rejected") {
    CHECK_THROWS_AS(find_period_fft(std::vector<double>(7, 1.0)), InsufficientHistory);
}

TEST_CASE("exact recovery at L = 10 * P for several periods") {
    for (std::size_t p : {8, 24, 96, 144}) {
        auto est = find_period_fft(sine(10 * p, static_cast<double>(p)));
        CHECK(est.cycle_length == p);
    }
}

TEST_CASE("scale equivariance under integer downsampling") {
    auto x = sine(240 * 4, 96.0);
    for (std::size_t m : {2, 4}) {
        std::vector<double> y;
        for (std::size_t t = 0; t < x.size(); t += m) y.push_back(x[t]);
        auto est = find_period_fft(y);
        CHECK(est.cycle_length == 96 / m);
    }
}

TEST_CASE("within +-1 at SNR 10") {
    std::mt19937_64 rng(123);
    // signal power of a unit sine is 0.5; SNR 10 -> noise variance 0.05
    std::normal_distribution<double> noise(0.0, std::sqrt(0.05));
    for (std::size_t p : {24, 48}) {
        auto x = sine(10 * p, static_cast<double>(p));
        for (double& v : x) v += noise(rng);
        auto est = find_period_fft(x);
        CHECK(est.cycle_length >= p - 1);
        CHECK(est.cycle_length <= p + 1);
    }
}

TEST_CASE("estimate stays inside the requested bounds") {
    auto x = sine(240, 24.0);
    auto est = find_period_fft(x, 30, 120);
    CHECK(est.cycle_length >= 30);
    CHECK(est.cycle_length <= 120);
}

TEST_CASE("cycle length from sampling metadata") {
    const std::int64_t minute = 60, hour = 3600, day = 86400;
    CHECK(cycle_length_from_interval(hour, day) == 24);
    CHECK(cycle_length_from_interval(15 * minute, day) == 96);
    CHECK(cycle_length_from_interval(10 * minute, day) == 144);
    CHECK_THROWS_AS(cycle_length_from_interval(7 * minute, day), NonIntegralCycle);
    CHECK_THROWS_AS(cycle_length_from_interval(0, day), InvalidValue);
}
