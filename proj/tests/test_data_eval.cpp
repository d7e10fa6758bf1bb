#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "periodica/data_eval.hpp"
#include "periodica/errors.hpp"
#include "periodica/periodicity.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace periodica;

namespace {

std::string write_temp(const char* name, const std::string& content) {
    std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream os(path);
    os << content;
    return path;
}

ModelConfig tiny_config() {
    ModelConfig c;
    c.enc_layers = 1;
    c.dec_layers = 1;
    c.d_model = 8;
    c.ffn_dim = 16;
    c.n_heads = 2;
    c.reference_patch = 4;
    c.fixed_patch = 4;
    return c;
}

} // namespace

TEST_CASE("csv loading") {
    SUBCASE("header and timestamp column are detected") {
        std::string body = "date,a,b\n";
        for (int i = 0; i < 100; ++i) {
            body += "2024-01-01 " + std::to_string(i) + "," + std::to_string(i) + "," +
                    std::to_string(2 * i) + "\n";
        }
        std::string path = write_temp("pcsv_header.csv", body);
        Dataset ds = load_csv(path);
        CHECK(ds.n_channels() == 2);
        CHECK(ds.length() == 100);
        CHECK(ds.channels[0][3] == doctest::Approx(3.0));
        CHECK(ds.channels[1][3] == doctest::Approx(6.0));
        std::remove(path.c_str());
    }
    SUBCASE("headerless all-numeric file") {
        std::string path = write_temp("pcsv_plain.csv", "1,2\n3,4\n5,6\n");
        Dataset ds = load_csv(path);
        CHECK(ds.n_channels() == 2);
        CHECK(ds.length() == 3);
        CHECK(ds.channels[0][0] == doctest::Approx(1.0));
        std::remove(path.c_str());
    }
    SUBCASE("NaN cell is rejected") {
        std::string path = write_temp("pcsv_nan.csv", "a,b\n1,2\nNaN,4\n");
        CHECK_THROWS_AS(load_csv(path), ParseError);
        std::remove(path.c_str());
    }
    SUBCASE("forward fill imputes from the previous row") {
        std::string path = write_temp("pcsv_ff.csv", "a\n1\nNaN\n3\n");
        LoadOptions opts;
        opts.forward_fill = true;
        Dataset ds = load_csv(path, opts);
        CHECK(ds.channels[0][0] == doctest::Approx(1.0));
        CHECK(ds.channels[0][1] == doctest::Approx(1.0));
        CHECK(ds.channels[0][2] == doctest::Approx(3.0));
        std::remove(path.c_str());
    }
    SUBCASE("ragged rows are rejected") {
        std::string path = write_temp("pcsv_ragged.csv", "1,2\n3\n");
        CHECK_THROWS_AS(load_csv(path), ParseError);
        std::remove(path.c_str());
    }
    SUBCASE("empty file is rejected") {
        std::string path = write_temp("pcsv_empty.csv", "");
        CHECK_THROWS_AS(load_csv(path), EmptyDataset);
        std::remove(path.c_str());
    }
}

TEST_CASE("chronological splits match the benchmark ratios") {
    Dataset ds;
    ds.channels.push_back(std::vector<double>(100));
    for (std::size_t i = 0; i < 100; ++i) ds.channels[0][i] = static_cast<double>(i);

    SUBCASE("6:2:2") {
        ds.split_ratio = {0.6, 0.2, 0.2};
        Splits s = split_chronological(ds);
        CHECK(s.train.length() == 60);
        CHECK(s.val.length() == 20);
        CHECK(s.test.length() == 20);
        // chronological, disjoint, test last
        CHECK(s.train.channels[0].front() == doctest::Approx(0.0));
        CHECK(s.val.channels[0].front() == doctest::Approx(60.0));
        CHECK(s.test.channels[0].back() == doctest::Approx(99.0));
    }
    SUBCASE("7:1:2") {
        ds.split_ratio = {0.7, 0.1, 0.2};
        Splits s = split_chronological(ds);
        CHECK(s.train.length() == 70);
        CHECK(s.val.length() == 10);
        CHECK(s.test.length() == 20);
    }
    SUBCASE("zero validation ratio gives an empty view") {
        ds.split_ratio = {0.8, 0.0, 0.2};
        Splits s = split_chronological(ds);
        CHECK(s.val.length() == 0);
        CHECK(s.train.length() + s.test.length() == 100);
    }
    SUBCASE("ratios must sum to one") {
        ds.split_ratio = {0.5, 0.2, 0.2};
        CHECK_THROWS_AS(split_chronological(ds), ConfigError);
    }
}

TEST_CASE("synthetic generator") {
    SUBCASE("noiseless single sine has the requested period and unit peak") {
        SyntheticSpec spec;
        spec.periods = {24.0};
        spec.amplitudes = {1.0};
        spec.length = 2400;
        Dataset ds = make_synthetic(spec);
        REQUIRE(ds.n_channels() == 1);
        CHECK(find_period_fft(ds.channels[0]).cycle_length == 24);
        double peak = 0.0;
        for (double v : ds.channels[0]) peak = std::max(peak, std::abs(v));
        CHECK(peak == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("granularity factor halves the apparent period") {
        SyntheticSpec spec;
        spec.periods = {24.0};
        spec.amplitudes = {1.0};
        spec.length = 2400;
        spec.granularity = 2;
        Dataset ds = make_synthetic(spec);
        CHECK(ds.length() == 1200);
        CHECK(find_period_fft(ds.channels[0]).cycle_length == 12);
    }
    SUBCASE("period under 2 samples is rejected") {
        SyntheticSpec spec;
        spec.periods = {3.0};
        spec.amplitudes = {1.0};
        spec.length = 100;
        spec.granularity = 2;
        CHECK_THROWS_AS(make_synthetic(spec), InvalidValue);
    }
    SUBCASE("deterministic given the seed") {
        SyntheticSpec spec;
        spec.periods = {24.0};
        spec.amplitudes = {1.0};
        spec.noise_sigma = 0.3;
        spec.length = 500;
        spec.seed = 5;
        CHECK(make_synthetic(spec).channels[0] == make_synthetic(spec).channels[0]);
    }
}

TEST_CASE("evaluation protocol") {
    // train/test from the same noiseless sinusoid
    SyntheticSpec spec;
    spec.periods = {4.0};
    spec.amplitudes = {1.0};
    spec.length = 400;
    Dataset full = make_synthetic(spec);
    full.split_ratio = {0.6, 0.2, 0.2};
    Splits sp = split_chronological(full);

    ModelConfig mc = tiny_config();
    Model model(mc, init_weights(mc, 7));

    EvalOptions eo;
    eo.horizons = {6};
    eo.lookback_tokens = 3;
    eo.cycle_length = 4;

    SUBCASE("window count is T - lookback - horizon + 1") {
        EvalReport rep = evaluate(model, sp.train, sp.test, eo);
        CHECK(rep.n_windows[0] == 80 - 12 - 6 + 1);
        CHECK(rep.cycle_length == 4);
        CHECK(rep.mse[0] >= 0.0);
        CHECK(rep.mae[0] >= 0.0);
        CHECK(std::isfinite(rep.mse[0]));
    }
    SUBCASE("metrics are independent of batch partitioning") {
        EvalReport one = evaluate(model, sp.train, sp.test, eo);
        eo.batch_size = 1;
        EvalReport single = evaluate(model, sp.train, sp.test, eo);
        eo.batch_size = 7;
        EvalReport seven = evaluate(model, sp.train, sp.test, eo);
        CHECK(std::abs(one.mse[0] - single.mse[0]) < 1e-9);
        CHECK(std::abs(one.mse[0] - seven.mse[0]) < 1e-9);
        CHECK(std::abs(one.mae[0] - single.mae[0]) < 1e-9);
        CHECK(std::abs(one.mae[0] - seven.mae[0]) < 1e-9);
    }
    SUBCASE("too short test segment is rejected") {
        eo.horizons = {1000};
        CHECK_THROWS_AS(evaluate(model, sp.train, sp.test, eo), InsufficientHistory);
    }
    SUBCASE("report text is one metric per line") {
        EvalReport rep = evaluate(model, sp.train, sp.test, eo);
        std::string text = format_report(rep);
        CHECK(text.find("mse") != std::string::npos);
        CHECK(text.find("mae") != std::string::npos);
        CHECK(text.find("windows") != std::string::npos);
    }
}

TEST_CASE("analytic metric oracles") {
    // Evaluate against a hand-rolled reference loop using the zero predictor
    // is impossible through the Model interface, so check the two analytic
    // endpoints the protocol must reproduce: an oracle forecaster trained to
    // zero error is approximated by feeding the truth back (MSE 0 by
    // construction of the metric), and the zero predictor on standardized
    // data has MSE ~= 1 (the variance).
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    std::vector<double> z(2000);
    for (double& v : z) v = nd(rng);

    // reference accumulation identical to the protocol
    const std::size_t lookback = 12, horizon = 6;
    const std::size_t n_windows = z.size() - lookback - horizon + 1;
    double se_zero = 0.0, se_oracle = 0.0, ae_oracle = 0.0;
    for (std::size_t s = 0; s < n_windows; ++s) {
        for (std::size_t t = 0; t < horizon; ++t) {
            double truth = z[s + lookback + t];
            se_zero += truth * truth;        // zero predictor
            se_oracle += 0.0;                // perfect predictor
            ae_oracle += 0.0;
        }
    }
    double mse_zero = se_zero / static_cast<double>(n_windows * horizon);
    CHECK(mse_zero == doctest::Approx(1.0).epsilon(0.05));
    CHECK(se_oracle == 0.0);
    CHECK(ae_oracle == 0.0);
}

TEST_CASE("channel stats use population std with clamping") {
    Dataset ds;
    ds.channels = {{1.0, 1.0, 1.0}, {0.0, 2.0}};
    // unequal lengths are a caller bug for real datasets, but stats are
    // per-channel and independent
    ChannelStats st = channel_stats(ds);
    CHECK(st.mean[0] == doctest::Approx(1.0));
    CHECK(st.std[0] == doctest::Approx(1e-8));  // clamped
    CHECK(st.mean[1] == doctest::Approx(1.0));
    CHECK(st.std[1] == doctest::Approx(1.0));
}
