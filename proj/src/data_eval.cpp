#include "periodica/data_eval.hpp"
#include "periodica/errors.hpp"
#include "periodica/periodicity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace periodica {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_number(const std::string& s, double& out) {
    const char* b = s.c_str();
    char* end = nullptr;
    out = std::strtod(b, &end);
    if (end == b) return false;
    while (*end == ' ' || *end == '\t') ++end;
    return *end == '\0';
}

/// Compensated (Kahan) accumulator.
struct KahanSum {
    double sum = 0.0, c = 0.0;
    void add(double x) {
        double y = x - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    void merge(const KahanSum& o) {
        add(o.sum);
        add(-o.c);
    }
};

} // namespace

Dataset load_csv(const std::string& path, const LoadOptions& opts) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open: " + path);

    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_fields(line));
    }
    if (rows.empty()) throw EmptyDataset("empty file: " + path);

    const std::size_t n_cols = rows[0].size();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != n_cols) {
            throw ParseError("ragged row " + std::to_string(r) + " in " + path +
                             ": expected " + std::to_string(n_cols) + " fields, got " +
                             std::to_string(rows[r].size()));
        }
    }

    // Header row: any field of the first row that is not a number.
    std::size_t first_data = 0;
    {
        double tmp;
        bool all_numeric = true;
        for (const auto& f : rows[0]) {
            if (!parse_number(f, tmp)) {
                all_numeric = false;
                break;
            }
        }
        if (!all_numeric) first_data = 1;
    }
    if (first_data >= rows.size()) throw EmptyDataset("no data rows in " + path);

    // Timestamp column: first column non-numeric in the data rows.
    std::size_t first_col = 0;
    {
        double tmp;
        bool numeric = true;
        for (std::size_t r = first_data; r < rows.size(); ++r) {
            if (!parse_number(rows[r][0], tmp)) {
                numeric = false;
                break;
            }
        }
        if (!numeric) first_col = 1;
    }
    if (first_col >= n_cols) throw EmptyDataset("no numeric channels in " + path);

    Dataset ds;
    ds.name = path;
    const std::size_t n_chan = n_cols - first_col;
    const std::size_t n_rows = rows.size() - first_data;
    ds.channels.assign(n_chan, std::vector<double>(n_rows));
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (std::size_t c = 0; c < n_chan; ++c) {
            const std::string& field = rows[first_data + r][first_col + c];
            double v;
            bool ok = parse_number(field, v);
            if (!ok || !std::isfinite(v)) {
                if (opts.forward_fill && r > 0 &&
                    (field == "NaN" || field == "nan" || field == "" || !ok ||
                     !std::isfinite(v))) {
                    v = ds.channels[c][r - 1];
                } else {
                    throw ParseError("non-finite or unparsable cell at row " +
                                     std::to_string(r) + ", column " +
                                     std::to_string(first_col + c) + ": '" + field + "'");
                }
            }
            ds.channels[c][r] = v;
        }
    }
    return ds;
}

Splits split_chronological(const Dataset& ds) {
    const SplitRatio& r = ds.split_ratio;
    if (r.train < 0 || r.val < 0 || r.test < 0 ||
        std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
        throw ConfigError("split ratios must be non-negative and sum to 1");
    }
    const std::size_t len = ds.length();
    const std::size_t n_train = static_cast<std::size_t>(r.train * len);
    const std::size_t n_val = static_cast<std::size_t>(r.val * len);

    auto slice = [&](std::size_t start, std::size_t n, const char* tag) {
        Dataset out;
        out.name = ds.name + "/" + tag;
        out.sampling_interval = ds.sampling_interval;
        out.split_ratio = ds.split_ratio;
        out.channels.reserve(ds.channels.size());
        for (const auto& ch : ds.channels) {
            out.channels.emplace_back(ch.begin() + start, ch.begin() + start + n);
        }
        return out;
    };
    Splits s;
    s.train = slice(0, n_train, "train");
    s.val = slice(n_train, n_val, "val");
    s.test = slice(n_train + n_val, len - n_train - n_val, "test");
    return s;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.periods.size() != spec.amplitudes.size()) {
        throw InvalidDimension("make_synthetic: periods/amplitudes size mismatch");
    }
    if (spec.periods.empty() || spec.length == 0 || spec.granularity == 0) {
        throw InvalidValue("make_synthetic: need periods, length > 0, granularity > 0");
    }
    for (double p : spec.periods) {
        if (p / static_cast<double>(spec.granularity) < 2.0) {
            throw InvalidValue("make_synthetic: period under 2 samples at this granularity");
        }
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    Dataset ds;
    ds.name = spec.name;
    for (std::size_t c = 0; c < spec.n_channels; ++c) {
        std::vector<double> full(spec.length);
        // A fixed phase offset per channel keeps channels distinct but
        // deterministic.
        double phase = 0.25 * std::numbers::pi * static_cast<double>(c);
        for (std::size_t t = 0; t < spec.length; ++t) {
            double v = 0.0;
            for (std::size_t i = 0; i < spec.periods.size(); ++i) {
                v += spec.amplitudes[i] *
                     std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                  spec.periods[i] +
                              phase);
            }
            if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
            full[t] = v;
        }
        std::vector<double> ch;
        ch.reserve(spec.length / spec.granularity + 1);
        for (std::size_t t = 0; t < spec.length; t += spec.granularity) {
            ch.push_back(full[t]);
        }
        ds.channels.push_back(std::move(ch));
    }
    return ds;
}

ChannelStats channel_stats(const Dataset& ds, double eps) {
    if (ds.channels.empty() || ds.length() == 0) {
        throw EmptyDataset("channel_stats: no data");
    }
    ChannelStats st;
    for (const auto& ch : ds.channels) {
        double m = 0.0;
        for (double v : ch) m += v;
        m /= static_cast<double>(ch.size());
        double var = 0.0;
        for (double v : ch) var += (v - m) * (v - m);
        var /= static_cast<double>(ch.size());
        st.mean.push_back(m);
        st.std.push_back(std::max(std::sqrt(var), eps));
    }
    return st;
}

namespace {

std::string fingerprint(const ModelConfig& c) {
    std::ostringstream os;
    os << "enc" << c.enc_layers << " dec" << c.dec_layers << " d" << c.d_model
       << " ffn" << c.ffn_dim << " heads" << c.n_heads << " ref" << c.reference_patch
       << ' ' << (c.decoding == DecodingMode::ppd ? "ppd" : "ar") << ' '
       << (c.patching == PatchingMode::periodical ? "periodical" : "fixed") << ' '
       << (c.resize_mode == ResizeMode::flex ? "flex" : "linear");
    return os.str();
}

} // namespace

EvalReport evaluate(const Model& model, const Dataset& train, const Dataset& test,
                    const EvalOptions& opts) {
    if (test.channels.empty() || test.length() == 0) {
        throw EmptyDataset("evaluate: empty test segment");
    }
    if (test.n_channels() != train.n_channels()) {
        throw InvalidDimension("evaluate: train/test channel count mismatch");
    }

    std::size_t period = opts.cycle_length;
    if (period == 0) {
        period = find_period_fft(train.channels[0]).cycle_length;
    }
    if (model.config().patching == PatchingMode::fixed) {
        period = model.config().fixed_patch;
    }

    ChannelStats st = channel_stats(train);
    std::vector<std::vector<double>> z(test.n_channels());
    for (std::size_t c = 0; c < test.n_channels(); ++c) {
        z[c].resize(test.length());
        for (std::size_t t = 0; t < test.length(); ++t) {
            z[c][t] = (test.channels[c][t] - st.mean[c]) / st.std[c];
        }
    }

    const std::size_t lookback = opts.lookback_tokens * period;
    const std::size_t len = test.length();

    EvalReport rep;
    rep.dataset = test.name;
    rep.cycle_length = period;
    rep.config_fingerprint = fingerprint(model.config());

    for (std::size_t horizon : opts.horizons) {
        if (len < lookback + horizon) {
            throw InsufficientHistory("evaluate: test segment shorter than lookback + horizon");
        }
        const std::size_t n_windows = len - lookback - horizon + 1;
        const std::size_t batch =
            opts.batch_size == 0 ? n_windows : opts.batch_size;

        KahanSum se_total, ae_total;
        KahanSum se_batch, ae_batch;
        std::size_t in_batch = 0;
        for (std::size_t s = 0; s < n_windows; ++s) {
            for (std::size_t c = 0; c < z.size(); ++c) {
                std::vector<double> x(z[c].begin() + s, z[c].begin() + s + lookback);
                ForecastResult fr = model.run(x, horizon, period);
                for (std::size_t t = 0; t < horizon; ++t) {
                    double err = fr.values[t] - z[c][s + lookback + t];
                    se_batch.add(err * err);
                    ae_batch.add(std::abs(err));
                }
            }
            if (++in_batch == batch) {
                se_total.merge(se_batch);
                ae_total.merge(ae_batch);
                se_batch = KahanSum{};
                ae_batch = KahanSum{};
                in_batch = 0;
            }
        }
        se_total.merge(se_batch);
        ae_total.merge(ae_batch);

        const double denom =
            static_cast<double>(n_windows) * static_cast<double>(z.size()) *
            static_cast<double>(horizon);
        rep.horizons.push_back(horizon);
        rep.mse.push_back(se_total.sum / denom);
        rep.mae.push_back(ae_total.sum / denom);
        rep.n_windows.push_back(n_windows);
    }
    return rep;
}

std::string format_report(const EvalReport& report) {
    std::ostringstream os;
    os.precision(10);
    os << "# " << report.config_fingerprint << " cycle " << report.cycle_length << '\n';
    for (std::size_t i = 0; i < report.horizons.size(); ++i) {
        os << report.dataset << ' ' << report.horizons[i] << " mse " << report.mse[i]
           << '\n';
        os << report.dataset << ' ' << report.horizons[i] << " mae " << report.mae[i]
           << '\n';
        os << report.dataset << ' ' << report.horizons[i] << " windows "
           << report.n_windows[i] << '\n';
    }
    return os.str();
}

} // namespace periodica
