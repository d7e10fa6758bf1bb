#ifndef PERIODICA_DATA_EVAL_HPP
#define PERIODICA_DATA_EVAL_HPP

#include "periodica/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace periodica {

struct SplitRatio {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

/// Multivariate series: C channels of equal length, rows = time steps.
struct Dataset {
    std::string name;
    std::vector<std::vector<double>> channels;
    std::optional<std::int64_t> sampling_interval;  // arbitrary time units
    SplitRatio split_ratio;

    std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
    std::size_t n_channels() const { return channels.size(); }
};

struct LoadOptions {
    bool forward_fill = false;  // impute NaN cells from the previous row
};

/// CSV loader. An optional header row and an optional leading timestamp
/// column are detected; every remaining column becomes a channel.
Dataset load_csv(const std::string& path, const LoadOptions& opts = {});

struct Splits {
    Dataset train, val, test;
};

/// Contiguous chronological segments; boundaries at floor(ratio * length),
/// the test segment takes the remainder at the end.
Splits split_chronological(const Dataset& ds);

struct SyntheticSpec {
    std::vector<double> periods;     // in samples at granularity 1
    std::vector<double> amplitudes;  // one per period
    double noise_sigma = 0.0;
    std::size_t length = 0;          // at granularity 1, before subsampling
    std::size_t granularity = 1;     // keep every m-th point
    std::size_t n_channels = 1;
    std::uint64_t seed = 0;
    std::string name = "synthetic";
};

/// Sum of sinusoids plus Gaussian noise; granularity m samples the same
/// underlying signal every m-th point, so apparent periods shrink by m.
Dataset make_synthetic(const SyntheticSpec& spec);

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> std;
};

/// Per-channel mean and population std (std clamped below by eps).
ChannelStats channel_stats(const Dataset& ds, double eps = 1e-8);

struct EvalOptions {
    std::vector<std::size_t> horizons = {96};
    std::size_t lookback_tokens = 10;  // N; lookback = N * cycle_length
    std::size_t cycle_length = 0;      // 0 -> estimate from the train segment
    std::size_t batch_size = 0;        // window grouping; 0 = single batch
};

struct EvalReport {
    std::string dataset;
    std::size_t cycle_length = 0;
    std::vector<std::size_t> horizons;
    std::vector<double> mse;            // per horizon
    std::vector<double> mae;            // per horizon
    std::vector<std::size_t> n_windows; // start positions per horizon
    std::string config_fingerprint;
};

/// Sliding-window protocol: stride 1 over the test segment, every window
/// whose target fits is scored (no final-batch dropping). Channels are
/// z-scored with train-segment statistics; metrics are means over all
/// windows, channels and steps. Accumulation is compensated so any batch
/// partition agrees to ~1e-9.
EvalReport evaluate(const Model& model, const Dataset& train, const Dataset& test,
                    const EvalOptions& opts);

/// One metric per line: "<dataset> <horizon> <metric> <value>".
std::string format_report(const EvalReport& report);

} // namespace periodica

#endif
