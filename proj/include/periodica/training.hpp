#ifndef PERIODICA_TRAINING_HPP
#define PERIODICA_TRAINING_HPP

#include "periodica/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace periodica {

struct TrainConfig {
    double lr_init = 5e-4;
    std::size_t step_size = 1;        // scheduler interval, in epochs
    double gamma = 0.5;               // decay factor
    std::size_t steps_per_epoch = 100;
    std::size_t batch_size = 64;
    std::size_t n_hist_tokens = 10;   // N
    std::size_t n_pred_tokens = 4;    // K
    std::size_t steps = 2000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One multi-channel source series with a resolved cycle length.
struct CorpusDataset {
    std::string name;
    std::vector<std::vector<double>> channels;
    std::size_t cycle_length = 0;
};
using Corpus = std::vector<CorpusDataset>;

struct TrainWindow {
    std::vector<double> lookback;  // N * P
    std::vector<double> target;    // K * P
    std::size_t period = 0;
};

/// Plain MSE (mean over elements), used outside the tape.
double mse_loss(const std::vector<double>& pred, const std::vector<double>& target);

/// Step-decay schedule: lr_init * gamma^floor(epoch / step_size) with
/// epoch = step / steps_per_epoch.
double lr_at(std::size_t step, const TrainConfig& cfg);

/// Channel-independent window sampling: dataset drawn proportional to its
/// total point count, then a channel, then a start offset, all uniform and
/// deterministic given the rng state. Series too short for one window are
/// excluded.
std::vector<TrainWindow> sample_window_batch(const Corpus& corpus,
                                             const TrainConfig& cfg,
                                             std::mt19937_64& rng);

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::size_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState init_adam(const ModelWeights& w);

/// Forward in normalized space, backward through the tape, Adam update.
/// Returns the batch loss. A non-finite loss rejects the step and throws
/// DivergedError.
double train_step(const std::vector<TrainWindow>& batch, Model& model,
                  AdamState& opt, const TrainConfig& cfg, std::size_t step);

struct Checkpoint {
    std::uint32_t format_version = 1;
    ModelConfig config;
    ModelWeights weights;
    std::optional<AdamState> opt;
    std::uint64_t step = 0;
};

/// Self-describing text header (tensor names, shapes, dtype, version)
/// followed by little-endian arrays in header order. dtype f64 keeps the
/// round trip bit-exact; f32 is accepted for compact exports.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt,
                     bool as_float32 = false);
Checkpoint load_checkpoint(const std::string& path);

} // namespace periodica

#endif
