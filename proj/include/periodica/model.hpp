#ifndef PERIODICA_MODEL_HPP
#define PERIODICA_MODEL_HPP

#include "periodica/autodiff.hpp"
#include "periodica/matrix.hpp"
#include "periodica/tokenizer.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace periodica {

enum class DecodingMode { ppd, autoregressive };
enum class PatchingMode { periodical, fixed };
enum class ReplicatedToken { last, mean, learned };

struct ModelConfig {
    std::size_t enc_layers = 3;
    std::size_t dec_layers = 3;
    std::size_t d_model = 256;
    std::size_t ffn_dim = 512;
    std::size_t n_heads = 8;
    std::size_t reference_patch = 48;  // P*
    std::size_t fixed_patch = 48;      // used when patching == fixed
    DecodingMode decoding = DecodingMode::ppd;
    PatchingMode patching = PatchingMode::periodical;
    ResizeMode resize_mode = ResizeMode::flex;
    ReplicatedToken replicated_token = ReplicatedToken::last;
    double rope_base = 10000.0;
    bool omega_zero_based = false;  // omega(1) = e^-1 by default

    std::size_t head_dim() const { return d_model / n_heads; }
    void validate() const;  // throws ConfigError
};

struct EncLayer {
    Matrix wq, wk, wv, wo;       // D x D
    Matrix ffn_in, ffn_out;      // D x F, F x D
    Matrix ffn_b1, ffn_b2;       // 1 x F, 1 x D
    Matrix ln1_g, ln1_b, ln2_g, ln2_b;  // 1 x D
};

struct DecLayer {
    Matrix wq, wk, wv, wo;       // self-attention
    Matrix xq, xk, xv, xo;       // cross-attention
    Matrix ffn_in, ffn_out, ffn_b1, ffn_b2;
    Matrix ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
};

struct ModelWeights {
    FlexWeights flex;
    std::vector<EncLayer> enc;
    std::vector<DecLayer> dec;
    Matrix enc_ln_g, enc_ln_b;  // final encoder norm
    Matrix dec_ln_g, dec_ln_b;  // final decoder norm
    Matrix learned_token;       // 1 x D, used when replicated_token == learned
};

ModelWeights init_weights(const ModelConfig& cfg, std::uint64_t seed);

/// Visits every parameter matrix in a fixed, documented order (the
/// checkpoint and optimizer order).
void visit_params(ModelWeights& w,
                  const std::function<void(const std::string&, Matrix&)>& fn);
void visit_params(const ModelWeights& w,
                  const std::function<void(const std::string&, const Matrix&)>& fn);

/// Trainable parameter count under the given config (the learned replicated
/// token only counts when that choice is active).
std::size_t param_count(const ModelWeights& w, const ModelConfig& cfg);

/// Rotates dimension pairs (2m, 2m+1) of a single head vector by
/// position * base^(-2m/d_head). base <= 0 disables the rotation.
std::vector<double> rope_rotate(const std::vector<double>& v, double position,
                                double base);

struct ForecastResult {
    std::vector<double> values;  // length F, denormalized
    std::size_t cycle_length = 0;
    std::size_t n_hist_tokens = 0;  // N
    std::size_t n_pred_tokens = 0;  // K
    NormRecord norm;
    std::size_t decoder_passes = 0;
};

class Model {
public:
    Model(ModelConfig cfg, ModelWeights weights);

    const ModelConfig& config() const { return cfg_; }
    const ModelWeights& weights() const { return w_; }
    ModelWeights& weights() { return w_; }

    // --- inference surface -------------------------------------------------

    /// Encoder stack over N x D tokens (bidirectional self-attention, RoPE
    /// positions 1..N shifted by pos_offset).
    Matrix encode(const Matrix& tokens, double pos_offset = 0.0) const;

    /// Decoder input: replicated base token reweighted by omega.
    Matrix ppd_init(const Matrix& enc_out, std::size_t k) const;

    /// Decoder stack; self-attention over the K decoder tokens at positions
    /// N+1..N+K, then cross-attention against enc_out at positions 1..N.
    Matrix decode(const Matrix& h, const Matrix& enc_out, double pos_offset = 0.0,
                  bool causal = false) const;

    /// normalize -> patchify -> embed -> encode -> ppd_init -> decode ->
    /// unembed -> truncate -> denormalize. One decoder pass for any K.
    ForecastResult forecast(const std::vector<double>& x, std::size_t horizon,
                            std::size_t period) const;

    /// Decoding ablation: one token per decoder pass, causal self-attention,
    /// K passes total.
    ForecastResult ar_forecast(const std::vector<double>& x, std::size_t horizon,
                               std::size_t period) const;

    /// Dispatches on config().decoding.
    ForecastResult run(const std::vector<double>& x, std::size_t horizon,
                       std::size_t period) const;

    // --- training surface --------------------------------------------------

    struct GraphParams {
        struct EncIds {
            Tape::NodeId wq, wk, wv, wo, ffn_in, ffn_out, ffn_b1, ffn_b2;
            Tape::NodeId ln1_g, ln1_b, ln2_g, ln2_b;
        };
        struct DecIds {
            Tape::NodeId wq, wk, wv, wo, xq, xk, xv, xo;
            Tape::NodeId ffn_in, ffn_out, ffn_b1, ffn_b2;
            Tape::NodeId ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
        };
        Tape::NodeId theta_e, theta_d;
        std::vector<EncIds> enc;
        std::vector<DecIds> dec;
        Tape::NodeId enc_ln_g, enc_ln_b, dec_ln_g, dec_ln_b, learned_token;
        std::vector<Tape::NodeId> flat;  // visit_params order
    };

    GraphParams insert_params(Tape& tape) const;

    /// Names a flat id list laid out in visit_params order (the inverse of
    /// the flattening insert_params performs). Useful when the caller
    /// created the leaves itself, e.g. for finite-difference checks.
    static GraphParams bind_params(std::vector<Tape::NodeId> flat,
                                   std::size_t n_enc_layers,
                                   std::size_t n_dec_layers);

    struct TokenPrediction {
        Tape::NodeId pred;  // K x P
        std::size_t decoder_passes;
    };

    /// Forward pipeline from normalized patches to predicted patches,
    /// entirely on the tape so gradients reach every parameter. Decoding
    /// mode follows the config.
    TokenPrediction predict_patches_graph(Tape& tape, const GraphParams& gp,
                                          const Matrix& patches, std::size_t period,
                                          std::size_t k,
                                          double pos_offset = 0.0) const;

private:
    TokenPrediction predict_impl(Tape& tape, const GraphParams& gp,
                                 const Matrix& patches, std::size_t period,
                                 std::size_t k, double pos_offset,
                                 DecodingMode mode) const;
    ForecastResult forecast_impl(const std::vector<double>& x, std::size_t horizon,
                                 std::size_t period, DecodingMode mode) const;

    ModelConfig cfg_;
    ModelWeights w_;
    mutable ResizeCache resize_cache_;
};

} // namespace periodica

#endif
