#include "periodica/model.hpp"
#include "periodica/errors.hpp"

#include <cmath>
#include <random>

namespace periodica {

void ModelConfig::validate() const {
    if (enc_layers < 1 || dec_layers < 1 || d_model < 1 || ffn_dim < 1 || n_heads < 1) {
        throw ConfigError("model config: all counts must be >= 1");
    }
    if (d_model % (2 * n_heads) != 0) {
        throw ConfigError("model config: d_model must be divisible by 2*n_heads");
    }
    if (reference_patch < 2) {
        throw ConfigError("model config: reference_patch must be >= 2");
    }
    if (fixed_patch < 1) {
        throw ConfigError("model config: fixed_patch must be >= 1");
    }
}

namespace {

Matrix xavier(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    double sd = std::sqrt(2.0 / static_cast<double>(rows + cols));
    std::normal_distribution<double> dist(0.0, sd);
    Matrix m(rows, cols);
    for (double& v : m.raw()) v = dist(rng);
    return m;
}

Matrix ones_row(std::size_t n) { return Matrix(1, n, 1.0); }

} // namespace

ModelWeights init_weights(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const std::size_t d = cfg.d_model;
    const std::size_t f = cfg.ffn_dim;

    ModelWeights w;
    w.flex.reference_size = cfg.reference_patch;
    w.flex.theta_e = xavier(cfg.reference_patch, d, rng);
    w.flex.theta_d = xavier(cfg.reference_patch, d, rng);

    for (std::size_t i = 0; i < cfg.enc_layers; ++i) {
        EncLayer l;
        l.wq = xavier(d, d, rng);
        l.wk = xavier(d, d, rng);
        l.wv = xavier(d, d, rng);
        l.wo = xavier(d, d, rng);
        l.ffn_in = xavier(d, f, rng);
        l.ffn_out = xavier(f, d, rng);
        l.ffn_b1 = Matrix(1, f);
        l.ffn_b2 = Matrix(1, d);
        l.ln1_g = ones_row(d);
        l.ln1_b = Matrix(1, d);
        l.ln2_g = ones_row(d);
        l.ln2_b = Matrix(1, d);
        w.enc.push_back(std::move(l));
    }
    for (std::size_t i = 0; i < cfg.dec_layers; ++i) {
        DecLayer l;
        l.wq = xavier(d, d, rng);
        l.wk = xavier(d, d, rng);
        l.wv = xavier(d, d, rng);
        l.wo = xavier(d, d, rng);
        l.xq = xavier(d, d, rng);
        l.xk = xavier(d, d, rng);
        l.xv = xavier(d, d, rng);
        l.xo = xavier(d, d, rng);
        l.ffn_in = xavier(d, f, rng);
        l.ffn_out = xavier(f, d, rng);
        l.ffn_b1 = Matrix(1, f);
        l.ffn_b2 = Matrix(1, d);
        l.ln1_g = ones_row(d);
        l.ln1_b = Matrix(1, d);
        l.ln2_g = ones_row(d);
        l.ln2_b = Matrix(1, d);
        l.ln3_g = ones_row(d);
        l.ln3_b = Matrix(1, d);
        w.dec.push_back(std::move(l));
    }
    w.enc_ln_g = ones_row(d);
    w.enc_ln_b = Matrix(1, d);
    w.dec_ln_g = ones_row(d);
    w.dec_ln_b = Matrix(1, d);
    {
        std::normal_distribution<double> dist(0.0, 0.02);
        w.learned_token = Matrix(1, d);
        for (double& v : w.learned_token.raw()) v = dist(rng);
    }
    return w;
}

// Checkpoint/optimizer order. insert_params must mirror this exactly.
void visit_params(ModelWeights& w,
                  const std::function<void(const std::string&, Matrix&)>& fn) {
    fn("theta_e", w.flex.theta_e);
    fn("theta_d", w.flex.theta_d);
    for (std::size_t i = 0; i < w.enc.size(); ++i) {
        auto& l = w.enc[i];
        std::string p = "enc" + std::to_string(i) + ".";
        fn(p + "wq", l.wq);
        fn(p + "wk", l.wk);
        fn(p + "wv", l.wv);
        fn(p + "wo", l.wo);
        fn(p + "ffn_in", l.ffn_in);
        fn(p + "ffn_out", l.ffn_out);
        fn(p + "ffn_b1", l.ffn_b1);
        fn(p + "ffn_b2", l.ffn_b2);
        fn(p + "ln1_g", l.ln1_g);
        fn(p + "ln1_b", l.ln1_b);
        fn(p + "ln2_g", l.ln2_g);
        fn(p + "ln2_b", l.ln2_b);
    }
    for (std::size_t i = 0; i < w.dec.size(); ++i) {
        auto& l = w.dec[i];
        std::string p = "dec" + std::to_string(i) + ".";
        fn(p + "wq", l.wq);
        fn(p + "wk", l.wk);
        fn(p + "wv", l.wv);
        fn(p + "wo", l.wo);
        fn(p + "xq", l.xq);
        fn(p + "xk", l.xk);
        fn(p + "xv", l.xv);
        fn(p + "xo", l.xo);
        fn(p + "ffn_in", l.ffn_in);
        fn(p + "ffn_out", l.ffn_out);
        fn(p + "ffn_b1", l.ffn_b1);
        fn(p + "ffn_b2", l.ffn_b2);
        fn(p + "ln1_g", l.ln1_g);
        fn(p + "ln1_b", l.ln1_b);
        fn(p + "ln2_g", l.ln2_g);
        fn(p + "ln2_b", l.ln2_b);
        fn(p + "ln3_g", l.ln3_g);
        fn(p + "ln3_b", l.ln3_b);
    }
    fn("enc_ln_g", w.enc_ln_g);
    fn("enc_ln_b", w.enc_ln_b);
    fn("dec_ln_g", w.dec_ln_g);
    fn("dec_ln_b", w.dec_ln_b);
    fn("learned_token", w.learned_token);
}

void visit_params(const ModelWeights& w,
                  const std::function<void(const std::string&, const Matrix&)>& fn) {
    visit_params(const_cast<ModelWeights&>(w),
                 [&fn](const std::string& name, Matrix& m) { fn(name, m); });
}

std::size_t param_count(const ModelWeights& w, const ModelConfig& cfg) {
    std::size_t n = 0;
    visit_params(w, [&](const std::string& name, const Matrix& m) {
        if (name == "learned_token" && cfg.replicated_token != ReplicatedToken::learned)
            return;
        n += m.size();
    });
    return n;
}

std::vector<double> rope_rotate(const std::vector<double>& v, double position,
                                double base) {
    if (v.empty() || v.size() % 2 != 0) {
        throw InvalidDimension("rope_rotate: head dimension must be even");
    }
    std::vector<double> out(v.size());
    if (base <= 0.0) return v;
    const double d = static_cast<double>(v.size());
    for (std::size_t m = 0; m < v.size() / 2; ++m) {
        double theta = position * std::pow(base, -2.0 * static_cast<double>(m) / d);
        double cs = std::cos(theta), sn = std::sin(theta);
        out[2 * m] = v[2 * m] * cs - v[2 * m + 1] * sn;
        out[2 * m + 1] = v[2 * m] * sn + v[2 * m + 1] * cs;
    }
    return out;
}

Model::Model(ModelConfig cfg, ModelWeights weights)
    : cfg_(std::move(cfg)), w_(std::move(weights)) {
    cfg_.validate();
}

Model::GraphParams Model::insert_params(Tape& tape) const {
    std::vector<Tape::NodeId> flat;
    // same traversal as visit_params so the flat list aligns with it
    visit_params(w_, [&](const std::string&, const Matrix& m) {
        flat.push_back(tape.input(m));
    });
    return bind_params(std::move(flat), w_.enc.size(), w_.dec.size());
}

Model::GraphParams Model::bind_params(std::vector<Tape::NodeId> flat,
                                      std::size_t n_enc_layers,
                                      std::size_t n_dec_layers) {
    GraphParams gp;
    gp.flat = std::move(flat);
    std::size_t idx = 0;
    auto next = [&]() { return gp.flat[idx++]; };
    gp.theta_e = next();
    gp.theta_d = next();
    for (std::size_t i = 0; i < n_enc_layers; ++i) {
        GraphParams::EncIds e;
        e.wq = next(); e.wk = next(); e.wv = next(); e.wo = next();
        e.ffn_in = next(); e.ffn_out = next(); e.ffn_b1 = next(); e.ffn_b2 = next();
        e.ln1_g = next(); e.ln1_b = next(); e.ln2_g = next(); e.ln2_b = next();
        gp.enc.push_back(e);
    }
    for (std::size_t i = 0; i < n_dec_layers; ++i) {
        GraphParams::DecIds d;
        d.wq = next(); d.wk = next(); d.wv = next(); d.wo = next();
        d.xq = next(); d.xk = next(); d.xv = next(); d.xo = next();
        d.ffn_in = next(); d.ffn_out = next(); d.ffn_b1 = next(); d.ffn_b2 = next();
        d.ln1_g = next(); d.ln1_b = next(); d.ln2_g = next(); d.ln2_b = next();
        d.ln3_g = next(); d.ln3_b = next();
        gp.dec.push_back(d);
    }
    gp.enc_ln_g = next();
    gp.enc_ln_b = next();
    gp.dec_ln_g = next();
    gp.dec_ln_b = next();
    gp.learned_token = next();
    return gp;
}

namespace {

std::vector<double> positions(std::size_t start, std::size_t n, double offset) {
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = static_cast<double>(start + i) + offset;
    return p;
}

Tape::NodeId attention(Tape& t, const ModelConfig& cfg, Tape::NodeId q_in,
                       Tape::NodeId kv_in, Tape::NodeId wq, Tape::NodeId wk,
                       Tape::NodeId wv, Tape::NodeId wo,
                       const std::vector<double>& q_pos,
                       const std::vector<double>& k_pos, bool causal) {
    const std::size_t dh = cfg.head_dim();
    Tape::NodeId q = t.rope(t.matmul(q_in, wq), q_pos, dh, cfg.rope_base);
    Tape::NodeId k = t.rope(t.matmul(kv_in, wk), k_pos, dh, cfg.rope_base);
    Tape::NodeId v = t.matmul(kv_in, wv);
    std::vector<Tape::NodeId> heads;
    heads.reserve(cfg.n_heads);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        Tape::NodeId qh = t.slice_cols(q, h * dh, dh);
        Tape::NodeId kh = t.slice_cols(k, h * dh, dh);
        Tape::NodeId vh = t.slice_cols(v, h * dh, dh);
        Tape::NodeId s = t.scale(t.matmul_nt(qh, kh), inv_sqrt);
        if (causal) s = t.causal_mask(s);
        heads.push_back(t.matmul(t.softmax_rows(s), vh));
    }
    return t.matmul(t.concat_cols(heads), wo);
}

Tape::NodeId ffn_block(Tape& t, Tape::NodeId x, Tape::NodeId w_in, Tape::NodeId b1,
                       Tape::NodeId w_out, Tape::NodeId b2) {
    return t.add_rowvec(t.matmul(t.gelu(t.add_rowvec(t.matmul(x, w_in), b1)), w_out),
                        b2);
}

Tape::NodeId encode_graph(Tape& t, const ModelConfig& cfg,
                          const Model::GraphParams& gp, Tape::NodeId tokens,
                          double pos_offset) {
    const std::size_t n = t.value(tokens).rows();
    std::vector<double> pos = positions(1, n, pos_offset);
    Tape::NodeId x = tokens;
    for (const auto& l : gp.enc) {
        Tape::NodeId n1 = t.layer_norm_rows(x, l.ln1_g, l.ln1_b);
        x = t.add(x, attention(t, cfg, n1, n1, l.wq, l.wk, l.wv, l.wo, pos, pos,
                               /*causal=*/false));
        Tape::NodeId n2 = t.layer_norm_rows(x, l.ln2_g, l.ln2_b);
        x = t.add(x, ffn_block(t, n2, l.ffn_in, l.ffn_b1, l.ffn_out, l.ffn_b2));
    }
    return t.layer_norm_rows(x, gp.enc_ln_g, gp.enc_ln_b);
}

Tape::NodeId ppd_init_graph(Tape& t, const ModelConfig& cfg,
                            const Model::GraphParams& gp, Tape::NodeId enc_out,
                            std::size_t k) {
    Tape::NodeId base;
    switch (cfg.replicated_token) {
        case ReplicatedToken::last: {
            std::size_t n = t.value(enc_out).rows();
            base = t.slice_rows(enc_out, n - 1, 1);
            break;
        }
        case ReplicatedToken::mean:
            base = t.mean_rows(enc_out);
            break;
        case ReplicatedToken::learned:
            base = gp.learned_token;
            break;
    }
    std::vector<double> omega(k);
    for (std::size_t j = 0; j < k; ++j) {
        double tau = cfg.omega_zero_based ? static_cast<double>(j)
                                          : static_cast<double>(j + 1);
        omega[j] = std::exp(-tau);
    }
    return t.scale_rows(t.replicate_rows(base, k), std::move(omega));
}

Tape::NodeId decode_graph(Tape& t, const ModelConfig& cfg,
                          const Model::GraphParams& gp, Tape::NodeId h,
                          Tape::NodeId enc_out, double pos_offset, bool causal) {
    const std::size_t n_enc = t.value(enc_out).rows();
    const std::size_t k = t.value(h).rows();
    std::vector<double> dec_pos = positions(n_enc + 1, k, pos_offset);
    std::vector<double> enc_pos = positions(1, n_enc, pos_offset);
    Tape::NodeId x = h;
    for (const auto& l : gp.dec) {
        Tape::NodeId n1 = t.layer_norm_rows(x, l.ln1_g, l.ln1_b);
        x = t.add(x, attention(t, cfg, n1, n1, l.wq, l.wk, l.wv, l.wo, dec_pos,
                               dec_pos, causal));
        Tape::NodeId n2 = t.layer_norm_rows(x, l.ln2_g, l.ln2_b);
        x = t.add(x, attention(t, cfg, n2, enc_out, l.xq, l.xk, l.xv, l.xo, dec_pos,
                               enc_pos, /*causal=*/false));
        Tape::NodeId n3 = t.layer_norm_rows(x, l.ln3_g, l.ln3_b);
        x = t.add(x, ffn_block(t, n3, l.ffn_in, l.ffn_b1, l.ffn_out, l.ffn_b2));
    }
    return t.layer_norm_rows(x, gp.dec_ln_g, gp.dec_ln_b);
}

} // namespace

Matrix Model::encode(const Matrix& tokens, double pos_offset) const {
    Tape t;
    GraphParams gp = insert_params(t);
    Tape::NodeId out = encode_graph(t, cfg_, gp, t.input(tokens), pos_offset);
    return t.value(out);
}

Matrix Model::ppd_init(const Matrix& enc_out, std::size_t k) const {
    if (k < 1) throw InvalidDimension("ppd_init: k must be >= 1");
    Tape t;
    GraphParams gp = insert_params(t);
    Tape::NodeId out = ppd_init_graph(t, cfg_, gp, t.input(enc_out), k);
    return t.value(out);
}

Matrix Model::decode(const Matrix& h, const Matrix& enc_out, double pos_offset,
                     bool causal) const {
    Tape t;
    GraphParams gp = insert_params(t);
    Tape::NodeId out =
        decode_graph(t, cfg_, gp, t.input(h), t.input(enc_out), pos_offset, causal);
    return t.value(out);
}

Model::TokenPrediction Model::predict_patches_graph(Tape& tape, const GraphParams& gp,
                                                    const Matrix& patches,
                                                    std::size_t period, std::size_t k,
                                                    double pos_offset) const {
    return predict_impl(tape, gp, patches, period, k, pos_offset, cfg_.decoding);
}

Model::TokenPrediction Model::predict_impl(Tape& tape, const GraphParams& gp,
                                           const Matrix& patches, std::size_t period,
                                           std::size_t k, double pos_offset,
                                           DecodingMode mode) const {
    const std::size_t ref = cfg_.reference_patch;
    Tape::NodeId r = tape.input(resize_cache_.get(ref, period, cfg_.resize_mode));
    Tape::NodeId resized_e = tape.matmul(r, gp.theta_e);  // P x D
    Tape::NodeId resized_d = tape.matmul(r, gp.theta_d);
    Tape::NodeId tokens = tape.matmul(tape.input(patches), resized_e);
    Tape::NodeId enc = encode_graph(tape, cfg_, gp, tokens, pos_offset);

    TokenPrediction out{};
    Tape::NodeId z;
    if (mode == DecodingMode::ppd) {
        Tape::NodeId h = ppd_init_graph(tape, cfg_, gp, enc, k);
        z = decode_graph(tape, cfg_, gp, h, enc, pos_offset, /*causal=*/false);
        out.decoder_passes = 1;
    } else {
        Tape::NodeId seq = ppd_init_graph(tape, cfg_, gp, enc, 1);
        std::vector<Tape::NodeId> generated;
        for (std::size_t j = 1; j <= k; ++j) {
            Tape::NodeId zj =
                decode_graph(tape, cfg_, gp, seq, enc, pos_offset, /*causal=*/true);
            Tape::NodeId last = tape.slice_rows(zj, j - 1, 1);
            generated.push_back(last);
            if (j < k) seq = tape.concat_rows({seq, last});
        }
        z = generated.size() == 1 ? generated[0] : tape.concat_rows(generated);
        out.decoder_passes = k;
    }
    out.pred = tape.matmul_nt(z, resized_d);  // K x P
    return out;
}

ForecastResult Model::forecast_impl(const std::vector<double>& x, std::size_t horizon,
                                    std::size_t period, DecodingMode mode) const {
    if (horizon == 0) throw InvalidDimension("forecast: horizon must be >= 1");
    auto [normalized, rec] = revin_normalize(x);
    PatchGrid grid = patchify(normalized, period);
    const std::size_t k = (horizon + period - 1) / period;

    Tape tape;
    GraphParams gp = insert_params(tape);
    TokenPrediction tp = predict_impl(tape, gp, grid.patches, period, k, 0.0, mode);

    const Matrix& pred = tape.value(tp.pred);
    std::vector<double> flat(pred.raw().begin(), pred.raw().begin() + horizon);

    ForecastResult res;
    res.values = revin_denormalize(flat, rec);
    res.cycle_length = period;
    res.n_hist_tokens = grid.n_patches;
    res.n_pred_tokens = k;
    res.norm = rec;
    res.decoder_passes = tp.decoder_passes;
    return res;
}

ForecastResult Model::forecast(const std::vector<double>& x, std::size_t horizon,
                               std::size_t period) const {
    return forecast_impl(x, horizon, period, DecodingMode::ppd);
}

ForecastResult Model::ar_forecast(const std::vector<double>& x, std::size_t horizon,
                                  std::size_t period) const {
    return forecast_impl(x, horizon, period, DecodingMode::autoregressive);
}

ForecastResult Model::run(const std::vector<double>& x, std::size_t horizon,
                          std::size_t period) const {
    return forecast_impl(x, horizon, period, cfg_.decoding);
}

} // namespace periodica
