#include "periodica/training.hpp"
#include "periodica/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace periodica {

void TrainConfig::validate() const {
    if (lr_init <= 0.0) throw ConfigError("train config: lr_init must be > 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train config: gamma in (0,1]");
    if (n_hist_tokens < 2) throw ConfigError("train config: n_hist_tokens must be >= 2");
    if (n_pred_tokens < 1) throw ConfigError("train config: n_pred_tokens must be >= 1");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (step_size < 1) throw ConfigError("train config: step_size must be >= 1");
    if (steps_per_epoch < 1) throw ConfigError("train config: steps_per_epoch must be >= 1");
}

double mse_loss(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size()) throw InvalidDimension("mse_loss: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

double lr_at(std::size_t step, const TrainConfig& cfg) {
    std::size_t epoch = step / cfg.steps_per_epoch;
    return cfg.lr_init *
           std::pow(cfg.gamma, static_cast<double>(epoch / cfg.step_size));
}

std::vector<TrainWindow> sample_window_batch(const Corpus& corpus,
                                             const TrainConfig& cfg,
                                             std::mt19937_64& rng) {
    cfg.validate();
    struct Eligible {
        const CorpusDataset* ds;
        std::size_t window_len;
        std::uint64_t weight;
    };
    std::vector<Eligible> eligible;
    std::uint64_t total_weight = 0;
    for (const auto& ds : corpus) {
        if (ds.cycle_length == 0 || ds.channels.empty()) continue;
        std::size_t window_len = (cfg.n_hist_tokens + cfg.n_pred_tokens) * ds.cycle_length;
        std::uint64_t pts = 0;
        bool fits = false;
        for (const auto& ch : ds.channels) {
            pts += ch.size();
            if (ch.size() >= window_len) fits = true;
        }
        if (!fits) continue;
        eligible.push_back({&ds, window_len, pts});
        total_weight += pts;
    }
    if (eligible.empty()) throw EmptyCorpus("sample_window_batch: no usable series");

    std::vector<TrainWindow> batch;
    batch.reserve(cfg.batch_size);
    while (batch.size() < cfg.batch_size) {
        std::uint64_t r = rng() % total_weight;
        const Eligible* pick = &eligible.back();
        for (const auto& e : eligible) {
            if (r < e.weight) {
                pick = &e;
                break;
            }
            r -= e.weight;
        }
        const auto& chans = pick->ds->channels;
        const auto& ch = chans[rng() % chans.size()];
        if (ch.size() < pick->window_len) continue;  // short channel, redraw
        std::size_t max_start = ch.size() - pick->window_len;
        std::size_t start = max_start == 0 ? 0 : rng() % (max_start + 1);

        std::size_t p = pick->ds->cycle_length;
        std::size_t lb = cfg.n_hist_tokens * p;
        TrainWindow w;
        w.period = p;
        w.lookback.assign(ch.begin() + start, ch.begin() + start + lb);
        w.target.assign(ch.begin() + start + lb,
                        ch.begin() + start + pick->window_len);
        batch.push_back(std::move(w));
    }
    return batch;
}

AdamState init_adam(const ModelWeights& w) {
    AdamState st;
    visit_params(w, [&](const std::string&, const Matrix& m) {
        st.m.emplace_back(m.rows(), m.cols());
        st.v.emplace_back(m.rows(), m.cols());
    });
    return st;
}

double train_step(const std::vector<TrainWindow>& batch, Model& model,
                  AdamState& opt, const TrainConfig& cfg, std::size_t step) {
    if (batch.empty()) throw EmptyCorpus("train_step: empty batch");

    Tape tape;
    Model::GraphParams gp = model.insert_params(tape);

    Tape::NodeId total = 0;
    bool first = true;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const auto& w : batch) {
        auto [norm_x, rec] = revin_normalize(w.lookback);
        PatchGrid grid = patchify(norm_x, w.period);
        std::size_t k = w.target.size() / w.period;
        if (k * w.period != w.target.size()) {
            throw InvalidDimension("train_step: target not a whole number of patches");
        }
        Matrix target(k, w.period);
        for (std::size_t i = 0; i < w.target.size(); ++i) {
            target.raw()[i] = (w.target[i] - rec.mean) / rec.std;
        }
        auto tp = model.predict_patches_graph(tape, gp, grid.patches, w.period, k);
        Tape::NodeId li = tape.scale(tape.mse(tp.pred, std::move(target)), inv_b);
        total = first ? li : tape.add(total, li);
        first = false;
    }

    double loss = tape.value(total)(0, 0);
    if (!std::isfinite(loss)) throw DivergedError("train_step: non-finite loss");
    tape.backward(total);

    // gather mutable parameter views in visit order
    std::vector<Matrix*> params;
    visit_params(model.weights(),
                 [&](const std::string&, Matrix& m) { params.push_back(&m); });

    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!tape.grad(gp.flat[i]).all_finite()) {
            throw DivergedError("train_step: non-finite gradient");
        }
    }

    opt.t += 1;
    const double lr = lr_at(step, cfg);
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.t));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Matrix& g = tape.grad(gp.flat[i]);
        Matrix& m = opt.m[i];
        Matrix& v = opt.v[i];
        Matrix& w = *params[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            double gj = g.raw()[j];
            m.raw()[j] = opt.beta1 * m.raw()[j] + (1.0 - opt.beta1) * gj;
            v.raw()[j] = opt.beta2 * v.raw()[j] + (1.0 - opt.beta2) * gj * gj;
            double mhat = m.raw()[j] / bc1;
            double vhat = v.raw()[j] / bc2;
            w.raw()[j] -= lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// checkpoint format
// ---------------------------------------------------------------------------

namespace {

const char* kMagic = "periodica-checkpoint";
constexpr std::uint32_t kVersion = 1;

std::string decoding_str(DecodingMode m) {
    return m == DecodingMode::ppd ? "ppd" : "autoregressive";
}
std::string patching_str(PatchingMode m) {
    return m == PatchingMode::periodical ? "periodical" : "fixed";
}
std::string resize_str(ResizeMode m) { return m == ResizeMode::flex ? "flex" : "linear"; }
std::string token_str(ReplicatedToken t) {
    switch (t) {
        case ReplicatedToken::last: return "last";
        case ReplicatedToken::mean: return "mean";
        default: return "learned";
    }
}

DecodingMode parse_decoding(const std::string& s) {
    if (s == "ppd") return DecodingMode::ppd;
    if (s == "autoregressive") return DecodingMode::autoregressive;
    throw CorruptCheckpoint("bad decoding value: " + s);
}
PatchingMode parse_patching(const std::string& s) {
    if (s == "periodical") return PatchingMode::periodical;
    if (s == "fixed") return PatchingMode::fixed;
    throw CorruptCheckpoint("bad patching value: " + s);
}
ResizeMode parse_resize(const std::string& s) {
    if (s == "flex") return ResizeMode::flex;
    if (s == "linear") return ResizeMode::linear;
    throw CorruptCheckpoint("bad resize value: " + s);
}
ReplicatedToken parse_token(const std::string& s) {
    if (s == "last") return ReplicatedToken::last;
    if (s == "mean") return ReplicatedToken::mean;
    if (s == "learned") return ReplicatedToken::learned;
    throw CorruptCheckpoint("bad replicated_token value: " + s);
}

void write_array(std::ostream& os, const Matrix& m, bool as_f32) {
    if (as_f32) {
        for (double d : m.raw()) {
            float f = static_cast<float>(d);
            os.write(reinterpret_cast<const char*>(&f), sizeof(f));
        }
    } else {
        os.write(reinterpret_cast<const char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
}

void read_array(std::istream& is, Matrix& m, bool f32) {
    if (f32) {
        for (double& d : m.raw()) {
            float f;
            is.read(reinterpret_cast<char*>(&f), sizeof(f));
            d = static_cast<double>(f);
        }
    } else {
        is.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
    if (!is) throw CorruptCheckpoint("checkpoint truncated while reading tensors");
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt, bool as_float32) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CorruptCheckpoint("cannot open for writing: " + path);
    const ModelConfig& c = ckpt.config;
    os << kMagic << ' ' << kVersion << '\n';
    os << "dtype " << (as_float32 ? "f32" : "f64") << '\n';
    os << "step " << ckpt.step << '\n';
    os << "config enc_layers " << c.enc_layers << '\n';
    os << "config dec_layers " << c.dec_layers << '\n';
    os << "config d_model " << c.d_model << '\n';
    os << "config ffn_dim " << c.ffn_dim << '\n';
    os << "config n_heads " << c.n_heads << '\n';
    os << "config reference_patch " << c.reference_patch << '\n';
    os << "config fixed_patch " << c.fixed_patch << '\n';
    os << "config decoding " << decoding_str(c.decoding) << '\n';
    os << "config patching " << patching_str(c.patching) << '\n';
    os << "config resize_mode " << resize_str(c.resize_mode) << '\n';
    os << "config replicated_token " << token_str(c.replicated_token) << '\n';
    os << "config rope_base " << c.rope_base << '\n';
    os << "config omega_zero_based " << (c.omega_zero_based ? 1 : 0) << '\n';
    os << "opt_moments " << (ckpt.opt.has_value() ? 1 : 0) << '\n';
    if (ckpt.opt) os << "opt_t " << ckpt.opt->t << '\n';
    visit_params(ckpt.weights, [&](const std::string& name, const Matrix& m) {
        os << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    });
    os << "end\n";
    visit_params(ckpt.weights, [&](const std::string&, const Matrix& m) {
        write_array(os, m, as_float32);
    });
    if (ckpt.opt) {
        for (const Matrix& m : ckpt.opt->m) write_array(os, m, as_float32);
        for (const Matrix& m : ckpt.opt->v) write_array(os, m, as_float32);
    }
    if (!os) throw CorruptCheckpoint("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CorruptCheckpoint("cannot open: " + path);

    std::string magic;
    std::uint32_t version = 0;
    if (!(is >> magic >> version)) throw CorruptCheckpoint("missing header");
    if (magic != kMagic) throw CorruptCheckpoint("bad magic: " + magic);
    if (version != kVersion) {
        throw VersionMismatch("checkpoint format version " + std::to_string(version) +
                              ", expected " + std::to_string(kVersion));
    }

    Checkpoint ckpt;
    ckpt.format_version = version;
    bool f32 = false;
    bool has_opt = false;
    std::size_t opt_t = 0;
    struct TensorDecl {
        std::string name;
        std::size_t rows, cols;
    };
    std::vector<TensorDecl> tensors;

    std::string line;
    std::getline(is, line);  // rest of the magic line
    bool saw_end = false;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "end") {
            saw_end = true;
            break;
        } else if (key == "dtype") {
            std::string d;
            ls >> d;
            if (d == "f32") f32 = true;
            else if (d == "f64") f32 = false;
            else throw CorruptCheckpoint("bad dtype: " + d);
        } else if (key == "step") {
            ls >> ckpt.step;
        } else if (key == "opt_moments") {
            int v = 0;
            ls >> v;
            has_opt = v != 0;
        } else if (key == "opt_t") {
            ls >> opt_t;
        } else if (key == "config") {
            std::string name, val;
            ls >> name >> val;
            if (!ls && name.empty()) throw CorruptCheckpoint("bad config line");
            ModelConfig& c = ckpt.config;
            if (name == "enc_layers") c.enc_layers = std::stoul(val);
            else if (name == "dec_layers") c.dec_layers = std::stoul(val);
            else if (name == "d_model") c.d_model = std::stoul(val);
            else if (name == "ffn_dim") c.ffn_dim = std::stoul(val);
            else if (name == "n_heads") c.n_heads = std::stoul(val);
            else if (name == "reference_patch") c.reference_patch = std::stoul(val);
            else if (name == "fixed_patch") c.fixed_patch = std::stoul(val);
            else if (name == "decoding") c.decoding = parse_decoding(val);
            else if (name == "patching") c.patching = parse_patching(val);
            else if (name == "resize_mode") c.resize_mode = parse_resize(val);
            else if (name == "replicated_token") c.replicated_token = parse_token(val);
            else if (name == "rope_base") c.rope_base = std::stod(val);
            else if (name == "omega_zero_based") c.omega_zero_based = val == "1";
            else throw CorruptCheckpoint("unknown config key: " + name);
        } else if (key == "tensor") {
            TensorDecl t;
            ls >> t.name >> t.rows >> t.cols;
            if (!ls) throw CorruptCheckpoint("bad tensor line: " + line);
            tensors.push_back(std::move(t));
        } else {
            throw CorruptCheckpoint("unknown header key: " + key);
        }
    }
    if (!saw_end) throw CorruptCheckpoint("header not terminated");

    ckpt.weights = init_weights(ckpt.config, 0);
    std::size_t idx = 0;
    visit_params(ckpt.weights, [&](const std::string& name, Matrix& m) {
        if (idx >= tensors.size()) throw CorruptCheckpoint("missing tensor: " + name);
        const TensorDecl& t = tensors[idx++];
        if (t.name != name || t.rows != m.rows() || t.cols != m.cols()) {
            throw CorruptCheckpoint("tensor mismatch at " + name + " vs " + t.name);
        }
        read_array(is, m, f32);
    });
    if (idx != tensors.size()) throw CorruptCheckpoint("extra tensors in header");

    if (has_opt) {
        AdamState st = init_adam(ckpt.weights);
        st.t = opt_t;
        for (Matrix& m : st.m) read_array(is, m, f32);
        for (Matrix& m : st.v) read_array(is, m, f32);
        ckpt.opt = std::move(st);
    }
    return ckpt;
}

} // namespace periodica
