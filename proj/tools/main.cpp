#include "periodica/config.hpp"
#include "periodica/data_eval.hpp"
#include "periodica/errors.hpp"
#include "periodica/gradcheck.hpp"
#include "periodica/periodicity.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace periodica;

namespace {

struct CommonFlags {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

/// Registers flags shared by every command; each one funnels into the same
/// key-value override list the config file uses.
void add_common(CLI::App* cmd, CommonFlags& fl) {
    cmd->add_option("--config", fl.config_path, "flat key = value config file");
    auto push = [&fl](const std::string& key) {
        return [&fl, key](const std::string& v) { fl.overrides.emplace_back(key, v); };
    };
    cmd->add_option_function<std::string>("--seed", push("seed"), "RNG seed");
    cmd->add_option_function<std::string>("--horizon", push("horizon"),
                                          "forecast horizon (steps)");
    cmd->add_option_function<std::string>("--period", push("period"),
                                          "cycle length override (skips estimation)");
    cmd->add_option_function<std::string>("--patching", push("patching"),
                                          "periodical | fixed");
    cmd->add_option_function<std::string>("--decoding", push("decoding"),
                                          "ppd | autoregressive");
    cmd->add_option_function<std::string>("--resize", push("resize"), "flex | linear");
    cmd->add_option_function<std::string>("--replicated-token", push("replicated_token"),
                                          "last | mean | learned");
    cmd->add_option_function<std::string>("--ref-patch", push("ref_patch"),
                                          "reference patch length");
    cmd->add_option_function<std::string>("--out", push("out"), "output directory");
}

RunConfig resolve(const CommonFlags& fl) { return parse_config(fl.config_path, fl.overrides); }

std::size_t dataset_period(const Dataset& ds, const RunConfig& cfg) {
    if (cfg.period != 0) return cfg.period;
    return find_period_fft(ds.channels[0], 2, 0, cfg.model.reference_patch).cycle_length;
}

Corpus load_corpus(const std::string& data, const RunConfig& cfg, bool train_split_only) {
    std::vector<std::string> files;
    if (fs::is_directory(data)) {
        for (const auto& e : fs::directory_iterator(data)) {
            if (e.path().extension() == ".csv") files.push_back(e.path().string());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(data);
    }
    if (files.empty()) throw EmptyCorpus("no .csv files under " + data);

    Corpus corpus;
    for (const auto& f : files) {
        Dataset ds = load_csv(f);
        Dataset seg = train_split_only ? split_chronological(ds).train : ds;
        CorpusDataset cd;
        cd.name = f;
        cd.cycle_length = dataset_period(seg.length() ? seg : ds, cfg);
        cd.channels = std::move(seg.channels);
        corpus.push_back(std::move(cd));
    }
    return corpus;
}

void train_loop(Model& model, AdamState& opt, const Corpus& corpus,
                const RunConfig& cfg, std::size_t start_step) {
    std::mt19937_64 rng(cfg.train.seed);
    for (std::size_t s = 0; s < cfg.train.steps; ++s) {
        auto batch = sample_window_batch(corpus, cfg.train, rng);
        double loss = train_step(batch, model, opt, cfg.train, start_step + s);
        if (s % 50 == 0 || s + 1 == cfg.train.steps) {
            std::cout << "step " << (start_step + s) << " loss " << loss << '\n';
        }
    }
}

void save_to(const RunConfig& cfg, const Model& model, const AdamState& opt,
             std::size_t step) {
    fs::create_directories(cfg.out);
    Checkpoint ckpt;
    ckpt.config = model.config();
    ckpt.weights = model.weights();
    ckpt.opt = opt;
    ckpt.step = step;
    std::string path = (fs::path(cfg.out) / "model.ckpt").string();
    save_checkpoint(path, ckpt);
    std::cout << "saved " << path << '\n';
}

int cmd_pretrain(const CommonFlags& fl, const std::string& data) {
    RunConfig cfg = resolve(fl);
    if (!data.empty()) cfg.data = data;
    Corpus corpus = load_corpus(cfg.data, cfg, true);
    Model model(cfg.model, init_weights(cfg.model, cfg.train.seed));
    AdamState opt = init_adam(model.weights());
    train_loop(model, opt, corpus, cfg, 0);
    save_to(cfg, model, opt, cfg.train.steps);
    return 0;
}

int cmd_finetune(const CommonFlags& fl, const std::string& ckpt_path,
                 const std::string& data) {
    RunConfig cfg = resolve(fl);
    if (!data.empty()) cfg.data = data;
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    cfg.model = ckpt.config;
    Model model(ckpt.config, std::move(ckpt.weights));
    AdamState opt = ckpt.opt ? *ckpt.opt : init_adam(model.weights());
    Corpus corpus = load_corpus(cfg.data, cfg, true);
    train_loop(model, opt, corpus, cfg, ckpt.step);
    save_to(cfg, model, opt, ckpt.step + cfg.train.steps);
    return 0;
}

int cmd_evaluate(const CommonFlags& fl, const std::string& ckpt_path,
                 const std::string& data, bool zero_shot) {
    RunConfig cfg = resolve(fl);
    if (!data.empty()) cfg.data = data;
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    Model model(ckpt.config, std::move(ckpt.weights));

    Dataset ds = load_csv(cfg.data);
    Splits sp = split_chronological(ds);
    if (!zero_shot && !cfg.zero_shot) {
        AdamState opt = ckpt.opt ? *ckpt.opt : init_adam(model.weights());
        Corpus corpus;
        CorpusDataset cd;
        cd.name = cfg.data;
        cd.cycle_length = dataset_period(sp.train, cfg);
        cd.channels = sp.train.channels;
        corpus.push_back(std::move(cd));
        train_loop(model, opt, corpus, cfg, ckpt.step);
    }
    EvalOptions eo;
    eo.horizons = {cfg.horizon};
    eo.lookback_tokens = cfg.train.n_hist_tokens;
    eo.cycle_length = cfg.period;
    EvalReport rep = evaluate(model, sp.train, sp.test, eo);
    std::cout << format_report(rep);
    return 0;
}

int cmd_forecast(const CommonFlags& fl, const std::string& ckpt_path,
                 const std::string& data, const std::string& out_csv) {
    RunConfig cfg = resolve(fl);
    if (!data.empty()) cfg.data = data;
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    Model model(ckpt.config, std::move(ckpt.weights));

    Dataset ds = load_csv(cfg.data);
    std::size_t period = dataset_period(ds, cfg);

    std::vector<std::vector<double>> preds;
    for (const auto& ch : ds.channels) {
        preds.push_back(model.run(ch, cfg.horizon, period).values);
    }

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_csv.empty()) {
        file.open(out_csv);
        if (!file) throw ParseError("cannot write " + out_csv);
        os = &file;
    }
    os->precision(10);
    for (std::size_t c = 0; c < preds.size(); ++c) {
        *os << (c ? "," : "") << "channel_" << c;
    }
    *os << '\n';
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        for (std::size_t c = 0; c < preds.size(); ++c) {
            *os << (c ? "," : "") << preds[c][t];
        }
        *os << '\n';
    }
    return 0;
}

int cmd_find_period(const CommonFlags& fl, const std::string& data) {
    RunConfig cfg = resolve(fl);
    if (!data.empty()) cfg.data = data;
    Dataset ds = load_csv(cfg.data);
    for (std::size_t c = 0; c < ds.n_channels(); ++c) {
        PeriodEstimate pe =
            find_period_fft(ds.channels[c], 2, 0, cfg.model.reference_patch);
        std::cout << "channel " << c << " cycle_length " << pe.cycle_length
                  << " source "
                  << (pe.source == PeriodSource::fft ? "fft" : "fallback")
                  << " confidence " << pe.confidence << '\n';
    }
    return 0;
}

int cmd_selftest() {
    // A quick smoke pass over the core invariants; the full suite lives in
    // the test binaries.
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
        if (!ok) ++failures;
    };

    Matrix theta(4, 3);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (double& v : theta.raw()) v = nd(rng);
    check("flex resize identity at reference size",
          max_abs(sub(flex_resize(theta, 4, ResizeMode::flex), theta)) < 1e-12);

    std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    auto [nx, rec] = revin_normalize(x);
    auto back = revin_denormalize(nx, rec);
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(back[i] - x[i]));
    check("instance norm round trip", err < 1e-12);

    std::vector<double> v = {0.3, -0.7};
    auto rot = rope_rotate(v, 0.0, 10000.0);
    check("rotary embedding identity at position 0",
          std::abs(rot[0] - v[0]) < 1e-15 && std::abs(rot[1] - v[1]) < 1e-15);

    ModelConfig mc;
    mc.enc_layers = 1;
    mc.dec_layers = 1;
    mc.d_model = 8;
    mc.ffn_dim = 16;
    mc.n_heads = 2;
    mc.reference_patch = 4;
    Model model(mc, init_weights(mc, 7));
    Matrix patches(3, 4);
    for (double& p : patches.raw()) p = nd(rng);
    std::vector<Matrix> params;
    visit_params(model.weights(),
                 [&](const std::string&, const Matrix& m) { params.push_back(m); });
    double gerr = grad_check(
        [&](Tape& tape, const std::vector<Tape::NodeId>& ids) {
            auto gp = Model::bind_params(ids, mc.enc_layers, mc.dec_layers);
            auto tp = model.predict_patches_graph(tape, gp, patches, 4, 2);
            Matrix target(2, 4, 0.5);
            return tape.mse(tp.pred, std::move(target));
        },
        params, 1e-5);
    check("gradient check on tiny model", gerr < 1e-4);

    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"period-adaptive time series forecaster"};
    app.require_subcommand(1);

    CommonFlags fl;
    std::string data, ckpt_path, out_csv;
    bool zero_shot = false;

    auto* pretrain = app.add_subcommand("pretrain", "train from scratch on a corpus");
    add_common(pretrain, fl);
    pretrain->add_option("data", data, "corpus directory or CSV file");

    auto* finetune = app.add_subcommand("finetune", "continue training from a checkpoint");
    add_common(finetune, fl);
    finetune->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
    finetune->add_option("data", data, "dataset CSV");

    auto* evaluate = app.add_subcommand("evaluate", "sliding-window MSE/MAE on the test split");
    add_common(evaluate, fl);
    evaluate->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
    evaluate->add_option("data", data, "dataset CSV");
    evaluate->add_flag("--zero-shot", zero_shot, "skip finetuning before evaluation");

    auto* forecast = app.add_subcommand("forecast", "forecast beyond the end of a CSV");
    add_common(forecast, fl);
    forecast->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
    forecast->add_option("data", data, "input CSV");
    forecast->add_option("--output", out_csv, "forecast CSV path (default stdout)");

    auto* find_period = app.add_subcommand("find-period", "estimate the cycle length of a CSV");
    add_common(find_period, fl);
    find_period->add_option("data", data, "input CSV");

    auto* selftest = app.add_subcommand("selftest", "run the built-in invariant checks");
    (void)selftest;

    CLI11_PARSE(app, argc, argv);

    try {
        if (pretrain->parsed()) return cmd_pretrain(fl, data);
        if (finetune->parsed()) return cmd_finetune(fl, ckpt_path, data);
        if (evaluate->parsed()) return cmd_evaluate(fl, ckpt_path, data, zero_shot);
        if (forecast->parsed()) return cmd_forecast(fl, ckpt_path, data, out_csv);
        if (find_period->parsed()) return cmd_find_period(fl, data);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DivergedError& e) {
        std::cerr << "numeric divergence: " << e.what() << '\n';
        return 4;
    } catch (const InvalidValue& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const std::runtime_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
