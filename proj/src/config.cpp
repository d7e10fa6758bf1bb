#include "periodica/config.hpp"
#include "periodica/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace periodica {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long n = std::stoll(v, &pos);
        if (pos != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a non-negative integer, got '" +
                          v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "' expects true/false, got '" + v + "'");
}

} // namespace

void RunConfig::validate() const {
    model.validate();
    train.validate();
    if (horizon == 0) throw ConfigError("horizon must be > 0");
}

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    // model shape
    if (key == "enc_layers") cfg.model.enc_layers = parse_size(key, value);
    else if (key == "dec_layers") cfg.model.dec_layers = parse_size(key, value);
    else if (key == "d_model") cfg.model.d_model = parse_size(key, value);
    else if (key == "ffn_dim") cfg.model.ffn_dim = parse_size(key, value);
    else if (key == "n_heads") cfg.model.n_heads = parse_size(key, value);
    else if (key == "ref_patch") cfg.model.reference_patch = parse_size(key, value);
    else if (key == "fixed_patch") cfg.model.fixed_patch = parse_size(key, value);
    else if (key == "rope_base") cfg.model.rope_base = parse_double(key, value);
    else if (key == "omega_zero_based")
        cfg.model.omega_zero_based = parse_bool(key, value);
    else if (key == "decoding") {
        if (value == "ppd") cfg.model.decoding = DecodingMode::ppd;
        else if (value == "autoregressive")
            cfg.model.decoding = DecodingMode::autoregressive;
        else
            throw ConfigError("key 'decoding' expects one of {ppd, autoregressive}, got '" +
                              value + "'");
    } else if (key == "patching") {
        if (value == "periodical") cfg.model.patching = PatchingMode::periodical;
        else if (value == "fixed") cfg.model.patching = PatchingMode::fixed;
        else
            throw ConfigError("key 'patching' expects one of {periodical, fixed}, got '" +
                              value + "'");
    } else if (key == "resize") {
        if (value == "flex") cfg.model.resize_mode = ResizeMode::flex;
        else if (value == "linear") cfg.model.resize_mode = ResizeMode::linear;
        else
            throw ConfigError("key 'resize' expects one of {flex, linear}, got '" +
                              value + "'");
    } else if (key == "replicated_token") {
        if (value == "last") cfg.model.replicated_token = ReplicatedToken::last;
        else if (value == "mean") cfg.model.replicated_token = ReplicatedToken::mean;
        else if (value == "learned")
            cfg.model.replicated_token = ReplicatedToken::learned;
        else
            throw ConfigError(
                "key 'replicated_token' expects one of {last, mean, learned}, got '" +
                value + "'");
    }
    // training
    else if (key == "lr") cfg.train.lr_init = parse_double(key, value);
    else if (key == "gamma") cfg.train.gamma = parse_double(key, value);
    else if (key == "step_size") cfg.train.step_size = parse_size(key, value);
    else if (key == "steps_per_epoch") cfg.train.steps_per_epoch = parse_size(key, value);
    else if (key == "batch_size") cfg.train.batch_size = parse_size(key, value);
    else if (key == "n_hist_tokens") cfg.train.n_hist_tokens = parse_size(key, value);
    else if (key == "n_pred_tokens") cfg.train.n_pred_tokens = parse_size(key, value);
    else if (key == "steps") cfg.train.steps = parse_size(key, value);
    else if (key == "seed") cfg.train.seed = parse_size(key, value);
    // run options
    else if (key == "data") cfg.data = value;
    else if (key == "out") cfg.out = value;
    else if (key == "horizon") cfg.horizon = parse_size(key, value);
    else if (key == "period") cfg.period = parse_size(key, value);
    else if (key == "zero_shot") cfg.zero_shot = parse_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig cfg;
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open config file: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            std::string t = trim(line);
            if (t.empty()) continue;
            std::size_t eq = t.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
            }
            apply_kv(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
    }
    for (const auto& [k, v] : overrides) apply_kv(cfg, k, v);
    cfg.validate();
    return cfg;
}

} // namespace periodica
