#ifndef PERIODICA_CONFIG_HPP
#define PERIODICA_CONFIG_HPP

#include "periodica/model.hpp"
#include "periodica/training.hpp"

#include <string>
#include <vector>

namespace periodica {

/// Merged run settings: model shape, training hyperparameters, data paths
/// and per-command options.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::string data;         // dataset CSV or corpus directory
    std::string out = ".";    // output directory
    std::size_t horizon = 96;
    std::size_t period = 0;   // 0 -> estimate from data
    bool zero_shot = false;

    void validate() const;  // throws ConfigError
};

/// Applies one `key = value` assignment. Unknown keys and values of the
/// wrong type throw ConfigError naming the key.
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat key-value text config: one `key = value` per line, `#` comments.
/// An empty path yields all defaults. `overrides` are applied after the
/// file, in order.
RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>&
                           overrides = {});

} // namespace periodica

#endif
