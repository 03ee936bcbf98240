#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylestruct/network.hpp"

namespace stylestruct {

/// Training configuration. Text form is one `key = value` per line with `#`
/// comments. Every key is listed in config_keys().
struct TrainConfig {
    Scale scale{4};
    std::uint64_t seed = 1;
    Index batch_size = 128;

    double lr_fcn = 2e-4;
    double lr_structure = 2e-4;
    double lr_style = 2e-4;
    double lr_joint_style = 1e-6;
    double lr_joint_structure = 1e-7;
    double lambda = 0.1;
    double fcn_weight = 1.0;  // 0 drops the pixel-wise constraint

    // Iteration caps; 0 means epochs * batches_per_epoch.
    std::uint64_t iters_fcn = 0;
    std::uint64_t iters_structure = 0;
    std::uint64_t iters_style = 0;
    std::uint64_t iters_style_finetune = 0;
    std::uint64_t iters_joint = 0;
    std::uint64_t epochs_fcn = 25;
    std::uint64_t epochs_structure = 25;
    std::uint64_t epochs_style = 25;
    std::uint64_t epochs_style_finetune = 5;
    std::uint64_t epochs_joint = 5;

    Index data_count = 2000;
    Index test_count = 200;
    Index codebook_scenes = 200;

    std::string out_dir = "out";
    std::uint64_t checkpoint_every = 500;
    double divergence_ceiling = 15.0;
    std::uint64_t divergence_patience = 100;

    std::uint64_t fcn_eval_every = 250;
    double fcn_target_accuracy = 0.0;  // early stop once reached; 0 disables

    /// Applies one key. Throws ConfigError naming the key on bad input.
    void set(const std::string& key, const std::string& value);
    /// Rejects inconsistent values (odd batch, non-positive counts, ...).
    void validate() const;

    /// Canonical text of every key except out_dir.
    std::string serialize() const;
    /// FNV-1a of serialize().
    std::uint64_t hash() const;
};

const std::vector<std::string>& config_keys();

/// Parses the text form on top of `base`. Errors carry the line number.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});

}  // namespace stylestruct
