#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gvps/trainer.hpp"

namespace gvps {

// Flat key=value text, one pair per line; '#' starts a comment. Unknown keys
// are rejected, missing keys keep their defaults. A document whose first
// non-blank character is '{' is parsed as a JSON object with the same keys.
//
// Keys: method task difficulty G batch_size mini_batch_size learning_rate
// momentum optimizer temperature max_response_length alpha tau n segmentation
// fixed_segments objective eps_low eps_high clip_epochs std_normalize
// total_steps seed reproducible threads embed_dim hidden_dim window init_scale
// sft_steps sft_batch sft_lr sft_early_exit_rate sft_seed eval_problems
// accuracy_threshold threshold_window checkpoint_interval dump_every
TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);

// Every key in canonical order; doubles written with 17 significant digits so
// parse_config(to_config_text(c)) == c.
std::string to_config_text(const TrainConfig& config);

// Applies a single key=value assignment (used for CLI overrides and sweeps).
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);

std::vector<std::string> config_keys();

}  // namespace gvps
