#pragma once

// Flat key/value configuration with section headers:
//
//   # comment
//   [train]
//   alpha = 1.0
//   [model]
//   hidden = 32
//
// Keys are addressed as "section.key". Suite files add `[suite]` and
// `[setting NAME]` sections; keys inside a setting are full "section.key"
// overrides of the base configuration.

#include <cstdint>
#include <string>
#include <vector>

#include "metaxlr/trainer.hpp"

namespace metaxlr::config {

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

struct KeyValueFile {
  std::vector<Entry> entries;
};

/// Throws ConfigError("line N: ...") on malformed input.
KeyValueFile parse_key_values(const std::string& text);

/// Applies one "section.key" = value to a config; throws ConfigError naming the field.
void apply(train::TrainConfig& config, const std::string& qualified_key, const std::string& value);

/// Reads [train], [model], [cluster] sections; ignores [run], [suite], [setting ...].
train::TrainConfig train_config_from(const KeyValueFile& file);
train::TrainConfig parse_train_config(const std::string& text);

/// Every resolved parameter, in a form parse_train_config accepts.
std::string echo(const train::TrainConfig& config);

/// Full-scale hyperparameters: gamma 0.01, 12 500 steps, batch size 4.
train::TrainConfig full_scale_default();

/// Optional `[run] name`, default "run".
std::string run_name(const KeyValueFile& file);

struct Setting {
  std::string name;
  train::TrainConfig config;
  std::vector<std::uint64_t> seeds;
};

struct ExperimentSuite {
  std::vector<Setting> settings;
};

/// `[suite] seeds` accepts "1-10", "1,2,5", or a mix ("1-3,7").
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

ExperimentSuite parse_suite(const std::string& text);
/// Seeds of the `[suite]` section (used by the ablation command).
std::vector<std::uint64_t> suite_seeds(const KeyValueFile& file);

std::string read_file(const std::string& path);

}  // namespace metaxlr::config
