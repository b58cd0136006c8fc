#include "metaxlr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "metaxlr/errors.hpp"

namespace metaxlr::config {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string line_prefix(int line) { return "line " + std::to_string(line) + ": "; }

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("field " + key + ": expected a number, got '" + text + "'");
  return value;
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& text) {
  Int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("field " + key + ": expected an integer, got '" + text + "'");
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

using Setter = std::function<void(train::TrainConfig&, const std::string&, const std::string&)>;

template <typename Member>
Setter set_double(Member member) {
  return [member](train::TrainConfig& c, const std::string& k, const std::string& v) {
    c.*member = parse_double(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  using train::TrainConfig;
  static const std::map<std::string, Setter> table = {
      {"train.alpha", set_double(&TrainConfig::alpha)},
      {"train.beta", set_double(&TrainConfig::beta)},
      {"train.gamma", set_double(&TrainConfig::gamma)},
      {"train.reward_cap", set_double(&TrainConfig::reward_cap)},
      {"train.epsilon_scale", set_double(&TrainConfig::epsilon_scale)},
      {"train.phi_init_scale", set_double(&TrainConfig::phi_init_scale)},
      {"train.steps",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.steps = parse_integer<long>(k, v);
       }},
      {"train.batch_size",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.batch_size = parse_integer<int>(k, v);
       }},
      {"train.seed",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_integer<std::uint64_t>(k, v);
       }},
      {"train.strategy",
       [](TrainConfig& c, const std::string&, const std::string& v) {
         c.strategy = train::parse_strategy(v);
       }},
      {"train.reward_mode",
       [](TrainConfig& c, const std::string&, const std::string& v) {
         c.reward_mode = train::parse_reward_mode(v);
       }},
      {"train.meta_grad_mode",
       [](TrainConfig& c, const std::string&, const std::string& v) {
         c.meta_grad_mode = train::parse_meta_grad_mode(v);
       }},
      {"model.vocab_size",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.model.vocab_size = parse_integer<int>(k, v);
       }},
      {"model.hidden",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.model.hidden = parse_integer<int>(k, v);
       }},
      {"model.bottleneck",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.model.bottleneck = parse_integer<int>(k, v);
       }},
      {"model.encoder_layers",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.model.encoder_layers = parse_integer<int>(k, v);
       }},
      {"model.num_labels",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.model.num_labels = parse_integer<int>(k, v);
       }},
      {"model.insert_layer",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.model.insert_layer = parse_integer<int>(k, v);
       }},
      {"cluster.preset",
       [](TrainConfig& c, const std::string&, const std::string& v) { c.cluster.preset = v; }},
      {"cluster.target_size",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.cluster.target_size = parse_integer<int>(k, v);
       }},
      {"cluster.source_size",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.cluster.source_size = parse_integer<int>(k, v);
       }},
      {"cluster.test_size",
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.cluster.test_size = parse_integer<int>(k, v);
       }},
  };
  return table;
}

bool is_train_section(const std::string& s) {
  return s == "train" || s == "model" || s == "cluster";
}

}  // namespace

KeyValueFile parse_key_values(const std::string& text) {
  KeyValueFile file;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']') throw ConfigError(line_prefix(line) + "unterminated section header");
      section = trim(content.substr(1, content.size() - 2));
      if (section.empty()) throw ConfigError(line_prefix(line) + "empty section name");
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_prefix(line) + "expected 'key = value', got '" + content + "'");
    if (section.empty()) throw ConfigError(line_prefix(line) + "key outside of any section");
    Entry e{section, trim(content.substr(0, eq)), trim(content.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError(line_prefix(line) + "empty key");
    for (const auto& prior : file.entries)
      if (prior.section == e.section && prior.key == e.key)
        throw ConfigError(line_prefix(line) + "duplicate key '" + e.section + "." + e.key +
                          "' (first set on line " + std::to_string(prior.line) + ")");
    file.entries.push_back(std::move(e));
  }
  return file;
}

void apply(train::TrainConfig& config, const std::string& qualified_key, const std::string& value) {
  const auto it = setters().find(qualified_key);
  if (it == setters().end()) throw ConfigError("unknown field '" + qualified_key + "'");
  try {
    it->second(config, qualified_key, value);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind("field ", 0) == 0) throw;
    throw ConfigError("field " + qualified_key + ": " + what);
  }
}

train::TrainConfig train_config_from(const KeyValueFile& file) {
  train::TrainConfig config;
  for (const auto& e : file.entries) {
    if (!is_train_section(e.section)) continue;
    try {
      apply(config, e.section + "." + e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(line_prefix(e.line) + err.what());
    }
  }
  try {
    train::validate(config);
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("invalid configuration: ") + err.what());
  }
  return config;
}

train::TrainConfig parse_train_config(const std::string& text) {
  return train_config_from(parse_key_values(text));
}

std::string echo(const train::TrainConfig& c) {
  std::ostringstream out;
  out << "[train]\n"
      << "alpha = " << format_double(c.alpha) << '\n'
      << "beta = " << format_double(c.beta) << '\n'
      << "gamma = " << format_double(c.gamma) << '\n'
      << "steps = " << c.steps << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "strategy = " << train::to_string(c.strategy) << '\n'
      << "reward_mode = " << train::to_string(c.reward_mode) << '\n'
      << "meta_grad_mode = " << train::to_string(c.meta_grad_mode) << '\n'
      << "reward_cap = " << format_double(c.reward_cap) << '\n'
      << "epsilon_scale = " << format_double(c.epsilon_scale) << '\n'
      << "phi_init_scale = " << format_double(c.phi_init_scale) << '\n'
      << "seed = " << c.seed << '\n'
      << "\n[model]\n"
      << "vocab_size = " << c.model.vocab_size << '\n'
      << "hidden = " << c.model.hidden << '\n'
      << "bottleneck = " << c.model.bottleneck << '\n'
      << "encoder_layers = " << c.model.encoder_layers << '\n'
      << "num_labels = " << c.model.num_labels << '\n'
      << "insert_layer = " << c.model.insert_layer << '\n'
      << "\n[cluster]\n"
      << "preset = " << c.cluster.preset << '\n'
      << "target_size = " << c.cluster.target_size << '\n'
      << "source_size = " << c.cluster.source_size << '\n'
      << "test_size = " << c.cluster.test_size << '\n';
  return out.str();
}

train::TrainConfig full_scale_default() {
  train::TrainConfig c;
  c.gamma = 0.01;
  c.steps = 12500;
  c.batch_size = 4;
  return c;
}

std::string run_name(const KeyValueFile& file) {
  for (const auto& e : file.entries)
    if (e.section == "run" && e.key == "name") return e.value;
  return "run";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(parse_integer<std::uint64_t>("suite.seeds", item));
      continue;
    }
    const auto lo = parse_integer<std::uint64_t>("suite.seeds", trim(item.substr(0, dash)));
    const auto hi = parse_integer<std::uint64_t>("suite.seeds", trim(item.substr(dash + 1)));
    if (hi < lo) throw ConfigError("field suite.seeds: empty range '" + item + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("field suite.seeds: no seeds given");
  return seeds;
}

std::vector<std::uint64_t> suite_seeds(const KeyValueFile& file) {
  for (const auto& e : file.entries)
    if (e.section == "suite" && e.key == "seeds") {
      try {
        return parse_seed_list(e.value);
      } catch (const ConfigError& err) {
        throw ConfigError(line_prefix(e.line) + err.what());
      }
    }
  throw ConfigError("missing [suite] seeds");
}

ExperimentSuite parse_suite(const std::string& text) {
  const KeyValueFile file = parse_key_values(text);
  const train::TrainConfig base = train_config_from(file);
  const auto seeds = suite_seeds(file);

  ExperimentSuite suite;
  const std::string prefix = "setting ";
  for (const auto& e : file.entries) {
    if (e.section.rfind(prefix, 0) != 0) {
      if (!is_train_section(e.section) && e.section != "suite" && e.section != "run")
        throw ConfigError(line_prefix(e.line) + "unknown section [" + e.section + "]");
      continue;
    }
    const std::string name = trim(e.section.substr(prefix.size()));
    if (name.empty()) throw ConfigError(line_prefix(e.line) + "setting without a name");
    Setting* setting = nullptr;
    for (auto& s : suite.settings)
      if (s.name == name) setting = &s;
    if (!setting) {
      suite.settings.push_back({name, base, seeds});
      setting = &suite.settings.back();
    }
    try {
      if (e.key == "seeds")
        setting->seeds = parse_seed_list(e.value);
      else
        apply(setting->config, e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(line_prefix(e.line) + err.what());
    }
  }
  if (suite.settings.empty()) throw ConfigError("suite defines no [setting NAME] sections");
  for (const auto& s : suite.settings) {
    try {
      train::validate(s.config);
    } catch (const ConfigError& err) {
      throw ConfigError("setting " + s.name + ": " + err.what());
    }
  }
  return suite;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace metaxlr::config
