// metaxlr command-line tool.
//
//   metaxlr gen-data --config FILE [--out DIR] [--seed N]
//   metaxlr train    --config FILE [--out DIR] [--seed N]
//   metaxlr suite    --config FILE [--out DIR] [--jobs N]
//   metaxlr ablate   --config FILE [--out DIR] [--jobs N]
//
// Exit codes: 0 success, 1 run failure, 2 configuration error, 3 I/O error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "metaxlr/config.hpp"
#include "metaxlr/errors.hpp"
#include "metaxlr/report.hpp"
#include "metaxlr/suite.hpp"
#include "metaxlr/taskgen.hpp"
#include "metaxlr/trainer.hpp"

namespace fs = std::filesystem;
using namespace metaxlr;

namespace {

constexpr int kExitRunFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

std::string output_root(const Options& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (const char* env = std::getenv("METAXLR_OUT"); env && *env) return env;
  return "metaxlr-out";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_gen_data(const Options& opts) {
  const auto file = config::parse_key_values(config::read_file(opts.config_path));
  train::TrainConfig cfg = config::train_config_from(file);
  if (opts.seed) cfg.seed = *opts.seed;
  const auto cluster = train::resolve_cluster(cfg);
  const auto data = train::make_run_data(cfg, cluster);

  const fs::path root(output_root(opts));
  ensure_dir(root);
  auto write = [&](const taskgen::Corpus& corpus) {
    const fs::path path = root / ("lang_" + std::to_string(corpus.language_id) + ".txt");
    report::write_text_file(path.string(), taskgen::to_text(corpus));
    std::cout << path.string() << " sentences=" << corpus.size() << '\n';
  };
  write(data.target_train);
  for (const auto& c : data.sources) write(c);
  return 0;
}

int cmd_train(const Options& opts) {
  const auto file = config::parse_key_values(config::read_file(opts.config_path));
  train::TrainConfig cfg = config::train_config_from(file);
  if (opts.seed) cfg.seed = *opts.seed;
  const fs::path dir = fs::path(output_root(opts)) / config::run_name(file);

  const auto report = train::run(cfg, train::resolve_cluster(cfg));
  report::write_run_directory(dir.string(), report);
  std::cout << "run_dir=" << dir.string() << '\n'
            << "strategy=" << train::to_string(cfg.strategy) << '\n'
            << "precision=" << report::fixed(report.result.precision) << '\n'
            << "recall=" << report::fixed(report.result.recall) << '\n'
            << "f1=" << report::fixed(report.result.f1) << '\n';
  return 0;
}

int cmd_suite(const Options& opts) {
  const auto started = std::chrono::steady_clock::now();
  const auto suite = config::parse_suite(config::read_file(opts.config_path));
  const auto rows = suite::run_suite(suite, opts.jobs);

  const fs::path root(output_root(opts));
  ensure_dir(root);
  std::ostringstream csv;
  report::write_summary_csv(csv, rows);
  report::write_text_file((root / "summary.csv").string(), csv.str());

  std::ostringstream log;
  bool failed = false;
  for (const auto& r : rows)
    if (!r.ok) {
      failed = true;
      log << "failed setting=" << r.setting << " seed=" << r.seed << ": " << r.error << '\n';
      std::cerr << "run failed: " << r.setting << " seed " << r.seed << ": " << r.error << '\n';
    }
  log << "wall_seconds=" << seconds_since(started) << '\n';
  report::write_text_file((root / "suite.log").string(), log.str());
  std::cout << (root / "summary.csv").string() << '\n';
  return failed ? kExitRunFailure : 0;
}

int cmd_ablate(const Options& opts) {
  const auto file = config::parse_key_values(config::read_file(opts.config_path));
  train::TrainConfig base = config::train_config_from(file);
  if (opts.seed) base.seed = *opts.seed;
  const auto seeds = config::suite_seeds(file);
  const auto rows = train::run_reward_ablation(base, train::resolve_cluster(base), seeds, opts.jobs);

  const fs::path root(output_root(opts));
  ensure_dir(root);
  std::ostringstream csv;
  report::write_ablation_csv(csv, rows);
  report::write_text_file((root / "ablation.csv").string(), csv.str());
  for (const auto& r : rows)
    std::cout << r.mode << " f1=" << report::fixed(r.mean) << " +- " << report::fixed(r.stddev)
              << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandit-sampled bilevel cross-lingual transfer on synthetic tagging tasks"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "Output directory (default: $METAXLR_OUT)");
  };
  auto* gen = app.add_subcommand("gen-data", "Write one corpus file per language");
  add_common(gen);
  gen->add_option("--seed", opts.seed, "Override the configured seed");
  auto* trn = app.add_subcommand("train", "Run one training configuration");
  add_common(trn);
  trn->add_option("--seed", opts.seed, "Override the configured seed");
  auto* sui = app.add_subcommand("suite", "Run every (setting, seed) of a suite file");
  add_common(sui);
  sui->add_option("--jobs", opts.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  auto* abl = app.add_subcommand("ablate", "Compare reward modes against uniform selection");
  add_common(abl);
  abl->add_option("--jobs", opts.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  abl->add_option("--seed", opts.seed, "Override the base seed (cluster languages)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(opts);
    if (trn->parsed()) return cmd_train(opts);
    if (sui->parsed()) return cmd_suite(opts);
    if (abl->parsed()) return cmd_ablate(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kExitRunFailure;
  }
  return kExitConfig;
}
