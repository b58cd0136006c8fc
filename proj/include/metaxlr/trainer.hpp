#pragma once

// Bilevel training loop with bandit-driven source-language selection.
//
// Per step: choose a source language, take an inner SGD step on theta using
// the source batch (RTN active), evaluate the target loss at the updated theta
// (the meta loss), push phi along the one-step-unrolled meta-gradient, and feed
// the meta loss back to the bandit.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metaxlr/bandit.hpp"
#include "metaxlr/evaluator.hpp"
#include "metaxlr/model.hpp"
#include "metaxlr/taskgen.hpp"
#include "metaxlr/tensor.hpp"

namespace metaxlr::train {

enum class Strategy { single_source, uniform, exp3 };
enum class RewardMode { loss_as_reward, loss_as_penalty };
enum class MetaGradMode { unrolled, first_order };

std::string to_string(Strategy s);
std::string to_string(RewardMode m);
std::string to_string(MetaGradMode m);
Strategy parse_strategy(const std::string& s);
RewardMode parse_reward_mode(const std::string& s);
MetaGradMode parse_meta_grad_mode(const std::string& s);

struct ClusterConfig {
  std::string preset = "heterogeneous";
  int target_size = 100;
  int source_size = 1000;
  int test_size = 200;

  bool operator==(const ClusterConfig&) const = default;
};

struct TrainConfig {
  double alpha = 1e-2;
  double beta = 1e-2;
  double gamma = 0.01;
  long steps = 12500;
  int batch_size = 4;
  Strategy strategy = Strategy::exp3;
  RewardMode reward_mode = RewardMode::loss_as_reward;
  MetaGradMode meta_grad_mode = MetaGradMode::unrolled;
  double reward_cap = 5.0;
  double epsilon_scale = 1e-3;
  double phi_init_scale = 0.01;
  std::uint64_t seed = 0;
  model::ModelConfig model;
  ClusterConfig cluster;

  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);

/// Cluster for a config: preset languages seeded by the run seed, sizes from config.
taskgen::ClusterSpec resolve_cluster(const TrainConfig& config);

struct StepRecord {
  long step = 0;
  int language = 0;  // source arm index in [0, K)
  std::vector<double> probs;
  double source_loss = 0.0;
  double meta_loss = 0.0;
  double reward = 0.0;  // importance-weighted r_t; 0 when no bandit runs
};

struct RunReport {
  TrainConfig config;
  int num_sources = 0;
  std::vector<StepRecord> trace;
  eval::F1Report result;
  double wall_seconds = 0.0;
  ParamVector theta;
  ParamVector phi;
  std::optional<bandit::BanditState<double>> bandit;
};

/// Everything a run consumes that is fixed by (config, cluster).
struct RunData {
  taskgen::Corpus target_train;
  taskgen::Corpus target_test;
  std::vector<taskgen::Corpus> sources;
};

RunData make_run_data(const TrainConfig& config, const taskgen::ClusterSpec& cluster);

/// Dispatches on config.strategy.
RunReport run(const TrainConfig& config, const taskgen::ClusterSpec& cluster);
RunReport run(const TrainConfig& config, const taskgen::ClusterSpec& cluster, const RunData& data);
/// Requires strategy == exp3.
RunReport run_metaxlr(const TrainConfig& config, const taskgen::ClusterSpec& cluster);
/// Requires strategy in {single_source, uniform}.
RunReport run_baseline(const TrainConfig& config, const taskgen::ClusterSpec& cluster);

/// Span F1 of the target path (no RTN) on a corpus.
eval::F1Report evaluate(const model::TaggerParams& theta, const taskgen::Corpus& corpus);

struct StepOutcome {
  ParamVector theta;
  ParamVector phi;
  double source_loss = 0.0;
  double meta_loss = 0.0;
  ParamVector phi_grad;
};

/// One inner theta step plus the phi meta-step on fixed batches.
StepOutcome bilevel_step(const ParamVector& theta, const ParamVector& phi,
                         const model::Batch& source, const model::Batch& target,
                         const TrainConfig& config);

/// Gradient of phi -> L_t(theta - alpha * grad_theta L_s(theta, phi)).
ParamVector meta_gradient(const ParamVector& theta, const ParamVector& phi,
                          const model::Batch& source, const model::Batch& target, double alpha,
                          int insert_layer, MetaGradMode mode, double epsilon_scale = 1e-3);

struct AblationRow {
  std::string mode;  // loss_as_penalty, uniform, loss_as_reward
  std::vector<std::uint64_t> seeds;
  std::vector<double> f1;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Rows in fixed order: loss_as_penalty, uniform, loss_as_reward.
std::vector<AblationRow> run_reward_ablation(const TrainConfig& base,
                                             const taskgen::ClusterSpec& cluster,
                                             const std::vector<std::uint64_t>& seeds, int jobs = 1);

double mean(const std::vector<double>& xs);
/// Sample standard deviation; 0 for fewer than two values.
double stddev(const std::vector<double>& xs);

}  // namespace metaxlr::train
