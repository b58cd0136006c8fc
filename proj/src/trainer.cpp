#include "metaxlr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "metaxlr/autodiff.hpp"
#include "metaxlr/errors.hpp"
#include "metaxlr/labels.hpp"
#include "metaxlr/parallel.hpp"
#include "metaxlr/random.hpp"

namespace metaxlr::train {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::single_source: return "single_source";
    case Strategy::uniform: return "uniform";
    case Strategy::exp3: return "exp3";
  }
  return "?";
}

std::string to_string(RewardMode m) {
  return m == RewardMode::loss_as_reward ? "loss_as_reward" : "loss_as_penalty";
}

std::string to_string(MetaGradMode m) {
  return m == MetaGradMode::unrolled ? "unrolled" : "first_order";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "single_source") return Strategy::single_source;
  if (s == "uniform") return Strategy::uniform;
  if (s == "exp3") return Strategy::exp3;
  throw ConfigError("unknown strategy '" + s + "'");
}

RewardMode parse_reward_mode(const std::string& s) {
  if (s == "loss_as_reward") return RewardMode::loss_as_reward;
  if (s == "loss_as_penalty") return RewardMode::loss_as_penalty;
  throw ConfigError("unknown reward_mode '" + s + "'");
}

MetaGradMode parse_meta_grad_mode(const std::string& s) {
  if (s == "unrolled") return MetaGradMode::unrolled;
  if (s == "first_order") return MetaGradMode::first_order;
  throw ConfigError("unknown meta_grad_mode '" + s + "'");
}

void validate(const TrainConfig& c) {
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) throw ConfigError("alpha must be > 0");
  if (!(c.beta > 0.0) || !std::isfinite(c.beta)) throw ConfigError("beta must be > 0");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (c.steps < 1) throw ConfigError("steps must be >= 1");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(c.reward_cap > 0.0) || !std::isfinite(c.reward_cap))
    throw ConfigError("reward_cap must be > 0");
  if (!(c.epsilon_scale > 0.0)) throw ConfigError("epsilon_scale must be > 0");
  if (!(c.phi_init_scale >= 0.0)) throw ConfigError("phi_init_scale must be >= 0");
  model::validate(c.model);
  if (c.model.num_labels != kNumLabels)
    throw ConfigError("model.num_labels must be " + std::to_string(kNumLabels) +
                      " (O plus B/I for PER and LOC)");
  if (c.cluster.target_size < 1 || c.cluster.source_size < 1 || c.cluster.test_size < 1)
    throw ConfigError("cluster sizes must be >= 1");
  bool known = false;
  for (const auto& p : taskgen::cluster_presets()) known = known || p == c.cluster.preset;
  if (!known) throw ConfigError("unknown cluster preset '" + c.cluster.preset + "'");
}

taskgen::ClusterSpec resolve_cluster(const TrainConfig& config) {
  taskgen::ClusterSpec cluster = taskgen::make_cluster(config.cluster.preset, config.seed);
  cluster.target_size = config.cluster.target_size;
  cluster.source_size = config.cluster.source_size;
  return cluster;
}

RunData make_run_data(const TrainConfig& config, const taskgen::ClusterSpec& cluster) {
  taskgen::validate(cluster);
  const int vocab = config.model.vocab_size;
  RunData data;
  data.target_train = taskgen::generate_corpus(cluster.target, cluster.target_size,
                                               mix_seed(config.seed, 100), vocab);
  data.target_test = taskgen::generate_corpus(cluster.target, config.cluster.test_size,
                                              mix_seed(config.seed, 300), vocab);
  for (int i = 0; i < cluster.num_sources(); ++i)
    data.sources.push_back(taskgen::generate_corpus(cluster.sources[i], cluster.source_size,
                                                    mix_seed(config.seed, 200 + i), vocab));
  return data;
}

ParamVector meta_gradient(const ParamVector& theta, const ParamVector& phi,
                          const model::Batch& source, const model::Batch& target, double alpha,
                          int insert_layer, MetaGradMode mode, double epsilon_scale) {
  if (mode == MetaGradMode::first_order) return phi.zeros_like();
  const auto source_fn = model::source_loss_fn(source, insert_layer);
  const auto inner = ad::grad_theta(source_fn, theta, phi);
  const ParamVector updated = axpy(-alpha, inner.theta_grads, theta);
  const auto outer = ad::grad(model::target_loss_fn(target), updated);
  return -alpha * ad::mixed_hvp(source_fn, theta, phi, outer.grads, epsilon_scale);
}

StepOutcome bilevel_step(const ParamVector& theta, const ParamVector& phi,
                         const model::Batch& source, const model::Batch& target,
                         const TrainConfig& config) {
  const int insert = config.model.insert_layer;
  const auto source_fn = model::source_loss_fn(source, insert);

  StepOutcome out;
  const auto inner = ad::grad_theta(source_fn, theta, phi);
  out.source_loss = inner.loss;
  out.theta = axpy(-config.alpha, inner.theta_grads, theta);

  const auto outer = ad::grad(model::target_loss_fn(target), out.theta);
  out.meta_loss = outer.loss;

  if (config.meta_grad_mode == MetaGradMode::unrolled)
    out.phi_grad =
        -config.alpha * ad::mixed_hvp(source_fn, theta, phi, outer.grads, config.epsilon_scale);
  else
    out.phi_grad = phi.zeros_like();
  out.phi = axpy(-config.beta, out.phi_grad, phi);
  return out;
}

eval::F1Report evaluate(const model::TaggerParams& theta, const taskgen::Corpus& corpus) {
  std::vector<const taskgen::Sentence*> all;
  for (const auto& s : corpus.sentences) all.push_back(&s);
  const model::Batch batch = taskgen::make_batch(all, corpus.language_id);
  const IndexTensor pred = model::predict(batch, theta);
  return eval::span_f1(eval::rows(batch.labels), eval::rows(pred));
}

namespace {

std::vector<double> fixed_probs(Strategy strategy, int k) {
  std::vector<double> p(k, 0.0);
  if (strategy == Strategy::uniform)
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(k));
  else
    p[0] = 1.0;
  return p;
}

}  // namespace

RunReport run(const TrainConfig& config, const taskgen::ClusterSpec& cluster) {
  validate(config);
  return run(config, cluster, make_run_data(config, cluster));
}

RunReport run(const TrainConfig& config, const taskgen::ClusterSpec& cluster, const RunData& data) {
  validate(config);
  taskgen::validate(cluster);
  const auto started = std::chrono::steady_clock::now();
  const int k = cluster.num_sources();
  if (static_cast<int>(data.sources.size()) != k) throw ConfigError("run data / cluster mismatch");

  Rng init_rng(mix_seed(config.seed, 1));
  Rng language_rng(mix_seed(config.seed, 2));
  Rng batch_rng(mix_seed(config.seed, 3));

  ParamVector theta = model::init_tagger(config.model, init_rng).to_params();
  ParamVector phi =
      model::init_transform(config.model, init_rng, config.phi_init_scale).to_params();

  std::vector<taskgen::BatchSampler> samplers;
  for (const auto& corpus : data.sources) samplers.emplace_back(corpus, config.batch_size);
  const taskgen::BatchSampler target_sampler(data.target_train, config.batch_size);

  const bandit::BanditConfig bandit_config{k, config.gamma, config.reward_cap};
  std::optional<bandit::BanditState<double>> state;
  if (config.strategy == Strategy::exp3) state = bandit::init_state<double>(bandit_config);

  RunReport report;
  report.config = config;
  report.num_sources = k;
  report.trace.reserve(static_cast<std::size_t>(config.steps));

  for (long t = 0; t < config.steps; ++t) {
    StepRecord rec;
    rec.step = t;
    if (state) {
      const auto dist = bandit::compute_distribution(*state, bandit_config);
      rec.probs.assign(dist.probs.data(), dist.probs.data() + k);
      rec.language = bandit::sample_arm(dist, language_rng);
    } else {
      rec.probs = fixed_probs(config.strategy, k);
      bandit::ArmDistribution<double> dist{
          Eigen::Map<const Eigen::VectorXd>(rec.probs.data(), k)};
      const int drawn = bandit::sample_arm(dist, language_rng);
      rec.language = config.strategy == Strategy::uniform ? drawn : 0;
    }

    const model::Batch source = samplers[rec.language].next(batch_rng);
    const model::Batch target = target_sampler.next(batch_rng);

    try {
      StepOutcome step = bilevel_step(theta, phi, source, target, config);
      theta = std::move(step.theta);
      phi = std::move(step.phi);
      rec.source_loss = step.source_loss;
      rec.meta_loss = step.meta_loss;
      if (state) {
        const double raw = config.reward_mode == RewardMode::loss_as_reward
                               ? step.meta_loss
                               : config.reward_cap - std::min(step.meta_loss, config.reward_cap);
        auto [next, obs] =
            bandit::update(*state, bandit_config, rec.language, raw, rec.probs[rec.language]);
        state = std::move(next);
        rec.reward = obs.importance_weighted;
      }
    } catch (const Error& e) {
      throw TrainingError(t, rec.language, e.what());
    }
    report.trace.push_back(std::move(rec));
  }

  report.result = evaluate(model::TaggerParams::from_params(theta), data.target_test);
  report.theta = std::move(theta);
  report.phi = std::move(phi);
  report.bandit = std::move(state);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

RunReport run_metaxlr(const TrainConfig& config, const taskgen::ClusterSpec& cluster) {
  if (config.strategy != Strategy::exp3) throw ConfigError("run_metaxlr requires strategy exp3");
  return run(config, cluster);
}

RunReport run_baseline(const TrainConfig& config, const taskgen::ClusterSpec& cluster) {
  if (config.strategy == Strategy::exp3)
    throw ConfigError("run_baseline requires strategy single_source or uniform");
  return run(config, cluster);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<AblationRow> run_reward_ablation(const TrainConfig& base,
                                             const taskgen::ClusterSpec& cluster,
                                             const std::vector<std::uint64_t>& seeds, int jobs) {
  if (seeds.size() < 5) throw ConfigError("reward ablation needs at least 5 seeds");
  validate(base);

  struct Mode {
    const char* name;
    Strategy strategy;
    RewardMode reward;
  };
  const Mode modes[] = {{"loss_as_penalty", Strategy::exp3, RewardMode::loss_as_penalty},
                        {"uniform", Strategy::uniform, RewardMode::loss_as_reward},
                        {"loss_as_reward", Strategy::exp3, RewardMode::loss_as_reward}};

  std::vector<AblationRow> rows(3);
  for (int m = 0; m < 3; ++m) {
    rows[m].mode = modes[m].name;
    rows[m].seeds = seeds;
    rows[m].f1.assign(seeds.size(), 0.0);
  }
  parallel_for(3 * seeds.size(), jobs, [&](std::size_t job) {
    const std::size_t m = job / seeds.size();
    const std::size_t s = job % seeds.size();
    TrainConfig config = base;
    config.seed = seeds[s];
    config.strategy = modes[m].strategy;
    config.reward_mode = modes[m].reward;
    rows[m].f1[s] = run(config, cluster).result.f1;
  });
  for (auto& row : rows) {
    row.mean = mean(row.f1);
    row.stddev = stddev(row.f1);
  }
  return rows;
}

}  // namespace metaxlr::train
