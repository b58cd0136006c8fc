// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   acceptance            all criteria
//   acceptance 1 3 4      a subset

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "metaxlr/autodiff.hpp"
#include "metaxlr/bandit.hpp"
#include "metaxlr/config.hpp"
#include "metaxlr/evaluator.hpp"
#include "metaxlr/model.hpp"
#include "metaxlr/suite.hpp"
#include "metaxlr/trainer.hpp"
#include "support.hpp"

using namespace metaxlr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string source_path(const std::string& rel) { return std::string(METAXLR_SOURCE_DIR) + "/" + rel; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome bandit_math() {
  using namespace bandit;
  bool ok = true;
  double worst = 0.0;
  auto close = [&](double got, double want) {
    worst = std::max(worst, std::abs(got - want));
    ok = ok && std::abs(got - want) <= 1e-12;
  };

  BanditState<double> s{Eigen::Vector2d(3, 1), 0};
  auto d = compute_distribution(s, {2, 0.2, 5.0});
  close(d.probs[0], 0.7);
  close(d.probs[1], 0.3);
  d = compute_distribution(BanditState<double>{Eigen::Vector2d(1, 1), 0}, {2, 1.0, 5.0});
  close(d.probs[0], 0.5);
  d = compute_distribution(BanditState<double>{Eigen::Vector3d(2, 2, 2), 0}, {3, 0.01, 5.0});
  for (int i = 0; i < 3; ++i) close(d.probs[i], 1.0 / 3);
  auto [next, obs] = update(BanditState<double>{Eigen::Vector2d(1, 1), 0}, {2, 0.3, 0.5}, 0, 0.5, 0.5);
  close(obs.scaled_reward, 1.0);
  close(obs.importance_weighted, 2.0);
  close(next.weights[0], 1.3498588075760032);
  close(next.weights[1], 1.0);
  auto zero = update(BanditState<double>{Eigen::Vector2d(1, 1), 0}, {2, 0.3, 5.0}, 1, 0.0, 0.5);
  close(zero.first.weights[1], 1.0);
  close(update(next, {2, 0.3, 5.0}, 1, 50.0, 0.5).second.scaled_reward, 1.0);
  ok = ok && init_state({8, 0.01, 5.0}).weights == Eigen::VectorXd::Ones(8);

  Rng rng(20240601);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(uniform_index(rng, 16));
    const double gamma = uniform_real(rng, 1e-4, 1.0);
    Eigen::VectorXd w(k);
    for (int i = 0; i < k; ++i) w[i] = std::exp(uniform_real(rng, -40, 40));
    const BanditConfig c{k, gamma, 5.0};
    const auto p = compute_distribution(BanditState<double>{w, 0}, c).probs;
    if (std::abs(p.sum() - 1.0) > 1e-12) ++violations;
    if (p.minCoeff() < gamma / k - 1e-15) ++violations;
    const double scale = std::exp(uniform_real(rng, -30, 30));
    const auto ps = compute_distribution(BanditState<double>{w * scale, 0}, c).probs;
    if ((ps - p).cwiseAbs().maxCoeff() > 1e-12) ++violations;
    const auto pu = compute_distribution(BanditState<double>{w, 0}, BanditConfig{k, 1.0, 5.0}).probs;
    for (int i = 0; i < k; ++i)
      if (pu[i] != 1.0 / k) ++violations;
  }
  ok = ok && violations == 0;
  return {ok, "max hand-value error " + fmt("%.2e", worst) + ", property violations " +
                  std::to_string(violations) + "/1000 states"};
}

// 2 ---------------------------------------------------------------------------

Outcome bandit_behavior() {
  double freq = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    freq += test_support::bernoulli_bandit({0.2, 0.5, 0.8}, 0.1, 10000, seed).late_best_freq;
  freq /= 20;
  return {freq > 0.6, "best-arm frequency over final 1000 steps " + fmt("%.4f", freq) + " (need > 0.6)"};
}

// 3 ---------------------------------------------------------------------------

double primitive_fd_error() {
  Rng rng(77);
  ParamVector p;
  p.add("x", test_support::random_tensor(rng, 3, 4));
  p.add("w", test_support::random_tensor(rng, 4, 5));
  p.add("b", test_support::random_tensor(rng, 1, 5));
  p.add("y", test_support::random_tensor(rng, 3, 4));
  p.add("table", test_support::random_tensor(rng, 6, 4));
  const std::vector<int> labels{2, -1, 4};
  const std::vector<int> ids{5, 0, 5, 2};
  auto sq = [](ad::Var v) { return ad::sum(ad::square(v)); };
  const std::vector<ad::LossFn> fns = {
      [&](ad::Tape&, std::span<const ad::Var> v) { return sq(ad::matmul(v[0], v[1])); },
      [&](ad::Tape&, std::span<const ad::Var> v) { return sq(ad::add_bias(ad::matmul(v[0], v[1]), v[2])); },
      [&](ad::Tape&, std::span<const ad::Var> v) { return sq(ad::affine(v[0], v[1], v[2])); },
      [&](ad::Tape&, std::span<const ad::Var> v) { return sq(ad::add(v[0], v[3])); },
      [&](ad::Tape&, std::span<const ad::Var> v) { return sq(ad::sub(v[0], v[3])); },
      [&](ad::Tape&, std::span<const ad::Var> v) { return sq(ad::mul(v[0], v[3])); },
      [&](ad::Tape&, std::span<const ad::Var> v) { return sq(ad::scale(v[0], 0.7)); },
      [&](ad::Tape&, std::span<const ad::Var> v) { return ad::sum(ad::tanh(ad::affine(v[0], v[1], v[2]))); },
      [&](ad::Tape&, std::span<const ad::Var> v) { return sq(ad::embedding(v[4], ids)); },
      [&](ad::Tape&, std::span<const ad::Var> v) {
        return ad::softmax_cross_entropy(ad::affine(v[0], v[1], v[2]), labels);
      },
  };
  double worst = 0.0;
  for (const auto& fn : fns) {
    const auto g = ad::grad(fn, p);
    auto value = [&](const ParamVector& q) {
      ad::Tape tape;
      std::vector<ad::Var> vars;
      for (const auto& s : q.segments()) vars.push_back(tape.constant(s.value));
      return fn(tape, vars).scalar();
    };
    worst = std::max(worst, test_support::finite_difference(value, p, g.grads).max_rel);
  }
  return worst;
}

double model_fd_error() {
  model::ModelConfig mc;
  mc.vocab_size = 30;
  mc.hidden = 6;
  mc.bottleneck = 3;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed + 500);
    const auto theta = model::init_tagger(mc, rng);
    const auto phi = model::init_transform(mc, rng, 0.3);
    const auto corpus = taskgen::generate_corpus({0, 0.0, 0.0, seed}, 6, seed, mc.vocab_size);
    const auto batch = taskgen::BatchSampler(corpus, 2).next(rng);
    const auto tp = theta.to_params(), pp = phi.to_params();

    const auto gt = ad::grad(model::target_loss_fn(batch), tp);
    worst = std::max(worst, test_support::finite_difference(
                                [&](const ParamVector& q) {
                                  return model::forward_target(batch, model::TaggerParams::from_params(q));
                                },
                                tp, gt.grads)
                                .max_rel);
    const auto src = model::source_loss_fn(batch, mc.insert_layer);
    const auto gs = ad::grad_theta(src, tp, pp);
    worst = std::max(worst, test_support::finite_difference(
                                [&](const ParamVector& q) {
                                  return model::forward_source(batch, model::TaggerParams::from_params(q),
                                                               phi, mc.insert_layer);
                                },
                                tp, gs.theta_grads)
                                .max_rel);
    const auto gp = ad::grad_phi(src, tp, pp);
    worst = std::max(worst, test_support::finite_difference(
                                [&](const ParamVector& q) {
                                  return model::forward_source(batch, theta,
                                                               model::TransformParams::from_params(q),
                                                               mc.insert_layer);
                                },
                                pp, gp.phi_grads)
                                .max_rel);
  }
  return worst;
}

Outcome gradient_oracles() {
  const double prim = primitive_fd_error();
  const double mod = model_fd_error();
  double meta = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    meta = std::max(meta, test_support::meta_gradient_error(seed));
  const bool ok = prim <= 1e-4 && mod <= 1e-4 && meta <= 1e-2;
  return {ok, "primitives " + fmt("%.2e", prim) + ", model paths " + fmt("%.2e", mod) +
                  " (need <= 1e-4); meta-gradient worst of 20 " + fmt("%.2e", meta) + " (need <= 1e-2)"};
}

// 4 ---------------------------------------------------------------------------

eval::SpanSet brute_force_spans(const std::vector<int>& labels) {
  // Every (start, end, type) interval, kept when it is exactly a maximal run
  // that the lenient BIO rules would produce.
  eval::SpanSet out;
  const int n = static_cast<int>(labels.size());
  for (int s = 0; s < n; ++s)
    for (int e = s + 1; e <= n; ++e)
      for (int type = 0; type < 2; ++type) {
        const int b = 1 + 2 * type, i = 2 + 2 * type;
        const bool opens = labels[s] == b || (labels[s] == i && (s == 0 || (labels[s - 1] != b && labels[s - 1] != i)));
        if (!opens) continue;
        bool body = true;
        for (int k = s + 1; k < e; ++k) body = body && labels[k] == i;
        const bool closed = e == n || labels[e] != i;
        if (body && closed) out.insert({0, s, e, type});
      }
  return out;
}

Outcome evaluator_oracle() {
  long checked = 0, mismatches = 0;
  for (int len = 0; len <= 4; ++len) {
    int total = 1;
    for (int i = 0; i < len; ++i) total *= 5;
    for (int code = 0; code < total; ++code) {
      std::vector<int> labels(len);
      for (int i = 0, c = code; i < len; ++i, c /= 5) labels[i] = c % 5;
      mismatches += eval::extract_spans(labels) != brute_force_spans(labels);
      ++checked;
    }
  }
  bool hand = true;
  const std::vector<std::vector<int>> gold{{1, 0, 3, 0}}, pred{{0, 0, 3, 1}};
  const auto r = eval::span_f1(gold, pred);
  hand = hand && r.tp == 1 && r.fp == 1 && r.fn == 1 && r.precision == 0.5 && r.recall == 0.5 && r.f1 == 0.5;
  hand = hand && eval::span_f1(gold, gold).f1 == 1.0;
  hand = hand && eval::span_f1(gold, {{0, 0, 0, 0}}).f1 == 0.0;
  hand = hand && eval::extract_spans(std::vector<int>{1, 2, 0}) == eval::SpanSet{{0, 0, 2, 0}};
  hand = hand && eval::extract_spans(std::vector<int>{1, 4}) == eval::SpanSet{{0, 0, 1, 0}, {0, 1, 2, 1}};
  return {mismatches == 0 && hand, std::to_string(checked) + " sequences, " + std::to_string(mismatches) +
                                       " mismatches; hand counts " + (hand ? "exact" : "WRONG")};
}

// 5 ---------------------------------------------------------------------------

Outcome directional_strategies() {
  const auto suite = config::parse_suite(config::read_file(source_path("configs/suite_default.ini")));
  std::map<std::string, std::vector<double>> f1;
  std::vector<std::uint64_t> seeds;
  for (const auto& s : suite.settings) {
    if (s.name != "single_far" && s.name != "uniform" && s.name != "exp3") continue;
    seeds = s.seeds;
    for (auto seed : s.seeds) {
      auto cfg = s.config;
      cfg.seed = seed;
      f1[s.name].push_back(train::run(cfg, train::resolve_cluster(cfg)).result.f1);
    }
  }
  const double far = train::mean(f1["single_far"]);
  const double uni = train::mean(f1["uniform"]);
  const double exp3 = train::mean(f1["exp3"]);
  int wins = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) wins += f1["exp3"][i] > f1["uniform"][i];
  const bool c1 = uni - far >= 0.02;
  const bool c2 = exp3 >= uni - 0.005;
  const bool c3 = wins >= 6;
  std::ostringstream d;
  d << "mean F1 single_far " << fmt("%.4f", far) << ", uniform " << fmt("%.4f", uni) << ", exp3 "
    << fmt("%.4f", exp3) << "; uniform - single_far " << fmt("%+.2f", 100 * (uni - far))
    << " pts (need >= 2) " << (c1 ? "ok" : "FAIL") << "; exp3 - uniform " << fmt("%+.2f", 100 * (exp3 - uni))
    << " pts (need >= -0.5) " << (c2 ? "ok" : "FAIL") << "; exp3 wins " << wins << "/" << seeds.size()
    << " (need >= 6) " << (c3 ? "ok" : "FAIL");
  return {c1 && c2 && c3, d.str()};
}

// 6 ---------------------------------------------------------------------------

Outcome reward_ablation() {
  const auto file = config::parse_key_values(config::read_file(source_path("configs/ablation.ini")));
  const auto base = config::train_config_from(file);
  const auto rows = train::run_reward_ablation(base, train::resolve_cluster(base), config::suite_seeds(file));
  const double penalty = rows[0].mean, uniform = rows[1].mean, reward = rows[2].mean;
  return {reward >= penalty, "mean F1 loss_as_penalty " + fmt("%.4f", penalty) + ", uniform " +
                                 fmt("%.4f", uniform) + ", loss_as_reward " + fmt("%.4f", reward)};
}

// 7 ---------------------------------------------------------------------------

Outcome suite_determinism() {
  const fs::path root = fs::temp_directory_path() / "metaxlr-acceptance-suite";
  fs::remove_all(root);
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / std::to_string(i);
    const std::string cmd = std::string("\"") + METAXLR_CLI + "\" suite --config \"" +
                            source_path("configs/suite_default.ini") + "\" --out \"" + out.string() +
                            "\" > \"" + (root / ("log" + std::to_string(i))).string() + "\" 2>&1";
    fs::create_directories(root);
    const int status = std::system(cmd.c_str());
    if (status != 0) return {false, "suite run " + std::to_string(i + 1) + " exited with status " + std::to_string(status)};
    csv[i] = config::read_file((out / "summary.csv").string());
  }
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  fs::remove_all(root);
  return {same, same ? "summary.csv identical across two runs (" + std::to_string(csv[0].size()) + " bytes)"
                     : std::string("summary.csv differs between runs")};
}

// 8 ---------------------------------------------------------------------------

Outcome full_scale_config() {
  const auto cfg = config::parse_train_config(config::read_file(source_path("configs/full_scale.ini")));
  const bool values = cfg.gamma == 0.01 && cfg.steps == 12500 && cfg.batch_size == 4;
  const auto report = train::run(cfg, train::resolve_cluster(cfg));
  const bool ran = static_cast<long>(report.trace.size()) == cfg.steps;
  return {values && ran, "gamma " + fmt("%g", cfg.gamma) + ", steps " + std::to_string(cfg.steps) +
                             ", batch_size " + std::to_string(cfg.batch_size) + "; full run completed " +
                             std::to_string(report.trace.size()) + " steps, f1 " + fmt("%.4f", report.result.f1)};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 = none
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "bandit arithmetic and distribution properties", 1.0, bandit_math},
      {2, "bandit concentrates on the best Bernoulli arm", 5.0, bandit_behavior},
      {3, "gradient and meta-gradient oracles", 30.0, gradient_oracles},
      {4, "span extraction and F1 oracles", 0.0, evaluator_oracle},
      {5, "strategy ordering on the heterogeneous cluster", 600.0, directional_strategies},
      {6, "meta loss as reward vs as penalty", 0.0, reward_ablation},
      {7, "suite output is byte-identical across runs", 0.0, suite_determinism},
      {8, "full-scale configuration loads and runs", 0.0, full_scale_config},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit == 0.0 || secs < c.time_limit;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s  criterion %d: %s -- %s; %.2fs", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    if (c.time_limit > 0.0) std::printf(" (limit %.0fs%s)", c.time_limit, in_time ? "" : ", EXCEEDED");
    std::printf("\n");
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
