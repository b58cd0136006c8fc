#pragma once

// Independent oracles shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "metaxlr/autodiff.hpp"
#include "metaxlr/bandit.hpp"
#include "metaxlr/random.hpp"
#include "metaxlr/taskgen.hpp"
#include "metaxlr/tensor.hpp"
#include "metaxlr/trainer.hpp"

namespace test_support {

struct FdCheck {
  double max_rel = 0.0;
  long checked = 0;
  bool ok(double tol) const { return max_rel <= tol; }
};

/// Central differences (step h) of f at p against `analytic`, relative error
/// per coordinate on coordinates with |g| > floor.
inline FdCheck finite_difference(const std::function<double(const metaxlr::ParamVector&)>& f,
                                 const metaxlr::ParamVector& p,
                                 const metaxlr::ParamVector& analytic, double h = 1e-5,
                                 double floor = 1e-8) {
  const Eigen::VectorXd x = p.flatten();
  const Eigen::VectorXd g = analytic.flatten();
  FdCheck out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (f(p.unflatten(xp)) - f(p.unflatten(xm))) / (2 * h);
    if (std::abs(g[i]) <= floor) continue;
    out.max_rel = std::max(out.max_rel, std::abs(fd - g[i]) / std::abs(g[i]));
    ++out.checked;
  }
  return out;
}

inline metaxlr::Tensor random_tensor(metaxlr::Rng& rng, int rows, int cols, double lo = -1,
                                     double hi = 1) {
  metaxlr::Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = metaxlr::uniform_real(rng, lo, hi);
  return t;
}

struct BanditSim {
  int leading = 0;
  double late_best_freq = 0.0;
};

/// EXP3 on Bernoulli arms with rewards in {0, 1}; reward cap 1.
inline BanditSim bernoulli_bandit(const std::vector<double>& means, double gamma, int steps,
                                  std::uint64_t seed, int late_window = 1000) {
  using namespace metaxlr;
  const int k = static_cast<int>(means.size());
  const bandit::BanditConfig cfg{k, gamma, 1.0};
  auto state = bandit::init_state(cfg);
  Rng pick(mix_seed(seed, 1)), pay(mix_seed(seed, 2));
  const int best = static_cast<int>(std::max_element(means.begin(), means.end()) - means.begin());
  long late_best = 0;
  for (int t = 0; t < steps; ++t) {
    const auto dist = bandit::compute_distribution(state, cfg);
    const int arm = bandit::sample_arm(dist, pick);
    const double reward = uniform01(pay) < means[arm] ? 1.0 : 0.0;
    state = bandit::update(state, cfg, arm, reward, dist.probs[arm]).first;
    if (t >= steps - late_window) late_best += arm == best;
  }
  return {bandit::leading_arm(state), static_cast<double>(late_best) / late_window};
}

/// Norm-relative error of the unrolled meta-gradient against central
/// differences (step h) of phi -> L_t(theta - alpha * grad_theta L_s(theta, phi))
/// on a small random fixture.
inline double meta_gradient_error(std::uint64_t seed, double h = 1e-5) {
  using namespace metaxlr;
  model::ModelConfig mc;
  mc.vocab_size = 40;
  mc.hidden = 6;
  mc.bottleneck = 3;
  mc.insert_layer = static_cast<int>(seed % 3);
  Rng rng(mix_seed(seed, 17));
  const auto theta = model::init_tagger(mc, rng).to_params();
  const auto phi = model::init_transform(mc, rng, 0.3).to_params();
  const double alpha = uniform_real(rng, 0.1, 1.0);
  const auto corpus = taskgen::generate_corpus({0, 0.0, 0.0, seed}, 12, seed, mc.vocab_size);
  const taskgen::BatchSampler sampler(corpus, 3);
  const auto src = sampler.next(rng);
  const auto tgt = sampler.next(rng);

  const auto g = train::meta_gradient(theta, phi, src, tgt, alpha, mc.insert_layer,
                                      train::MetaGradMode::unrolled)
                     .flatten();
  auto composite = [&](const Eigen::VectorXd& flat_phi) {
    const auto inner =
        ad::grad_theta(model::source_loss_fn(src, mc.insert_layer), theta, phi.unflatten(flat_phi));
    const auto updated = axpy(-alpha, inner.theta_grads, theta);
    return model::forward_target(tgt, model::TaggerParams::from_params(updated));
  };
  const Eigen::VectorXd x = phi.flatten();
  Eigen::VectorXd fd(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    fd[i] = (composite(xp) - composite(xm)) / (2 * h);
  }
  return (g - fd).norm() / fd.norm();
}

}  // namespace test_support
