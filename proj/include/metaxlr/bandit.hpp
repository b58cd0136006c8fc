#pragma once

// EXP3 adversarial bandit used to pick the source language at every step.
//
// Arms are zero-indexed 0..K-1. Raw rewards (meta losses) are clipped to
// `reward_cap` and scaled into [0, 1] before importance weighting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "metaxlr/errors.hpp"
#include "metaxlr/random.hpp"

namespace metaxlr::bandit {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct BanditConfig {
  int num_arms = 1;
  double gamma = 0.01;
  double reward_cap = 5.0;
};

inline void validate(const BanditConfig& config) {
  if (config.num_arms < 1) throw ConfigError("bandit: num_arms must be >= 1");
  if (!(config.gamma > 0.0 && config.gamma <= 1.0))
    throw ConfigError("bandit: gamma must lie in (0, 1]");
  if (!(config.reward_cap > 0.0) || !std::isfinite(config.reward_cap))
    throw ConfigError("bandit: reward_cap must be positive and finite");
}

template <typename Scalar = double>
struct BanditState {
  Vector<Scalar> weights;
  long step = 0;
};

template <typename Scalar = double>
struct ArmDistribution {
  Vector<Scalar> probs;
};

template <typename Scalar = double>
struct RewardObservation {
  int arm = 0;
  Scalar raw_reward = 0;
  Scalar scaled_reward = 0;
  Scalar importance_weighted = 0;
};

/// Weights above this are rescaled by the max weight. Sampling is unaffected
/// because the distribution is invariant to a common scale factor.
inline constexpr double kRenormalizeThreshold = 1e100;

template <typename Scalar = double>
BanditState<Scalar> init_state(const BanditConfig& config) {
  validate(config);
  return {Vector<Scalar>::Ones(config.num_arms), 0};
}

/// p(i) = (1 - gamma) * w(i) / sum_j w(j) + gamma / K
template <typename Scalar>
ArmDistribution<Scalar> compute_distribution(const BanditState<Scalar>& state,
                                             const BanditConfig& config) {
  if (state.weights.size() != config.num_arms)
    throw ShapeError("bandit: weight vector length differs from num_arms");
  if (!state.weights.allFinite()) throw NumericError("compute_distribution", "non-finite weight");
  const Scalar gamma = static_cast<Scalar>(config.gamma);
  const Scalar floor = gamma / static_cast<Scalar>(config.num_arms);
  const Scalar total = state.weights.sum();
  ArmDistribution<Scalar> dist;
  dist.probs = ((Scalar(1) - gamma) / total) * state.weights;
  dist.probs.array() += floor;
  return dist;
}

/// Inverse-CDF draw over arms in index order.
template <typename Scalar>
int sample_arm(const ArmDistribution<Scalar>& dist, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  const auto last = dist.probs.size() - 1;
  for (Eigen::Index i = 0; i < last; ++i) {
    cumulative += static_cast<double>(dist.probs[i]);
    if (u < cumulative) return static_cast<int>(i);
  }
  return static_cast<int>(last);
}

template <typename Scalar>
std::pair<BanditState<Scalar>, RewardObservation<Scalar>> update(
    const BanditState<Scalar>& state, const BanditConfig& config, int arm, Scalar raw_reward,
    Scalar arm_prob) {
  if (arm < 0 || arm >= config.num_arms)
    throw IndexError("bandit: arm " + std::to_string(arm) + " out of range");
  if (!std::isfinite(static_cast<double>(raw_reward)) || raw_reward < 0)
    throw RewardError("bandit: raw reward must be finite and non-negative");
  if (!(arm_prob > 0 && arm_prob <= 1)) throw RewardError("bandit: arm probability outside (0, 1]");

  const Scalar cap = static_cast<Scalar>(config.reward_cap);
  RewardObservation<Scalar> obs;
  obs.arm = arm;
  obs.raw_reward = raw_reward;
  obs.scaled_reward = std::min(raw_reward, cap) / cap;
  obs.importance_weighted = obs.scaled_reward / arm_prob;

  BanditState<Scalar> next = state;
  next.weights[arm] *= std::exp(static_cast<Scalar>(config.gamma) * obs.importance_weighted /
                                static_cast<Scalar>(config.num_arms));
  ++next.step;
  const Scalar top = next.weights.maxCoeff();
  if (top > static_cast<Scalar>(kRenormalizeThreshold)) next.weights /= top;
  return {std::move(next), obs};
}

/// Index of the largest weight; ties go to the lowest index.
template <typename Scalar>
int leading_arm(const BanditState<Scalar>& state) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < state.weights.size(); ++i)
    if (state.weights[i] > state.weights[best]) best = i;
  return static_cast<int>(best);
}

}  // namespace metaxlr::bandit
