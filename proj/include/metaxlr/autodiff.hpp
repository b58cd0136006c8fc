#pragma once

// Tape-based reverse-mode differentiation over dense 2-D tensors.
//
// Nodes are recorded in evaluation order, so a reverse sweep over the tape is
// a valid topological order. Every forward op checks its output for
// non-finite values and throws NumericError naming the op.

#include <functional>
#include <span>
#include <vector>

#include "metaxlr/tensor.hpp"

namespace metaxlr::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  double scalar() const;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int)>;

  Var variable(Tensor value);
  Var constant(Tensor value);

  /// Records the output of an op. `inputs` decide whether it needs a gradient.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, Backward backward);

  /// Seeds d(root)/d(root) = 1 and sweeps the tape backwards. Root must be 1 x 1.
  void backward(Var root);

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Zero tensor of the right shape if nothing flowed into `id`.
  Tensor grad(int id) const;
  /// Accumulator for gradient flowing into `id`; allocated on first touch.
  Tensor& grad_ref(int id);
  const Tensor& out_grad(int id) const { return nodes_[id].grad; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
/// x + b with b (1 x n) broadcast across rows.
Var add_bias(Var x, Var b);
Var affine(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var tanh(Var a);
Var square(Var a);
Var sum(Var a);
/// Rows of `table` selected by `ids`.
Var embedding(Var table, std::span<const int> ids);
Var softmax_cross_entropy(Var logits, std::span<const int> labels, int ignore_index = kIgnoreIndex);

struct GradResult {
  double loss = 0.0;
  ParamVector grads;
};

using LossFn = std::function<Var(Tape&, std::span<const Var>)>;
using PairLossFn = std::function<Var(Tape&, std::span<const Var> theta, std::span<const Var> phi)>;

/// Exact reverse-mode gradient of `loss_fn` at `params`.
GradResult grad(const LossFn& loss_fn, const ParamVector& params);

/// Gradients of a two-argument loss with respect to both arguments.
struct PairGradResult {
  double loss = 0.0;
  ParamVector theta_grads;
  ParamVector phi_grads;
};
PairGradResult grad_theta(const PairLossFn& loss_fn, const ParamVector& theta,
                          const ParamVector& phi);
PairGradResult grad_phi(const PairLossFn& loss_fn, const ParamVector& theta,
                        const ParamVector& phi);

/// d/dphi (grad_theta L(theta, phi) . v), by central differences of the
/// phi-gradient along v with step epsilon_scale / (|v| + 1e-12).
/// Returns an exact zero vector when v == 0.
ParamVector mixed_hvp(const PairLossFn& loss_fn, const ParamVector& theta, const ParamVector& phi,
                      const ParamVector& v, double epsilon_scale = 1e-3);

}  // namespace metaxlr::ad
