#include "metaxlr/autodiff.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "metaxlr/errors.hpp"

namespace metaxlr::ad {

const Tensor& Var::value() const { return tape->value(id); }

double Var::scalar() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ShapeError("Var::scalar: node is not 1 x 1");
  return v(0, 0);
}

// Leaves are not scanned here; the first op consuming a non-finite leaf throws.
Var Tape::variable(Tensor value) {
  nodes_.push_back({std::move(value), Tensor(), true, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), Tensor(), false, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> inputs,
                 Backward backward) {
  if (!value.allFinite()) throw NumericError(op, "non-finite output");
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape != this) throw Error(std::string(op) + ": input recorded on a different tape");
    needs = needs || nodes_[in.id].requires_grad;
  }
  nodes_.push_back({std::move(value), Tensor(), needs, needs ? std::move(backward) : nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor Tape::grad(int id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == 0) return Tensor::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Tensor& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Tensor::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape != this) throw Error("backward: root belongs to another tape");
  if (nodes_[root.id].value.size() != 1) throw ShapeError("backward: root must be 1 x 1");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad_ref(root.id)(0, 0) = 1.0;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, id);
  }
}

namespace {

// Accumulates `g` into input `in` when it participates in differentiation.
template <typename Expr>
void accumulate(Tape& tape, Var in, const Expr& g) {
  if (tape.requires_grad(in.id)) tape.grad_ref(in.id) += g;
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) throw ShapeError("matmul: inner dimensions differ");
  Tensor out = av * bv;
  return a.tape->record("matmul", std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.out_grad(self);
    accumulate(t, a, g * t.value(b.id).transpose());
    accumulate(t, b, t.value(a.id).transpose() * g);
  });
}

Var add_bias(Var x, Var b) {
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) throw ShapeError("add_bias: bias must be 1 x cols");
  Tensor out = xv;
  out.rowwise() += bv.row(0);
  return x.tape->record("add_bias", std::move(out), {x, b}, [x, b](Tape& t, int self) {
    const Tensor& g = t.out_grad(self);
    accumulate(t, x, g);
    accumulate(t, b, g.colwise().sum());
  });
}

Var affine(Var x, Var w, Var b) { return add_bias(matmul(x, w), b); }

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": operand shapes differ");
}
}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value() + b.value();
  return a.tape->record("add", std::move(out), {a, b}, [a, b](Tape& t, int self) {
    accumulate(t, a, t.out_grad(self));
    accumulate(t, b, t.out_grad(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value() - b.value();
  return a.tape->record("sub", std::move(out), {a, b}, [a, b](Tape& t, int self) {
    accumulate(t, a, t.out_grad(self));
    accumulate(t, b, -t.out_grad(self));
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value().cwiseProduct(b.value());
  return a.tape->record("mul", std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.out_grad(self);
    accumulate(t, a, g.cwiseProduct(t.value(b.id)));
    accumulate(t, b, g.cwiseProduct(t.value(a.id)));
  });
}

Var scale(Var a, double s) {
  Tensor out = s * a.value();
  return a.tape->record("scale", std::move(out), {a},
                        [a, s](Tape& t, int self) { accumulate(t, a, s * t.out_grad(self)); });
}

Var tanh(Var a) {
  Tensor out = metaxlr::tanh(a.value());
  return a.tape->record("tanh", std::move(out), {a}, [a](Tape& t, int self) {
    const Tensor& y = t.value(self);
    accumulate(t, a, t.out_grad(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var square(Var a) {
  Tensor out = a.value().array().square().matrix();
  return a.tape->record("square", std::move(out), {a}, [a](Tape& t, int self) {
    accumulate(t, a, 2.0 * t.out_grad(self).cwiseProduct(t.value(a.id)));
  });
}

Var sum(Var a) {
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->record("sum", std::move(out), {a}, [a](Tape& t, int self) {
    const Tensor& x = t.value(a.id);
    accumulate(t, a, Tensor::Constant(x.rows(), x.cols(), t.out_grad(self)(0, 0)));
  });
}

Var embedding(Var table, std::span<const int> ids) {
  const Tensor& tv = table.value();
  Tensor out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= tv.rows())
      throw IndexError("embedding: token id " + std::to_string(ids[r]) + " out of range");
    out.row(static_cast<Eigen::Index>(r)) = tv.row(ids[r]);
  }
  std::vector<int> rows(ids.begin(), ids.end());
  return table.tape->record("embedding", std::move(out), {table},
                            [table, rows = std::move(rows)](Tape& t, int self) {
                              if (!t.requires_grad(table.id)) return;
                              const Tensor& g = t.out_grad(self);
                              Tensor& acc = t.grad_ref(table.id);
                              for (std::size_t r = 0; r < rows.size(); ++r)
                                acc.row(rows[r]) += g.row(static_cast<Eigen::Index>(r));
                            });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels, int ignore_index) {
  const Tensor& lv = logits.value();
  Tensor out(1, 1);
  out(0, 0) = metaxlr::softmax_cross_entropy(lv, labels, ignore_index);
  std::vector<int> kept(labels.begin(), labels.end());
  long counted = 0;
  for (int l : kept) counted += (l != ignore_index);
  return logits.tape->record(
      "softmax_cross_entropy", std::move(out), {logits},
      [logits, kept = std::move(kept), counted, ignore_index](Tape& t, int self) {
        const Tensor& lv = t.value(logits.id);
        const double g = t.out_grad(self)(0, 0) / static_cast<double>(counted);
        Tensor probs = softmax(lv);
        for (Eigen::Index r = 0; r < lv.rows(); ++r) {
          if (kept[r] == ignore_index) {
            probs.row(r).setZero();
            continue;
          }
          probs(r, kept[r]) -= 1.0;
        }
        accumulate(t, logits, g * probs);
      });
}

namespace {

std::vector<Var> push(Tape& tape, const ParamVector& params, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(params.num_segments());
  for (const auto& s : params.segments())
    vars.push_back(trainable ? tape.variable(s.value) : tape.constant(s.value));
  return vars;
}

ParamVector collect(const Tape& tape, const ParamVector& like, const std::vector<Var>& vars) {
  ParamVector grads;
  for (std::size_t i = 0; i < vars.size(); ++i)
    grads.add(like.segment(i).name, tape.grad(vars[i].id));
  if (!grads.all_finite()) throw NumericError("backward", "non-finite gradient");
  return grads;
}

PairGradResult pair_grad(const PairLossFn& loss_fn, const ParamVector& theta,
                         const ParamVector& phi, bool wrt_theta) {
  Tape tape;
  const auto theta_vars = push(tape, theta, wrt_theta);
  const auto phi_vars = push(tape, phi, !wrt_theta);
  const Var loss = loss_fn(tape, theta_vars, phi_vars);
  tape.backward(loss);
  PairGradResult result;
  result.loss = loss.scalar();
  if (wrt_theta)
    result.theta_grads = collect(tape, theta, theta_vars);
  else
    result.phi_grads = collect(tape, phi, phi_vars);
  return result;
}

}  // namespace

GradResult grad(const LossFn& loss_fn, const ParamVector& params) {
  Tape tape;
  const auto vars = push(tape, params, true);
  const Var loss = loss_fn(tape, vars);
  tape.backward(loss);
  return {loss.scalar(), collect(tape, params, vars)};
}

PairGradResult grad_theta(const PairLossFn& loss_fn, const ParamVector& theta,
                          const ParamVector& phi) {
  return pair_grad(loss_fn, theta, phi, true);
}

PairGradResult grad_phi(const PairLossFn& loss_fn, const ParamVector& theta,
                        const ParamVector& phi) {
  return pair_grad(loss_fn, theta, phi, false);
}

ParamVector mixed_hvp(const PairLossFn& loss_fn, const ParamVector& theta, const ParamVector& phi,
                      const ParamVector& v, double epsilon_scale) {
  if (!v.same_structure(theta)) throw ShapeError("mixed_hvp: v must match theta's structure");
  const double norm = std::sqrt(v.squared_norm());
  if (norm == 0.0) return phi.zeros_like();
  const double eps = epsilon_scale / (norm + 1e-12);
  const ParamVector plus = grad_phi(loss_fn, axpy(eps, v, theta), phi).phi_grads;
  const ParamVector minus = grad_phi(loss_fn, axpy(-eps, v, theta), phi).phi_grads;
  return (1.0 / (2.0 * eps)) * (plus - minus);
}

}  // namespace metaxlr::ad
