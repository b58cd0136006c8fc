#include "metaxlr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "metaxlr/errors.hpp"

namespace metaxlr {

void ParamVector::add(std::string name, Tensor value) {
  for (const auto& s : segments_)
    if (s.name == name) throw ConfigError("duplicate parameter segment '" + name + "'");
  segments_.push_back({std::move(name), std::move(value)});
}

const Tensor& ParamVector::operator[](std::string_view name) const {
  for (const auto& s : segments_)
    if (s.name == name) return s.value;
  throw IndexError("no parameter segment '" + std::string(name) + "'");
}

Tensor& ParamVector::operator[](std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this)[name]);
}

Eigen::Index ParamVector::total_len() const {
  Eigen::Index n = 0;
  for (const auto& s : segments_) n += s.value.size();
  return n;
}

bool ParamVector::same_structure(const ParamVector& other) const {
  if (segments_.size() != other.segments_.size()) return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& a = segments_[i];
    const auto& b = other.segments_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols())
      return false;
  }
  return true;
}

bool ParamVector::all_finite() const {
  return std::all_of(segments_.begin(), segments_.end(),
                     [](const Segment& s) { return s.value.allFinite(); });
}

Eigen::VectorXd ParamVector::flatten() const {
  Eigen::VectorXd flat(total_len());
  Eigen::Index offset = 0;
  for (const auto& s : segments_) {
    flat.segment(offset, s.value.size()) = s.value.reshaped<Eigen::RowMajor>();
    offset += s.value.size();
  }
  return flat;
}

ParamVector ParamVector::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) const {
  if (flat.size() != total_len()) throw ShapeError("unflatten: length mismatch");
  ParamVector out;
  Eigen::Index offset = 0;
  for (const auto& s : segments_) {
    Tensor t = flat.segment(offset, s.value.size()).reshaped<Eigen::RowMajor>(s.value.rows(),
                                                                             s.value.cols());
    out.segments_.push_back({s.name, std::move(t)});
    offset += s.value.size();
  }
  return out;
}

ParamVector ParamVector::zeros_like() const {
  ParamVector out;
  for (const auto& s : segments_)
    out.segments_.push_back({s.name, Tensor::Zero(s.value.rows(), s.value.cols())});
  return out;
}

double ParamVector::squared_norm() const {
  double total = 0.0;
  for (const auto& s : segments_) total += s.value.squaredNorm();
  return total;
}

namespace {
void require_same(const ParamVector& a, const ParamVector& b, const char* op) {
  if (!a.same_structure(b)) throw ShapeError(std::string(op) + ": parameter structures differ");
}
}  // namespace

ParamVector& ParamVector::operator+=(const ParamVector& rhs) {
  require_same(*this, rhs, "operator+=");
  for (std::size_t i = 0; i < segments_.size(); ++i) segments_[i].value += rhs.segments_[i].value;
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& rhs) {
  require_same(*this, rhs, "operator-=");
  for (std::size_t i = 0; i < segments_.size(); ++i) segments_[i].value -= rhs.segments_[i].value;
  return *this;
}

ParamVector& ParamVector::operator*=(double s) {
  for (auto& seg : segments_) seg.value *= s;
  return *this;
}

ParamVector operator+(ParamVector lhs, const ParamVector& rhs) { return lhs += rhs; }
ParamVector operator-(ParamVector lhs, const ParamVector& rhs) { return lhs -= rhs; }
ParamVector operator*(double s, ParamVector v) { return v *= s; }

ParamVector axpy(double a, const ParamVector& x, ParamVector y) {
  require_same(x, y, "axpy");
  for (std::size_t i = 0; i < y.num_segments(); ++i) y.segment(i).value += a * x.segment(i).value;
  return y;
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same(a, b, "dot");
  double total = 0.0;
  for (std::size_t i = 0; i < a.num_segments(); ++i)
    total += a.segment(i).value.cwiseProduct(b.segment(i).value).sum();
  return total;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols())
    throw ShapeError("affine: incompatible shapes");
  Tensor out = x * w;
  out.rowwise() += b.row(0);
  return out;
}

Tensor tanh(const Tensor& x) { return x.array().tanh().matrix(); }

Tensor softmax(const Tensor& logits) {
  Tensor out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, int ignore_index) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
    throw ShapeError("softmax_cross_entropy: label count differs from logit rows");
  double total = 0.0;
  long counted = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int label = labels[r];
    if (label == ignore_index) continue;
    if (label < 0 || label >= logits.cols())
      throw IndexError("softmax_cross_entropy: label " + std::to_string(label) + " out of range");
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    total += lse - logits(r, label);
    ++counted;
  }
  if (counted == 0) throw DegenerateBatchError("softmax_cross_entropy: every label is ignored");
  return total / static_cast<double>(counted);
}

}  // namespace metaxlr
