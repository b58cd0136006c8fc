#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace metaxlr {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense 2-D row-major tensor. Vectors are 1 x n.
using Tensor = MatrixX<double>;
using IndexTensor = MatrixX<int>;

/// Label value excluded from the loss and from span extraction.
inline constexpr int kIgnoreIndex = -1;

/// Ordered, uniquely named parameter segments that flatten to one vector.
class ParamVector {
 public:
  struct Segment {
    std::string name;
    Tensor value;
  };

  ParamVector() = default;

  void add(std::string name, Tensor value);

  const Tensor& operator[](std::string_view name) const;
  Tensor& operator[](std::string_view name);
  const Segment& segment(std::size_t i) const { return segments_[i]; }
  Segment& segment(std::size_t i) { return segments_[i]; }

  std::size_t num_segments() const { return segments_.size(); }
  Eigen::Index total_len() const;
  std::span<const Segment> segments() const { return segments_; }

  bool same_structure(const ParamVector& other) const;
  bool all_finite() const;

  Eigen::VectorXd flatten() const;
  /// Structure of *this, data from `flat`.
  ParamVector unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) const;
  ParamVector zeros_like() const;

  double squared_norm() const;

  ParamVector& operator+=(const ParamVector& rhs);
  ParamVector& operator-=(const ParamVector& rhs);
  ParamVector& operator*=(double s);

 private:
  std::vector<Segment> segments_;
};

ParamVector operator+(ParamVector lhs, const ParamVector& rhs);
ParamVector operator-(ParamVector lhs, const ParamVector& rhs);
ParamVector operator*(double s, ParamVector v);

/// y + a * x
ParamVector axpy(double a, const ParamVector& x, ParamVector y);
double dot(const ParamVector& a, const ParamVector& b);

// Value-level primitives. The differentiable versions live in autodiff.hpp.

/// x W + b, with b (1 x n) broadcast across rows.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor tanh(const Tensor& x);
/// Row-wise softmax.
Tensor softmax(const Tensor& logits);
/// Mean negative log-likelihood over rows whose label != ignore_index.
double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                             int ignore_index = kIgnoreIndex);

}  // namespace metaxlr
