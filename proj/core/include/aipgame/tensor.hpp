#pragma once

#include <cstddef>
#include <vector>

namespace aipgame {

using Shape = std::vector<std::size_t>;

/// Dense row-major tensor of doubles. Images are rank-3 (H, W, C); rank-2
/// tensors are accepted by the image routines and treated as single-channel.
/// Every public operation keeps elements finite (NaN/infinity throws).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);                      // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Image accessors; valid for rank-2 (channel 0 only) and rank-3 tensors.
  double& at(std::size_t row, std::size_t col, std::size_t channel = 0);
  double at(std::size_t row, std::size_t col, std::size_t channel = 0) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double factor);

  /// Throws std::runtime_error if any element is NaN or infinite.
  void ensure_finite() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor lhs, const Tensor& rhs);
Tensor operator-(Tensor lhs, const Tensor& rhs);
Tensor operator*(Tensor t, double factor);

struct ImageDims {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
};

/// Interprets a rank-2 or rank-3 tensor as an image; throws otherwise.
ImageDims image_dims(const Tensor& t);

double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& t);

/// Scales t down onto the L2 ball of radius eps; identity if already inside.
Tensor l2_project(const Tensor& t, double eps);

/// Elementwise clamp to [lo, hi].
Tensor clip_values(const Tensor& x, double lo, double hi);

/// Rounds to the nearest integer (halves away from zero), then clamps to
/// the valid pixel range [0, 255].
Tensor quantize(const Tensor& x);

/// Bilinear resize with corner alignment: input and output corners map onto
/// each other exactly, so resizing to the same shape is the identity.
Tensor resize_bilinear(const Tensor& x, std::size_t out_height, std::size_t out_width);

/// Adjoint of resize_bilinear for a fixed input shape: scatters an output-
/// sized cotangent back onto an (in_height, in_width)-sized tensor.
Tensor resize_bilinear_adjoint(const Tensor& grad, std::size_t in_height, std::size_t in_width);

}  // namespace aipgame
