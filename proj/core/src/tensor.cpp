#include "aipgame/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aipgame {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

std::size_t element_count(const Shape& shape) {
  require(!shape.empty(), "Tensor: shape must have at least one extent");
  std::size_t n = 1;
  for (std::size_t extent : shape) {
    require(extent > 0, "Tensor: zero extent");
    n *= extent;
  }
  return n;
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_.assign(element_count(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(element_count(shape_) == data_.size(), "Tensor: data length does not match shape");
  ensure_finite();
}

double& Tensor::at(std::size_t row, std::size_t col, std::size_t channel) {
  ImageDims d = image_dims(*this);
  if (row >= d.height || col >= d.width || channel >= d.channels)
    throw std::out_of_range("Tensor::at: index out of range");
  return data_[(row * d.width + col) * d.channels + channel];
}

double Tensor::at(std::size_t row, std::size_t col, std::size_t channel) const {
  return const_cast<Tensor*>(this)->at(row, col, channel);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require(same_shape(other), "Tensor: shape mismatch in addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  ensure_finite();
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require(same_shape(other), "Tensor: shape mismatch in subtraction");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  ensure_finite();
  return *this;
}

Tensor& Tensor::operator*=(double factor) {
  for (double& v : data_) v *= factor;
  ensure_finite();
  return *this;
}

void Tensor::ensure_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) throw std::runtime_error("Tensor: non-finite element");
}

Tensor operator+(Tensor lhs, const Tensor& rhs) { return lhs += rhs; }
Tensor operator-(Tensor lhs, const Tensor& rhs) { return lhs -= rhs; }
Tensor operator*(Tensor t, double factor) { return t *= factor; }

ImageDims image_dims(const Tensor& t) {
  const Shape& s = t.shape();
  if (s.size() == 2) return {s[0], s[1], 1};
  if (s.size() == 3) return {s[0], s[1], s[2]};
  throw std::invalid_argument("image_dims: expected a rank-2 or rank-3 tensor");
}

double dot(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(const Tensor& t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * t[i];
  return std::sqrt(acc);
}

Tensor l2_project(const Tensor& t, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("l2_project: eps must be positive");
  double norm = l2_norm(t);
  if (norm <= eps) return t;
  Tensor out = t;
  out *= eps / norm;  // norm > eps >= 0 so the quotient is finite
  return out;
}

Tensor clip_values(const Tensor& x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clip_values: lo must not exceed hi");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lo, hi);
  return out;
}

Tensor quantize(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(std::round(out[i]), 0.0, 255.0);
  return out;
}

Tensor resize_bilinear(const Tensor& x, std::size_t out_height, std::size_t out_width) {
  require(out_height > 0 && out_width > 0, "resize_bilinear: empty output shape");
  ImageDims d = image_dims(x);
  Shape out_shape = x.rank() == 2 ? Shape{out_height, out_width}
                                  : Shape{out_height, out_width, d.channels};
  Tensor out(std::move(out_shape));

  // Corner-aligned source coordinate for output index i along an axis of
  // input length n and output length m: i * (n-1) / (m-1); 0 when m == 1.
  auto source = [](std::size_t i, std::size_t n, std::size_t m) {
    return m == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(n - 1) /
                              static_cast<double>(m - 1);
  };

  for (std::size_t i = 0; i < out_height; ++i) {
    double sy = source(i, d.height, out_height);
    auto y0 = static_cast<std::size_t>(sy);
    std::size_t y1 = std::min(y0 + 1, d.height - 1);
    double fy = sy - static_cast<double>(y0);
    for (std::size_t j = 0; j < out_width; ++j) {
      double sx = source(j, d.width, out_width);
      auto x0 = static_cast<std::size_t>(sx);
      std::size_t x1 = std::min(x0 + 1, d.width - 1);
      double fx = sx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < d.channels; ++ch) {
        double top = (1.0 - fx) * x.at(y0, x0, ch) + fx * x.at(y0, x1, ch);
        double bottom = (1.0 - fx) * x.at(y1, x0, ch) + fx * x.at(y1, x1, ch);
        out[(i * out_width + j) * d.channels + ch] = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

Tensor resize_bilinear_adjoint(const Tensor& grad, std::size_t in_height, std::size_t in_width) {
  require(in_height > 0 && in_width > 0, "resize_bilinear_adjoint: empty input shape");
  ImageDims d = image_dims(grad);
  Shape in_shape = grad.rank() == 2 ? Shape{in_height, in_width}
                                    : Shape{in_height, in_width, d.channels};
  Tensor out(std::move(in_shape));

  auto source = [](std::size_t i, std::size_t n, std::size_t m) {
    return m == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(n - 1) /
                              static_cast<double>(m - 1);
  };

  for (std::size_t i = 0; i < d.height; ++i) {
    double sy = source(i, in_height, d.height);
    auto y0 = static_cast<std::size_t>(sy);
    std::size_t y1 = std::min(y0 + 1, in_height - 1);
    double fy = sy - static_cast<double>(y0);
    for (std::size_t j = 0; j < d.width; ++j) {
      double sx = source(j, in_width, d.width);
      auto x0 = static_cast<std::size_t>(sx);
      std::size_t x1 = std::min(x0 + 1, in_width - 1);
      double fx = sx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < d.channels; ++ch) {
        double g = grad.at(i, j, ch);
        out[(y0 * in_width + x0) * d.channels + ch] += (1.0 - fy) * (1.0 - fx) * g;
        out[(y0 * in_width + x1) * d.channels + ch] += (1.0 - fy) * fx * g;
        out[(y1 * in_width + x0) * d.channels + ch] += fy * (1.0 - fx) * g;
        out[(y1 * in_width + x1) * d.channels + ch] += fy * fx * g;
      }
    }
  }
  return out;
}

}  // namespace aipgame
