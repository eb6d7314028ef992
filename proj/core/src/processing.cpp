#include "aipgame/processing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aipgame {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

long clamp_index(long i, long n) { return std::clamp(i, 0l, n - 1); }

// Integer offset radius for an axis of length n at the configured fraction.
long offset_radius(std::size_t n, double fraction) {
  return static_cast<long>(std::floor(static_cast<double>(n) * fraction));
}

std::vector<double> blur_kernel(int k) {
  require(k >= 1 && k % 2 == 1, "blur: kernel size must be odd and positive");
  std::vector<double> w(static_cast<std::size_t>(k));
  if (k == 1) {
    w[0] = 1.0;
    return w;
  }
  double sigma = static_cast<double>(k) / 3.0;
  int c = k / 2;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    double d = static_cast<double>(i - c);
    w[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= total;
  return w;
}

enum class Axis { kRows, kCols };

// One separable convolution pass with replicated edges.
Tensor blur_pass(const Tensor& x, const std::vector<double>& w, Axis axis) {
  ImageDims d = image_dims(x);
  Tensor out = Tensor::zeros_like(x);
  int k = static_cast<int>(w.size());
  int c = k / 2;
  long h = static_cast<long>(d.height), wd = static_cast<long>(d.width);
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < wd; ++j)
      for (std::size_t ch = 0; ch < d.channels; ++ch) {
        double acc = 0.0;
        for (int t = 0; t < k; ++t) {
          long src_i = axis == Axis::kRows ? clamp_index(i + t - c, h) : i;
          long src_j = axis == Axis::kCols ? clamp_index(j + t - c, wd) : j;
          acc += w[static_cast<std::size_t>(t)] *
                 x.at(static_cast<std::size_t>(src_i), static_cast<std::size_t>(src_j), ch);
        }
        out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), ch) = acc;
      }
  return out;
}

// Adjoint of blur_pass: scatter instead of gather.
Tensor blur_pass_adjoint(const Tensor& grad, const std::vector<double>& w, Axis axis) {
  ImageDims d = image_dims(grad);
  Tensor out = Tensor::zeros_like(grad);
  int k = static_cast<int>(w.size());
  int c = k / 2;
  long h = static_cast<long>(d.height), wd = static_cast<long>(d.width);
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < wd; ++j)
      for (std::size_t ch = 0; ch < d.channels; ++ch) {
        double g = grad.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), ch);
        for (int t = 0; t < k; ++t) {
          long src_i = axis == Axis::kRows ? clamp_index(i + t - c, h) : i;
          long src_j = axis == Axis::kCols ? clamp_index(j + t - c, wd) : j;
          out.at(static_cast<std::size_t>(src_i), static_cast<std::size_t>(src_j), ch) +=
              w[static_cast<std::size_t>(t)] * g;
        }
      }
  return out;
}

struct CropWindow {
  std::size_t row_start, col_start, rows, cols;
};

CropWindow crop_window(const ImageDims& d, long oy, long ox) {
  auto ay = static_cast<std::size_t>(std::abs(oy));
  auto ax = static_cast<std::size_t>(std::abs(ox));
  require(ay < d.height && ax < d.width, "crop: offset eats the whole image");
  return {oy > 0 ? static_cast<std::size_t>(oy) : 0,
          ox > 0 ? static_cast<std::size_t>(ox) : 0, d.height - ay, d.width - ax};
}

}  // namespace

ProcessingKind processing_kind_from_token(std::string_view token) {
  if (token == "none") return ProcessingKind::kNoOp;
  if (token == "proc") return ProcessingKind::kProc;
  if (token == "t") return ProcessingKind::kTranslate;
  if (token == "n") return ProcessingKind::kNoise;
  if (token == "b") return ProcessingKind::kBlur;
  if (token == "c") return ProcessingKind::kCrop;
  if (token == "tnbc") return ProcessingKind::kTnbc;
  throw std::invalid_argument("unknown recognizer strategy token: " + std::string(token));
}

std::string_view processing_token(ProcessingKind kind) {
  switch (kind) {
    case ProcessingKind::kNoOp: return "none";
    case ProcessingKind::kProc: return "proc";
    case ProcessingKind::kTranslate: return "t";
    case ProcessingKind::kNoise: return "n";
    case ProcessingKind::kBlur: return "b";
    case ProcessingKind::kCrop: return "c";
    case ProcessingKind::kTnbc: return "tnbc";
  }
  throw std::invalid_argument("processing_token: unknown kind");
}

Tensor apply_proc(const Tensor& x, std::size_t out_height, std::size_t out_width) {
  return quantize(resize_bilinear(x, out_height, out_width));
}

Tensor apply_proc(const Tensor& x) {
  ImageDims d = image_dims(x);
  return apply_proc(x, d.height, d.width);
}

Tensor translate_fixed(const Tensor& x, long dy, long dx) {
  ImageDims d = image_dims(x);
  Tensor out = Tensor::zeros_like(x);
  long h = static_cast<long>(d.height), w = static_cast<long>(d.width);
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) {
      auto si = static_cast<std::size_t>(clamp_index(i - dy, h));
      auto sj = static_cast<std::size_t>(clamp_index(j - dx, w));
      for (std::size_t ch = 0; ch < d.channels; ++ch)
        out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), ch) = x.at(si, sj, ch);
    }
  return out;
}

Tensor translate_fixed_adjoint(const Tensor& grad, long dy, long dx) {
  ImageDims d = image_dims(grad);
  Tensor out = Tensor::zeros_like(grad);
  long h = static_cast<long>(d.height), w = static_cast<long>(d.width);
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) {
      auto si = static_cast<std::size_t>(clamp_index(i - dy, h));
      auto sj = static_cast<std::size_t>(clamp_index(j - dx, w));
      for (std::size_t ch = 0; ch < d.channels; ++ch)
        out.at(si, sj, ch) += grad.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), ch);
    }
  return out;
}

Tensor translate(const Tensor& x, const ProcessingConfig& config, SeededRng& rng) {
  ImageDims d = image_dims(x);
  long ry = offset_radius(d.height, config.offset_fraction);
  long rx = offset_radius(d.width, config.offset_fraction);
  long dy = rng.uniform_int(-ry, ry);
  long dx = rng.uniform_int(-rx, rx);
  return translate_fixed(x, dy, dx);
}

Tensor add_noise(const Tensor& x, const ProcessingConfig& config, SeededRng& rng) {
  require(config.noise_sigma >= 0.0, "add_noise: negative sigma");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(out[i] + rng.normal(0.0, config.noise_sigma), 0.0, 255.0);
  return out;
}

Tensor blur_fixed(const Tensor& x, int k) {
  std::vector<double> w = blur_kernel(k);
  if (k == 1) return x;
  return blur_pass(blur_pass(x, w, Axis::kCols), w, Axis::kRows);
}

Tensor blur_fixed_adjoint(const Tensor& grad, int k) {
  std::vector<double> w = blur_kernel(k);
  if (k == 1) return grad;
  // forward is rows(cols(x)), so the adjoint is cols^T(rows^T(g))
  return blur_pass_adjoint(blur_pass_adjoint(grad, w, Axis::kRows), w, Axis::kCols);
}

Tensor gaussian_blur(const Tensor& x, const ProcessingConfig& config, SeededRng& rng) {
  require(!config.blur_widths.empty(), "gaussian_blur: no kernel sizes configured");
  auto pick = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(config.blur_widths.size()) - 1));
  return blur_fixed(x, config.blur_widths[pick]);
}

Tensor crop_resize_fixed(const Tensor& x, long oy, long ox) {
  ImageDims d = image_dims(x);
  CropWindow win = crop_window(d, oy, ox);
  Shape window_shape = x.rank() == 2 ? Shape{win.rows, win.cols}
                                     : Shape{win.rows, win.cols, d.channels};
  Tensor window(std::move(window_shape));
  for (std::size_t i = 0; i < win.rows; ++i)
    for (std::size_t j = 0; j < win.cols; ++j)
      for (std::size_t ch = 0; ch < d.channels; ++ch)
        window.at(i, j, ch) = x.at(win.row_start + i, win.col_start + j, ch);
  return resize_bilinear(window, d.height, d.width);
}

Tensor crop_resize_fixed_adjoint(const Tensor& grad, long oy, long ox) {
  ImageDims d = image_dims(grad);
  CropWindow win = crop_window(d, oy, ox);
  Tensor window_grad = resize_bilinear_adjoint(grad, win.rows, win.cols);
  Tensor out = Tensor::zeros_like(grad);
  for (std::size_t i = 0; i < win.rows; ++i)
    for (std::size_t j = 0; j < win.cols; ++j)
      for (std::size_t ch = 0; ch < d.channels; ++ch)
        out.at(win.row_start + i, win.col_start + j, ch) = window_grad.at(i, j, ch);
  return out;
}

Tensor crop_resize(const Tensor& x, const ProcessingConfig& config, SeededRng& rng) {
  ImageDims d = image_dims(x);
  long ry = offset_radius(d.height, config.offset_fraction);
  long rx = offset_radius(d.width, config.offset_fraction);
  long oy = rng.uniform_int(-ry, ry);
  long ox = rng.uniform_int(-rx, rx);
  return crop_resize_fixed(x, oy, ox);
}

Tensor eye_bar(const Tensor& x, std::size_t thickness, double gray) {
  ImageDims d = image_dims(x);
  Tensor out = x;
  std::size_t anchor = d.height / 3;
  std::size_t first = anchor >= thickness / 2 ? anchor - thickness / 2 : 0;
  std::size_t last = std::min(d.height, anchor + (thickness + 1) / 2);
  for (std::size_t i = first; i < last; ++i)
    for (std::size_t j = 0; j < d.width; ++j)
      for (std::size_t ch = 0; ch < d.channels; ++ch) out.at(i, j, ch) = gray;
  return out;
}

Tensor apply_strategy(const ProcessingStrategy& strategy, const Tensor& x, SeededRng& rng) {
  switch (strategy.kind) {
    case ProcessingKind::kNoOp:
      return x;
    case ProcessingKind::kProc:
      return apply_proc(x);
    case ProcessingKind::kTranslate:
      return translate(apply_proc(x), strategy.config, rng);
    case ProcessingKind::kNoise:
      return add_noise(apply_proc(x), strategy.config, rng);
    case ProcessingKind::kBlur:
      return gaussian_blur(apply_proc(x), strategy.config, rng);
    case ProcessingKind::kCrop:
      return crop_resize(apply_proc(x), strategy.config, rng);
    case ProcessingKind::kTnbc:
      throw std::invalid_argument("apply_strategy: tnbc is an ensemble-only strategy");
  }
  throw std::invalid_argument("apply_strategy: unknown strategy");
}

std::vector<double> ensemble_scores(const Model& model, const Tensor& x,
                                    const ProcessingStrategy& strategy, SeededRng& rng) {
  switch (strategy.kind) {
    case ProcessingKind::kNoOp:
      return softmax(scores(model, x));
    case ProcessingKind::kProc:
      return softmax(scores(model, apply_proc(x)));
    case ProcessingKind::kTnbc: {
      Tensor base = apply_proc(x);
      std::vector<Tensor> members;
      members.reserve(5);
      {
        SeededRng r = rng.child(0);
        members.push_back(translate(base, strategy.config, r));
      }
      {
        SeededRng r = rng.child(1);
        members.push_back(add_noise(base, strategy.config, r));
      }
      {
        SeededRng r = rng.child(2);
        members.push_back(gaussian_blur(base, strategy.config, r));
      }
      {
        SeededRng r = rng.child(3);
        members.push_back(crop_resize(base, strategy.config, r));
      }
      members.push_back(base);
      std::vector<double> mean(model.class_count, 0.0);
      for (const Tensor& member : members) {
        std::vector<double> p = softmax(scores(model, member));
        for (std::size_t c = 0; c < p.size(); ++c) mean[c] += p[c];
      }
      for (double& v : mean) v /= static_cast<double>(members.size());
      return mean;
    }
    default: {
      require(strategy.config.ensemble_samples > 0, "ensemble_scores: no samples");
      Tensor base = apply_proc(x);
      ProcessingStrategy raw = strategy;  // strategy on top of the shared Proc
      std::vector<double> mean(model.class_count, 0.0);
      auto samples = static_cast<std::size_t>(strategy.config.ensemble_samples);
      for (std::size_t s = 0; s < samples; ++s) {
        SeededRng r = rng.child(s);
        Tensor member;
        switch (strategy.kind) {
          case ProcessingKind::kTranslate:
            member = translate(base, raw.config, r);
            break;
          case ProcessingKind::kNoise:
            member = add_noise(base, raw.config, r);
            break;
          case ProcessingKind::kBlur:
            member = gaussian_blur(base, raw.config, r);
            break;
          default:
            member = crop_resize(base, raw.config, r);
            break;
        }
        std::vector<double> p = softmax(scores(model, member));
        for (std::size_t c = 0; c < p.size(); ++c) mean[c] += p[c];
      }
      for (double& v : mean) v /= static_cast<double>(samples);
      return mean;
    }
  }
}

std::size_t ensemble_predict(const Model& model, const Tensor& x,
                             const ProcessingStrategy& strategy, SeededRng& rng) {
  std::vector<double> p = ensemble_scores(model, x, strategy, rng);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace aipgame
