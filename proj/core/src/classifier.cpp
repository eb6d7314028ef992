#include "aipgame/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "aipgame/image_io.hpp"

namespace aipgame {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

// Forward pass on a raw input vector; writes C scores and, for one-hidden
// models, the H pre-activations (needed by the backward pass).
void scores_impl(const Model& m, const double* x, double* f, double* z1 = nullptr) {
  if (m.kind == ModelKind::kLinear) {
    for (std::size_t c = 0; c < m.class_count; ++c) {
      const double* row = &m.w1[c * m.input_dim];
      double acc = m.b1[c];
      for (std::size_t d = 0; d < m.input_dim; ++d) acc += row[d] * x[d];
      f[c] = acc;
    }
    return;
  }
  std::vector<double> local;
  double* z = z1;
  if (!z) {
    local.resize(m.hidden_dim);
    z = local.data();
  }
  for (std::size_t h = 0; h < m.hidden_dim; ++h) {
    const double* row = &m.w1[h * m.input_dim];
    double acc = m.b1[h];
    for (std::size_t d = 0; d < m.input_dim; ++d) acc += row[d] * x[d];
    z[h] = acc;
  }
  for (std::size_t c = 0; c < m.class_count; ++c) {
    const double* row = &m.w2[c * m.hidden_dim];
    double acc = m.b2[c];
    for (std::size_t h = 0; h < m.hidden_dim; ++h)
      acc += row[h] * (z[h] > 0.0 ? z[h] : 0.0);
    f[c] = acc;
  }
}

// Pulls a score-space cotangent a (size C) back to the input (size D).
// z1 must be the pre-activations from the forward pass for one-hidden
// models; the rectifier uses subgradient 0 at exactly 0.
void backward_impl(const Model& m, const double* a, const double* z1, double* gx) {
  std::fill(gx, gx + m.input_dim, 0.0);
  if (m.kind == ModelKind::kLinear) {
    for (std::size_t c = 0; c < m.class_count; ++c) {
      if (a[c] == 0.0) continue;
      const double* row = &m.w1[c * m.input_dim];
      for (std::size_t d = 0; d < m.input_dim; ++d) gx[d] += a[c] * row[d];
    }
    return;
  }
  std::vector<double> dz1(m.hidden_dim, 0.0);
  for (std::size_t c = 0; c < m.class_count; ++c) {
    if (a[c] == 0.0) continue;
    const double* row = &m.w2[c * m.hidden_dim];
    for (std::size_t h = 0; h < m.hidden_dim; ++h) dz1[h] += a[c] * row[h];
  }
  for (std::size_t h = 0; h < m.hidden_dim; ++h) {
    if (z1[h] <= 0.0 || dz1[h] == 0.0) continue;
    const double* row = &m.w1[h * m.input_dim];
    for (std::size_t d = 0; d < m.input_dim; ++d) gx[d] += dz1[h] * row[d];
  }
}

double log_sum_exp(const std::vector<double>& f) {
  double peak = *std::max_element(f.begin(), f.end());
  double acc = 0.0;
  for (double v : f) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

void average_grad_channels(Tensor& grad) {
  if (grad.rank() != 3) return;
  ImageDims d = image_dims(grad);
  if (d.channels < 2) return;
  for (std::size_t i = 0; i < d.height; ++i)
    for (std::size_t j = 0; j < d.width; ++j) {
      double mean = 0.0;
      for (std::size_t ch = 0; ch < d.channels; ++ch) mean += grad.at(i, j, ch);
      mean /= static_cast<double>(d.channels);
      for (std::size_t ch = 0; ch < d.channels; ++ch) grad.at(i, j, ch) = mean;
    }
}

// Index and input-gradient direction of the nearest linearized boundary:
// argmin over y' != y of |f[y'] - f[y]| / ||grad(f[y'] - f[y])||.
struct BoundaryPick {
  std::size_t target = 0;
  std::vector<double> direction;  // grad(f[target] - f[y])
};

BoundaryPick nearest_boundary(const Model& m, const double* x, const double* z1,
                              const std::vector<double>& f, std::size_t y) {
  std::vector<double> gy(m.input_dim);
  std::vector<double> a(m.class_count, 0.0);
  a[y] = 1.0;
  backward_impl(m, a.data(), z1, gy.data());

  BoundaryPick best;
  double best_distance = 0.0;
  bool found = false;
  std::vector<double> gc(m.input_dim), w(m.input_dim);
  for (std::size_t c = 0; c < m.class_count; ++c) {
    if (c == y) continue;
    std::fill(a.begin(), a.end(), 0.0);
    a[c] = 1.0;
    backward_impl(m, a.data(), z1, gc.data());
    double norm_sq = 0.0;
    for (std::size_t d = 0; d < m.input_dim; ++d) {
      w[d] = gc[d] - gy[d];
      norm_sq += w[d] * w[d];
    }
    if (norm_sq <= 1e-24) continue;  // boundary parallel to every direction
    double distance = std::abs(f[c] - f[y]) / std::sqrt(norm_sq);
    if (!found || distance < best_distance) {
      found = true;
      best_distance = distance;
      best.target = c;
      best.direction = w;
    }
  }
  if (!found)
    throw std::runtime_error("nearest_boundary: degenerate geometry, all class "
                             "score gradients coincide");
  return best;
}

}  // namespace

void Model::validate() const {
  require(input_dim > 0 && class_count > 0, "Model: empty dimensions");
  if (kind == ModelKind::kLinear) {
    require(w1.size() == class_count * input_dim, "Model: w1 size mismatch");
    require(b1.size() == class_count, "Model: b1 size mismatch");
    require(w2.empty() && b2.empty(), "Model: linear model with second layer");
  } else {
    require(hidden_dim > 0, "Model: one-hidden model needs hidden units");
    require(w1.size() == hidden_dim * input_dim, "Model: w1 size mismatch");
    require(b1.size() == hidden_dim, "Model: b1 size mismatch");
    require(w2.size() == class_count * hidden_dim, "Model: w2 size mismatch");
    require(b2.size() == class_count, "Model: b2 size mismatch");
  }
}

std::vector<double> scores(const Model& model, const Tensor& x) {
  model.validate();
  require(x.size() == model.input_dim, "scores: input size does not match model");
  std::vector<double> f(model.class_count);
  scores_impl(model, x.data(), f.data());
  return f;
}

std::vector<double> softmax(const std::vector<double>& f) {
  require(!f.empty(), "softmax: empty score vector");
  double peak = *std::max_element(f.begin(), f.end());
  std::vector<double> p(f.size());
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    p[i] = std::exp(f[i] - peak);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t predict(const Model& model, const Tensor& x) {
  std::vector<double> f = scores(model, x);
  return static_cast<std::size_t>(
      std::max_element(f.begin(), f.end()) - f.begin());  // first max wins ties
}

LossGrad loss_grad(const Model& model, const Tensor& x, LossSpec loss, std::size_t y,
                   const GradOptions& options) {
  model.validate();
  require(x.size() == model.input_dim, "loss_grad: input size does not match model");
  require(y < model.class_count, "loss_grad: label out of range");

  std::vector<double> f(model.class_count);
  std::vector<double> z1(model.kind == ModelKind::kOneHidden ? model.hidden_dim : 0);
  scores_impl(model, x.data(), f.data(), z1.empty() ? nullptr : z1.data());

  LossGrad result;
  result.target = y;
  result.grad = Tensor::zeros_like(x);
  std::vector<double> a(model.class_count, 0.0);

  switch (loss) {
    case LossSpec::kSoftmaxLog: {
      result.value = log_sum_exp(f) - f[y];
      std::vector<double> p = softmax(f);
      for (std::size_t c = 0; c < model.class_count; ++c) a[c] = p[c];
      a[y] -= 1.0;
      backward_impl(model, a.data(), z1.data(), result.grad.data());
      break;
    }
    case LossSpec::kScore: {
      result.value = -f[y];
      a[y] = -1.0;
      backward_impl(model, a.data(), z1.data(), result.grad.data());
      break;
    }
    case LossSpec::kMargin: {
      require(model.class_count >= 2, "loss_grad: margin loss needs two classes");
      std::size_t best = y == 0 ? 1 : 0;
      for (std::size_t c = 0; c < model.class_count; ++c)
        if (c != y && f[c] > f[best]) best = c;
      result.target = best;
      result.value = f[best] - f[y];
      a[best] = 1.0;
      a[y] -= 1.0;
      backward_impl(model, a.data(), z1.data(), result.grad.data());
      break;
    }
    case LossSpec::kDeepFoolLinearized: {
      require(model.class_count >= 2, "loss_grad: boundary loss needs two classes");
      BoundaryPick pick = nearest_boundary(model, x.data(), z1.data(), f, y);
      result.target = pick.target;
      result.value = f[pick.target] - f[y];
      std::copy(pick.direction.begin(), pick.direction.end(), result.grad.data());
      break;
    }
  }

  if (options.average_channels) average_grad_channels(result.grad);
  result.grad.ensure_finite();
  return result;
}

double loss_value(const Model& model, const Tensor& x, LossSpec loss, std::size_t y) {
  if (loss == LossSpec::kDeepFoolLinearized) return loss_grad(model, x, loss, y).value;
  model.validate();
  require(x.size() == model.input_dim, "loss_value: input size does not match model");
  require(y < model.class_count, "loss_value: label out of range");
  std::vector<double> f(model.class_count);
  scores_impl(model, x.data(), f.data());
  switch (loss) {
    case LossSpec::kSoftmaxLog:
      return log_sum_exp(f) - f[y];
    case LossSpec::kScore:
      return -f[y];
    case LossSpec::kMargin: {
      require(model.class_count >= 2, "loss_value: margin loss needs two classes");
      std::size_t best = y == 0 ? 1 : 0;
      for (std::size_t c = 0; c < model.class_count; ++c)
        if (c != y && f[c] > f[best]) best = c;
      return f[best] - f[y];
    }
    default:
      throw std::logic_error("loss_value: unreachable");
  }
}

Tensor input_grad(const Model& model, const Tensor& x, LossSpec loss, std::size_t y,
                  const GradOptions& options) {
  return loss_grad(model, x, loss, y, options).grad;
}

Tensor score_input_grad(const Model& model, const Tensor& x, std::size_t c) {
  model.validate();
  require(x.size() == model.input_dim, "score_input_grad: input size mismatch");
  require(c < model.class_count, "score_input_grad: class out of range");
  std::vector<double> f(model.class_count);
  std::vector<double> z1(model.kind == ModelKind::kOneHidden ? model.hidden_dim : 0);
  scores_impl(model, x.data(), f.data(), z1.empty() ? nullptr : z1.data());
  std::vector<double> a(model.class_count, 0.0);
  a[c] = 1.0;
  Tensor grad = Tensor::zeros_like(x);
  backward_impl(model, a.data(), z1.data(), grad.data());
  return grad;
}

void Dataset::validate() const {
  require(!images.empty(), "Dataset: empty");
  require(images.size() == labels.size(), "Dataset: image/label count mismatch");
  require(class_count >= 2, "Dataset: need at least two classes");
  const Shape& shape = images.front().shape();
  for (const Tensor& image : images)
    require(image.shape() == shape, "Dataset: inconsistent sample shapes");
  for (std::size_t label : labels)
    require(label < class_count, "Dataset: label out of range");
}

namespace {

// Training runs on inputs scaled by 1/255 and centered on the training
// mean for conditioning; both are folded back into the first-layer
// parameters afterwards so the returned model consumes raw [0, 255]
// tensors.
constexpr double kPixelScale = 1.0 / 255.0;

// b1 absorbs an input shift: w·(x − mu) + b equals w·x + (b − w·mu).
// Folding the mean in before the descent loop and back out after it keeps
// the zero-epoch result bitwise equal to the seeded initialization.
void shift_bias(Model& m, const std::vector<double>& mu, double sign) {
  std::size_t rows = m.kind == ModelKind::kLinear ? m.class_count : m.hidden_dim;
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0.0;
    const double* row = &m.w1[r * m.input_dim];
    for (std::size_t d = 0; d < m.input_dim; ++d) dot += row[d] * mu[d];
    m.b1[r] += sign * dot;
  }
}

Model internal_initial_model(const ModelSpec& spec, std::size_t input_dim,
                             std::size_t class_count, const TrainConfig& config) {
  require(input_dim > 0 && class_count >= 2, "initial_model: bad dimensions");
  Model m;
  m.kind = spec.kind;
  m.input_dim = input_dim;
  m.hidden_dim = spec.kind == ModelKind::kOneHidden ? spec.hidden_dim : 0;
  m.class_count = class_count;
  SeededRng rng = SeededRng(config.seed).child(token_hash("init"));
  if (spec.kind == ModelKind::kLinear) {
    double std1 = config.init_scale / std::sqrt(static_cast<double>(input_dim));
    m.w1.resize(class_count * input_dim);
    for (double& v : m.w1) v = rng.normal(0.0, std1);
    m.b1.assign(class_count, 0.0);
  } else {
    require(spec.hidden_dim > 0, "initial_model: hidden_dim must be positive");
    double std1 = config.init_scale / std::sqrt(static_cast<double>(input_dim));
    double std2 = config.init_scale / std::sqrt(static_cast<double>(spec.hidden_dim));
    m.w1.resize(spec.hidden_dim * input_dim);
    for (double& v : m.w1) v = rng.normal(0.0, std1);
    m.b1.assign(spec.hidden_dim, 0.0);
    m.w2.resize(class_count * spec.hidden_dim);
    for (double& v : m.w2) v = rng.normal(0.0, std2);
    m.b2.assign(class_count, 0.0);
  }
  m.validate();
  return m;
}

Model fold_pixel_scale(Model m) {
  for (double& v : m.w1) v *= kPixelScale;
  return m;
}

double mean_loss_scaled(const Model& m, const std::vector<std::vector<double>>& inputs,
                        const std::vector<std::size_t>& labels) {
  double total = 0.0;
  std::vector<double> f(m.class_count);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    scores_impl(m, inputs[i].data(), f.data());
    total += log_sum_exp(f) - f[labels[i]];
  }
  return total / static_cast<double>(inputs.size());
}

}  // namespace

Model initial_model(const ModelSpec& spec, std::size_t input_dim, std::size_t class_count,
                    const TrainConfig& config) {
  return fold_pixel_scale(internal_initial_model(spec, input_dim, class_count, config));
}

Model train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config,
            std::vector<double>* epoch_loss) {
  data.validate();
  require(config.learning_rate > 0.0, "train: learning rate must be positive");
  require(config.batch_size > 0, "train: batch size must be positive");

  const std::size_t n = data.size();
  const std::size_t input_dim = data.images.front().size();
  Model m = internal_initial_model(spec, input_dim, data.class_count, config);

  std::vector<std::vector<double>> inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    inputs[i].resize(input_dim);
    for (std::size_t d = 0; d < input_dim; ++d)
      inputs[i][d] = data.images[i][d] * kPixelScale;
  }

  std::vector<double> mean(input_dim, 0.0);
  for (const std::vector<double>& x : inputs)
    for (std::size_t d = 0; d < input_dim; ++d) mean[d] += x[d];
  for (double& v : mean) v /= static_cast<double>(n);
  for (std::vector<double>& x : inputs)
    for (std::size_t d = 0; d < input_dim; ++d) x[d] -= mean[d];
  shift_bias(m, mean, 1.0);

  if (epoch_loss) {
    epoch_loss->clear();
    epoch_loss->push_back(mean_loss_scaled(m, inputs, data.labels));
  }

  SeededRng shuffle_rng = SeededRng(config.seed).child(token_hash("shuffle"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  const std::size_t hidden = m.kind == ModelKind::kOneHidden ? m.hidden_dim : 0;
  std::vector<double> f(m.class_count), z1(std::max<std::size_t>(hidden, 1));
  std::vector<double> gw1(m.w1.size()), gb1(m.b1.size());
  std::vector<double> gw2(m.w2.size()), gb2(m.b2.size());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      auto j = static_cast<std::size_t>(
          shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      std::size_t stop = std::min(n, start + config.batch_size);
      double inv_batch = 1.0 / static_cast<double>(stop - start);
      std::fill(gw1.begin(), gw1.end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gw2.begin(), gw2.end(), 0.0);
      std::fill(gb2.begin(), gb2.end(), 0.0);

      for (std::size_t k = start; k < stop; ++k) {
        const std::vector<double>& x = inputs[order[k]];
        std::size_t y = data.labels[order[k]];
        scores_impl(m, x.data(), f.data(), hidden ? z1.data() : nullptr);
        std::vector<double> p = softmax(f);
        p[y] -= 1.0;  // dL/df for softmax cross-entropy

        if (m.kind == ModelKind::kLinear) {
          for (std::size_t c = 0; c < m.class_count; ++c) {
            double a = p[c] * inv_batch;
            if (a == 0.0) continue;
            double* row = &gw1[c * input_dim];
            for (std::size_t d = 0; d < input_dim; ++d) row[d] += a * x[d];
            gb1[c] += a;
          }
        } else {
          std::vector<double> dz1(hidden, 0.0);
          for (std::size_t c = 0; c < m.class_count; ++c) {
            double a = p[c] * inv_batch;
            if (a == 0.0) continue;
            double* row = &gw2[c * hidden];
            for (std::size_t h = 0; h < hidden; ++h) {
              row[h] += a * (z1[h] > 0.0 ? z1[h] : 0.0);
              dz1[h] += a * m.w2[c * hidden + h];
            }
            gb2[c] += a;
          }
          for (std::size_t h = 0; h < hidden; ++h) {
            if (z1[h] <= 0.0 || dz1[h] == 0.0) continue;
            double* row = &gw1[h * input_dim];
            for (std::size_t d = 0; d < input_dim; ++d) row[d] += dz1[h] * x[d];
            gb1[h] += dz1[h];
          }
        }
      }

      for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= config.learning_rate * gw1[i];
      for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= config.learning_rate * gb1[i];
      for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= config.learning_rate * gw2[i];
      for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= config.learning_rate * gb2[i];
    }
    if (epoch_loss) epoch_loss->push_back(mean_loss_scaled(m, inputs, data.labels));
  }

  shift_bias(m, mean, -1.0);
  return fold_pixel_scale(std::move(m));
}

double accuracy(const Model& model, const Dataset& data) {
  data.validate();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (predict(model, data.images[i]) == data.labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double mean_loss(const Model& model, const Dataset& data) {
  data.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += loss_value(model, data.images[i], LossSpec::kSoftmaxLog, data.labels[i]);
  return total / static_cast<double>(data.size());
}

Dataset generate_synthetic_dataset(std::size_t class_count, std::size_t per_class,
                                   std::size_t height, std::size_t width,
                                   double noise_sigma, std::uint64_t seed) {
  require(class_count >= 2, "generate_synthetic_dataset: need at least two classes");
  require(per_class >= 1, "generate_synthetic_dataset: need samples per class");
  require(height > 0 && width > 0, "generate_synthetic_dataset: empty image shape");
  require(noise_sigma >= 0.0, "generate_synthetic_dataset: negative sigma");

  const std::size_t block = std::max<std::size_t>(1, std::min(height, width) / 4);
  const std::size_t block_rows = (height + block - 1) / block;
  const std::size_t block_cols = (width + block - 1) / block;

  SeededRng root(seed);
  SeededRng proto_root = root.child(token_hash("prototypes"));
  SeededRng sample_root = root.child(token_hash("samples"));

  const std::size_t block_count = block_rows * block_cols;

  // Shared base pattern, kept away from the pixel range edges so the class
  // bumps and the sample noise rarely saturate.
  std::vector<double> base(block_count);
  {
    SeededRng rng = proto_root.child(0);
    for (double& v : base) v = static_cast<double>(rng.uniform_int(60, 195));
  }

  // Class marks sit on top of the base in two families: even classes get a
  // global two-band square-wave pattern (low spatial frequency, survives
  // blurring), odd classes get a +-checker inside one block of their own
  // (high frequency, cancels under blur). Splitting the families across
  // classes keeps the blur-robust evidence non-redundant, so the trained
  // model must carry it, and all pairwise prototype distances stay
  // moderate: far enough apart to classify through the sample noise, close
  // enough that a budgeted perturbation can reach the decision boundary.
  std::vector<std::size_t> block_of(block_count);
  std::iota(block_of.begin(), block_of.end(), 0);
  {
    SeededRng rng = proto_root.child(1);
    for (std::size_t i = block_count; i > 1; --i) {
      auto j = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(block_of[i - 1], block_of[j]);
    }
  }
  constexpr double kBandContrast = 4.0;
  constexpr double kCheckerContrast = 10.0;

  auto band_sign = [height, width](std::size_t orient, std::size_t i, std::size_t j) {
    std::size_t t = 0;
    std::size_t extent = 1;
    switch (orient) {
      case 0: t = i; extent = height; break;
      case 1: t = j; extent = width; break;
      case 2: t = i + j; extent = height + width - 1; break;
      default: t = i + (width - 1 - j); extent = height + width - 1; break;
    }
    return 2 * t / extent % 2 == 0 ? 1.0 : -1.0;
  };

  std::vector<Tensor> prototypes;
  prototypes.reserve(class_count);
  for (std::size_t c = 0; c < class_count; ++c) {
    Tensor proto(Shape{height, width, 1});
    std::size_t idx = c / 2;
    bool banded = c % 2 == 0;
    std::size_t orient = idx % 4;
    double band = kBandContrast * (idx % 8 < 4 ? 1.0 : -1.0) *
                  (1.0 + static_cast<double>(idx / 8));
    std::size_t marked = block_of[idx % block_count];
    double amp = kCheckerContrast * (1.0 + static_cast<double>(idx / block_count));
    for (std::size_t br = 0; br < block_rows; ++br)
      for (std::size_t bc = 0; bc < block_cols; ++bc) {
        double value = base[br * block_cols + bc];
        bool in_mark = br * block_cols + bc == marked;
        for (std::size_t i = br * block; i < std::min(height, (br + 1) * block); ++i)
          for (std::size_t j = bc * block; j < std::min(width, (bc + 1) * block); ++j) {
            double v = value;
            if (banded)
              v += band * band_sign(orient, i, j);
            else if (in_mark)
              v += (i + j) % 2 == 0 ? amp : -amp;
            proto.at(i, j) = v;
          }
      }
    prototypes.push_back(std::move(proto));
  }

  Dataset out;
  out.class_count = class_count;
  out.images.reserve(class_count * per_class);
  out.labels.reserve(class_count * per_class);
  for (std::size_t c = 0; c < class_count; ++c)
    for (std::size_t k = 0; k < per_class; ++k) {
      SeededRng rng = sample_root.child(c * per_class + k);
      Tensor sample = prototypes[c];
      for (std::size_t i = 0; i < sample.size(); ++i)
        sample[i] += rng.normal(0.0, noise_sigma);
      out.images.push_back(quantize(sample));
      out.labels.push_back(c);
    }
  out.validate();
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::size_t train_per_class) {
  data.validate();
  Dataset train_set, test_set;
  train_set.class_count = test_set.class_count = data.class_count;
  std::vector<std::size_t> seen(data.class_count, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t label = data.labels[i];
    Dataset& sink = seen[label]++ < train_per_class ? train_set : test_set;
    sink.images.push_back(data.images[i]);
    sink.labels.push_back(label);
  }
  for (std::size_t c = 0; c < data.class_count; ++c)
    require(seen[c] >= train_per_class, "split_dataset: class has too few samples");
  return {std::move(train_set), std::move(test_set)};
}

void save_model(const std::filesystem::path& path, const Model& model) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
  Tensor header(Shape{4}, {model.kind == ModelKind::kLinear ? 0.0 : 1.0,
                           static_cast<double>(model.input_dim),
                           static_cast<double>(model.hidden_dim),
                           static_cast<double>(model.class_count)});
  write_tensor(out, header);
  auto emit = [&](const std::vector<double>& block, Shape shape) {
    write_tensor(out, Tensor(std::move(shape), block));
  };
  if (model.kind == ModelKind::kLinear) {
    emit(model.w1, Shape{model.class_count, model.input_dim});
    emit(model.b1, Shape{model.class_count});
  } else {
    emit(model.w1, Shape{model.hidden_dim, model.input_dim});
    emit(model.b1, Shape{model.hidden_dim});
    emit(model.w2, Shape{model.class_count, model.hidden_dim});
    emit(model.b2, Shape{model.class_count});
  }
  if (!out) throw std::runtime_error("short write: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  Tensor header = read_tensor(in, 0);
  if (header.rank() != 1 || header.size() != 4)
    throw ParseError("model: malformed header record", 0);

  Model m;
  double kind = header[0];
  if (kind != 0.0 && kind != 1.0) throw ParseError("model: unknown kind", 0);
  m.kind = kind == 0.0 ? ModelKind::kLinear : ModelKind::kOneHidden;
  m.input_dim = static_cast<std::size_t>(header[1]);
  m.hidden_dim = static_cast<std::size_t>(header[2]);
  m.class_count = static_cast<std::size_t>(header[3]);

  auto take = [&](Shape expected) {
    auto offset = static_cast<std::size_t>(in.tellg());
    Tensor t = read_tensor(in, offset);
    if (t.shape() != expected)
      throw ParseError("model: parameter block shape mismatch", offset);
    return t.values();
  };
  if (m.kind == ModelKind::kLinear) {
    m.w1 = take(Shape{m.class_count, m.input_dim});
    m.b1 = take(Shape{m.class_count});
  } else {
    m.w1 = take(Shape{m.hidden_dim, m.input_dim});
    m.b1 = take(Shape{m.hidden_dim});
    m.w2 = take(Shape{m.class_count, m.hidden_dim});
    m.b2 = take(Shape{m.class_count});
  }
  m.validate();
  return m;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
  data.validate();
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "labels.csv");
  if (!index) throw std::runtime_error("cannot open labels.csv for writing");
  index << "filename,label\n";
  char name[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::snprintf(name, sizeof name, "%05zu.tnsr", i);
    write_tensor(dir / name, data.images[i]);
    index << name << "," << data.labels[i] << "\n";
  }
  if (!index) throw std::runtime_error("short write: labels.csv");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream index(dir / "labels.csv");
  if (!index) throw std::runtime_error("cannot open file: " + (dir / "labels.csv").string());

  Dataset out;
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(index, line) || line != "filename,label")
    throw ParseError("labels.csv: missing filename,label header", 0);
  offset += line.size() + 1;

  std::size_t max_label = 0;
  while (std::getline(index, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::size_t comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 >= line.size())
      throw ParseError("labels.csv: malformed row", offset);
    std::string filename = line.substr(0, comma);
    std::size_t label = 0;
    try {
      label = std::stoul(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ParseError("labels.csv: bad label", offset + comma + 1);
    }
    out.images.push_back(read_tensor(dir / filename));
    out.labels.push_back(label);
    max_label = std::max(max_label, label);
    offset += line.size() + 1;
  }
  out.class_count = max_label + 1;
  out.validate();
  return out;
}

}  // namespace aipgame
