#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aipgame/rng.hpp"
#include "aipgame/tensor.hpp"

namespace aipgame {

enum class ModelKind { kLinear, kOneHidden };

/// Differentiable desk-scale classifier: either a linear softmax model
/// (f = W x + b) or a one-hidden-layer rectifier network
/// (f = W2 relu(W1 x + b1) + b2). Inputs are raw pixel tensors in [0, 255];
/// any tensor whose element count equals input_dim is accepted.
struct Model {
  ModelKind kind = ModelKind::kLinear;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;  // 0 for linear models
  std::size_t class_count = 0;

  // Row-major parameter blocks. Linear models use w1 (C x D) and b1 (C);
  // one-hidden models use w1 (H x D), b1 (H), w2 (C x H), b2 (C).
  std::vector<double> w1, b1, w2, b2;

  void validate() const;  // throws std::invalid_argument on bad dimensions
};

/// Loss functions the attacks can maximize. All are functions of the score
/// vector f and the true label y:
///   kSoftmaxLog          -log softmax_y(f)
///   kScore               -f[y]
///   kMargin              f[y*] - f[y],  y* = argmax over y' != y of f[y']
///   kDeepFoolLinearized  f[yc] - f[y],  yc = nearest linearized boundary
enum class LossSpec { kSoftmaxLog, kScore, kMargin, kDeepFoolLinearized };

struct GradOptions {
  /// When true, each pixel's gradient is replaced by the mean across its
  /// channels (the grayscale-printing rule); no-op for single-channel input.
  bool average_channels = false;
};

std::vector<double> scores(const Model& model, const Tensor& x);
std::vector<double> softmax(const std::vector<double>& f);

/// Argmax of the scores; ties break toward the smallest class index.
std::size_t predict(const Model& model, const Tensor& x);

double loss_value(const Model& model, const Tensor& x, LossSpec loss, std::size_t y);

struct LossGrad {
  double value = 0.0;
  Tensor grad;
  std::size_t target = 0;  // competitor class used (y* or yc); y for the others
};

/// Loss value plus analytic input gradient in one pass.
LossGrad loss_grad(const Model& model, const Tensor& x, LossSpec loss, std::size_t y,
                   const GradOptions& options = {});

Tensor input_grad(const Model& model, const Tensor& x, LossSpec loss, std::size_t y,
                  const GradOptions& options = {});

/// Gradient of a single class score f[c] with respect to the input.
Tensor score_input_grad(const Model& model, const Tensor& x, std::size_t c);

struct Dataset {
  std::vector<Tensor> images;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return images.size(); }
  void validate() const;
};

struct ModelSpec {
  ModelKind kind = ModelKind::kOneHidden;
  std::size_t hidden_dim = 32;
};

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 80;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double init_scale = 1.0;  // weight std = init_scale / sqrt(fan_in)
};

/// Seeded parameter initialization; train(epochs = 0) returns exactly this.
Model initial_model(const ModelSpec& spec, std::size_t input_dim, std::size_t class_count,
                    const TrainConfig& config);

/// Deterministic minibatch gradient descent on the softmax cross-entropy.
/// Identical configs give bitwise-identical parameters. If epoch_loss is
/// non-null it receives the mean training loss after each epoch.
Model train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config,
            std::vector<double>* epoch_loss = nullptr);

double accuracy(const Model& model, const Dataset& data);

/// Mean softmax cross-entropy of the model over a dataset.
double mean_loss(const Model& model, const Dataset& data);

/// Seeded synthetic image classes: a shared blockwise base pattern plus a
/// per-class blockwise offset, then per-pixel Gaussian noise of the given
/// sigma, quantized to integer pixels in [0, 255]. Samples are ordered
/// class-major (all of class 0 first). Equal seeds give equal datasets.
Dataset generate_synthetic_dataset(std::size_t class_count, std::size_t per_class,
                                   std::size_t height, std::size_t width,
                                   double noise_sigma, std::uint64_t seed);

/// Class-balanced split: the first train_per_class samples of every class
/// form the first dataset, the remainder the second.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::size_t train_per_class);

/// Model files are a sequence of TNSR records: a header record holding
/// (kind, input_dim, hidden_dim, class_count) followed by the parameter
/// blocks. Parameters are stored as float32 per the container format.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

/// Dataset directories hold one TNSR file per sample plus labels.csv with
/// a "filename,label" header line.
void save_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace aipgame
