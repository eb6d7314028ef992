#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "aipgame/classifier.hpp"
#include "aipgame/rng.hpp"
#include "aipgame/tensor.hpp"

namespace aipgame {

/// Knobs for the recognizer-side input transformations. Offsets are a
/// fraction of the image edge length; blur widths are the odd kernel sizes
/// a random blur may draw from (sigma = width / 3).
struct ProcessingConfig {
  double offset_fraction = 0.10;
  double noise_sigma = 10.0;
  std::vector<int> blur_widths = {1, 3, 5, 7, 9};
  int ensemble_samples = 5;
};

/// Recognizer strategies: no defense, re-digitization only (Proc), a random
/// transformation applied on top of Proc (translate/noise/blur/crop), or the
/// combined ensemble (Tnbc). Tokens: none, proc, t, n, b, c, tnbc.
enum class ProcessingKind { kNoOp, kProc, kTranslate, kNoise, kBlur, kCrop, kTnbc };

struct ProcessingStrategy {
  ProcessingKind kind = ProcessingKind::kNoOp;
  ProcessingConfig config;
};

ProcessingKind processing_kind_from_token(std::string_view token);
std::string_view processing_token(ProcessingKind kind);

/// Re-digitization: bilinear resize to the target shape, then quantize.
Tensor apply_proc(const Tensor& x, std::size_t out_height, std::size_t out_width);

/// Same-shape Proc (resize is the identity, so this is quantization).
Tensor apply_proc(const Tensor& x);

/// Content shift by (dy, dx) with edge replication; positive dy moves the
/// image content down, positive dx moves it right.
Tensor translate_fixed(const Tensor& x, long dy, long dx);
Tensor translate_fixed_adjoint(const Tensor& grad, long dy, long dx);

/// Random translate: dy then dx drawn uniformly from the +-10% (by default)
/// integer offset range.
Tensor translate(const Tensor& x, const ProcessingConfig& config, SeededRng& rng);

/// Per-element Gaussian noise (row-major draw order), clipped to [0, 255].
Tensor add_noise(const Tensor& x, const ProcessingConfig& config, SeededRng& rng);

/// Separable Gaussian blur with kernel size k (odd), sigma = k / 3,
/// replicated edges; k = 1 is the identity.
Tensor blur_fixed(const Tensor& x, int k);
Tensor blur_fixed_adjoint(const Tensor& grad, int k);

/// Random blur: k drawn uniformly from config.blur_widths.
Tensor gaussian_blur(const Tensor& x, const ProcessingConfig& config, SeededRng& rng);

/// Crops |oy| rows (top if oy > 0, bottom if oy < 0) and |ox| columns, then
/// resizes the window back to the original shape.
Tensor crop_resize_fixed(const Tensor& x, long oy, long ox);
Tensor crop_resize_fixed_adjoint(const Tensor& grad, long oy, long ox);

/// Random crop: oy then ox drawn uniformly from the +-10% offset range.
Tensor crop_resize(const Tensor& x, const ProcessingConfig& config, SeededRng& rng);

/// Draws a horizontal gray bar (all channels) of the given thickness with
/// its anchor row at height / 3; a crude identity-hiding baseline.
Tensor eye_bar(const Tensor& x, std::size_t thickness, double gray = 128.0);

/// One random draw of a strategy, including the Proc prefix for every
/// non-NoOp strategy. Tnbc has no single-draw form and is rejected here.
Tensor apply_strategy(const ProcessingStrategy& strategy, const Tensor& x, SeededRng& rng);

/// Recognizer output: mean softmax over the strategy's ensemble. NoOp and
/// Proc are deterministic single evaluations; translate/noise/blur/crop
/// average config.ensemble_samples random draws (sample s uses rng.child(s));
/// Tnbc averages one draw each of translate/noise/blur/crop (children 0-3)
/// plus the re-digitized input itself.
std::vector<double> ensemble_scores(const Model& model, const Tensor& x,
                                    const ProcessingStrategy& strategy, SeededRng& rng);

/// Argmax of ensemble_scores; ties break toward the smallest class index.
std::size_t ensemble_predict(const Model& model, const Tensor& x,
                             const ProcessingStrategy& strategy, SeededRng& rng);

}  // namespace aipgame
