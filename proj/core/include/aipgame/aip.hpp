#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aipgame/classifier.hpp"
#include "aipgame/processing.hpp"
#include "aipgame/rng.hpp"
#include "aipgame/tensor.hpp"

namespace aipgame {

/// Attack-side anticipation of recognizer processing: each crafting
/// iteration averages loss gradients pulled back through random draws of
/// the listed strategies (every non-NoOp strategy includes the Proc
/// prefix). kTnbcMix instead averages one gradient per translate, noise,
/// blur and crop plus the plain unprocessed gradient (five terms).
/// Quantization uses a straight-through identity; noise uses an identity
/// Jacobian; translate, blur, crop and resize use their exact adjoints.
struct VaccinationSpec {
  enum class Mode { kPerStrategy, kTnbcMix };
  Mode mode = Mode::kPerStrategy;
  std::vector<ProcessingStrategy> strategies;
  int samples_per_iter = 5;
};

/// Shared attack parameters. eps <= 0 and gamma <= 0 mean "resolve the
/// default for this image size / method" (see resolve_attack_config);
/// the low-level craft_* functions require explicit positive values.
struct AttackConfig {
  LossSpec loss = LossSpec::kSoftmaxLog;
  bool use_sign = false;
  double eps = 0.0;      // L2 perturbation budget
  double gamma = 0.0;    // step size
  int iterations = 100;  // K for the iterative attacks
  double overshoot = 0.02;
  std::optional<VaccinationSpec> vaccination;
  GradOptions grad_options;
};

/// Per-iteration observer record: the perturbation norm and payload bounds
/// after the projection/clip of that iteration, plus the loss value and the
/// competitor class at the updated point.
struct IterationRecord {
  int iteration = 0;
  double loss = 0.0;
  double t_norm = 0.0;
  double payload_min = 0.0;  // min/max of x + t
  double payload_max = 0.0;
  std::size_t target = 0;
};
using IterationTrace = std::vector<IterationRecord>;

/// One gradient step: t = gamma * g (or gamma * sign(g)), L2-projected to
/// eps and clipped so x + t stays in [0, 255].
Tensor craft_single_step(const Model& model, const Tensor& x, std::size_t y,
                         const AttackConfig& config);

/// K iterations of: gradient (vaccinated if configured) -> ascent step ->
/// L2 projection -> pixel-range clip. With K = 1 and no vaccination this
/// reproduces craft_single_step exactly.
Tensor craft_iterative(const Model& model, const Tensor& x, std::size_t y,
                       const AttackConfig& config, SeededRng rng = SeededRng(0),
                       IterationTrace* trace = nullptr);

/// Minimal-norm boundary walk: steps onto the nearest linearized class
/// boundary, stops as soon as the overshot point is misclassified, and
/// returns the overshot perturbation (projected and clipped).
Tensor craft_deepfool(const Model& model, const Tensor& x, std::size_t y,
                      const AttackConfig& config, IterationTrace* trace = nullptr);

/// Mean pulled-back gradient for one crafting iteration at x_adv = x + t.
/// Draws are consumed from rng in strategy order; a lone NoOp strategy
/// returns the plain gradient verbatim.
Tensor vaccinated_grad(const Model& model, const Tensor& x_adv, std::size_t y, LossSpec loss,
                       const VaccinationSpec& vaccination, SeededRng& rng,
                       const GradOptions& options = {});

/// One model the selective attack should fool (positive direction) or
/// spare (negative direction), with its own label and mixing weight.
struct SelectiveTerm {
  const Model* model = nullptr;
  std::size_t label = 0;
  double weight = 1.0;
};

struct SelectiveSpec {
  std::vector<SelectiveTerm> malicious;  // losses to maximize
  std::vector<SelectiveTerm> benign;     // losses to suppress
};

/// Iterative ascent on the weighted loss difference
/// sum_M w * L - sum_B w * L; with one unit-weight malicious term and no
/// benign terms this reproduces craft_iterative exactly.
Tensor craft_selective(const SelectiveSpec& spec, const Tensor& x, const AttackConfig& config,
                       SeededRng rng = SeededRng(0), IterationTrace* trace = nullptr);

/// Naive user-side obfuscations: a gray bar over the eye line, additive
/// noise, or blur. strength is the bar thickness, the noise sigma, or the
/// (odd) blur kernel size.
enum class BaselineKind { kEyeBar, kNoise, kBlur };
Tensor baseline_obfuscate(const Tensor& x, BaselineKind kind, double strength,
                          std::uint64_t seed);

/// Parsed user-strategy token. Bases: none, fgs, fgv, fgs-s, fgv-s, fgman,
/// bi, ga, bi-s, ga-s, gaman, df. Iterative bases accept a vaccination
/// suffix (/t /n /b /c /tnbc); a bare suffix such as "/b" means "gaman/b".
struct UserStrategy {
  enum class Family { kNone, kSingleStep, kIterative, kBoundary };
  std::string token;  // canonical form
  Family family = Family::kNone;
  LossSpec loss = LossSpec::kSoftmaxLog;
  bool use_sign = false;
  bool margin_step = false;                  // uses the halved default step
  std::vector<ProcessingKind> vaccine_kinds; // empty = no vaccination
  bool vaccine_mix = false;                  // tnbc-mix mode
};

UserStrategy user_strategy_from_token(std::string_view token);
const std::vector<std::string>& builtin_user_tokens();

/// L2 budget for a given pixel count, scaled from the budget quoted at
/// full-photo scale (224 x 224 RGB) so that the per-pixel distortion level
/// is preserved: eps * sqrt(pixel_count / 150528).
double scaled_eps(double eps_at_reference, std::size_t pixel_count);

/// Fills in eps (budget scaling) and gamma (1e4, halved for margin-loss
/// walkers) wherever overrides left them <= 0; copies loss/sign/vaccination
/// from the strategy. processing configures the vaccination transforms.
AttackConfig resolve_attack_config(const UserStrategy& strategy, const AttackConfig& overrides,
                                   std::size_t pixel_count, const ProcessingConfig& processing);

/// Token-level entry point: resolves the config and dispatches to the
/// right craft_* function. "none" returns a zero perturbation.
Tensor craft(const Model& model, const Tensor& x, std::size_t y, const UserStrategy& strategy,
             const AttackConfig& overrides, const ProcessingConfig& processing, SeededRng rng,
             IterationTrace* trace = nullptr);

}  // namespace aipgame
