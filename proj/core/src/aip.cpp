#include "aipgame/aip.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace aipgame {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

void validate_attack_config(const AttackConfig& config, bool iterative) {
  require(config.eps > 0.0, "attack: eps must be positive (use resolve_attack_config)");
  require(config.gamma > 0.0, "attack: gamma must be positive");
  if (iterative) require(config.iterations >= 0, "attack: negative iteration count");
  require(config.overshoot >= 0.0, "attack: negative overshoot");
}

Tensor sign_of(const Tensor& g) {
  Tensor out = Tensor::zeros_like(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    out[i] = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
  return out;
}

// Step -> L2 projection -> pixel-range clip, the fixed per-iteration order.
void project_and_clip(Tensor& t, const Tensor& x, double eps) {
  t = l2_project(t, eps);
  Tensor clipped = clip_values(x + t, 0.0, 255.0);
  t = clipped - x;
}

void record_iteration(IterationTrace* trace, const Model& model, const Tensor& x,
                      const Tensor& t, std::size_t y, LossSpec loss, int iteration) {
  if (!trace) return;
  IterationRecord rec;
  rec.iteration = iteration;
  rec.t_norm = l2_norm(t);
  Tensor payload = x + t;
  rec.payload_min = *std::min_element(payload.values().begin(), payload.values().end());
  rec.payload_max = *std::max_element(payload.values().begin(), payload.values().end());
  LossGrad lg = loss_grad(model, payload, loss, y);
  rec.loss = lg.value;
  rec.target = lg.target;
  trace->push_back(rec);
}

// Pulls a gradient at proc(x) back through Proc: quantize is straight-
// through, resize is the identity at equal shapes and the exact bilinear
// adjoint otherwise.
Tensor pull_through_proc(const Tensor& grad_at_proc, const Tensor& x) {
  ImageDims gd = image_dims(grad_at_proc);
  ImageDims xd = image_dims(x);
  if (gd.height == xd.height && gd.width == xd.width) return grad_at_proc;
  return resize_bilinear_adjoint(grad_at_proc, xd.height, xd.width);
}

// One vaccination sample for a single strategy: draw the transform, take
// the loss gradient at the transformed point, pull it back.
Tensor vaccination_sample(const Model& model, const Tensor& base, const Tensor& x_adv,
                          std::size_t y, LossSpec loss, const ProcessingStrategy& strategy,
                          SeededRng& rng, const GradOptions& options) {
  ImageDims d = image_dims(base);
  switch (strategy.kind) {
    case ProcessingKind::kTranslate: {
      long ry = static_cast<long>(std::floor(static_cast<double>(d.height) *
                                             strategy.config.offset_fraction));
      long rx = static_cast<long>(std::floor(static_cast<double>(d.width) *
                                             strategy.config.offset_fraction));
      long dy = rng.uniform_int(-ry, ry);
      long dx = rng.uniform_int(-rx, rx);
      Tensor g = input_grad(model, translate_fixed(base, dy, dx), loss, y, options);
      return pull_through_proc(translate_fixed_adjoint(g, dy, dx), x_adv);
    }
    case ProcessingKind::kNoise: {
      Tensor g = input_grad(model, add_noise(base, strategy.config, rng), loss, y, options);
      return pull_through_proc(g, x_adv);  // identity Jacobian for the noise
    }
    case ProcessingKind::kBlur: {
      require(!strategy.config.blur_widths.empty(), "vaccination: no blur widths");
      auto pick = static_cast<std::size_t>(rng.uniform_int(
          0, static_cast<std::int64_t>(strategy.config.blur_widths.size()) - 1));
      int k = strategy.config.blur_widths[pick];
      Tensor g = input_grad(model, blur_fixed(base, k), loss, y, options);
      return pull_through_proc(blur_fixed_adjoint(g, k), x_adv);
    }
    case ProcessingKind::kCrop: {
      long ry = static_cast<long>(std::floor(static_cast<double>(d.height) *
                                             strategy.config.offset_fraction));
      long rx = static_cast<long>(std::floor(static_cast<double>(d.width) *
                                             strategy.config.offset_fraction));
      long oy = rng.uniform_int(-ry, ry);
      long ox = rng.uniform_int(-rx, rx);
      Tensor g = input_grad(model, crop_resize_fixed(base, oy, ox), loss, y, options);
      return pull_through_proc(crop_resize_fixed_adjoint(g, oy, ox), x_adv);
    }
    case ProcessingKind::kProc: {
      Tensor g = input_grad(model, base, loss, y, options);
      return pull_through_proc(g, x_adv);
    }
    case ProcessingKind::kNoOp:
      return input_grad(model, x_adv, loss, y, options);
    case ProcessingKind::kTnbc:
      throw std::invalid_argument("vaccination: use kTnbcMix for the combined strategy");
  }
  throw std::invalid_argument("vaccination: unknown strategy");
}

bool strategy_is_deterministic(ProcessingKind kind) {
  return kind == ProcessingKind::kNoOp || kind == ProcessingKind::kProc;
}

struct AttackTermView {
  const Model* model;
  std::size_t label;
  double weight;
};

Tensor term_gradient(const AttackTermView& term, const Tensor& x_adv,
                     const AttackConfig& config, SeededRng& rng) {
  if (config.vaccination)
    return vaccinated_grad(*term.model, x_adv, term.label, config.loss, *config.vaccination,
                           rng, config.grad_options);
  return input_grad(*term.model, x_adv, config.loss, term.label, config.grad_options);
}

Tensor run_iterative(const std::vector<AttackTermView>& terms, const Tensor& x,
                     const AttackConfig& config, SeededRng& rng, IterationTrace* trace) {
  validate_attack_config(config, /*iterative=*/true);
  require(!terms.empty(), "attack: no terms");
  Tensor t = Tensor::zeros_like(x);
  for (int m = 0; m < config.iterations; ++m) {
    Tensor x_adv = x + t;
    Tensor g = Tensor::zeros_like(x);
    for (const AttackTermView& term : terms)
      g += term_gradient(term, x_adv, config, rng) * term.weight;
    Tensor step = config.use_sign ? sign_of(g) : g;
    t += step * config.gamma;
    project_and_clip(t, x, config.eps);
    record_iteration(trace, *terms.front().model, x, t, terms.front().label, config.loss, m);
  }
  return t;
}

}  // namespace

Tensor craft_single_step(const Model& model, const Tensor& x, std::size_t y,
                         const AttackConfig& config) {
  validate_attack_config(config, /*iterative=*/false);
  require(!config.vaccination, "craft_single_step: vaccination needs the iterative attack");
  Tensor g = input_grad(model, x, config.loss, y, config.grad_options);
  Tensor t = (config.use_sign ? sign_of(g) : g) * config.gamma;
  project_and_clip(t, x, config.eps);
  return t;
}

Tensor craft_iterative(const Model& model, const Tensor& x, std::size_t y,
                       const AttackConfig& config, SeededRng rng, IterationTrace* trace) {
  std::vector<AttackTermView> terms{{&model, y, 1.0}};
  return run_iterative(terms, x, config, rng, trace);
}

Tensor craft_deepfool(const Model& model, const Tensor& x, std::size_t y,
                      const AttackConfig& config, IterationTrace* trace) {
  require(config.eps > 0.0, "attack: eps must be positive (use resolve_attack_config)");
  require(config.iterations >= 1, "attack: need at least one iteration");
  require(config.overshoot >= 0.0, "attack: negative overshoot");
  require(!config.vaccination, "craft_deepfool: vaccination is not defined here");

  Tensor t = Tensor::zeros_like(x);
  for (int m = 0; m < config.iterations; ++m) {
    // Early stop once the overshot point falls across the boundary.
    Tensor probe = x + t * (1.0 + config.overshoot);
    if (predict(model, probe) != y) break;

    LossGrad lg = loss_grad(model, x + t, LossSpec::kDeepFoolLinearized, y);
    double norm_sq = dot(lg.grad, lg.grad);
    if (norm_sq <= 1e-24)
      throw std::runtime_error("craft_deepfool: degenerate geometry at the current point");
    // Step exactly onto the linearized boundary: |f_c - f_y| / ||w||^2 * w.
    t += lg.grad * (std::abs(lg.value) / norm_sq);
    project_and_clip(t, x, config.eps);
    record_iteration(trace, model, x, t, y, LossSpec::kDeepFoolLinearized, m);
  }
  t *= 1.0 + config.overshoot;
  project_and_clip(t, x, config.eps);
  return t;
}

Tensor vaccinated_grad(const Model& model, const Tensor& x_adv, std::size_t y, LossSpec loss,
                       const VaccinationSpec& vaccination, SeededRng& rng,
                       const GradOptions& options) {
  require(vaccination.samples_per_iter > 0, "vaccination: need at least one sample");

  if (vaccination.mode == VaccinationSpec::Mode::kTnbcMix) {
    ProcessingConfig config = vaccination.strategies.empty()
                                  ? ProcessingConfig{}
                                  : vaccination.strategies.front().config;
    Tensor base = apply_proc(x_adv);
    Tensor total = Tensor::zeros_like(x_adv);
    for (ProcessingKind kind : {ProcessingKind::kTranslate, ProcessingKind::kNoise,
                                ProcessingKind::kBlur, ProcessingKind::kCrop}) {
      ProcessingStrategy strategy{kind, config};
      total += vaccination_sample(model, base, x_adv, y, loss, strategy, rng, options);
    }
    total += input_grad(model, x_adv, loss, y, options);  // the plain fifth term
    total *= 1.0 / 5.0;
    return total;
  }

  require(!vaccination.strategies.empty(), "vaccination: no strategies listed");
  // A lone NoOp is the plain attack; keep it exactly that, not a mean of
  // identical terms.
  if (vaccination.strategies.size() == 1 &&
      vaccination.strategies.front().kind == ProcessingKind::kNoOp)
    return input_grad(model, x_adv, loss, y, options);

  Tensor base = apply_proc(x_adv);
  Tensor total = Tensor::zeros_like(x_adv);
  std::size_t count = 0;
  for (const ProcessingStrategy& strategy : vaccination.strategies) {
    std::size_t draws = strategy_is_deterministic(strategy.kind)
                            ? 1
                            : static_cast<std::size_t>(vaccination.samples_per_iter);
    for (std::size_t s = 0; s < draws; ++s)
      total += vaccination_sample(model, base, x_adv, y, loss, strategy, rng, options);
    count += draws;
  }
  total *= 1.0 / static_cast<double>(count);
  return total;
}

Tensor craft_selective(const SelectiveSpec& spec, const Tensor& x, const AttackConfig& config,
                       SeededRng rng, IterationTrace* trace) {
  require(!spec.malicious.empty(), "craft_selective: need at least one malicious term");
  std::vector<AttackTermView> terms;
  terms.reserve(spec.malicious.size() + spec.benign.size());
  for (const SelectiveTerm& term : spec.malicious) {
    require(term.model != nullptr, "craft_selective: null model");
    require(term.weight > 0.0, "craft_selective: weights must be positive");
    terms.push_back({term.model, term.label, term.weight});
  }
  for (const SelectiveTerm& term : spec.benign) {
    require(term.model != nullptr, "craft_selective: null model");
    require(term.weight > 0.0, "craft_selective: weights must be positive");
    terms.push_back({term.model, term.label, -term.weight});
  }
  return run_iterative(terms, x, config, rng, trace);
}

Tensor baseline_obfuscate(const Tensor& x, BaselineKind kind, double strength,
                          std::uint64_t seed) {
  switch (kind) {
    case BaselineKind::kEyeBar: {
      require(strength >= 1.0, "baseline: bar thickness must be at least 1");
      return eye_bar(x, static_cast<std::size_t>(std::llround(strength)));
    }
    case BaselineKind::kNoise: {
      require(strength >= 0.0, "baseline: negative noise sigma");
      ProcessingConfig config;
      config.noise_sigma = strength;
      SeededRng rng(seed);
      return add_noise(x, config, rng);
    }
    case BaselineKind::kBlur: {
      auto k = static_cast<int>(std::llround(strength));
      require(k >= 1 && k % 2 == 1, "baseline: blur width must be odd");
      return blur_fixed(x, k);
    }
  }
  throw std::invalid_argument("baseline_obfuscate: unknown kind");
}

namespace {

UserStrategy base_strategy(std::string_view token) {
  UserStrategy s;
  s.token = std::string(token);
  using F = UserStrategy::Family;
  if (token == "none") {
    s.family = F::kNone;
  } else if (token == "fgs") {
    s.family = F::kSingleStep;
    s.loss = LossSpec::kSoftmaxLog;
    s.use_sign = true;
  } else if (token == "fgv") {
    s.family = F::kSingleStep;
    s.loss = LossSpec::kSoftmaxLog;
  } else if (token == "fgs-s") {
    s.family = F::kSingleStep;
    s.loss = LossSpec::kScore;
    s.use_sign = true;
  } else if (token == "fgv-s") {
    s.family = F::kSingleStep;
    s.loss = LossSpec::kScore;
  } else if (token == "fgman") {
    s.family = F::kSingleStep;
    s.loss = LossSpec::kMargin;
    s.margin_step = true;
  } else if (token == "bi") {
    s.family = F::kIterative;
    s.loss = LossSpec::kSoftmaxLog;
    s.use_sign = true;
  } else if (token == "ga") {
    s.family = F::kIterative;
    s.loss = LossSpec::kSoftmaxLog;
  } else if (token == "bi-s") {
    s.family = F::kIterative;
    s.loss = LossSpec::kScore;
    s.use_sign = true;
  } else if (token == "ga-s") {
    s.family = F::kIterative;
    s.loss = LossSpec::kScore;
  } else if (token == "gaman") {
    s.family = F::kIterative;
    s.loss = LossSpec::kMargin;
    s.margin_step = true;
  } else if (token == "df") {
    s.family = F::kBoundary;
    s.loss = LossSpec::kDeepFoolLinearized;
  } else {
    throw std::invalid_argument("unknown user strategy token: " + std::string(token));
  }
  return s;
}

}  // namespace

UserStrategy user_strategy_from_token(std::string_view token) {
  std::size_t slash = token.find('/');
  if (slash == std::string_view::npos) return base_strategy(token);

  std::string_view base = token.substr(0, slash);
  std::string_view suffix = token.substr(slash + 1);
  UserStrategy s = base_strategy(base.empty() ? "gaman" : base);
  require(s.family == UserStrategy::Family::kIterative,
          "vaccination suffix requires an iterative attack");

  if (suffix == "tnbc") {
    s.vaccine_mix = true;
  } else if (suffix == "t" || suffix == "n" || suffix == "b" || suffix == "c") {
    s.vaccine_kinds = {processing_kind_from_token(suffix)};
  } else {
    throw std::invalid_argument("unknown vaccination suffix: " + std::string(suffix));
  }
  s.token = std::string(base.empty() ? "gaman" : base) + "/" + std::string(suffix);
  return s;
}

const std::vector<std::string>& builtin_user_tokens() {
  static const std::vector<std::string> tokens = {
      "none",  "fgs",  "fgv",  "fgs-s",   "fgv-s",   "fgman",   "bi",      "ga",
      "bi-s",  "ga-s", "df",   "gaman",   "gaman/t", "gaman/n", "gaman/b", "gaman/c",
      "gaman/tnbc"};
  return tokens;
}

double scaled_eps(double eps_at_reference, std::size_t pixel_count) {
  constexpr double kReferencePixels = 224.0 * 224.0 * 3.0;
  return eps_at_reference * std::sqrt(static_cast<double>(pixel_count) / kReferencePixels);
}

AttackConfig resolve_attack_config(const UserStrategy& strategy, const AttackConfig& overrides,
                                   std::size_t pixel_count, const ProcessingConfig& processing) {
  AttackConfig config = overrides;
  config.loss = strategy.loss;
  config.use_sign = strategy.use_sign;
  config.vaccination.reset();
  if (config.eps <= 0.0) config.eps = scaled_eps(1000.0, pixel_count);
  if (config.gamma <= 0.0) config.gamma = strategy.margin_step ? 5e3 : 1e4;
  if (config.iterations < 1) config.iterations = 100;

  if (strategy.vaccine_mix) {
    VaccinationSpec vaccination;
    vaccination.mode = VaccinationSpec::Mode::kTnbcMix;
    vaccination.strategies = {{ProcessingKind::kTnbc, processing}};
    config.vaccination = vaccination;
  } else if (!strategy.vaccine_kinds.empty()) {
    VaccinationSpec vaccination;
    vaccination.mode = VaccinationSpec::Mode::kPerStrategy;
    for (ProcessingKind kind : strategy.vaccine_kinds)
      vaccination.strategies.push_back({kind, processing});
    config.vaccination = vaccination;
  }
  return config;
}

Tensor craft(const Model& model, const Tensor& x, std::size_t y, const UserStrategy& strategy,
             const AttackConfig& overrides, const ProcessingConfig& processing, SeededRng rng,
             IterationTrace* trace) {
  if (strategy.family == UserStrategy::Family::kNone) return Tensor::zeros_like(x);
  AttackConfig config = resolve_attack_config(strategy, overrides, x.size(), processing);
  switch (strategy.family) {
    case UserStrategy::Family::kSingleStep:
      return craft_single_step(model, x, y, config);
    case UserStrategy::Family::kIterative:
      return craft_iterative(model, x, y, config, rng, trace);
    case UserStrategy::Family::kBoundary:
      return craft_deepfool(model, x, y, config, trace);
    default:
      throw std::invalid_argument("craft: unknown strategy family");
  }
}

}  // namespace aipgame
