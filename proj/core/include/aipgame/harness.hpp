#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aipgame/aip.hpp"
#include "aipgame/classifier.hpp"
#include "aipgame/game.hpp"
#include "aipgame/processing.hpp"

namespace aipgame {

/// Everything one desk-scale experiment needs: the synthetic-data recipe,
/// the classifier, the two strategy menus, and the crafting overrides.
/// The dataset and trainer seeds are derived from `seed`, so a single seed
/// pins the whole pipeline (train_config.seed is ignored).
struct ExperimentConfig {
  std::size_t class_count = 10;
  std::size_t per_class = 30;       // samples per class before the split
  std::size_t train_per_class = 20; // remainder is the held-out test set
  std::size_t height = 16;
  std::size_t width = 16;
  double noise_sigma = 8.0;

  ModelSpec model_spec;
  TrainConfig train_config;

  std::vector<std::string> user_tokens = {"gaman",   "gaman/t", "gaman/n",
                                          "gaman/b", "gaman/c", "gaman/tnbc"};
  std::vector<std::string> recognizer_tokens = {"proc", "t", "n", "b", "c", "tnbc"};

  ProcessingConfig processing;
  AttackConfig attack;  // eps/gamma <= 0 resolve per strategy and image size

  std::uint64_t seed = 7;
  std::size_t trials = 1;   // ensemble evaluations per test sample
  std::size_t threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct Experiment {
  Model model;
  Dataset train_set;
  Dataset test_set;
};

/// Synthesize the dataset, split it class-balanced, train the classifier.
Experiment prepare_experiment(const ExperimentConfig& cfg);

/// Extra classifier over the same training set with an independent
/// init/shuffle stream (seed derived from cfg.seed and the tag); gives the
/// selective protocol its second model.
Model train_sibling_model(const Experiment& experiment, const ExperimentConfig& cfg,
                          std::string_view tag);

/// Knobs for a single payoff evaluation. An absent eps/gamma resolves to
/// the per-strategy default; eps = 0 disables crafting entirely (clean
/// images), which is distinct from the "resolve the default" state.
struct PayoffOptions {
  ProcessingConfig processing;
  std::optional<double> eps;
  std::optional<double> gamma;
  int iterations = 100;
  std::size_t trials = 1;
  std::size_t threads = 0;
};

/// Recognition rate of r_token's ensemble on u_token's perturbed test set.
/// Sample k derives its seed as mix(mix(seed, k), hash(u_token|r_token)):
/// crafting consumes child 0 and evaluation trial i consumes child 1 + i,
/// so serial and parallel runs agree bitwise.
double payoff_entry(const Model& model, const Dataset& dataset, const std::string& u_token,
                    const std::string& r_token, std::uint64_t seed,
                    const PayoffOptions& options = {});

/// Cross product of the config's strategy menus via payoff_entry; rows and
/// columns keep the config order and the tokens become the labels.
PayoffMatrix build_payoff_table(const Experiment& experiment, const ExperimentConfig& cfg);

/// Full solution report for one payoff table:
///   deterministic      {user, guarantee}
///   minimax            {theta_u, theta_r, value, saddle_ok, saddle_violation}
///   best_response.pure {column: {user, rate}}    (response to each pure column)
///   best_response.uniform {user, rate}           (response to the uniform mix)
///   limited_knowledge  {column: {apparent, realized}}
/// The limited-knowledge sweep solves the game with one column withheld and
/// reports the apparent guarantee next to the realized worst case when the
/// withheld strategy is back on the table (omitted for single-column games).
nlohmann::json run_game_analysis(const PayoffMatrix& matrix);

/// The four published recognition-rate tables (row player = user), keyed
/// alexnet / vgg / googlenet / resnet. These back the shipped fixture files
/// and the tamper check in verify_paper.
const std::vector<std::pair<std::string, PayoffMatrix>>& reference_tables();

/// Published optimal user mixtures and guaranteed recognition-rate bounds.
struct ReferenceOptimum {
  std::string network;
  std::vector<std::pair<std::string, double>> weights;  // user token -> weight
  double bound = 0.0;                                   // [0, 1] scale
};
const std::vector<ReferenceOptimum>& reference_optima();

struct NetworkCheck {
  std::string network;
  bool pass = false;
  double value = 0.0;                  // solved game value
  double expected_bound = 0.0;
  MixedStrategy user;                  // solved user optimum
  std::vector<std::string> failures;   // empty when pass
};

struct VerifyPaperReport {
  bool pass = false;
  std::vector<NetworkCheck> checks;
};

/// Loads the fixture tables, rejects any entry that deviates from the
/// embedded references, solves each game, and compares the user optimum
/// against the published values: weights within 0.01, bound within 0.002.
/// Missing or unparseable fixture files throw FixtureError.
VerifyPaperReport verify_paper(const std::filesystem::path& fixture_dir);

/// Fixture directory: $AIPGAME_DATA/fixtures when the variable is set,
/// otherwise the source-tree data directory baked in at compile time.
std::filesystem::path default_fixture_dir();

struct SweepRow {
  std::string method;
  double eps = 0.0;
  double rate = 0.0;  // post-Proc recognition rate
};

/// Recognition-rate curve against the fixed Proc recognizer: one row per
/// (method, eps) pair, methods outer, schedule order preserved. eps = 0
/// rows evaluate clean images.
std::vector<SweepRow> sweep_epsilon(const Experiment& experiment, const ExperimentConfig& cfg,
                                    const std::vector<std::string>& methods,
                                    const std::vector<double>& eps_schedule);

/// CSV with a method,eps,rate header.
void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

struct SelectiveRow {
  double eps = 0.0;
  double malicious_rate = 0.0;  // post-Proc recognition rate over M
  double benign_rate = 0.0;     // post-Proc recognition rate over B (0 if B empty)
};

struct SelectiveConfig {
  std::vector<double> eps_schedule;  // nonempty
  LossSpec loss = LossSpec::kMargin;
  bool use_sign = false;
  int iterations = 100;
  std::optional<double> gamma;  // absent = per-loss default
  std::uint64_t seed = 7;
  std::size_t threads = 0;
};

/// Selective-perturbation protocol: every test image is perturbed to fool
/// the malicious models while sparing the benign ones (unit weights), then
/// each model classifies the re-digitized result. Reports the mean
/// recognition rate over each model group per eps.
std::vector<SelectiveRow> run_selective(const std::vector<const Model*>& malicious,
                                        const std::vector<const Model*>& benign,
                                        const Dataset& dataset, const SelectiveConfig& cfg);

/// {"rows": [{eps, malicious_rate, benign_rate}, ...]}
nlohmann::json selective_report_json(const std::vector<SelectiveRow>& rows);

}  // namespace aipgame
