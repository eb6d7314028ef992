#include "aipgame/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "aipgame/errors.hpp"
#include "aipgame/rng.hpp"

#ifndef AIPGAME_DATA_DIR
#define AIPGAME_DATA_DIR "data"
#endif

namespace aipgame {
namespace {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("failed to format a number");
  return std::string(buf, ptr);
}

// Work-stealing parallel loop; body(k) runs exactly once per index. The
// first exception wins and is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, const Body& body) {
  std::size_t worker_count = threads != 0 ? threads : std::thread::hardware_concurrency();
  worker_count = std::max<std::size_t>(1, std::min(worker_count, count));
  if (worker_count <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
      if (k >= count) break;
      try {
        body(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(worker_count);
  for (std::size_t i = 0; i < worker_count; ++i) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(class_count >= 2, "experiment needs at least two classes");
  require(per_class > train_per_class && train_per_class > 0,
          "per_class must exceed train_per_class, both positive");
  require(height > 0 && width > 0, "image dimensions must be positive");
  require(noise_sigma >= 0.0, "noise sigma must be nonnegative");
  require(!user_tokens.empty(), "user strategy list is empty");
  require(!recognizer_tokens.empty(), "recognizer strategy list is empty");
  require(trials >= 1, "trial count must be positive");
}

Experiment prepare_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Dataset full = generate_synthetic_dataset(cfg.class_count, cfg.per_class, cfg.height,
                                            cfg.width, cfg.noise_sigma,
                                            mix_seed(cfg.seed, token_hash("data")));
  auto [train_set, test_set] = split_dataset(full, cfg.train_per_class);
  TrainConfig train_cfg = cfg.train_config;
  train_cfg.seed = mix_seed(cfg.seed, token_hash("train"));
  Model model = train(cfg.model_spec, train_set, train_cfg);
  return Experiment{std::move(model), std::move(train_set), std::move(test_set)};
}

Model train_sibling_model(const Experiment& experiment, const ExperimentConfig& cfg,
                          std::string_view tag) {
  TrainConfig train_cfg = cfg.train_config;
  train_cfg.seed = mix_seed(cfg.seed, token_hash(tag));
  return train(cfg.model_spec, experiment.train_set, train_cfg);
}

double payoff_entry(const Model& model, const Dataset& dataset, const std::string& u_token,
                    const std::string& r_token, std::uint64_t seed,
                    const PayoffOptions& options) {
  dataset.validate();
  require(dataset.size() > 0, "payoff evaluation needs a nonempty dataset");
  require(options.trials >= 1, "trial count must be positive");
  UserStrategy strategy = user_strategy_from_token(u_token);
  ProcessingStrategy recognizer{processing_kind_from_token(r_token), options.processing};

  AttackConfig overrides;
  overrides.eps = options.eps.value_or(0.0);
  overrides.gamma = options.gamma.value_or(0.0);
  overrides.iterations = options.iterations;
  const bool skip_craft =
      strategy.family == UserStrategy::Family::kNone || (options.eps && *options.eps == 0.0);

  const std::uint64_t pair_hash = token_hash(u_token + "|" + r_token);
  std::vector<long> correct(dataset.size(), 0);
  parallel_for(dataset.size(), options.threads, [&](std::size_t k) {
    SeededRng sample_rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(k)), pair_hash));
    Tensor payload = dataset.images[k];
    if (!skip_craft) {
      payload += craft(model, dataset.images[k], dataset.labels[k], strategy, overrides,
                       options.processing, sample_rng.child(0));
    }
    long hits = 0;
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
      SeededRng eval_rng = sample_rng.child(1 + trial);
      if (ensemble_predict(model, payload, recognizer, eval_rng) == dataset.labels[k]) ++hits;
    }
    correct[k] = hits;
  });

  long total = 0;
  for (long hits : correct) total += hits;
  return static_cast<double>(total) /
         (static_cast<double>(dataset.size()) * static_cast<double>(options.trials));
}

namespace {

PayoffOptions payoff_options_from(const ExperimentConfig& cfg) {
  PayoffOptions options;
  options.processing = cfg.processing;
  if (cfg.attack.eps > 0.0) options.eps = cfg.attack.eps;
  if (cfg.attack.gamma > 0.0) options.gamma = cfg.attack.gamma;
  options.iterations = cfg.attack.iterations;
  options.trials = cfg.trials;
  options.threads = cfg.threads;
  return options;
}

}  // namespace

PayoffMatrix build_payoff_table(const Experiment& experiment, const ExperimentConfig& cfg) {
  cfg.validate();
  PayoffOptions options = payoff_options_from(cfg);
  std::vector<double> entries;
  entries.reserve(cfg.user_tokens.size() * cfg.recognizer_tokens.size());
  for (const std::string& u : cfg.user_tokens) {
    for (const std::string& r : cfg.recognizer_tokens) {
      entries.push_back(
          payoff_entry(experiment.model, experiment.test_set, u, r, cfg.seed, options));
    }
  }
  PayoffMatrix matrix(cfg.user_tokens, cfg.recognizer_tokens, std::move(entries));
  matrix.validate();
  return matrix;
}

nlohmann::json run_game_analysis(const PayoffMatrix& matrix) {
  matrix.validate();
  nlohmann::json report;

  auto [det_row, det_value] = solve_deterministic(matrix);
  report["deterministic"] = {{"user", matrix.row_labels[det_row]}, {"guarantee", det_value}};

  GameSolution solution = solve_minimax(matrix);
  SaddleReport saddle = verify_saddle(matrix, solution, 1e-7);
  report["minimax"] = solution_to_json(solution);
  report["minimax"]["saddle_ok"] = saddle.ok;
  report["minimax"]["saddle_violation"] = saddle.max_violation;

  nlohmann::json pure = nlohmann::json::object();
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    std::vector<double> column(matrix.cols(), 0.0);
    column[j] = 1.0;
    auto [row, rate] = best_response_user(matrix, column);
    pure[matrix.col_labels[j]] = {{"user", matrix.row_labels[row]}, {"rate", rate}};
  }
  report["best_response"]["pure"] = pure;

  std::vector<double> uniform(matrix.cols(), 1.0 / static_cast<double>(matrix.cols()));
  auto [uniform_row, uniform_rate] = best_response_user(matrix, uniform);
  report["best_response"]["uniform"] = {{"user", matrix.row_labels[uniform_row]},
                                        {"rate", uniform_rate}};

  nlohmann::json limited = nlohmann::json::object();
  if (matrix.cols() > 1) {
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      std::vector<std::string> kept;
      for (std::size_t c = 0; c < matrix.cols(); ++c) {
        if (c != j) kept.push_back(matrix.col_labels[c]);
      }
      GameSolution blind = solve_minimax(restrict(matrix, matrix.row_labels, kept));
      double realized = 0.0;
      for (std::size_t c = 0; c < matrix.cols(); ++c) {
        double rate = 0.0;
        for (std::size_t i = 0; i < matrix.rows(); ++i) {
          rate += blind.user.weights[i] * matrix.at(i, c);
        }
        realized = std::max(realized, rate);
      }
      limited[matrix.col_labels[j]] = {{"apparent", blind.value}, {"realized", realized}};
    }
  }
  report["limited_knowledge"] = limited;
  return report;
}

namespace {

const std::vector<std::string>& reference_rows() {
  static const std::vector<std::string> rows = {"gaman", "/t", "/n", "/b", "/c", "/tnbc"};
  return rows;
}

const std::vector<std::string>& reference_cols() {
  static const std::vector<std::string> cols = {"proc", "t", "n", "b", "c", "tnbc"};
  return cols;
}

PayoffMatrix percent_matrix(std::vector<double> percents) {
  for (double& v : percents) v /= 100.0;
  return PayoffMatrix(reference_rows(), reference_cols(), std::move(percents));
}

}  // namespace

const std::vector<std::pair<std::string, PayoffMatrix>>& reference_tables() {
  static const std::vector<std::pair<std::string, PayoffMatrix>> tables = {
      {"alexnet", percent_matrix({1.4, 6.4, 9.2, 13.5, 12.3, 5.6,    //
                                  0.9, 0.8, 6.2, 10.5, 2.7,  2.2,    //
                                  1.2, 4.2, 4.8, 11.7, 9.5,  3.9,    //
                                  0.8, 3.5, 6.3, 6.4,  6.0,  2.6,    //
                                  2.4, 2.5, 9.2, 13.1, 1.3,  3.4,    //
                                  0.6, 1.2, 4.5, 7.8,  2.9,  1.9})},
      {"vgg", percent_matrix({1.6, 2.1, 8.5, 11.8, 5.6, 3.5,         //
                              1.5, 1.2, 8.1, 12.3, 3.2, 2.8,         //
                              2.0, 2.5, 3.9, 12.6, 6.7, 3.9,         //
                              0.3, 0.7, 5.0, 4.5,  2.2, 1.2,         //
                              2.0, 1.6, 9.5, 14.0, 1.9, 3.1,         //
                              0.6, 0.7, 4.3, 7.3,  2.3, 1.4})},
      {"googlenet", percent_matrix({4.0, 6.6, 15.0, 22.2, 16.7, 9.9,  //
                                    2.5, 2.3, 11.6, 18.5, 7.2,  4.9,  //
                                    5.8, 7.6, 4.6,  23.6, 16.6, 9.1,  //
                                    0.4, 0.8, 8.6,  5.8,  3.1,  1.4,  //
                                    2.6, 2.2, 11.8, 18.1, 3.4,  4.3,  //
                                    0.7, 0.9, 5.2,  9.5,  3.2,  2.0})},
      {"resnet", percent_matrix({7.3, 23.4, 23.3, 28.2, 31.8, 18.4,  //
                                 2.9, 2.8,  16.6, 19.0, 5.4,  5.8,   //
                                 5.3, 12.9, 4.2,  23.5, 20.1, 10.2,  //
                                 0.6, 3.1,  13.0, 6.8,  5.3,  2.4,   //
                                 3.5, 3.1,  17.0, 18.8, 3.2,  5.4,   //
                                 0.7, 1.2,  6.5,  9.3,  2.9,  2.3})},
  };
  return tables;
}

const std::vector<ReferenceOptimum>& reference_optima() {
  static const std::vector<ReferenceOptimum> optima = {
      {"alexnet", {{"/b", 1.00}}, 0.064},
      {"vgg", {{"/b", 0.86}, {"/tnbc", 0.14}}, 0.049},
      {"googlenet", {{"/b", 0.61}, {"/tnbc", 0.39}}, 0.073},
      {"resnet", {{"/b", 0.31}, {"/tnbc", 0.69}}, 0.085},
  };
  return optima;
}

std::filesystem::path default_fixture_dir() {
  if (const char* env = std::getenv("AIPGAME_DATA")) {
    return std::filesystem::path(env) / "fixtures";
  }
  return std::filesystem::path(AIPGAME_DATA_DIR) / "fixtures";
}

namespace {

constexpr double kFixtureIntegrityTol = 1e-12;
constexpr double kWeightTol = 0.01 + 1e-12;
constexpr double kBoundTol = 0.002 + 1e-12;

PayoffMatrix load_fixture_matrix(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw FixtureError("missing fixture file: " + path.string());
  }
  try {
    return load_payoff_csv(path);
  } catch (const std::exception& e) {
    throw FixtureError("corrupt fixture file " + path.string() + ": " + e.what());
  }
}

nlohmann::json load_fixture_optima(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw FixtureError("missing fixture file: " + path.string());
  }
  std::ifstream in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw FixtureError("corrupt fixture file " + path.string() + ": " + e.what());
  }
}

// Entry-exact comparison against the embedded table; any drift means the
// shipped file was edited and downstream numbers cannot be trusted.
void check_table_integrity(const PayoffMatrix& loaded, const PayoffMatrix& reference,
                           std::vector<std::string>& failures) {
  if (loaded.row_labels != reference.row_labels || loaded.col_labels != reference.col_labels) {
    failures.push_back("fixture strategy labels differ from the published table");
    return;
  }
  for (std::size_t i = 0; i < reference.rows(); ++i) {
    for (std::size_t j = 0; j < reference.cols(); ++j) {
      if (std::abs(loaded.at(i, j) - reference.at(i, j)) > kFixtureIntegrityTol) {
        failures.push_back("fixture entry (" + reference.row_labels[i] + ", " +
                           reference.col_labels[j] + ") deviates from the published value");
      }
    }
  }
}

void check_optima_integrity(const nlohmann::json& loaded, const ReferenceOptimum& reference,
                            std::vector<std::string>& failures) {
  if (!loaded.contains(reference.network)) {
    failures.push_back("expected-optima fixture lacks an entry for " + reference.network);
    return;
  }
  const nlohmann::json& entry = loaded.at(reference.network);
  if (!entry.contains("theta_u") || !entry.contains("bound")) {
    failures.push_back("expected-optima fixture entry for " + reference.network +
                       " lacks theta_u/bound");
    return;
  }
  const nlohmann::json& theta = entry.at("theta_u");
  if (theta.size() != reference.weights.size()) {
    failures.push_back("expected-optima support for " + reference.network +
                       " deviates from the published table");
    return;
  }
  for (const auto& [token, weight] : reference.weights) {
    if (!theta.contains(token) ||
        std::abs(theta.at(token).get<double>() - weight) > kFixtureIntegrityTol) {
      failures.push_back("expected-optima weight for " + reference.network + " / " + token +
                         " deviates from the published value");
    }
  }
  if (std::abs(entry.at("bound").get<double>() - reference.bound) > kFixtureIntegrityTol) {
    failures.push_back("expected-optima bound for " + reference.network +
                       " deviates from the published value");
  }
}

}  // namespace

VerifyPaperReport verify_paper(const std::filesystem::path& fixture_dir) {
  nlohmann::json optima_fixture = load_fixture_optima(fixture_dir / "expected_optima.json");

  VerifyPaperReport report;
  report.pass = true;
  for (const auto& [network, reference] : reference_tables()) {
    NetworkCheck check;
    check.network = network;

    PayoffMatrix loaded = load_fixture_matrix(fixture_dir / ("payoff_" + network + ".csv"));
    check_table_integrity(loaded, reference, check.failures);

    const ReferenceOptimum* expected = nullptr;
    for (const ReferenceOptimum& o : reference_optima()) {
      if (o.network == network) expected = &o;
    }
    check_optima_integrity(optima_fixture, *expected, check.failures);
    check.expected_bound = expected->bound;

    if (check.failures.empty()) {
      GameSolution solution = solve_minimax(loaded);
      check.value = solution.value;
      check.user = solution.user;
      for (std::size_t i = 0; i < loaded.rows(); ++i) {
        double want = 0.0;
        for (const auto& [token, weight] : expected->weights) {
          if (token == loaded.row_labels[i]) want = weight;
        }
        if (std::abs(solution.user.weights[i] - want) > kWeightTol) {
          check.failures.push_back("user weight for " + loaded.row_labels[i] + " is " +
                                   format_double(solution.user.weights[i]) + ", published " +
                                   format_double(want));
        }
      }
      if (std::abs(solution.value - expected->bound) > kBoundTol) {
        check.failures.push_back("game value " + format_double(solution.value) +
                                 " misses the published bound " +
                                 format_double(expected->bound));
      }
    }

    check.pass = check.failures.empty();
    report.pass = report.pass && check.pass;
    report.checks.push_back(std::move(check));
  }
  return report;
}

std::vector<SweepRow> sweep_epsilon(const Experiment& experiment, const ExperimentConfig& cfg,
                                    const std::vector<std::string>& methods,
                                    const std::vector<double>& eps_schedule) {
  require(!methods.empty(), "sweep needs at least one method");
  require(!eps_schedule.empty(), "sweep needs a nonempty eps schedule");
  for (double eps : eps_schedule) require(eps >= 0.0, "sweep eps must be nonnegative");

  PayoffOptions options = payoff_options_from(cfg);
  std::vector<SweepRow> rows;
  rows.reserve(methods.size() * eps_schedule.size());
  for (const std::string& method : methods) {
    for (double eps : eps_schedule) {
      options.eps = eps;
      rows.push_back({method, eps,
                      payoff_entry(experiment.model, experiment.test_set, method, "proc",
                                   cfg.seed, options)});
    }
  }
  return rows;
}

void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "method,eps,rate\n";
  for (const SweepRow& row : rows) {
    out << row.method << ',' << format_double(row.eps) << ',' << format_double(row.rate)
        << '\n';
  }
  if (!out) throw std::runtime_error("failed while writing " + path.string());
}

std::vector<SelectiveRow> run_selective(const std::vector<const Model*>& malicious,
                                        const std::vector<const Model*>& benign,
                                        const Dataset& dataset, const SelectiveConfig& cfg) {
  require(!malicious.empty(), "selective crafting needs at least one malicious model");
  require(!cfg.eps_schedule.empty(), "selective run needs a nonempty eps schedule");
  for (double eps : cfg.eps_schedule) require(eps >= 0.0, "selective eps must be nonnegative");
  for (const Model* m : malicious) require(m != nullptr, "null malicious model");
  for (const Model* m : benign) require(m != nullptr, "null benign model");
  dataset.validate();
  require(dataset.size() > 0, "selective run needs a nonempty dataset");

  const bool margin_step = cfg.loss == LossSpec::kMargin && !cfg.use_sign;
  AttackConfig base;
  base.loss = cfg.loss;
  base.use_sign = cfg.use_sign;
  base.gamma = cfg.gamma.value_or(margin_step ? 5e3 : 1e4);
  base.iterations = cfg.iterations;

  const std::uint64_t tag = token_hash("selective");
  std::vector<SelectiveRow> rows;
  for (double eps : cfg.eps_schedule) {
    std::vector<long> m_hits(dataset.size(), 0);
    std::vector<long> b_hits(dataset.size(), 0);
    parallel_for(dataset.size(), cfg.threads, [&](std::size_t k) {
      const Tensor& x = dataset.images[k];
      const std::size_t label = dataset.labels[k];
      Tensor payload = x;
      if (eps > 0.0) {
        SelectiveSpec spec;
        for (const Model* m : malicious) spec.malicious.push_back({m, label, 1.0});
        for (const Model* m : benign) spec.benign.push_back({m, label, 1.0});
        AttackConfig attack = base;
        attack.eps = eps;
        SeededRng rng(mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(k)), tag));
        payload += craft_selective(spec, x, attack, rng.child(0));
      }
      Tensor processed = apply_proc(payload);
      long m_count = 0;
      for (const Model* m : malicious) m_count += predict(*m, processed) == label ? 1 : 0;
      long b_count = 0;
      for (const Model* m : benign) b_count += predict(*m, processed) == label ? 1 : 0;
      m_hits[k] = m_count;
      b_hits[k] = b_count;
    });

    long m_total = 0;
    long b_total = 0;
    for (std::size_t k = 0; k < dataset.size(); ++k) {
      m_total += m_hits[k];
      b_total += b_hits[k];
    }
    SelectiveRow row;
    row.eps = eps;
    row.malicious_rate = static_cast<double>(m_total) /
                         (static_cast<double>(dataset.size()) * malicious.size());
    row.benign_rate = benign.empty()
                          ? 0.0
                          : static_cast<double>(b_total) /
                                (static_cast<double>(dataset.size()) * benign.size());
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json selective_report_json(const std::vector<SelectiveRow>& rows) {
  nlohmann::json list = nlohmann::json::array();
  for (const SelectiveRow& row : rows) {
    list.push_back({{"eps", row.eps},
                    {"malicious_rate", row.malicious_rate},
                    {"benign_rate", row.benign_rate}});
  }
  return nlohmann::json{{"rows", list}};
}

}  // namespace aipgame
