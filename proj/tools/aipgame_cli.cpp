// Command-line surface over the library: dataset synthesis, training,
// single-image attacks, payoff tables, game solving, the published-table
// verification, the eps sweep, and the selective protocol.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aipgame/aip.hpp"
#include "aipgame/classifier.hpp"
#include "aipgame/errors.hpp"
#include "aipgame/game.hpp"
#include "aipgame/harness.hpp"
#include "aipgame/image_io.hpp"
#include "aipgame/processing.hpp"
#include "aipgame/rng.hpp"
#include "aipgame/tensor.hpp"

namespace {

using namespace aipgame;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitFixture = 3;

struct GlobalArgs {
  std::uint64_t seed = 7;
  double eps = 0.0;
  double gamma = 0.0;
  int iters = 100;
  std::string out;
  CLI::Option* eps_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;

  bool eps_given() const { return eps_opt != nullptr && eps_opt->count() > 0; }
  bool gamma_given() const { return gamma_opt != nullptr && gamma_opt->count() > 0; }
};

void require_arg(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

void write_image_or_tensor(const std::filesystem::path& path, const Tensor& image) {
  if (path.extension() == ".pgm") {
    write_pgm(path, image);
  } else {
    write_tensor(path, image);
  }
}

void emit_json(const nlohmann::json& report, const std::string& out) {
  if (out.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream stream(out);
  if (!stream) throw std::runtime_error("cannot open " + out + " for writing");
  stream << report.dump(2) << "\n";
}

struct SynthArgs {
  std::size_t classes = 10;
  std::size_t per_class = 30;
  std::size_t height = 16;
  std::size_t width = 16;
  double sigma = 8.0;
};

int run_synth(const GlobalArgs& g, const SynthArgs& a) {
  require_arg(!g.out.empty(), "synth needs --out <directory>");
  Dataset data =
      generate_synthetic_dataset(a.classes, a.per_class, a.height, a.width, a.sigma, g.seed);
  save_dataset(g.out, data);
  std::cout << "wrote " << data.size() << " samples (" << a.classes << " classes, " << a.height
            << "x" << a.width << ") to " << g.out << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string data_dir;
  std::size_t hidden = 32;
  std::size_t epochs = TrainConfig{}.epochs;
  std::size_t batch = TrainConfig{}.batch_size;
  double learning_rate = TrainConfig{}.learning_rate;
};

int run_train(const GlobalArgs& g, const TrainArgs& a) {
  require_arg(!g.out.empty(), "train needs --out <model.tnsr>");
  Dataset data = load_dataset(a.data_dir);
  ModelSpec spec{ModelKind::kOneHidden, a.hidden};
  TrainConfig config;
  config.learning_rate = a.learning_rate;
  config.epochs = a.epochs;
  config.batch_size = a.batch;
  config.seed = g.seed;
  Model model = train(spec, data, config);
  save_model(g.out, model);
  std::cout << "trained on " << data.size() << " samples, train accuracy "
            << accuracy(model, data) << ", saved to " << g.out << "\n";
  return kExitOk;
}

struct AttackArgs {
  std::string model_path;
  std::string image_path;
  std::size_t label = 0;
  std::string method = "gaman";
  std::string delta_out;
};

int run_attack(const GlobalArgs& g, const AttackArgs& a) {
  require_arg(!g.out.empty(), "attack needs --out <image path>");
  Model model = load_model(a.model_path);
  Tensor image = read_image(a.image_path);
  UserStrategy strategy = user_strategy_from_token(a.method);

  Tensor perturbation = [&] {
    if (g.eps_given() && g.eps == 0.0) return Tensor::zeros_like(image);
    AttackConfig overrides;
    overrides.eps = g.eps_given() ? g.eps : 0.0;
    overrides.gamma = g.gamma_given() ? g.gamma : 0.0;
    overrides.iterations = g.iters;
    return craft(model, image, a.label, strategy, overrides, ProcessingConfig{},
                 SeededRng(g.seed));
  }();

  Tensor adversarial = image;
  adversarial += perturbation;
  std::cout << "method " << strategy.token << ", |t|_2 = " << l2_norm(perturbation)
            << ", prediction " << predict(model, image) << " -> "
            << predict(model, adversarial) << " (label " << a.label << ")\n";
  write_image_or_tensor(g.out, adversarial);
  if (!a.delta_out.empty()) write_tensor(a.delta_out, perturbation);
  return kExitOk;
}

struct TableArgs {
  std::vector<std::string> users = {"gaman",   "gaman/t", "gaman/n",
                                    "gaman/b", "gaman/c", "gaman/tnbc"};
  std::vector<std::string> recognizers = {"proc", "t", "n", "b", "c", "tnbc"};
  std::size_t trials = 1;
  std::size_t threads = 0;
  bool percent = false;
};

ExperimentConfig experiment_config(const GlobalArgs& g, std::size_t trials,
                                   std::size_t threads) {
  ExperimentConfig cfg;
  cfg.seed = g.seed;
  cfg.trials = trials;
  cfg.threads = threads;
  if (g.eps_given()) {
    require_arg(g.eps > 0.0, "eps must be positive here (a zero-eps curve point is the sweep"
                             " subcommand's job)");
    cfg.attack.eps = g.eps;
  }
  if (g.gamma_given()) {
    require_arg(g.gamma > 0.0, "gamma must be positive");
    cfg.attack.gamma = g.gamma;
  }
  cfg.attack.iterations = g.iters;
  return cfg;
}

int run_payoff(const GlobalArgs& g, const TableArgs& a) {
  require_arg(!g.out.empty(), "payoff needs --out <table.csv>");
  ExperimentConfig cfg = experiment_config(g, a.trials, a.threads);
  cfg.user_tokens = a.users;
  cfg.recognizer_tokens = a.recognizers;
  Experiment experiment = prepare_experiment(cfg);
  std::cout << "clean test accuracy " << accuracy(experiment.model, experiment.test_set)
            << "\n";
  PayoffMatrix table = build_payoff_table(experiment, cfg);
  save_payoff_csv(g.out, table, a.percent);
  std::cout << "wrote " << table.rows() << "x" << table.cols() << " payoff table to " << g.out
            << "\n";
  return kExitOk;
}

int run_solve(const GlobalArgs& g, const std::string& table_path) {
  PayoffMatrix table = load_payoff_csv(table_path);
  emit_json(run_game_analysis(table), g.out);
  return kExitOk;
}

int run_verify_paper(const GlobalArgs& g, std::string fixtures) {
  std::filesystem::path dir =
      fixtures.empty() ? default_fixture_dir() : std::filesystem::path(fixtures);
  VerifyPaperReport report = verify_paper(dir);

  nlohmann::json checks = nlohmann::json::array();
  for (const NetworkCheck& check : report.checks) {
    std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << check.network
              << ": value = " << check.value << ", published bound = " << check.expected_bound
              << "\n";
    nlohmann::json theta = nlohmann::json::object();
    for (std::size_t i = 0; i < check.user.labels.size(); ++i) {
      if (check.user.weights[i] > 1e-12) theta[check.user.labels[i]] = check.user.weights[i];
    }
    for (const std::string& failure : check.failures) {
      std::cout << "       " << failure << "\n";
    }
    checks.push_back({{"network", check.network},
                      {"pass", check.pass},
                      {"value", check.value},
                      {"bound", check.expected_bound},
                      {"theta_u", theta},
                      {"failures", check.failures}});
  }
  if (!g.out.empty()) emit_json({{"pass", report.pass}, {"checks", checks}}, g.out);
  std::cout << (report.pass ? "all published optima recovered\n"
                            : "published-table verification FAILED\n");
  return report.pass ? kExitOk : kExitFixture;
}

struct SweepArgs {
  std::vector<std::string> methods = {"gaman"};
  std::vector<double> eps_list = {0.0, 10.0, 20.0, 40.0, 80.0};
  std::size_t trials = 1;
  std::size_t threads = 0;
};

int run_sweep(const GlobalArgs& g, const SweepArgs& a) {
  require_arg(!g.out.empty(), "sweep needs --out <curve.csv>");
  ExperimentConfig cfg = experiment_config(g, a.trials, a.threads);
  Experiment experiment = prepare_experiment(cfg);
  std::vector<SweepRow> rows = sweep_epsilon(experiment, cfg, a.methods, a.eps_list);
  save_sweep_csv(g.out, rows);
  std::cout << "wrote " << rows.size() << " sweep rows to " << g.out << "\n";
  return kExitOk;
}

struct SelectiveArgs {
  std::vector<double> eps_list;  // empty = scaled 500/1000/2000 defaults
  std::size_t threads = 0;
};

int run_selective_cmd(const GlobalArgs& g, const SelectiveArgs& a) {
  ExperimentConfig cfg = experiment_config(g, 1, a.threads);
  Experiment experiment = prepare_experiment(cfg);
  Model sibling = train_sibling_model(experiment, cfg, "benign");

  SelectiveConfig selective;
  selective.eps_schedule = a.eps_list;
  if (selective.eps_schedule.empty()) {
    std::size_t pixels = cfg.height * cfg.width;
    selective.eps_schedule = {scaled_eps(500.0, pixels), scaled_eps(1000.0, pixels),
                              scaled_eps(2000.0, pixels)};
  }
  selective.iterations = g.iters;
  if (g.gamma_given()) selective.gamma = g.gamma;
  selective.seed = g.seed;
  selective.threads = a.threads;

  std::vector<SelectiveRow> rows =
      run_selective({&experiment.model}, {&sibling}, experiment.test_set, selective);
  emit_json(selective_report_json(rows), g.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial-perturbation game toolkit"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--seed", g.seed, "base seed for every derived random stream");
  g.eps_opt = app.add_option("--eps", g.eps, "L2 perturbation budget (default: per-method)");
  g.gamma_opt = app.add_option("--gamma", g.gamma, "gradient step size (default: per-method)");
  app.add_option("--iters", g.iters, "iteration count for iterative attacks")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output path");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
  SynthArgs synth_args;
  synth->add_option("--classes", synth_args.classes, "number of classes");
  synth->add_option("--per-class", synth_args.per_class, "samples per class");
  synth->add_option("--height", synth_args.height, "image height");
  synth->add_option("--width", synth_args.width, "image width");
  synth->add_option("--sigma", synth_args.sigma, "per-pixel noise sigma");

  auto* train_cmd = app.add_subcommand("train", "train the desk-scale classifier");
  TrainArgs train_args;
  train_cmd->add_option("--data", train_args.data_dir, "dataset directory")->required();
  train_cmd->add_option("--hidden", train_args.hidden, "hidden layer width");
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
  train_cmd->add_option("--batch", train_args.batch, "minibatch size");
  train_cmd->add_option("--lr", train_args.learning_rate, "learning rate");

  auto* attack = app.add_subcommand("attack", "perturb a single image");
  AttackArgs attack_args;
  attack->add_option("--model", attack_args.model_path, "model file")->required();
  attack->add_option("--image", attack_args.image_path, "input image (.pgm or .tnsr)")
      ->required();
  attack->add_option("--label", attack_args.label, "true class label")->required();
  attack->add_option("--method", attack_args.method, "user strategy token");
  attack->add_option("--write-delta", attack_args.delta_out,
                     "also write the raw perturbation tensor here");

  auto* payoff = app.add_subcommand("payoff", "build a payoff table over the toy pipeline");
  TableArgs table_args;
  payoff->add_option("--users", table_args.users, "user strategy tokens")->delimiter(',');
  payoff->add_option("--recognizers", table_args.recognizers, "recognizer strategy tokens")
      ->delimiter(',');
  payoff->add_option("--trials", table_args.trials, "ensemble evaluations per sample");
  payoff->add_option("--threads", table_args.threads, "worker threads (0 = hardware)");
  payoff->add_flag("--percent", table_args.percent, "write percentages instead of rates");

  auto* solve = app.add_subcommand("solve", "solve a payoff table CSV and report the game");
  std::string table_path;
  solve->add_option("--table", table_path, "payoff table CSV")->required();

  auto* verify = app.add_subcommand("verify-paper", "replay the published payoff tables");
  std::string fixtures;
  verify->add_option("--fixtures", fixtures, "fixture directory (default: shipped data)");

  auto* sweep = app.add_subcommand("sweep", "recognition-rate curve over eps, post-Proc");
  SweepArgs sweep_args;
  sweep->add_option("--methods", sweep_args.methods, "user strategy tokens")->delimiter(',');
  sweep->add_option("--eps-list", sweep_args.eps_list, "L2 budgets to evaluate")
      ->delimiter(',');
  sweep->add_option("--trials", sweep_args.trials, "ensemble evaluations per sample");
  sweep->add_option("--threads", sweep_args.threads, "worker threads (0 = hardware)");

  auto* selective = app.add_subcommand("selective", "craft AIPs that spare a second model");
  SelectiveArgs selective_args;
  selective->add_option("--eps-list", selective_args.eps_list, "L2 budgets to evaluate")
      ->delimiter(',');
  selective->add_option("--threads", selective_args.threads, "worker threads (0 = hardware)");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (synth->parsed()) return run_synth(g, synth_args);
    if (train_cmd->parsed()) return run_train(g, train_args);
    if (attack->parsed()) return run_attack(g, attack_args);
    if (payoff->parsed()) return run_payoff(g, table_args);
    if (solve->parsed()) return run_solve(g, table_path);
    if (verify->parsed()) return run_verify_paper(g, fixtures);
    if (sweep->parsed()) return run_sweep(g, sweep_args);
    if (selective->parsed()) return run_selective_cmd(g, selective_args);
  } catch (const FixtureError& e) {
    std::cerr << "fixture error: " << e.what() << "\n";
    return kExitFixture;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
