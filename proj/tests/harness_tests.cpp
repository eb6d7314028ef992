#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>

#include "aipgame/errors.hpp"
#include "aipgame/harness.hpp"

using namespace aipgame;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.class_count = 3;
  cfg.per_class = 6;
  cfg.train_per_class = 4;
  cfg.height = 8;
  cfg.width = 8;
  cfg.noise_sigma = 6.0;
  cfg.model_spec = ModelSpec{ModelKind::kOneHidden, 8};
  cfg.train_config.epochs = 25;
  cfg.attack.iterations = 15;
  cfg.seed = 11;
  cfg.threads = 2;
  return cfg;
}

const Experiment& tiny_experiment() {
  static const Experiment experiment = prepare_experiment(tiny_config());
  return experiment;
}

const PayoffMatrix& reference(const std::string& network) {
  for (const auto& [name, matrix] : reference_tables()) {
    if (name == network) return matrix;
  }
  throw std::runtime_error("no such reference table: " + network);
}

std::filesystem::path make_fixture_copy(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("aipgame_fixtures_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  for (const auto& entry : std::filesystem::directory_iterator(default_fixture_dir())) {
    std::filesystem::copy_file(entry.path(), dir / entry.path().filename());
  }
  return dir;
}

void rewrite_file(const std::filesystem::path& path, const std::string& from,
                  const std::string& to) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = std::move(buffer).str();
  std::size_t at = text.find(from);
  REQUIRE(at != std::string::npos);
  text.replace(at, from.size(), to);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("experiment preparation is deterministic and seed-sensitive") {
    ExperimentConfig cfg = tiny_config();
    Experiment a = prepare_experiment(cfg);
    Experiment b = prepare_experiment(cfg);
    CHECK(a.model.w1 == b.model.w1);
    CHECK(a.model.w2 == b.model.w2);
    REQUIRE(a.test_set.size() == b.test_set.size());
    CHECK(a.test_set.labels == b.test_set.labels);
    for (std::size_t i = 0; i < a.test_set.size(); ++i) {
      CHECK(a.test_set.images[i] == b.test_set.images[i]);
    }
    CHECK(a.train_set.size() == cfg.class_count * cfg.train_per_class);
    CHECK(a.test_set.size() == cfg.class_count * (cfg.per_class - cfg.train_per_class));

    ExperimentConfig other = cfg;
    other.seed = 12;
    Experiment c = prepare_experiment(other);
    CHECK(c.model.w1 != a.model.w1);
  }

  TEST_CASE("the default experiment trains to a usable recognizer") {
    Experiment experiment = prepare_experiment(ExperimentConfig{});
    CHECK(accuracy(experiment.model, experiment.test_set) >= 0.90);
  }

  TEST_CASE("sibling models share data but not initialization") {
    ExperimentConfig cfg = tiny_config();
    const Experiment& experiment = tiny_experiment();
    Model sibling = train_sibling_model(experiment, cfg, "benign");
    Model again = train_sibling_model(experiment, cfg, "benign");
    CHECK(sibling.w1 == again.w1);
    CHECK(sibling.w1 != experiment.model.w1);
  }

  TEST_CASE("config validation") {
    ExperimentConfig cfg = tiny_config();
    cfg.class_count = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.train_per_class = cfg.per_class;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.user_tokens.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.trials = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("a no-attack no-defense payoff entry is the plain accuracy") {
    const Experiment& experiment = tiny_experiment();
    double rate = payoff_entry(experiment.model, experiment.test_set, "none", "none", 11);
    CHECK(rate == accuracy(experiment.model, experiment.test_set));
  }

  TEST_CASE("zero-eps crafting is the clean evaluation") {
    const Experiment& experiment = tiny_experiment();
    PayoffOptions clean;
    clean.eps = 0.0;
    clean.iterations = 15;
    double attacked =
        payoff_entry(experiment.model, experiment.test_set, "gaman", "proc", 11, clean);
    double baseline = payoff_entry(experiment.model, experiment.test_set, "none", "proc", 11);
    CHECK(attacked == baseline);
  }

  TEST_CASE("payoff entries are deterministic and thread-count independent") {
    const Experiment& experiment = tiny_experiment();
    PayoffOptions serial;
    serial.iterations = 15;
    serial.threads = 1;
    PayoffOptions parallel = serial;
    parallel.threads = 4;
    double a = payoff_entry(experiment.model, experiment.test_set, "gaman", "b", 11, serial);
    double b = payoff_entry(experiment.model, experiment.test_set, "gaman", "b", 11, parallel);
    double c = payoff_entry(experiment.model, experiment.test_set, "gaman", "b", 11, serial);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }

  TEST_CASE("payoff respects the trial knob deterministically") {
    const Experiment& experiment = tiny_experiment();
    PayoffOptions options;
    options.iterations = 10;
    options.trials = 3;
    double a = payoff_entry(experiment.model, experiment.test_set, "ga", "n", 11, options);
    double b = payoff_entry(experiment.model, experiment.test_set, "ga", "n", 11, options);
    CHECK(a == b);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }

  TEST_CASE("payoff tables keep the configured menu order") {
    ExperimentConfig cfg = tiny_config();
    cfg.user_tokens = {"none"};
    cfg.recognizer_tokens = {"none"};
    const Experiment& experiment = tiny_experiment();
    PayoffMatrix table = build_payoff_table(experiment, cfg);
    REQUIRE(table.rows() == 1);
    REQUIRE(table.cols() == 1);
    CHECK(table.row_labels[0] == "none");
    CHECK(table.at(0, 0) == accuracy(experiment.model, experiment.test_set));

    cfg.user_tokens = {"none", "fgs"};
    cfg.recognizer_tokens = {"proc", "b"};
    cfg.attack.iterations = 5;
    PayoffMatrix wider = build_payoff_table(experiment, cfg);
    CHECK(wider.row_labels == std::vector<std::string>{"none", "fgs"});
    CHECK(wider.col_labels == std::vector<std::string>{"proc", "b"});
    CHECK(wider.at(0, 0) ==
          payoff_entry(experiment.model, experiment.test_set, "none", "proc", cfg.seed,
                       PayoffOptions{cfg.processing, {}, {}, 5, cfg.trials, cfg.threads}));
  }

  TEST_CASE("game analysis of the mid-size published table") {
    nlohmann::json report = run_game_analysis(reference("googlenet"));

    CHECK(report["deterministic"]["user"].get<std::string>() == "/b");
    CHECK(report["deterministic"]["guarantee"].get<double>() ==
          doctest::Approx(0.086).epsilon(1e-9));

    CHECK(report["minimax"]["saddle_ok"].get<bool>());
    CHECK(std::abs(report["minimax"]["value"].get<double>() - 0.073) <= 0.002 + 1e-12);
    const nlohmann::json& theta_u = report["minimax"]["theta_u"];
    REQUIRE(theta_u.contains("/b"));
    REQUIRE(theta_u.contains("/tnbc"));
    CHECK(std::abs(theta_u["/b"].get<double>() - 0.61) <= 0.01);
    CHECK(std::abs(theta_u["/tnbc"].get<double>() - 0.39) <= 0.01);
    const nlohmann::json& theta_r = report["minimax"]["theta_r"];
    REQUIRE(theta_r.contains("n"));
    REQUIRE(theta_r.contains("b"));
    CHECK(std::abs(theta_r["n"].get<double>() - 0.52) <= 0.01);
    CHECK(std::abs(theta_r["b"].get<double>() - 0.48) <= 0.01);

    CHECK(report["best_response"]["pure"]["b"]["user"].get<std::string>() == "/b");
    CHECK(report["best_response"]["pure"]["b"]["rate"].get<double>() ==
          doctest::Approx(0.058).epsilon(1e-9));
    CHECK(report["best_response"]["uniform"]["user"].get<std::string>() == "/b");
    CHECK(report["best_response"]["uniform"]["rate"].get<double>() ==
          doctest::Approx(0.0335).epsilon(1e-9));

    const nlohmann::json& blind = report["limited_knowledge"]["n"];
    CHECK(blind["apparent"].get<double>() == doctest::Approx(0.058).epsilon(1e-6));
    CHECK(blind["realized"].get<double>() == doctest::Approx(0.086).epsilon(1e-6));
  }

  TEST_CASE("game analysis of a single-cell table") {
    PayoffMatrix single({"only"}, {"one"}, {0.37});
    nlohmann::json report = run_game_analysis(single);
    CHECK(report["deterministic"]["guarantee"].get<double>() == doctest::Approx(0.37));
    CHECK(report["minimax"]["value"].get<double>() == doctest::Approx(0.37));
    CHECK(report["best_response"]["pure"]["one"]["rate"].get<double>() ==
          doctest::Approx(0.37));
    CHECK(report["limited_knowledge"].empty());
  }

  TEST_CASE("mixed play never does worse than deterministic play") {
    for (const auto& [network, matrix] : reference_tables()) {
      nlohmann::json report = run_game_analysis(matrix);
      CHECK(report["minimax"]["value"].get<double>() <=
            report["deterministic"]["guarantee"].get<double>() + 1e-9);
    }
  }

  TEST_CASE("pristine fixtures verify cleanly") {
    VerifyPaperReport report = verify_paper(default_fixture_dir());
    CHECK(report.pass);
    REQUIRE(report.checks.size() == 4);
    for (const NetworkCheck& check : report.checks) {
      CHECK(check.pass);
      CHECK(check.failures.empty());
      CHECK(std::abs(check.value - check.expected_bound) <= 0.002 + 1e-12);
    }
  }

  TEST_CASE("a tampered payoff cell fails only its network") {
    auto dir = make_fixture_copy("tamper_cell");
    rewrite_file(dir / "payoff_googlenet.csv", ",22.2,", ",22.3,");
    VerifyPaperReport report = verify_paper(dir);
    CHECK_FALSE(report.pass);
    for (const NetworkCheck& check : report.checks) {
      if (check.network == "googlenet") {
        CHECK_FALSE(check.pass);
        REQUIRE_FALSE(check.failures.empty());
        CHECK(check.failures.front().find("deviates") != std::string::npos);
      } else {
        CHECK(check.pass);
      }
    }
  }

  TEST_CASE("a tampered expected bound fails verification") {
    auto dir = make_fixture_copy("tamper_bound");
    rewrite_file(dir / "expected_optima.json", "0.049", "0.059");
    VerifyPaperReport report = verify_paper(dir);
    CHECK_FALSE(report.pass);
    bool vgg_failed = false;
    for (const NetworkCheck& check : report.checks) {
      if (check.network == "vgg") vgg_failed = !check.pass;
    }
    CHECK(vgg_failed);
  }

  TEST_CASE("missing fixture files raise a fixture error") {
    auto dir = std::filesystem::temp_directory_path() / "aipgame_fixtures_empty";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    CHECK_THROWS_AS(verify_paper(dir), FixtureError);
  }

  TEST_CASE("an unparseable fixture raises a fixture error") {
    auto dir = make_fixture_copy("corrupt_csv");
    {
      std::ofstream out(dir / "payoff_alexnet.csv", std::ios::binary | std::ios::trunc);
      out << "not,a,payoff\nfile";
    }
    CHECK_THROWS_AS(verify_paper(dir), FixtureError);
  }

  TEST_CASE("epsilon sweeps share the clean anchor across methods") {
    ExperimentConfig cfg = tiny_config();
    cfg.attack.iterations = 8;
    const Experiment& experiment = tiny_experiment();
    std::vector<SweepRow> rows =
        sweep_epsilon(experiment, cfg, {"gaman", "fgs"}, {0.0, 12.0});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].method == "gaman");
    CHECK(rows[0].eps == 0.0);
    CHECK(rows[1].eps == 12.0);
    CHECK(rows[2].method == "fgs");
    CHECK(rows[0].rate == rows[2].rate);  // eps 0 is clean for every method
    for (const SweepRow& row : rows) {
      CHECK(row.rate >= 0.0);
      CHECK(row.rate <= 1.0);
    }
    CHECK_THROWS_AS(sweep_epsilon(experiment, cfg, {}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(sweep_epsilon(experiment, cfg, {"gaman"}, {}), std::invalid_argument);
    CHECK_THROWS_AS(sweep_epsilon(experiment, cfg, {"gaman"}, {-1.0}), std::invalid_argument);
  }

  TEST_CASE("sweep csv has the expected shape") {
    std::vector<SweepRow> rows = {{"gaman", 0.0, 0.9}, {"gaman", 12.5, 0.25}};
    auto path = std::filesystem::temp_directory_path() / "aipgame_sweep.csv";
    save_sweep_csv(path, rows);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "method,eps,rate");
    std::getline(in, line);
    CHECK(line == "gaman,0,0.9");
    std::getline(in, line);
    CHECK(line == "gaman,12.5,0.25");
  }

  TEST_CASE("selective runs anchor at the clean rate and handle empty benign sets") {
    const Experiment& experiment = tiny_experiment();
    ExperimentConfig cfg = tiny_config();
    Model sibling = train_sibling_model(experiment, cfg, "benign");

    SelectiveConfig sel;
    sel.eps_schedule = {0.0, 30.0};
    sel.iterations = 10;
    sel.seed = 11;
    std::vector<SelectiveRow> rows =
        run_selective({&experiment.model}, {&sibling}, experiment.test_set, sel);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].eps == 0.0);
    CHECK(rows[0].malicious_rate == accuracy(experiment.model, experiment.test_set));
    CHECK(rows[0].benign_rate == accuracy(sibling, experiment.test_set));
    for (const SelectiveRow& row : rows) {
      CHECK(row.malicious_rate >= 0.0);
      CHECK(row.malicious_rate <= 1.0);
      CHECK(row.benign_rate >= 0.0);
      CHECK(row.benign_rate <= 1.0);
    }

    std::vector<SelectiveRow> solo =
        run_selective({&experiment.model}, {}, experiment.test_set, sel);
    CHECK(solo[0].benign_rate == 0.0);
    CHECK(solo[1].benign_rate == 0.0);

    SelectiveConfig bad = sel;
    bad.eps_schedule = {};
    CHECK_THROWS_AS(run_selective({&experiment.model}, {}, experiment.test_set, bad),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_selective({}, {}, experiment.test_set, sel), std::invalid_argument);
  }

  TEST_CASE("selective runs are thread-count independent") {
    const Experiment& experiment = tiny_experiment();
    SelectiveConfig sel;
    sel.eps_schedule = {20.0};
    sel.iterations = 8;
    sel.seed = 11;
    sel.threads = 1;
    std::vector<SelectiveRow> serial =
        run_selective({&experiment.model}, {}, experiment.test_set, sel);
    sel.threads = 4;
    std::vector<SelectiveRow> parallel =
        run_selective({&experiment.model}, {}, experiment.test_set, sel);
    CHECK(serial[0].malicious_rate == parallel[0].malicious_rate);
  }

  TEST_CASE("selective report json shape") {
    nlohmann::json j = selective_report_json({{10.0, 0.2, 0.9}});
    REQUIRE(j.contains("rows"));
    REQUIRE(j["rows"].size() == 1);
    CHECK(j["rows"][0]["eps"].get<double>() == 10.0);
    CHECK(j["rows"][0]["malicious_rate"].get<double>() == 0.2);
    CHECK(j["rows"][0]["benign_rate"].get<double>() == 0.9);
  }

  TEST_CASE("reference data is internally consistent") {
    REQUIRE(reference_tables().size() == 4);
    for (const auto& [network, matrix] : reference_tables()) {
      CHECK(matrix.rows() == 6);
      CHECK(matrix.cols() == 6);
      CHECK_NOTHROW(matrix.validate());
    }
    REQUIRE(reference_optima().size() == 4);
    for (const ReferenceOptimum& ref : reference_optima()) {
      double mass = 0.0;
      for (const auto& [token, weight] : ref.weights) mass += weight;
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}
