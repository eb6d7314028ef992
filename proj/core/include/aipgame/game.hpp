#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aipgame/errors.hpp"

namespace aipgame {

/// Recognition-rate table of the user-vs-recognizer game. Rows are user
/// strategies, columns recognizer strategies; entry (i, j) is the expected
/// recognition rate in [0, 1]. The user minimizes, the recognizer maximizes
/// (the game is constant-sum).
struct PayoffMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<double> entries;  // rows x cols, row-major

  PayoffMatrix() = default;
  PayoffMatrix(std::vector<std::string> rows, std::vector<std::string> cols,
               std::vector<double> values);

  std::size_t rows() const { return row_labels.size(); }
  std::size_t cols() const { return col_labels.size(); }
  double at(std::size_t i, std::size_t j) const { return entries[i * cols() + j]; }
  double& at(std::size_t i, std::size_t j) { return entries[i * cols() + j]; }

  /// Throws std::invalid_argument on inconsistent sizes, duplicate labels,
  /// or entries outside [0, 1].
  void validate() const;
};

struct MixedStrategy {
  std::vector<std::string> labels;
  std::vector<double> weights;  // same length as labels, sums to 1
};

struct GameSolution {
  MixedStrategy user;        // theta_u over the row labels
  MixedStrategy recognizer;  // theta_r over the column labels
  double value = 0.0;        // guaranteed recognition rate
};

/// theta_u^T P theta_r for full-length weight vectors.
double expected_payoff(const PayoffMatrix& matrix, const std::vector<double>& user_weights,
                       const std::vector<double>& recognizer_weights);

/// Exact minimax equilibrium by linear programming (dense simplex with
/// Bland's rule). The returned solution always passes verify_saddle at
/// tolerance 1e-7.
GameSolution solve_minimax(const PayoffMatrix& matrix);

struct SaddleReport {
  bool ok = false;
  double max_violation = 0.0;
};

/// Checks that no pure strategy on either side improves on value by more
/// than tol, and that both mixtures are proper distributions.
SaddleReport verify_saddle(const PayoffMatrix& matrix, const GameSolution& solution,
                           double tol);

/// Best deterministic (pure-row) guarantee for the user: the row whose
/// worst column is lowest. Returns (row index, guarantee).
std::pair<std::size_t, double> solve_deterministic(const PayoffMatrix& matrix);

/// Best user response against a fixed recognizer mixture: the row with the
/// lowest expected rate. Returns (row index, expected rate).
std::pair<std::size_t, double> best_response_user(const PayoffMatrix& matrix,
                                                  const std::vector<double>& recognizer_weights);

/// Sub-game on the given labels (order preserved); unknown labels throw.
PayoffMatrix restrict(const PayoffMatrix& matrix, const std::vector<std::string>& rows,
                             const std::vector<std::string>& cols);

/// Independent equilibrium finder for cross-checking the LP: enumerates
/// square supports and solves the equalization systems directly. Only
/// matrices up to 4 x 4 are supported.
GameSolution oracle_minimax_small(const PayoffMatrix& matrix);

/// CSV layout: optional "# scale=percent" flag line(s), then a header row
/// of column labels (leading cell empty), then one row per user strategy.
/// With the percent flag, stored values are 100x the internal [0, 1] scale.
PayoffMatrix load_payoff_csv(const std::filesystem::path& path);
void save_payoff_csv(const std::filesystem::path& path, const PayoffMatrix& matrix,
                     bool percent_scale);

/// {"theta_u": {...}, "theta_r": {...}, "value": v}; weights below 1e-12
/// are dropped from the maps.
nlohmann::json solution_to_json(const GameSolution& solution);

}  // namespace aipgame
