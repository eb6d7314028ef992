#include "aipgame/game.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace aipgame {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

constexpr double kPivotTol = 1e-9;
constexpr double kSaddleTol = 1e-7;

// Dense tableau simplex for: max c.x subject to A x <= b, x >= 0, with
// b >= 0 so the slack basis is feasible. Bland's smallest-index rule on
// both the entering and leaving choice guarantees termination.
struct SimplexResult {
  std::vector<double> x;      // primal solution, length n
  std::vector<double> duals;  // one multiplier per constraint, length m
  double objective = 0.0;
};

SimplexResult simplex_max(const std::vector<std::vector<double>>& a,
                          const std::vector<double>& b, const std::vector<double>& c) {
  const std::size_t m = a.size();
  const std::size_t n = c.size();
  const std::size_t rhs = n + m;

  std::vector<std::vector<double>> t(m + 1, std::vector<double>(n + m + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    if (b[i] < 0.0) throw std::invalid_argument("simplex: negative right-hand side");
    for (std::size_t j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1.0;
    t[i][rhs] = b[i];
  }
  for (std::size_t j = 0; j < n; ++j) t[m][j] = -c[j];

  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

  for (;;) {
    // Entering variable: smallest index with a negative reduced cost.
    std::size_t enter = rhs;
    for (std::size_t j = 0; j < rhs; ++j)
      if (t[m][j] < -kPivotTol) {
        enter = j;
        break;
      }
    if (enter == rhs) break;  // optimal

    // Leaving row: minimum ratio, ties by smallest basis variable.
    std::size_t leave = m;
    double best_ratio = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][enter] <= kPivotTol) continue;
      double ratio = t[i][rhs] / t[i][enter];
      if (leave == m || ratio < best_ratio - kPivotTol ||
          (std::abs(ratio - best_ratio) <= kPivotTol && basis[i] < basis[leave])) {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave == m) throw std::runtime_error("simplex: unbounded program");

    // Pivot on (leave, enter).
    double pivot = t[leave][enter];
    for (double& v : t[leave]) v /= pivot;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == leave) continue;
      double factor = t[i][enter];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= rhs; ++j) t[i][j] -= factor * t[leave][j];
    }
    basis[leave] = enter;
  }

  SimplexResult result;
  result.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) result.x[basis[i]] = t[i][rhs];
  result.duals.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) result.duals[i] = t[m][n + i];
  result.objective = t[m][rhs];
  return result;
}

// Clamp stray negatives from the tableau and renormalize to a proper
// distribution.
std::vector<double> tidy_weights(std::vector<double> w) {
  double total = 0.0;
  for (double& v : w) {
    if (v < 0.0) {
      if (v < -1e-6) throw std::runtime_error("minimax: negative strategy weight");
      v = 0.0;
    }
    total += v;
  }
  if (total <= 0.0) throw std::runtime_error("minimax: degenerate strategy weights");
  for (double& v : w) v /= total;
  return w;
}

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& out) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row)
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    if (std::abs(a[pivot][col]) < 1e-12) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t row = col + 1; row < n; ++row) {
      double factor = a[row][col] / a[col][col];
      if (factor == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a[row][j] -= factor * a[col][j];
      b[row] -= factor * b[col];
    }
  }
  out.assign(n, 0.0);
  for (std::size_t row = n; row-- > 0;) {
    double acc = b[row];
    for (std::size_t j = row + 1; j < n; ++j) acc -= a[row][j] * out[j];
    out[row] = acc / a[row][row];
  }
  return true;
}

std::string format_double(double v) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer, ptr);
}

}  // namespace

PayoffMatrix::PayoffMatrix(std::vector<std::string> rows, std::vector<std::string> cols,
                           std::vector<double> values)
    : row_labels(std::move(rows)), col_labels(std::move(cols)), entries(std::move(values)) {
  validate();
}

void PayoffMatrix::validate() const {
  require(!row_labels.empty() && !col_labels.empty(), "PayoffMatrix: empty label set");
  require(entries.size() == rows() * cols(), "PayoffMatrix: entry count mismatch");
  std::set<std::string> seen_rows(row_labels.begin(), row_labels.end());
  require(seen_rows.size() == rows(), "PayoffMatrix: duplicate row label");
  std::set<std::string> seen_cols(col_labels.begin(), col_labels.end());
  require(seen_cols.size() == cols(), "PayoffMatrix: duplicate column label");
  for (double v : entries) {
    require(std::isfinite(v), "PayoffMatrix: non-finite entry");
    require(v >= 0.0 && v <= 1.0, "PayoffMatrix: entry outside [0, 1]");
  }
}

double expected_payoff(const PayoffMatrix& matrix, const std::vector<double>& user_weights,
                       const std::vector<double>& recognizer_weights) {
  require(user_weights.size() == matrix.rows(), "expected_payoff: row weight count");
  require(recognizer_weights.size() == matrix.cols(), "expected_payoff: column weight count");
  double total = 0.0;
  for (std::size_t i = 0; i < matrix.rows(); ++i)
    for (std::size_t j = 0; j < matrix.cols(); ++j)
      total += user_weights[i] * matrix.at(i, j) * recognizer_weights[j];
  return total;
}

GameSolution solve_minimax(const PayoffMatrix& matrix) {
  matrix.validate();
  const std::size_t m = matrix.rows();
  const std::size_t n = matrix.cols();

  // Shift every entry by +1 so the value is strictly positive, then solve
  //   max 1.z  s.t.  B^T z <= 1, z >= 0     (B = P + 1)
  // The user's minimax mixture is z / sum(z), the game value 1/sum(z) - 1,
  // and the recognizer's mixture falls out of the dual multipliers.
  std::vector<std::vector<double>> a(n, std::vector<double>(m, 0.0));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) a[j][i] = matrix.at(i, j) + 1.0;
  SimplexResult lp = simplex_max(a, std::vector<double>(n, 1.0), std::vector<double>(m, 1.0));
  if (lp.objective <= 0.0) throw std::runtime_error("minimax: non-positive LP objective");

  GameSolution solution;
  solution.user.labels = matrix.row_labels;
  solution.user.weights = tidy_weights(lp.x);
  solution.recognizer.labels = matrix.col_labels;
  solution.recognizer.weights = tidy_weights(lp.duals);
  solution.value = 1.0 / lp.objective - 1.0;

  SaddleReport report = verify_saddle(matrix, solution, kSaddleTol);
  if (!report.ok)
    throw std::runtime_error("minimax: internal saddle check failed, violation " +
                             std::to_string(report.max_violation));
  return solution;
}

SaddleReport verify_saddle(const PayoffMatrix& matrix, const GameSolution& solution,
                           double tol) {
  SaddleReport report;
  if (solution.user.labels != matrix.row_labels ||
      solution.recognizer.labels != matrix.col_labels ||
      solution.user.weights.size() != matrix.rows() ||
      solution.recognizer.weights.size() != matrix.cols()) {
    report.max_violation = std::numeric_limits<double>::infinity();
    return report;
  }

  double violation = 0.0;
  double user_total = 0.0, recognizer_total = 0.0;
  for (double w : solution.user.weights) {
    violation = std::max(violation, -w);
    user_total += w;
  }
  for (double w : solution.recognizer.weights) {
    violation = std::max(violation, -w);
    recognizer_total += w;
  }
  violation = std::max(violation, std::abs(user_total - 1.0));
  violation = std::max(violation, std::abs(recognizer_total - 1.0));

  // No recognizer column may beat the value, no user row may undercut it.
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    double rate = 0.0;
    for (std::size_t i = 0; i < matrix.rows(); ++i)
      rate += solution.user.weights[i] * matrix.at(i, j);
    violation = std::max(violation, rate - solution.value);
  }
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    double rate = 0.0;
    for (std::size_t j = 0; j < matrix.cols(); ++j)
      rate += solution.recognizer.weights[j] * matrix.at(i, j);
    violation = std::max(violation, solution.value - rate);
  }

  report.max_violation = violation;
  report.ok = violation <= tol;
  return report;
}

std::pair<std::size_t, double> solve_deterministic(const PayoffMatrix& matrix) {
  matrix.validate();
  std::size_t best_row = 0;
  double best_guarantee = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < matrix.cols(); ++j) worst = std::max(worst, matrix.at(i, j));
    if (worst < best_guarantee) {
      best_guarantee = worst;
      best_row = i;
    }
  }
  return {best_row, best_guarantee};
}

std::pair<std::size_t, double> best_response_user(const PayoffMatrix& matrix,
                                                  const std::vector<double>& recognizer_weights) {
  matrix.validate();
  require(recognizer_weights.size() == matrix.cols(), "best_response_user: weight count");
  std::size_t best_row = 0;
  double best_rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    double rate = 0.0;
    for (std::size_t j = 0; j < matrix.cols(); ++j)
      rate += matrix.at(i, j) * recognizer_weights[j];
    if (rate < best_rate) {
      best_rate = rate;
      best_row = i;
    }
  }
  return {best_row, best_rate};
}

PayoffMatrix restrict(const PayoffMatrix& matrix, const std::vector<std::string>& rows,
                             const std::vector<std::string>& cols) {
  matrix.validate();
  auto index_of = [](const std::vector<std::string>& labels, const std::string& label) {
    auto it = std::find(labels.begin(), labels.end(), label);
    require(it != labels.end(), "restrict: unknown label");
    return static_cast<std::size_t>(it - labels.begin());
  };
  std::vector<double> entries;
  entries.reserve(rows.size() * cols.size());
  for (const std::string& row : rows) {
    std::size_t i = index_of(matrix.row_labels, row);
    for (const std::string& col : cols)
      entries.push_back(matrix.at(i, index_of(matrix.col_labels, col)));
  }
  return PayoffMatrix(rows, cols, std::move(entries));
}

GameSolution oracle_minimax_small(const PayoffMatrix& matrix) {
  matrix.validate();
  const std::size_t m = matrix.rows();
  const std::size_t n = matrix.cols();
  require(m <= 4 && n <= 4, "oracle_minimax_small: unsupported size (max 4 x 4)");

  // All index subsets of {0..count-1} of the given size, in lexicographic
  // order so the search is deterministic.
  auto subsets = [](std::size_t count, std::size_t size) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> pick(size);
    auto rec = [&](auto&& self, std::size_t start, std::size_t depth) -> void {
      if (depth == size) {
        out.push_back(pick);
        return;
      }
      for (std::size_t i = start; i < count; ++i) {
        pick[depth] = i;
        self(self, i + 1, depth + 1);
      }
    };
    rec(rec, 0, 0);
    return out;
  };

  for (std::size_t k = 1; k <= std::min(m, n); ++k) {
    for (const auto& rows : subsets(m, k)) {
      for (const auto& cols : subsets(n, k)) {
        // Equalize the user mixture across the support columns:
        //   sum_i theta_i P[i][j] = v for j in cols, sum_i theta_i = 1.
        std::vector<std::vector<double>> a(k + 1, std::vector<double>(k + 1, 0.0));
        std::vector<double> b(k + 1, 0.0);
        for (std::size_t jj = 0; jj < k; ++jj) {
          for (std::size_t ii = 0; ii < k; ++ii)
            a[jj][ii] = matrix.at(rows[ii], cols[jj]);
          a[jj][k] = -1.0;  // ... = v
        }
        for (std::size_t ii = 0; ii < k; ++ii) a[k][ii] = 1.0;
        b[k] = 1.0;
        std::vector<double> user_sol;
        if (!solve_linear(a, b, user_sol)) continue;

        // Same for the recognizer mixture across the support rows.
        for (auto& row : a) std::fill(row.begin(), row.end(), 0.0);
        std::fill(b.begin(), b.end(), 0.0);
        for (std::size_t ii = 0; ii < k; ++ii) {
          for (std::size_t jj = 0; jj < k; ++jj)
            a[ii][jj] = matrix.at(rows[ii], cols[jj]);
          a[ii][k] = -1.0;
        }
        for (std::size_t jj = 0; jj < k; ++jj) a[k][jj] = 1.0;
        b[k] = 1.0;
        std::vector<double> recognizer_sol;
        if (!solve_linear(a, b, recognizer_sol)) continue;

        bool negative = false;
        for (std::size_t i = 0; i < k; ++i)
          if (user_sol[i] < -1e-9 || recognizer_sol[i] < -1e-9) negative = true;
        if (negative) continue;

        GameSolution candidate;
        candidate.user.labels = matrix.row_labels;
        candidate.user.weights.assign(m, 0.0);
        for (std::size_t i = 0; i < k; ++i)
          candidate.user.weights[rows[i]] = std::max(0.0, user_sol[i]);
        candidate.recognizer.labels = matrix.col_labels;
        candidate.recognizer.weights.assign(n, 0.0);
        for (std::size_t j = 0; j < k; ++j)
          candidate.recognizer.weights[cols[j]] = std::max(0.0, recognizer_sol[j]);
        candidate.value = user_sol[k];

        if (verify_saddle(matrix, candidate, 1e-9).ok) return candidate;
      }
    }
  }
  throw std::runtime_error("oracle_minimax_small: no equilibrium found");
}

PayoffMatrix load_payoff_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = std::move(buffer).str();

  bool percent = false;
  std::vector<std::string> col_labels, row_labels;
  std::vector<double> entries;
  bool saw_header = false;

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::size_t line_end = eol == std::string::npos ? text.size() : eol;
    std::string line = text.substr(pos, line_end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t line_start = pos;
    pos = eol == std::string::npos ? text.size() : eol + 1;

    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string flag = line.substr(1);
      flag.erase(0, flag.find_first_not_of(" \t"));
      flag.erase(flag.find_last_not_of(" \t") + 1);
      if (flag != "scale=percent")
        throw ParseError("payoff csv: unknown flag '" + flag + "'", line_start);
      percent = true;
      continue;
    }

    std::vector<std::string> cells;
    std::size_t cell_start = 0;
    for (;;) {
      std::size_t comma = line.find(',', cell_start);
      cells.push_back(line.substr(cell_start, comma - cell_start));
      if (comma == std::string::npos) break;
      cell_start = comma + 1;
    }

    if (!saw_header) {
      if (!cells.front().empty())
        throw ParseError("payoff csv: header must start with an empty cell", line_start);
      if (cells.size() < 2)
        throw ParseError("payoff csv: header has no column labels", line_start);
      col_labels.assign(cells.begin() + 1, cells.end());
      saw_header = true;
      continue;
    }

    if (cells.size() != col_labels.size() + 1)
      throw ParseError("payoff csv: row has wrong cell count", line_start);
    if (cells.front().empty())
      throw ParseError("payoff csv: missing row label", line_start);
    row_labels.push_back(cells.front());
    for (std::size_t j = 1; j < cells.size(); ++j) {
      const std::string& cell = cells[j];
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("payoff csv: bad numeric cell '" + cell + "'", line_start);
      entries.push_back(percent ? value / 100.0 : value);
    }
  }

  if (!saw_header) throw ParseError("payoff csv: missing header row", 0);
  if (row_labels.empty()) throw ParseError("payoff csv: no data rows", text.size());
  return PayoffMatrix(std::move(row_labels), std::move(col_labels), std::move(entries));
}

void save_payoff_csv(const std::filesystem::path& path, const PayoffMatrix& matrix,
                     bool percent_scale) {
  matrix.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
  if (percent_scale) out << "# scale=percent\n";
  for (const std::string& label : matrix.col_labels) out << "," << label;
  out << "\n";
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out << matrix.row_labels[i];
    for (std::size_t j = 0; j < matrix.cols(); ++j)
      out << "," << format_double(percent_scale ? matrix.at(i, j) * 100.0 : matrix.at(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("short write: " + path.string());
}

nlohmann::json solution_to_json(const GameSolution& solution) {
  nlohmann::json user = nlohmann::json::object();
  for (std::size_t i = 0; i < solution.user.labels.size(); ++i)
    if (solution.user.weights[i] > 1e-12)
      user[solution.user.labels[i]] = solution.user.weights[i];
  nlohmann::json recognizer = nlohmann::json::object();
  for (std::size_t j = 0; j < solution.recognizer.labels.size(); ++j)
    if (solution.recognizer.weights[j] > 1e-12)
      recognizer[solution.recognizer.labels[j]] = solution.recognizer.weights[j];
  return nlohmann::json{{"theta_u", std::move(user)},
                        {"theta_r", std::move(recognizer)},
                        {"value", solution.value}};
}

}  // namespace aipgame
