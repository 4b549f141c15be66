#pragma once

// Bayesian regression under an l1 constraint: posterior proportional to
// phi(y - X beta; sigma^2 I) sigma^-2 on {|beta|_1 <= gamma}. The base density
// f is the unconstrained posterior, which can be sampled exactly; the rare
// event is {|beta|_1 <= gamma}. State layout: (beta_1, ..., beta_d, sigma).

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsplit/errors.hpp"
#include "gsplit/kernels.hpp"
#include "gsplit/model.hpp"
#include "gsplit/random.hpp"

namespace gsplit {

struct RegressionData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> predictor_names;
  std::string response_name;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t predictors() const { return static_cast<std::size_t>(X.cols()); }
};

/// Column treatment applied after loading. In every mode the response is
/// centred. UnitNorm centres each predictor and scales it to unit Euclidean
/// length (the usual convention for this dataset, under which gamma = 1200
/// is a binding constraint); UnitVariance scales to unit standard deviation.
enum class Preprocessing { UnitNorm, UnitVariance, None };

inline Preprocessing parse_preprocessing(const std::string& text) {
  if (text == "unit-norm" || text == "unit_norm") return Preprocessing::UnitNorm;
  if (text == "unit-variance" || text == "unit_variance") return Preprocessing::UnitVariance;
  if (text == "none") return Preprocessing::None;
  throw InvalidArgument("unknown preprocessing '" + text + "'");
}

inline RegressionData preprocess(RegressionData data, Preprocessing mode) {
  const double rows = static_cast<double>(data.rows());
  data.y.array() -= data.y.mean();
  if (mode == Preprocessing::None) return data;
  for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
    auto col = data.X.col(j);
    col.array() -= col.mean();
    const double norm = col.norm();
    if (norm == 0.0) throw InvalidArgument("preprocess: predictor '" + data.predictor_names[j] + "' is constant");
    col /= mode == Preprocessing::UnitNorm ? norm : norm / std::sqrt(rows);
  }
  return data;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

/// Reads a CSV with a header row; the last column is the response.
/// `expected_columns` of 0 accepts any width >= 2.
inline RegressionData parse_regression_csv(std::istream& in, std::size_t expected_columns = 0) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("regression CSV: missing header row");
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() < 2 || (expected_columns != 0 && header.size() != expected_columns)) {
    throw ParseError("regression CSV: expected " +
                     (expected_columns ? std::to_string(expected_columns) : std::string(">= 2")) +
                     " columns, header has " + std::to_string(header.size()));
  }
  const std::size_t cols = header.size();
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != cols) {
      throw ParseError("regression CSV: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                       " columns, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& cell = cells[c];
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError("regression CSV: row " + std::to_string(row) + ", column " + std::to_string(c + 1) +
                         " ('" + header[c] + "'): non-numeric value '" + cell + "'");
      }
      values.push_back(v);
    }
  }
  RegressionData data;
  const auto n = static_cast<Eigen::Index>(row);
  const auto d = static_cast<Eigen::Index>(cols - 1);
  data.X.resize(n, d);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data.X(i, j) = values[i * cols + j];
    data.y(i) = values[i * cols + d];
  }
  data.predictor_names.assign(header.begin(), header.end() - 1);
  data.response_name = header.back();
  if (data.rows() <= data.predictors()) {
    throw ParseError("regression CSV: need more rows (" + std::to_string(data.rows()) + ") than predictors (" +
                     std::to_string(data.predictors()) + ")");
  }
  return data;
}

inline constexpr std::size_t kDiabetesColumns = 11;
inline constexpr std::size_t kDiabetesRows = 442;

/// Loads the diabetes data (10 predictors, then the response) and applies
/// `mode`. A row count other than 442 is reported through `warnings`.
inline RegressionData load_diabetes_csv(const std::string& path, Preprocessing mode = Preprocessing::UnitNorm,
                                        std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  RegressionData raw = parse_regression_csv(in, kDiabetesColumns);
  if (raw.rows() != kDiabetesRows && warnings) {
    warnings->push_back("diabetes CSV has " + std::to_string(raw.rows()) + " rows, expected " +
                        std::to_string(kDiabetesRows));
  }
  return preprocess(std::move(raw), mode);
}

/// Least squares fit via column-pivoted QR.
inline Eigen::VectorXd least_squares(const RegressionData& data) {
  return data.X.colPivHouseholderQr().solve(data.y);
}

class LassoPosterior {
 public:
  LassoPosterior(const RegressionData& data, double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0)) throw InvalidArgument("LassoPosterior: gamma must be positive");
    auto st = std::make_shared<Stats>();
    st->rows = data.rows();
    st->d = data.predictors();
    st->gram = data.X.transpose() * data.X;
    st->xty = data.X.transpose() * data.y;
    st->yty = data.y.squaredNorm();
    st->ols = least_squares(data);
    st->rss_ols = (data.y - data.X * st->ols).squaredNorm();
    Eigen::LLT<Eigen::MatrixXd> llt(st->gram);
    if (llt.info() != Eigen::Success) throw InvalidArgument("LassoPosterior: X'X is not positive definite");
    // Cholesky factor of (X'X)^-1: with G = L L', (L')^-1 z has covariance G^-1.
    st->inv_gram_factor = llt.matrixU().solve(Eigen::MatrixXd::Identity(st->d, st->d));
    stats_ = std::move(st);
  }

  std::size_t dimension() const { return stats_->d + 1; }
  std::size_t predictors() const { return stats_->d; }
  double gamma() const { return gamma_; }
  const Eigen::VectorXd& least_squares_solution() const { return stats_->ols; }

  /// Exact draw from the unconstrained posterior:
  /// 1/sigma^2 ~ Gamma((n'-d+1)/2, RSS_ols/2), beta | sigma ~ N(beta_ols, sigma^2 (X'X)^-1).
  void sample_f(RandomStream& rng, std::span<double> x) const {
    const Stats& st = *stats_;
    const double shape = 0.5 * static_cast<double>(st.rows - st.d + 1);
    const double sigma = 1.0 / std::sqrt(gamma_precision_draw(shape, 0.5 * st.rss_ols, rng));
    Eigen::VectorXd z(st.d);
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
    const Eigen::VectorXd beta = st.ols + sigma * (st.inv_gram_factor * z);
    for (std::size_t j = 0; j < st.d; ++j) x[j] = beta(static_cast<Eigen::Index>(j));
    x[st.d] = sigma;
  }

  /// |beta|_1; the event is {importance <= gamma}.
  double importance(std::span<const double> x) const { return l1_norm(x.first(stats_->d)); }

  double residual_sum_of_squares(std::span<const double> beta) const {
    const Stats& st = *stats_;
    const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(st.d));
    return std::max(0.0, st.yty - 2.0 * b.dot(st.xty) + b.dot(st.gram * b));
  }

  /// Gibbs update of sigma given beta.
  void update_sigma(std::span<double> x, RandomStream& rng) const {
    const Stats& st = *stats_;
    const double rss = residual_sum_of_squares(x.first(st.d));
    const double shape = 0.5 * static_cast<double>(st.rows + 1);
    x[st.d] = 1.0 / std::sqrt(gamma_precision_draw(shape, 0.5 * rss, rng));
  }

  /// Hit-and-run update of beta given sigma, restricted to |beta|_1 <= threshold.
  void update_beta(double threshold, std::span<double> x, RandomStream& rng) const {
    const Stats& st = *stats_;
    const auto d = static_cast<Eigen::Index>(st.d);
    const std::span<double> beta = x.first(st.d);
    const double sigma = x[st.d];
    const State dir = unit_sphere_direction(st.d, rng);
    const Eigen::Map<const Eigen::VectorXd> u(dir.data(), d);
    const Eigen::Map<const Eigen::VectorXd> b(beta.data(), d);
    const double curvature = u.dot(st.gram * u);
    const double mean = u.dot(st.xty - st.gram * b) / curvature;
    const Interval feasible = l1_feasible_interval(beta, dir, threshold);
    const LineSection line{std::span<const double>(dir), mean, sigma / std::sqrt(curvature), feasible.lo,
                           feasible.hi};
    hit_and_run_move(beta, line, rng, [&](std::span<const double> y) { return l1_norm(y) <= threshold; });
  }

  /// One sweep: sigma | beta, then one hit-and-run move of beta | sigma.
  void kernel_step(const LevelConstraint& level, std::span<double> x, RandomStream& rng) const {
    if (level.direction != Direction::AtMost) {
      throw UnsupportedModel("LassoPosterior: levels must bound |beta|_1 from above (direction at_most)");
    }
    update_sigma(x, rng);
    update_beta(level.threshold, x, rng);
  }

 private:
  struct Stats {
    std::size_t rows = 0;
    std::size_t d = 0;
    Eigen::MatrixXd gram;
    Eigen::VectorXd xty;
    double yty = 0.0;
    Eigen::VectorXd ols;
    double rss_ols = 0.0;
    Eigen::MatrixXd inv_gram_factor;
  };

  std::shared_ptr<const Stats> stats_;
  double gamma_;
};

static_assert(SplittingModel<LassoPosterior>);

inline LassoPosterior lasso_posterior_model(const RegressionData& data, double gamma) {
  return LassoPosterior(data, gamma);
}

/// The four-level schedule used for gamma = 1200 on the diabetes data, s = 100.
inline LevelSchedule default_lasso_schedule() {
  return LevelSchedule({1907.0, 1368.0, 1230.0, 1200.0}, 100, Direction::AtMost);
}

}  // namespace gsplit
