#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gsplit/lasso.hpp"
#include "gsplit/splitting.hpp"

using namespace gsplit;

namespace {

const std::string kDiabetes = std::string(GSPLIT_SOURCE_DIR) + "/data/diabetes.csv";

RegressionData parse(const std::string& text, std::size_t columns = 0) {
  std::istringstream in(text);
  return parse_regression_csv(in, columns);
}

// y = 2x + noise with 20 rows and one predictor; no preprocessing.
RegressionData one_predictor() {
  RegressionData d;
  const int n = 20;
  d.X.resize(n, 1);
  d.y.resize(n);
  RandomStream rng = SeedSequence(99).stream(StreamDomain::Validation, 0);
  for (int i = 0; i < n; ++i) {
    d.X(i, 0) = rng.normal();
    d.y(i) = 2.0 * d.X(i, 0) + 0.5 * rng.normal();
  }
  d.predictor_names = {"x"};
  d.response_name = "y";
  return d;
}

}  // namespace

TEST(Csv, ThreeRowFixture) {
  const RegressionData d = parse("a,b,y\n1,2,3\n4,5.5,6\n7,8,-9e-1\n");
  EXPECT_EQ(d.rows(), 3u);
  EXPECT_EQ(d.predictors(), 2u);
  EXPECT_EQ(d.predictor_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.response_name, "y");
  EXPECT_DOUBLE_EQ(d.X(1, 1), 5.5);
  EXPECT_DOUBLE_EQ(d.y(2), -0.9);
}

TEST(Csv, NonNumericCellNamesRowAndColumn) {
  try {
    parse("a,b,y\n1,2,3\n4,oops,6\n7,8,9\n10,11,12\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
  }
}

TEST(Csv, WrongColumnCounts) {
  EXPECT_THROW(parse("a,b,y\n1,2\n3,4,5\n6,7,8\n9,1,2\n"), ParseError);
  EXPECT_THROW(parse("a,b,y\n1,2,3\n4,5,6\n7,8,9\n", 11), ParseError);
  EXPECT_THROW(parse("a,b,y\n1,2,3\n"), ParseError);  // n' must exceed d
}

TEST(Diabetes, CanonicalFileShapeAndPreprocessing) {
  std::vector<std::string> warnings;
  const RegressionData d = load_diabetes_csv(kDiabetes, Preprocessing::UnitNorm, &warnings);
  EXPECT_EQ(d.rows(), 442u);
  EXPECT_EQ(d.predictors(), 10u);
  EXPECT_TRUE(warnings.empty());
  EXPECT_NEAR(d.y.mean(), 0.0, 1e-10);
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
    EXPECT_NEAR(d.X.col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(d.X.col(j).norm(), 1.0, 1e-12);
  }
  const RegressionData v = load_diabetes_csv(kDiabetes, Preprocessing::UnitVariance);
  EXPECT_NEAR(v.X.col(0).squaredNorm() / 442.0, 1.0, 1e-12);
}

TEST(Diabetes, TruncatedFileWarns) {
  const auto path = std::filesystem::temp_directory_path() / "gsplit_truncated_diabetes.csv";
  {
    std::ifstream in(kDiabetes);
    std::ofstream out(path);
    std::string line;
    for (int i = 0; i < 101 && std::getline(in, line); ++i) out << line << '\n';
  }
  std::vector<std::string> warnings;
  const RegressionData d = load_diabetes_csv(path.string(), Preprocessing::UnitNorm, &warnings);
  EXPECT_EQ(d.rows(), 100u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("442"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Diabetes, LeastSquaresMatchesNormalEquations) {
  const RegressionData d = load_diabetes_csv(kDiabetes);
  const Eigen::VectorXd qr = least_squares(d);
  const Eigen::MatrixXd gram = d.X.transpose() * d.X;
  const Eigen::VectorXd normal = gram.ldlt().solve(d.X.transpose() * d.y);
  EXPECT_LT((qr - normal).norm() / normal.norm(), 1e-8);
  const LassoPosterior model(d, 1200.0);
  EXPECT_EQ(model.dimension(), 11u);
  EXPECT_NEAR(model.least_squares_solution().lpNorm<1>(), qr.lpNorm<1>(), 1e-8);
}

TEST(LassoKernel, KeepsTheConstraintAndGibbsStructure) {
  const RegressionData d = load_diabetes_csv(kDiabetes);
  const LassoPosterior model(d, 1200.0);
  RandomStream rng = SeedSequence(1).stream(StreamDomain::Validation, 0);
  State x(11);
  do {
    model.sample_f(rng, x);
  } while (model.importance(x) > 2500.0);
  const LevelConstraint level{2500.0, Direction::AtMost};
  for (int i = 0; i < 5000; ++i) {
    const State before = x;
    model.update_sigma(x, rng);
    ASSERT_TRUE(std::equal(before.begin(), before.begin() + 10, x.begin()));
    ASSERT_GT(x[10], 0.0);
    const double sigma = x[10];
    model.update_beta(level.threshold, x, rng);
    ASSERT_EQ(x[10], sigma);
    ASSERT_LE(model.importance(x), 2500.0);
  }
  EXPECT_THROW(model.kernel_step(LevelConstraint{2500.0, Direction::AtLeast}, x, rng), UnsupportedModel);
  EXPECT_THROW(LassoPosterior(d, 0.0), InvalidArgument);
}

TEST(LassoKernel, UnconstrainedChainsCentreOnLeastSquares) {
  // gamma = inf: chains started from f stay on the posterior, whose beta mean
  // is the least-squares solution. Tolerance: 5% of the posterior sd.
  const RegressionData d = load_diabetes_csv(kDiabetes);
  const LassoPosterior model(d, std::numeric_limits<double>::infinity());
  const LevelConstraint open{std::numeric_limits<double>::infinity(), Direction::AtMost};
  const Eigen::VectorXd ols = least_squares(d);
  const int chains = 10'000, steps = 30;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(10), sum2 = Eigen::VectorXd::Zero(10);
  RandomStream rng = SeedSequence(2).stream(StreamDomain::Validation, 0);
  State x(11);
  for (int c = 0; c < chains; ++c) {
    model.sample_f(rng, x);
    for (int k = 0; k < steps; ++k) model.kernel_step(open, x, rng);
    for (int j = 0; j < 10; ++j) {
      sum(j) += x[j];
      sum2(j) += x[j] * x[j];
    }
  }
  for (int j = 0; j < 10; ++j) {
    const double mean = sum(j) / chains;
    const double sd = std::sqrt(sum2(j) / chains - mean * mean);
    EXPECT_LT(std::abs(mean - ols(j)), 0.05 * sd) << "coefficient " << j;
  }
}

TEST(LassoKernel, OnePredictorStationarityByQuadrature) {
  // d = 1: the beta marginal of the constrained posterior is proportional to
  // RSS(beta)^(-(n'+1)/2) on [-gamma, gamma]. Draw exact starting states from
  // a tabulated cdf, take one kernel step, and compare with the same cdf.
  const RegressionData d = one_predictor();
  const double gamma = 1.5;  // the least-squares slope is near 2, so the bound is active
  const LassoPosterior model(d, gamma);
  ASSERT_GT(std::abs(model.least_squares_solution()(0)), gamma);

  const int grid = 20'000;
  const double h = 2.0 * gamma / grid;
  const double exponent = -0.5 * (static_cast<double>(d.rows()) + 1.0);
  std::vector<double> xs(grid + 1), cdf(grid + 1, 0.0);
  auto density = [&](double b) {
    const double rss = (d.y - d.X.col(0) * b).squaredNorm();
    return std::pow(rss, exponent);
  };
  for (int i = 0; i <= grid; ++i) xs[i] = -gamma + i * h;
  for (int i = 1; i <= grid; ++i) {
    const double mid = 0.5 * (xs[i - 1] + xs[i]);
    cdf[i] = cdf[i - 1] + h / 6.0 * (density(xs[i - 1]) + 4.0 * density(mid) + density(xs[i]));
  }
  for (double& c : cdf) c /= cdf.back();
  auto cdf_at = [&](double b) {
    const double pos = std::clamp((b + gamma) / h, 0.0, static_cast<double>(grid));
    const auto i = std::min(static_cast<int>(pos), grid - 1);
    return cdf[i] + (pos - i) * (cdf[i + 1] - cdf[i]);
  };
  auto inverse = [&](double u) {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const auto i = std::max<std::ptrdiff_t>(1, it - cdf.begin());
    const double frac = (u - cdf[i - 1]) / (cdf[i] - cdf[i - 1]);
    return xs[i - 1] + frac * h;
  };

  RandomStream rng = SeedSequence(3).stream(StreamDomain::Validation, 0);
  const LevelConstraint level{gamma, Direction::AtMost};
  const int n = 20'000;
  std::vector<double> after;
  std::vector<double> before;
  State x(2);
  for (int i = 0; i < n; ++i) {
    x[0] = inverse(rng.uniform());
    before.push_back(x[0]);
    model.update_sigma(x, rng);  // sigma | beta completes an exact joint draw
    model.kernel_step(level, x, rng);
    ASSERT_LE(std::abs(x[0]), gamma);
    after.push_back(x[0]);
  }
  auto scaled_ks = [&](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double sup = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double f = cdf_at(v[i]);
      sup = std::max({sup, (i + 1.0) / v.size() - f, f - static_cast<double>(i) / v.size()});
    }
    return std::sqrt(static_cast<double>(v.size())) * sup;
  };
  EXPECT_LT(scaled_ks(before), 1.95);
  EXPECT_LT(scaled_ks(after), 1.95);
}

TEST(LassoModel, DefaultScheduleAndDirection) {
  const LevelSchedule s = default_lasso_schedule();
  EXPECT_EQ(s.levels(), (std::vector<double>{1907, 1368, 1230, 1200}));
  EXPECT_EQ(s.split_factor(), 100);
  EXPECT_EQ(s.direction(), Direction::AtMost);
}
