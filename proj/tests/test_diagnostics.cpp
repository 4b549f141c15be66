#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "gsplit/diagnostics.hpp"
#include "gsplit/toy_normal.hpp"

using namespace gsplit;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

// Uniform M on {1, 2}.
MomentSummary two_point() {
  const std::vector<std::pair<double, double>> pmf{{1.0, 0.5}, {2.0, 0.5}};
  return exact_moments(pmf);
}

// Independent 50-digit evaluation of the bound constants for a pmf.
struct BigMoments {
  Big m = 0, m2 = 0, m3 = 0, m4 = 0;
};

BigMoments big_moments(const std::vector<std::pair<int, Big>>& pmf) {
  BigMoments b;
  for (const auto& [v, p] : pmf) {
    const Big x = v;
    b.m += p * x;
    b.m2 += p * x * x;
    b.m3 += p * x * x * x;
    b.m4 += p * x * x * x * x;
  }
  return b;
}

const std::vector<std::pair<int, Big>> kTwoPoint{{1, Big(1) / 2}, {2, Big(1) / 2}};

double to_double(const Big& x) { return x.convert_to<double>(); }

}  // namespace

TEST(Moments, TwoPointDistributionExactValues) {
  const MomentSummary s = two_point();
  EXPECT_DOUBLE_EQ(s.m.value, 1.5);
  EXPECT_DOUBLE_EQ(s.m2.value, 2.5);
  EXPECT_DOUBLE_EQ(s.m3.value, 4.5);
  EXPECT_DOUBLE_EQ(s.m4.value, 8.5);
  EXPECT_DOUBLE_EQ(s.var.value, 0.25);
  EXPECT_NEAR(s.r, 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.m2_abs_dev.value, 14.0 / 3.0, 1e-14);
  EXPECT_NEAR(s.m2logm.value, 2.0 * std::log(2.0), 1e-15);
}

TEST(Bounds, TwoPointConstantsMatchBignumOracle) {
  const MomentSummary s = two_point();
  const BigMoments b = big_moments(kTwoPoint);
  const Big var = b.m2 - b.m * b.m;
  const Big n = 100, t = 100;

  const Big c1 = (var + sqrt(var * b.m2)) / (b.m * b.m);
  const Big c1t = (sqrt(b.m2) + sqrt(3 * b.m4 / n)) / b.m;
  const Big c2 = sqrt(Big(4) / 3 * b.m3 * b.m2 * (b.m + b.m2 / t)) / (b.m * b.m * b.m);
  const Big c2t = sqrt(b.m2) / b.m + b.m2 / (pow(b.m, Big(3) / 2) * sqrt(t));
  const Big r = (b.m2 + b.m) / (2 * b.m);
  Big abs_dev = 0;
  for (const auto& [v, p] : kTwoPoint) abs_dev += p * Big(v * v) * abs(Big(v) - 1 - 2 * r);
  const Big c3 = abs_dev / (2 * b.m * b.m * b.m);

  EXPECT_NEAR(bound_tv_fixed_n(s, 100).constant, to_double(c1), 1e-12);
  EXPECT_NEAR(bound_mae_fixed_n(s, 100).constant, to_double(c1t), 1e-12);
  EXPECT_NEAR(bound_tv_until_t(s, 100).constant, to_double(c2), 1e-12);
  EXPECT_NEAR(bound_mae_until_t(s, 100).constant, to_double(c2t), 1e-12);
  EXPECT_NEAR(bound_tv_asymptotic(s, 100).c3, to_double(c3), 1e-12);

  // Hand-worked values, quoted to 5-6 digits (1.19017 is 1.190175 truncated).
  EXPECT_NEAR(to_double(c1), 0.462475, 1e-6);
  EXPECT_NEAR(to_double(c1t), 1.39074, 1e-5);
  EXPECT_NEAR(to_double(c2), 1.41712, 1e-5);
  EXPECT_NEAR(to_double(c2t), 1.19017, 1e-5);
  EXPECT_NEAR(to_double(c3), 0.691358, 1e-6);
}

TEST(Bounds, ScalingInNAndT) {
  const MomentSummary s = two_point();
  const auto a = bound_tv_fixed_n(s, 10), b = bound_tv_fixed_n(s, 1000);
  EXPECT_NEAR(a.bound / b.bound, 100.0, 1e-10);
  // c2(t) (t/m)^(-3/2) at t = 100: 1.41712 * (100/1.5)^(-1.5).
  EXPECT_NEAR(bound_tv_until_t(s, 100).bound, 1.4171216 * std::pow(100 / 1.5, -1.5), 1e-7);
  EXPECT_NEAR(bound_tv_asymptotic(s, 100).bound, bound_tv_asymptotic(s, 100).c3 * std::pow(100 / 1.5, -2.0), 1e-15);
  EXPECT_TRUE(bound_tv_asymptotic(s, 100).omits_exponential_term);
  double previous = std::numeric_limits<double>::infinity();
  for (double n = 10; n <= 1e8; n *= 10) {
    const double now = bound_mae_fixed_n(s, n).bound;
    EXPECT_LT(now, previous);
    previous = now;
  }
}

TEST(Bounds, ConstantTrialSizeGivesZeroC1) {
  const std::vector<double> sizes(50, 3.0);
  const MomentSummary s = estimate_moments(sizes);
  EXPECT_EQ(s.var.value, 0.0);
  EXPECT_EQ(bound_tv_fixed_n(s, 10).constant, 0.0);
  EXPECT_EQ(bound_tv_fixed_n(s, 1e6).bound, 0.0);
}

TEST(Bounds, Psi2ExampleValue) {
  // s = 10, tau = 1, v = 1, n = 100: K = 1 + log10(10) = 2 terms.
  EXPECT_EQ(psi2_terms(1, 100, 10), 2u);
  Big sum = 0;
  const Big ln2 = log(Big(2)), ln10 = log(Big(10));
  for (int k = 1; k <= 2; ++k) {
    sum += pow(Big(10), -k) * sqrt(ln2 / 200 + (1 + log(Big(2))) + 1 + ln2 + 2 * k * ln10);
  }
  EXPECT_NEAR(psi2(1, 1.0, 100, 10), to_double(sum), 1e-12);
  EXPECT_NEAR(to_double(sum), 0.31825, 5e-6);
  EXPECT_NEAR(psi2(1, 1.0, 100, 10, 3), to_double(sum) + 1e-3 * std::sqrt(std::log(2.0) / 200 + 2 + 2 * std::log(2.0) + 6 * std::log(10.0)), 1e-12);
}

TEST(Bounds, B5ForUnitTrialSizes) {
  // M = 1: var = 0, E M^2 ln M = 0, so b5 = 2 sqrt(ln2 + v + v ln(2n/v)) / sqrt(n).
  const std::vector<std::pair<double, double>> pmf{{1.0, 1.0}};
  const MomentSummary s = exact_moments(pmf);
  const auto b5 = bound_expected_tv_b5(s, 100, SetClass::one_sided_intervals(1));
  EXPECT_NEAR(b5.bound, 2.0 * std::sqrt(std::log(2.0) + 2.0 + 2.0 * std::log(100.0)) / 10.0, 1e-14);
  // 2 sqrt(11.9034) / 10 = 0.69003; the hand value 0.6901 is rounded up.
  EXPECT_NEAR(b5.bound, 0.6901, 1e-4);
  EXPECT_FALSE(b5.psi.has_value());
  EXPECT_TRUE(std::isinf(bound_expected_tv_b5(s, 1, SetClass::custom(5)).bound));
}

TEST(Bounds, B5ProductFormAgreesWithCombinedForm) {
  const MomentSummary s = two_point();
  const SetClass sets = SetClass::rectangles(2);
  const double n = 1000, v = 4;
  const auto b5 = bound_expected_tv_b5(s, n, sets);
  ASSERT_TRUE(b5.psi.has_value());
  // psi_1 form: sqrt(var)/(m sqrt n) + 2 psi1 sqrt(v E[M^2 ln M] ln(2n)) / (m sqrt n).
  const double product = std::sqrt(s.var.value) / (s.m.value * std::sqrt(n)) +
                         2.0 * *b5.psi * std::sqrt(v * s.m2logm.value * std::log(2 * n)) / (s.m.value * std::sqrt(n));
  EXPECT_NEAR(b5.bound, product, 1e-13);
}

TEST(Bounds, B6UsesPsi2) {
  const MomentSummary s = two_point();
  const auto b6 = bound_expected_tv_b6(s, 100, SetClass::custom(1), 10, 1);
  ASSERT_TRUE(b6.psi.has_value());
  const double expected = std::sqrt(0.25) / (1.5 * 10) + 4.0 * 11.0 * std::sqrt(2.5) * *b6.psi / (1.5 * 10);
  EXPECT_NEAR(b6.bound, expected, 1e-14);
  EXPECT_THROW(bound_expected_tv_b6(s, 100, SetClass::custom(1), 1, 1), InvalidArgument);
}

TEST(Bounds, RejectInvalidInputs) {
  const MomentSummary s = two_point();
  EXPECT_THROW(bound_tv_fixed_n(s, 0), InvalidArgument);
  EXPECT_THROW(bound_tv_until_t(s, -1), InvalidArgument);
  MomentSummary broken;
  EXPECT_THROW(bound_tv_fixed_n(broken, 10), InvalidArgument);
  EXPECT_THROW(SetClass::custom(0), InvalidArgument);
}

TEST(Bounds, RowsCoverEveryCriterion) {
  const auto rows = bound_rows(evaluate_bounds(two_point(), 100, 150, SetClass::one_sided_intervals(1), 10, 3));
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0].criterion, "tv_fixed_n");
  EXPECT_EQ(rows[2].n_or_t, 150.0);
  EXPECT_EQ(rows[6].criterion, "expected_tv_b6");
  const std::vector<double> grid{10, 100};
  EXPECT_EQ(bound_curves(two_point(), grid, SetClass::one_sided_intervals(1), 10, 3).size(), 14u);
}

TEST(Moments, JackknifeOfTheMeanIsTheUsualStandardError) {
  const std::vector<double> sizes{1, 1, 2, 3, 5, 8, 13, 1, 2, 4};
  const MomentSummary s = estimate_moments(sizes);
  double mean = 0;
  for (double v : sizes) mean += v;
  mean /= sizes.size();
  double ss = 0;
  for (double v : sizes) ss += (v - mean) * (v - mean);
  EXPECT_NEAR(s.m.value, mean, 1e-14);
  EXPECT_NEAR(s.m.standard_error, std::sqrt(ss / (sizes.size() - 1) / sizes.size()), 1e-12);
  EXPECT_THROW(estimate_moments(std::vector<double>{1.0}), InsufficientData);
  EXPECT_THROW(estimate_moments(std::vector<double>{1.0, 0.0}), InvalidArgument);
}

TEST(Ks, OneDimensionalExactSupremum) {
  const LevelSchedule schedule({0.0}, 2);
  TrialResult t;
  t.retained = StateList(1, {0.5});
  const RunLedger l(schedule, StoppingRule::fixed_n(1), {t});
  const auto uniform = [](std::span<const double> x) { return std::clamp(x[0], 0.0, 1.0); };
  EXPECT_DOUBLE_EQ(empirical_ks(l, uniform), 0.5);
}

TEST(Wald, IdentityHoldsAgainstIndependentMoments) {
  const ToyNormalModel model(1);
  const LevelSchedule schedule({normal_upper_quantile(0.1), normal_upper_quantile(0.01)}, 10);
  const SeedSequence root(77);
  const RunLedger reference = collect_fixed_n(model, schedule, 20'000, root.child(StreamDomain::Reference, 0));
  const MomentSummary ref = estimate_moments(reference);
  std::vector<RunLedger> reps;
  for (int i = 0; i < 200; ++i) {
    reps.push_back(collect_until_t(model, schedule, 200, root.child(StreamDomain::Replication, i)));
  }
  const WaldReport w = wald_check(reps, ref);
  EXPECT_LE(std::abs(w.discrepancy.value), 3.0 * w.discrepancy.standard_error);
  EXPECT_LE(w.mean_overshoot.value, w.lorden_bound);
  EXPECT_THROW(wald_check(std::span<const RunLedger>(reps.data(), 1), ref), InsufficientData);
}
