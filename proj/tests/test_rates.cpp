#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "listid/angluin.hpp"
#include "listid/rates.hpp"

using namespace listid;

namespace {

// Three nested finite languages; the base identifier names {1,2} on success
// and {2,3} when the batch starts with 0, which happens with probability 1/5.
struct BoostFixture {
  Collection c = Collection::explicit_family(
      {Language::finite({0, 1, 2, 3, 4}), Language::finite({0, 1, 2, 3}), Language::finite({0, 1, 2})});
  Sampler sampler = [](Rng& rng) { return static_cast<Element>(rng.below(5)); };
  Identifier base = [](const Sample& s) {
    if (s.size() > 0 && s.sequence()[0] == 0) return GuessList{{2, 3}};
    return GuessList{{1, 2}};
  };
};

RateExperiment c1_experiment(const Collection& c, Index target, std::size_t horizon, std::size_t trials,
                             std::size_t k = 2) {
  RateExperiment e;
  e.collection = &c;
  e.k = k;
  e.target = target;
  e.sampler = sampler_of(ValidDistribution::enumeration_geometric(Enumeration::canonical(c.language_at(target))));
  e.identifier = make_list_identifier(c, static_cast<unsigned>(k));
  e.horizon = horizon;
  e.trials = trials;
  e.seed = 17;
  return e;
}

}  // namespace

TEST(Stats, ClopperPearsonKnownValues) {
  const auto zero = stats::clopper_pearson(0, 10);
  EXPECT_DOUBLE_EQ(zero.lo, 0.0);
  EXPECT_NEAR(zero.hi, 1 - std::pow(0.025, 0.1), 1e-9);
  const auto half = stats::clopper_pearson(5, 10);
  EXPECT_NEAR(half.lo, 0.187086, 1e-6);
  EXPECT_NEAR(half.hi, 0.812914, 1e-6);
  const auto all = stats::clopper_pearson(10, 10);
  EXPECT_DOUBLE_EQ(all.hi, 1.0);
  EXPECT_NEAR(all.lo, std::pow(0.025, 0.1), 1e-9);
}

TEST(Stats, ChiSquareAndRuns) {
  const std::vector<std::uint8_t> balanced = {0, 1, 0, 1, 1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(stats::chi_square_bits(balanced).statistic, 0.0);
  EXPECT_DOUBLE_EQ(stats::chi_square_bits(balanced).p_value, 1.0);
  // 60 ones out of 100: stat = 4, p = P(chi2_1 > 4).
  std::vector<std::uint8_t> skew(100, 0);
  for (int i = 0; i < 60; ++i) skew[i] = 1;
  EXPECT_NEAR(stats::chi_square_bits(skew).p_value, std::erfc(2 / std::sqrt(2.0)), 1e-12);
  // Two long runs are far from random.
  EXPECT_LT(stats::runs_test(skew).p_value, 1e-6);
  std::vector<std::uint8_t> alternating(100);
  for (int i = 0; i < 100; ++i) alternating[i] = i % 2;
  EXPECT_LT(stats::runs_test(alternating).p_value, 1e-6);
  EXPECT_THROW(stats::chi_square_bits({}), Error);
}

TEST(Stats, LeastSquaresExactLine) {
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<double> y = {1, 3, 5, 7};
  const auto f = stats::least_squares(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, -1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(RateExperiment, TargetZNeverFails) {
  const auto c = Collection::canonical(1);
  const auto curve = run_rate_experiment(c1_experiment(c, 1, 30, 500));
  for (const auto& p : curve.points) EXPECT_EQ(p.failures, 0U);
}

TEST(RateExperiment, SingleTrialBracketed) {
  const auto c = Collection::canonical(1);
  const auto curve = run_rate_experiment(c1_experiment(c, 3, 10, 1));
  for (const auto& p : curve.points) {
    EXPECT_TRUE(p.e_hat == 0.0 || p.e_hat == 1.0);
    EXPECT_LE(p.ci_lo, p.e_hat);
    EXPECT_GE(p.ci_hi, p.e_hat);
  }
}

TEST(RateExperiment, DeterministicAcrossRunsAndThreads) {
  const auto c = Collection::canonical(1);
  auto e = c1_experiment(c, 3, 15, 2000);
  const auto a = run_rate_experiment(e);
  e.threads = 4;
  const auto b = run_rate_experiment(e);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].failures, b.points[i].failures);
    EXPECT_EQ(a.points[i].ci_hi, b.points[i].ci_hi);
  }
}

TEST(RateExperiment, MatchesGeometricMissRate) {
  // Z\{-1}: the second guess is Z\{0} until 0 shows up, and 0 carries half
  // the mass, so the failure probability at t is exactly 2^-t.
  const auto c = Collection::canonical(1);
  auto e = c1_experiment(c, 3, 8, 20000);
  e.threads = 4;
  const auto curve = run_rate_experiment(e);
  for (std::size_t t = 1; t <= 8; ++t) {
    const double truth = std::ldexp(1.0, -static_cast<int>(t));
    EXPECT_LE(curve.at(t).ci_lo, truth) << t;
    EXPECT_GE(curve.at(t).ci_hi, truth) << t;
  }
  const auto fit = fit_exponential(curve, 1, 8);
  EXPECT_NEAR(fit.slope, -std::log(2.0), 0.1);
  EXPECT_GT(fit.r_squared, 0.95);
}

TEST(RateExperiment, PrefixSharingAgreesWithResampling) {
  const auto c = Collection::canonical(2);
  RateExperiment e = c1_experiment(c, c.index_of_exclusion({-1, 1}), 10, 5000, 3);
  e.threads = 4;
  const auto shared = run_rate_experiment(e);
  const auto fresh = run_rate_experiment_resampled(e);
  for (std::size_t t = 1; t <= 10; ++t) {
    const auto& a = shared.at(t);
    const auto& b = fresh.at(t);
    EXPECT_TRUE(a.ci_lo <= b.ci_hi && b.ci_lo <= a.ci_hi) << t;
  }
}

TEST(FitExponential, SyntheticCurves) {
  ErrorCurve geo;
  ErrorCurve flat;
  for (std::size_t t = 1; t <= 10; ++t) {
    const double v = std::ldexp(1.0, -static_cast<int>(t));
    geo.points.push_back({t, 1, 1, v, v, v});
    flat.points.push_back({t, 1, 2, 0.5, 0.5, 0.5});
  }
  EXPECT_NEAR(fit_exponential(geo, 1, 10).slope, -std::log(2.0), 1e-6);
  EXPECT_NEAR(fit_exponential(flat, 1, 10).slope, 0.0, 1e-12);
}

TEST(FitExponential, ClampsZerosAndRejectsSparseWindows) {
  ErrorCurve curve = make_curve({0, 50, 20, 5, 0, 0}, 100);
  const auto fit = fit_exponential(curve, 1, 5);
  EXPECT_EQ(fit.clamped, 2U);
  EXPECT_EQ(fit.points, 5U);
  EXPECT_LT(fit.slope, 0.0);
  try {
    fit_exponential(curve, 3, 5);
    FAIL() << "expected InsufficientPositivePoints";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientPositivePoints);
  }
  EXPECT_EQ(positive_window(curve), (std::pair<std::size_t, std::size_t>{1, 3}));
}

TEST(Boosting, BatchPlanExamples) {
  EXPECT_EQ(batch_plan(1).batch_size, 1U);
  EXPECT_EQ(batch_plan(1).batches, 1U);
  EXPECT_EQ(batch_plan(3).batch_size, 2U);
  EXPECT_EQ(batch_plan(3).batches, 1U);
  EXPECT_EQ(batch_plan(20).batch_size, 3U);
  EXPECT_EQ(batch_plan(20).batches, 6U);
  EXPECT_EQ(batch_plan(100).batch_size, 5U);
  EXPECT_EQ(batch_plan(100).batches, 20U);
}

TEST(Boosting, UnanimousAndSingleBatch) {
  const auto c = Collection::canonical(1);
  const auto good = constant_identifier({1, 2});
  const std::vector<Element> xs(50, 3);
  EXPECT_TRUE(boosted_identify(good, c, 2, xs).contains(1));

  BoostFixture f;
  const std::vector<Element> one_batch = {0, 4, 4};
  EXPECT_EQ(boosted_identify(f.base, f.c, 2, one_batch).indices, (std::vector<Index>{2, 3}));
  EXPECT_EQ(boosted_identify(f.base, f.c, 2, std::vector<Element>{1, 0, 4}).indices, (std::vector<Index>{1, 2}));
}

TEST(Boosting, HoeffdingBoundsEmpiricalFailure) {
  BoostFixture f;
  const std::size_t t = 200;  // ceil(ln 200) = 6, so 33 batches
  RateExperiment e;
  e.collection = &f.c;
  e.k = 2;
  e.target = 1;
  e.sampler = f.sampler;
  e.identifier = boosted_identifier(f.base, f.c, 2);
  e.horizon = t;
  e.trials = 400;
  e.seed = 5;
  e.threads = 4;
  const auto boosted = run_rate_experiment(e);
  e.identifier = f.base;
  const auto base = run_rate_experiment(e);
  const double eps = boosting_margin(0.8, 2);
  EXPECT_NEAR(eps, 2 * (0.8 - 2.0 / 3.0), 1e-12);
  for (std::size_t s : {20U, 50U, 100U, 200U}) {
    const double bound = hoeffding_bound(batch_plan(s).batches, eps);
    EXPECT_LE(boosted.at(s).ci_lo, bound) << s;
    EXPECT_LE(boosted.at(s).ci_lo, base.at(s).ci_hi) << s;
  }
  EXPECT_NEAR(base.at(200).e_hat, 0.2, 0.06);
}

TEST(LowerBound, PigeonholeAndFloor) {
  const auto c = Collection::canonical(2);
  LowerBoundExperiment e;
  e.collection = &c;
  e.k = 2;
  e.shared_x = 5;
  e.languages = {1, 2, 4};
  e.identifier = make_list_identifier(c, 2, TelltaleAssignment::all_empty());
  e.horizon = 10;
  e.trials = 20000;
  e.seed = 3;
  e.threads = 4;
  const auto rep = lower_bound_experiment(e);
  EXPECT_TRUE(rep.pigeonhole_holds);
  ASSERT_EQ(rep.missed.size(), 10U);
  for (std::size_t t = 1; t <= 10; ++t) {
    ASSERT_TRUE(rep.missed[t - 1].has_value());
    EXPECT_LE(rep.named_count[t - 1], 2U);
    EXPECT_TRUE(rep.floor_holds[t - 1]) << t;
  }
  const auto j = static_cast<std::size_t>(std::find(e.languages.begin(), e.languages.end(), *rep.missed[0]) -
                                          e.languages.begin());
  EXPECT_GE(rep.curves[j].at(1).ci_hi, 0.5);
}

TEST(LowerBound, RejectsUnwitnessedFamilies) {
  const auto c = Collection::canonical(2);
  LowerBoundExperiment e;
  e.collection = &c;
  e.k = 2;
  e.shared_x = 5;
  e.identifier = make_list_identifier(c, 2, TelltaleAssignment::all_empty());
  e.horizon = 3;
  auto expect_code = [&](std::vector<Index> langs) {
    e.languages = std::move(langs);
    try {
      lower_bound_experiment(e);
      ADD_FAILURE() << "expected NonTrivialityUnwitnessed";
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::NonTrivialityUnwitnessed);
    }
  };
  expect_code({1, 2});
  expect_code({1, 2, c.index_of_exclusion({5})});
  expect_code({1, 2, 2});
}
