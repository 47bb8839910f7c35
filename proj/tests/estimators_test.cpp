#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cfr/error.hpp"
#include "cfr/estimators.hpp"
#include "cfr/simulation.hpp"
#include "oracles.hpp"

namespace cfr {
namespace {

const auto kInstant = DelaySchedule::constant(SurvivalModel::point_mass(0));

EpidemicTable random_table(std::mt19937_64& rng, Day days, int max_cases, Day max_lag) {
  std::uniform_int_distribution<int> cases_dist(0, max_cases);
  std::uniform_int_distribution<int> lag_dist(0, max_lag);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Count> cases(days);
  std::vector<std::vector<Count>> deaths(days);
  for (Day d = 0; d < days; ++d) {
    cases[d] = cases_dist(rng);
    if (d == 0) cases[d] = std::max<Count>(cases[d], 1);
    const double p = u(rng) * 0.5;
    for (Count i = 0; i < cases[d]; ++i) {
      if (u(rng) >= p) continue;
      const auto lag = static_cast<std::size_t>(lag_dist(rng));
      if (deaths[d].size() <= lag) deaths[d].resize(lag + 1, 0);
      ++deaths[d][lag];
    }
  }
  return EpidemicTable(cases, deaths);
}

TEST(CfrTrue, WeightedMean) {
  const std::vector<Count> c{100, 100};
  EXPECT_DOUBLE_EQ(cfr_true(c, DailyRates({0.1, 0.2}), 1), 0.15);
  EXPECT_DOUBLE_EQ(cfr_true(c, DailyRates({0.1, 0.2}), 0), 0.1);
  EXPECT_THROW(cfr_true(std::vector<Count>{0, 0}, DailyRates({0.1, 0.2}), 1), Error);
}

TEST(CfrTrue, ConstantRateAndRandomOracle) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> c_dist(0, 1000);
  std::uniform_real_distribution<double> p_dist(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Count> c(60);
    std::vector<double> p(60);
    for (int d = 0; d < 60; ++d) {
      c[d] = c_dist(rng);
      p[d] = p_dist(rng);
    }
    c[0] = 1;
    for (Day t = 0; t < 60; t += 7) {
      EXPECT_NEAR(cfr_true(c, DailyRates(p), t), oracle::weighted_rate(c, p, t), 1e-14);
      EXPECT_NEAR(cfr_true(c, DailyRates(std::vector<double>(60, 0.37)), t), 0.37, 1e-15);
    }
  }
}

TEST(CfrNaive, RatioOfObservedDeaths) {
  const EpidemicTable table({50}, {{5}});
  EXPECT_DOUBLE_EQ(cfr_naive(table, 0), 0.1);
  EXPECT_DOUBLE_EQ(cfr_naive(EpidemicTable({50}, {{0, 0, 3}}), 1), 0.0);
  EXPECT_THROW(cfr_naive(EpidemicTable({0}, {{}}), 0), Error);
}

TEST(CfrFinal, UsesEveryRecordedDeath) {
  const EpidemicTable table({10}, {{1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1}});
  EXPECT_DOUBLE_EQ(cfr_final(table, 0), 0.3);
  // Once every lag has elapsed the naive estimator catches up.
  EXPECT_DOUBLE_EQ(cfr_naive(table, 19), cfr_final(table, 19));
  EXPECT_LT(cfr_naive(table, 18), cfr_final(table, 18));
}

TEST(CfrProposed, SingleDayInstantiation) {
  const auto model = SurvivalModel::empirical({0.1, 0.1, 0.1, 0.1, 0.1, 0.5, 1.0}, 1000);
  const EpidemicTable table({100}, {{1, 0, 2, 0, 0, 1, 3}});
  const auto schedule = DelaySchedule::constant(model);
  EXPECT_DOUBLE_EQ(predicted_final_deaths(table, schedule, 5), 8.0);
  EXPECT_DOUBLE_EQ(cfr_proposed(table, schedule, 5), 0.08);
  // Single confirmation day: the delay-weighted estimator coincides.
  EXPECT_DOUBLE_EQ(cfr_garske(table, model, 5), cfr_proposed(table, schedule, 5));
}

TEST(CfrProposed, ReductionIdentitiesAreExact) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto table = random_table(rng, 40, 200, 30);
    for (Day t = 0; t < 45; ++t) {
      const double naive = cfr_naive(table, t);
      ASSERT_EQ(cfr_proposed(table, kInstant, t), naive);
      ASSERT_EQ(cfr_garske(table, SurvivalModel::point_mass(0), t), naive);
      ASSERT_EQ(cfr_garske_mod(table, kInstant, t), naive);
    }
  }
}

TEST(CfrProposed, ExactlyUnbiasedOnTinyEpidemic) {
  oracle::MicroEpidemic e;
  e.cases = {2, 1};
  e.p = {0.5, 0.5};
  e.w0 = 0.3;
  e.late = 2;
  const auto schedule = DelaySchedule::constant(oracle::two_point_model(e));
  for (Day t = 1; t <= 4; ++t) {
    const double mean = oracle::enumerate_expectation(
        e, [&](const EpidemicTable& table) { return cfr_proposed(table, schedule, t); });
    EXPECT_NEAR(mean, oracle::weighted_rate(e.cases, e.p, t), 1e-12) << "t=" << t;
  }
}

TEST(CfrProposed, UnbiasedOnRandomMicroEpidemics) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto e = oracle::random_micro_epidemic(rng, 8);
    const auto schedule = DelaySchedule::constant(oracle::two_point_model(e));
    const Day last = static_cast<Day>(e.cases.size()) - 1 + e.late;
    for (Day t = 0; t <= last; ++t) {
      const double mean = oracle::enumerate_expectation(
          e, [&](const EpidemicTable& table) { return cfr_proposed(table, schedule, t); });
      EXPECT_NEAR(mean, oracle::weighted_rate(e.cases, e.p, t), 1e-12);
    }
  }
}

TEST(CfrProposed, ZeroParametricCdfWithDeathsViolatesA1) {
  const EpidemicTable table({10}, {{2}});
  const auto schedule = DelaySchedule::constant(SurvivalModel::point_mass(3));
  try {
    cfr_proposed(table, schedule, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAssumption);
    EXPECT_NE(std::string(e.what()).find("assumption A1 violated"), std::string::npos);
  }
  // No deaths yet: the cohort contributes nothing.
  EXPECT_EQ(cfr_proposed(EpidemicTable({10}, {{0, 0, 0, 2}}), schedule, 1), 0.0);
}

TEST(CfrProposed, EmpiricalZeroIsFloored) {
  const auto model = SurvivalModel::empirical({0.0, 1.0}, 3);
  const EpidemicTable table({10}, {{1}});
  // 1 / (1 / (3 + 1)) = 4 predicted deaths among 10 cases.
  EXPECT_DOUBLE_EQ(cfr_proposed(table, DelaySchedule::constant(model), 0), 0.4);
}

TEST(CfrGarske, ZeroDenominatorIsAnError) {
  const EpidemicTable table({10}, {{}});
  EXPECT_THROW(cfr_garske(table, SurvivalModel::point_mass(5), 2), Error);
}

TEST(CfrGarskeMod, ConstantScheduleAndConstantCdfIdentities) {
  std::mt19937_64 rng(4);
  const auto nb = SurvivalModel::negative_binomial(10.79, 0.88);
  for (int trial = 0; trial < 20; ++trial) {
    const auto table = random_table(rng, 30, 100, 20);
    const Day t = 29;
    EXPECT_EQ(cfr_garske_mod(table, DelaySchedule::constant(nb), t), cfr_garske(table, nb, t));

    // Per-day models chosen so that F_d(t - d) = 0.6 for every d <= t.
    std::vector<SurvivalModel> models;
    for (Day d = 0; d <= t; ++d) {
      std::vector<double> cdf(static_cast<std::size_t>(t - d) + 1, 0.6);
      cdf.push_back(1.0);
      models.push_back(SurvivalModel::empirical(cdf, 100));
    }
    const auto schedule = DelaySchedule::per_day(models);
    EXPECT_NEAR(cfr_garske_mod(table, schedule, t), cfr_proposed(table, schedule, t), 1e-14);
  }
}

TEST(CfrGarskeMod, ExpectationIsDelayWeightedMeanOfRates) {
  Scenario s;
  s.rising_arm = {20, 40, 60, 80, 100, 120, 140, 160, 180, 200};
  s.symmetric = true;
  s.rates = StepRates{0.1, 0.02, 8};
  std::vector<SurvivalModel> models;
  for (Day d = 0; d < 20; ++d) models.push_back(SurvivalModel::negative_binomial(3.0 + 0.5 * d, 1.5));
  s.delay = DelaySchedule::per_day(models);
  s.horizon = 19;
  const Day t = 14;
  const auto curve = build_curve(s);
  const auto rates = scenario_rates(s);
  double num = 0.0, den = 0.0;
  for (Day d = 0; d <= t; ++d) {
    const double w = static_cast<double>(curve[d]) * models[d].cdf(t - d);
    num += w * rates[d];
    den += w;
  }
  const double expected = num / den;

  const int reps = 4000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double x = cfr_garske_mod(simulate_replicate(s, i), s.delay, t);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum_sq / reps - mean * mean) / (reps - 1));
  EXPECT_LT(std::abs(mean - expected), 3 * se) << "mean " << mean << " expected " << expected;
  // The unweighted truth differs, which is the point of the comparison.
  EXPECT_GT(std::abs(expected - cfr_true(curve, rates, t)), 5 * se);
}

TEST(MonotoneResponse, AddingADeathNeverLowersEstimates) {
  std::mt19937_64 rng(6);
  const auto nb = SurvivalModel::negative_binomial(10.79, 0.88);
  const auto schedule = DelaySchedule::constant(nb);
  for (int trial = 0; trial < 50; ++trial) {
    const auto table = random_table(rng, 30, 50, 25);
    std::vector<Count> cases(table.cases().begin(), table.cases().end());
    std::vector<std::vector<Count>> deaths;
    for (Day d = 0; d < table.num_days(); ++d) deaths.emplace_back(table.death_row(d).begin(), table.death_row(d).end());
    std::uniform_int_distribution<int> day_dist(0, 29), lag_dist(0, 25);
    const Day d = day_dist(rng);
    if (table.total_deaths(d) >= cases[d]) continue;
    const auto lag = static_cast<std::size_t>(lag_dist(rng));
    if (deaths[d].size() <= lag) deaths[d].resize(lag + 1, 0);
    ++deaths[d][lag];
    const EpidemicTable more(cases, deaths);
    for (Day t = 0; t < 60; ++t) {
      if (cases_through(table, t) == 0) continue;
      ASSERT_GE(cfr_proposed(more, schedule, t), cfr_proposed(table, schedule, t));
      ASSERT_GE(cfr_naive(more, t), cfr_naive(table, t));
      ASSERT_GE(cfr_garske(more, nb, t), cfr_garske(table, nb, t));
    }
  }
}

TEST(PHatDaily, ConstantEpidemicGivesConstantRates) {
  const EpidemicTable table(std::vector<Count>(30, 100), std::vector<std::vector<Count>>(30, {2, 3, 1}));
  const auto schedule = DelaySchedule::constant(SurvivalModel::empirical({0.4, 0.7, 1.0}, 100));
  const auto est = p_hat_daily(table, schedule, 20);
  ASSERT_EQ(est.rates.size(), 21);
  // Windows up to day 15 only see fully resolved cohorts.
  for (Day d = 3; d <= 15; ++d) EXPECT_DOUBLE_EQ(est.rates[d], 0.06);
  EXPECT_NE(est.rates[17], 0.06);
  // Edge days copy the nearest full window.
  EXPECT_EQ(est.rates[20], est.rates[17]);
  EXPECT_EQ(est.rates[19], est.rates[17]);
  EXPECT_EQ(est.rates[0], est.rates[3]);
  EXPECT_EQ(est.rates[2], est.rates[3]);
  EXPECT_TRUE(est.borrowed.empty());
}

TEST(PHatDaily, EmptyWindowsBorrowNearestAndRatiosAreClipped) {
  std::vector<Count> cases(40, 0);
  std::vector<std::vector<Count>> deaths(40);
  for (Day d = 0; d < 5; ++d) {
    cases[d] = 10;
    deaths[d] = {1};
  }
  for (Day d = 30; d < 40; ++d) {
    cases[d] = 10;
    deaths[d] = {9};
  }
  const EpidemicTable table(cases, deaths);
  std::vector<double> cdf(10, 0.5);
  cdf.push_back(1.0);
  const auto schedule = DelaySchedule::constant(SurvivalModel::empirical(cdf, 100));
  const auto est = p_hat_daily(table, schedule, 39);
  // Windows centred on days 8..26 see no cases.
  ASSERT_EQ(est.borrowed.size(), 19);
  EXPECT_EQ(est.borrowed.front(), 8);
  EXPECT_EQ(est.borrowed.back(), 26);
  EXPECT_DOUBLE_EQ(est.rates[3], 0.1);
  EXPECT_DOUBLE_EQ(est.rates[8], est.rates[7]);
  EXPECT_DOUBLE_EQ(est.rates[26], est.rates[27]);
  // 9 deaths / F(t - d) = 0.5 over 10 cases is 1.8, clipped.
  EXPECT_DOUBLE_EQ(est.rates[33], 1.0);
  EXPECT_FALSE(est.clipped.empty());
  EXPECT_THROW(p_hat_daily(table, schedule, 5), Error);
}

TEST(PHatDaily, TracksStepRates) {
  Scenario s;
  s.rising_arm = illustrative_rising_arm();
  s.horizon = 315;
  s.rates = StepRates{0.1, 0.05, 120};
  const int reps = 200;
  double sum90 = 0, sq90 = 0, sum150 = 0, sq150 = 0;
  for (int i = 0; i < reps; ++i) {
    const auto est = p_hat_daily(simulate_replicate(s, i), s.delay, 200);
    sum90 += est.rates[90];
    sq90 += est.rates[90] * est.rates[90];
    sum150 += est.rates[150];
    sq150 += est.rates[150] * est.rates[150];
  }
  const double m90 = sum90 / reps, m150 = sum150 / reps;
  const double se90 = std::sqrt((sq90 / reps - m90 * m90) / (reps - 1));
  const double se150 = std::sqrt((sq150 / reps - m150 * m150) / (reps - 1));
  EXPECT_LT(std::abs(m90 - 0.1), 3 * se90);
  EXPECT_LT(std::abs(m150 - 0.05), 3 * se150);
}

TEST(Variance, FormulaInstantiations) {
  const auto half = DelaySchedule::constant(SurvivalModel::empirical({0.5, 1.0}, 100));
  EXPECT_NEAR(variance_cfr(std::vector<Count>{100}, DailyRates({0.1}), half, 0), 0.0019, 1e-16);

  // F = 1 reduces to the variance of a mean of Bernoulli variables.
  const std::vector<Count> c{30, 50, 20};
  const DailyRates p({0.1, 0.3, 0.05});
  const double binomial = (30 * 0.1 * 0.9 + 50 * 0.3 * 0.7 + 20 * 0.05 * 0.95) / (100.0 * 100.0);
  EXPECT_NEAR(variance_cfr(c, p, kInstant, 2), binomial, 1e-16);
  EXPECT_THROW(variance_cfr(std::vector<Count>{0}, DailyRates({0.1}), kInstant, 0), Error);
  EXPECT_THROW(variance_cfr(std::vector<Count>{10}, DailyRates({0.1}),
                            DelaySchedule::constant(SurvivalModel::point_mass(2)), 0),
               Error);
}

TEST(NormalQuantile, MatchesBisectionOracle) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  for (double p : {1e-10, 1e-5, 0.001, 0.02, 0.025, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.99, 0.999999}) {
    EXPECT_NEAR(normal_quantile(p), oracle::normal_quantile(p), 1e-9) << p;
  }
  EXPECT_THROW(normal_quantile(0.0), Error);
  EXPECT_THROW(normal_quantile(1.0), Error);
}

TEST(ConfidenceInterval, Construction) {
  const auto degenerate = confidence_interval(0.3, 0.0, 0.05);
  EXPECT_EQ(degenerate.low, 0.3);
  EXPECT_EQ(degenerate.high, 0.3);

  const auto ci = confidence_interval(0.08, 0.0019, 0.05);
  EXPECT_EQ(ci.low, 0.0);  // 0.08 - 1.96 * 0.04359 < 0, clipped
  EXPECT_NEAR(ci.high, 0.08 + 1.959963984540054 * std::sqrt(0.0019), 1e-12);

  const auto wide = confidence_interval(1.4, 0.5, 0.05);
  EXPECT_LE(wide.low, 1.4);
  EXPECT_GE(wide.high, 1.4);
  EXPECT_THROW(confidence_interval(0.1, -1.0, 0.05), Error);
  EXPECT_THROW(confidence_interval(0.1, 0.1, 1.0), Error);
}

TEST(Assumptions, Checks) {
  const DailyRates rates({0.05, 0.1, 0.1, 0.05});
  const auto ok = validate_assumptions(rates, DelaySchedule::constant(SurvivalModel::negative_binomial(10.79, 0.88)), 3);
  EXPECT_TRUE(ok.all_hold());
  EXPECT_DOUBLE_EQ(ok.min_rate, 0.05);
  EXPECT_DOUBLE_EQ(ok.max_rate, 0.1);

  const auto late = DelaySchedule::per_day({SurvivalModel::point_mass(0), SurvivalModel::point_mass(2),
                                            SurvivalModel::point_mass(0), SurvivalModel::point_mass(0)});
  const auto a1 = validate_assumptions(rates, late, 3);
  EXPECT_FALSE(a1.a1_positive_same_day);
  EXPECT_TRUE(a1.a2_rates_above_zero);

  const auto clamped = validate_assumptions(rates, DelaySchedule::constant(SurvivalModel::empirical({0.0, 1.0}, 9)), 3);
  EXPECT_TRUE(clamped.a1_positive_same_day);
  EXPECT_TRUE(clamped.clamped);

  const auto extremes = validate_assumptions(DailyRates({0.0, 1.0}), kInstant, 1);
  EXPECT_FALSE(extremes.a2_rates_above_zero);
  EXPECT_FALSE(extremes.a3_rates_below_one);
}

TEST(EstimateSeries, RowsRespectInvariants) {
  Scenario s;
  s.rising_arm = illustrative_rising_arm();
  s.horizon = 320;
  const auto table = simulate_replicate(s, 0);
  SeriesOptions options;
  options.from = 0;
  options.to = 320;
  options.with_final = true;
  const auto series = estimate_series(table, options);
  ASSERT_FALSE(series.rows.empty());
  // Nothing is evaluable before some death is lookback-eligible.
  EXPECT_GT(series.rows.front().t, 45);
  for (const auto& row : series.rows) {
    EXPECT_GE(row.cfr_naive, 0.0);
    EXPECT_LE(row.cfr_naive, 1.0);
    EXPECT_GE(row.cfr, 0.0);
    ASSERT_TRUE(row.ci.has_value());
    EXPECT_LE(row.ci->low, row.cfr);
    EXPECT_GE(row.ci->high, row.cfr);
    EXPECT_EQ(row.cfr_garske, row.cfr_garske_mod);
    ASSERT_TRUE(row.cfr_final.has_value());
  }
  EXPECT_THROW(estimate_series(table, SeriesOptions{.from = 5, .to = 4}), Error);
}

}  // namespace
}  // namespace cfr
