#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cfr/linelist.hpp"
#include "cfr/survival.hpp"

namespace cfr {

/// Assignment of a delay distribution to each confirmation day.
class DelaySchedule {
 public:
  /// The same model for every day.
  static DelaySchedule constant(SurvivalModel model);
  /// models[d] applies to day d; days past the end are out of scope.
  static DelaySchedule per_day(std::vector<SurvivalModel> models);

  const SurvivalModel& model_for(Day d) const;
  bool is_constant() const { return constant_; }
  /// Last day with an assigned model, or nullopt when every day is covered.
  std::optional<Day> last_day() const;

 private:
  DelaySchedule(std::vector<SurvivalModel> models, bool constant)
      : models_(std::move(models)), constant_(constant) {}

  std::vector<SurvivalModel> models_;
  bool constant_ = true;
};

/// Daily fatality probabilities p[d] in [0, 1].
struct DailyRates {
  std::vector<double> p;

  DailyRates() = default;
  explicit DailyRates(std::vector<double> values);

  double operator[](Day d) const;
  Day size() const { return static_cast<Day>(p.size()); }
};

/// Cases confirmed on days 0..t. Days past the end of the table contribute no cases.
Count cases_through(const EpidemicTable& table, Day t);

/// Weighted mean of daily fatality probabilities, weights c_d / r_t.
double cfr_true(std::span<const Count> cases, const DailyRates& rates, Day t);

/// Deaths observed by t over cases confirmed by t.
double cfr_naive(const EpidemicTable& table, Day t);

/// Fraction of cases confirmed by t that ever die, using every recorded death.
double cfr_final(const EpidemicTable& table, Day t);

/// Delay-adjusted estimator. Each cohort's observed deaths are divided by the
/// fraction F_d(t - d) expected to have occurred by day t, predicting the
/// eventual death count, which is then divided by r_t. Unbiased for cfr_true.
/// Not clipped to [0, 1].
double cfr_proposed(const EpidemicTable& table, const DelaySchedule& schedule, Day t);

/// Expected eventual deaths among cases confirmed by t (numerator of cfr_proposed).
double predicted_final_deaths(const EpidemicTable& table, const DelaySchedule& schedule, Day t);

/// Total deaths by t over the delay-weighted case count under a single F.
double cfr_garske(const EpidemicTable& table, const SurvivalModel& model, Day t);

/// cfr_garske with a per-day delay distribution.
double cfr_garske_mod(const EpidemicTable& table, const DelaySchedule& schedule, Day t);

struct DailyRateEstimate {
  DailyRates rates;
  // Days whose 7-day window had no confirmed cases and borrowed a neighbour's value.
  std::vector<Day> borrowed;
  // Windows whose raw ratio exceeded 1 and were clipped.
  std::vector<Day> clipped;
};

/// Estimates p_d for d = 0..t from centred 7-day windows of the delay-adjusted
/// ratio. Windows are evaluated for 3 <= d <= t-3; days t-2..t reuse day t-3
/// and days 0..2 reuse day 3. Requires t >= 6.
DailyRateEstimate p_hat_daily(const EpidemicTable& table, const DelaySchedule& schedule, Day t);

/// Asymptotic variance of cfr_proposed at day t:
///   sum_d c_d p_d (1 - p_d F_d(t-d)) / F_d(t-d) / r_t^2.
double variance_cfr(std::span<const Count> cases, const DailyRates& rates,
                    const DelaySchedule& schedule, Day t);
double variance_cfr(const EpidemicTable& table, const DailyRates& rates,
                    const DelaySchedule& schedule, Day t);

/// Standard normal quantile function.
double normal_quantile(double p);

struct Interval {
  double low = 0.0;
  double high = 0.0;
  double length() const { return high - low; }
  bool contains(double x) const { return low <= x && x <= high; }
};

/// cfr +/- z_{1-alpha/2} sqrt(v), clipped to [0, 1] for reporting. Clipping
/// never moves a bound past the point estimate itself.
Interval confidence_interval(double cfr, double v, double alpha);

struct AssumptionReport {
  double min_same_day_cdf = 0.0;  // min_d F_d(0)
  double min_rate = 0.0;          // min_d p_d
  double max_rate = 0.0;          // max_d p_d
  bool a1_positive_same_day = false;
  bool a2_rates_above_zero = false;
  bool a3_rates_below_one = false;
  // F_d(0) came from the empirical floor for at least one day.
  bool clamped = false;

  bool all_hold() const { return a1_positive_same_day && a2_rates_above_zero && a3_rates_below_one; }
};

/// Checks the conditions under which the interval is asymptotically valid:
/// same-day death mass bounded away from 0 and rates bounded inside (0, 1).
AssumptionReport validate_assumptions(const DailyRates& rates, const DelaySchedule& schedule, Day t);

struct EstimateRow {
  Day t = 0;
  Count r_t = 0;
  double cfr_naive = 0.0;
  double cfr = 0.0;
  std::optional<Interval> ci;
  std::optional<double> variance;
  double cfr_garske = 0.0;
  double cfr_garske_mod = 0.0;
  std::optional<double> cfr_final;
  std::optional<double> cfr_true;
};

struct EstimateSeries {
  std::vector<EstimateRow> rows;
  // Days at which some assumption check failed (the interval is still reported).
  std::vector<Day> assumption_warnings;
};

struct SeriesOptions {
  Day from = 0;
  Day to = 0;
  double alpha = 0.05;
  // Days excluded from the empirical delay fit at the evaluation day.
  Day lookback = 45;
  // Known delay schedule. When absent the empirical CDF is refitted at each day.
  std::optional<DelaySchedule> schedule;
  // Known daily rates for the variance. When absent p_hat_daily is used.
  std::optional<DailyRates> rates;
  bool with_final = false;
};

/// Evaluates all estimators for t in [from, to]. Days where an estimator's
/// denominator vanishes or the empirical fit has no data are skipped.
EstimateSeries estimate_series(const EpidemicTable& table, const SeriesOptions& options);

/// Single-day evaluation shared by estimate_series and the simulation studies.
/// Returns nullopt when the day cannot be evaluated.
std::optional<EstimateRow> estimate_day(const EpidemicTable& table, Day t, const SeriesOptions& options,
                                        bool* assumption_warning = nullptr);

}  // namespace cfr
