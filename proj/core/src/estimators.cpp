#include "cfr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cfr/error.hpp"

namespace cfr {
namespace {

constexpr int kHalfWindow = 3;

Error a1_violation(Day d, Day t) {
  return Error(ErrorKind::kAssumption, "assumption A1 violated: F_" + std::to_string(d) + "(" +
                                           std::to_string(t - d) + ") = 0 with deaths observed");
}

Count require_cases(const EpidemicTable& table, Day t) {
  const Count r_t = cases_through(table, t);
  if (r_t <= 0) throw Error(ErrorKind::kInsufficientData, "no cases confirmed by day " + std::to_string(t));
  return r_t;
}

// Observed deaths of cohort d by day t, scaled up by the fraction expected by then.
double scaled_cohort_deaths(const EpidemicTable& table, const DelaySchedule& schedule, Day d, Day t) {
  const Count observed = deaths_by(table, d, t);
  if (observed == 0) return 0.0;
  const double f = schedule.model_for(d).divisor_cdf(t - d);
  if (!(f > 0.0)) throw a1_violation(d, t);
  return static_cast<double>(observed) / f;
}

Day last_case_day(const EpidemicTable& table, Day t) { return std::min(t, table.num_days() - 1); }

}  // namespace

DelaySchedule DelaySchedule::constant(SurvivalModel model) {
  return DelaySchedule({std::move(model)}, true);
}

DelaySchedule DelaySchedule::per_day(std::vector<SurvivalModel> models) {
  if (models.empty()) throw Error(ErrorKind::kInvalidArgument, "empty delay schedule");
  return DelaySchedule(std::move(models), false);
}

const SurvivalModel& DelaySchedule::model_for(Day d) const {
  if (constant_) return models_.front();
  if (d < 0 || static_cast<std::size_t>(d) >= models_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "no delay model assigned to day " + std::to_string(d));
  }
  return models_[d];
}

std::optional<Day> DelaySchedule::last_day() const {
  if (constant_) return std::nullopt;
  return static_cast<Day>(models_.size()) - 1;
}

DailyRates::DailyRates(std::vector<double> values) : p(std::move(values)) {
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "daily rate outside [0, 1]");
  }
}

double DailyRates::operator[](Day d) const {
  if (d < 0 || d >= size()) {
    throw Error(ErrorKind::kInvalidArgument, "no daily rate for day " + std::to_string(d));
  }
  return p[d];
}

Count cases_through(const EpidemicTable& table, Day t) {
  if (t < 0) throw Error(ErrorKind::kInvalidArgument, "negative day");
  if (table.empty()) return 0;
  return cumulative_cases(table, last_case_day(table, t));
}

double cfr_true(std::span<const Count> cases, const DailyRates& rates, Day t) {
  if (t < 0) throw Error(ErrorKind::kInvalidArgument, "negative day");
  const Day last = std::min<Day>(t, static_cast<Day>(cases.size()) - 1);
  double weighted = 0.0;
  Count r_t = 0;
  for (Day d = 0; d <= last; ++d) {
    r_t += cases[d];
    if (cases[d] > 0) weighted += static_cast<double>(cases[d]) * rates[d];
  }
  if (r_t <= 0) throw Error(ErrorKind::kInsufficientData, "cfr(t) undefined: no cases by day " + std::to_string(t));
  return weighted / static_cast<double>(r_t);
}

double cfr_naive(const EpidemicTable& table, Day t) {
  const Count r_t = require_cases(table, t);
  return static_cast<double>(total_deaths_by(table, t)) / static_cast<double>(r_t);
}

double cfr_final(const EpidemicTable& table, Day t) {
  const Count r_t = require_cases(table, t);
  Count deaths = 0;
  for (Day d = 0; d <= last_case_day(table, t); ++d) deaths += table.total_deaths(d);
  return static_cast<double>(deaths) / static_cast<double>(r_t);
}

double predicted_final_deaths(const EpidemicTable& table, const DelaySchedule& schedule, Day t) {
  if (t < 0) throw Error(ErrorKind::kInvalidArgument, "negative day");
  double total = 0.0;
  for (Day d = 0; d <= last_case_day(table, t); ++d) total += scaled_cohort_deaths(table, schedule, d, t);
  return total;
}

double cfr_proposed(const EpidemicTable& table, const DelaySchedule& schedule, Day t) {
  const Count r_t = require_cases(table, t);
  return predicted_final_deaths(table, schedule, t) / static_cast<double>(r_t);
}

double cfr_garske(const EpidemicTable& table, const SurvivalModel& model, Day t) {
  return cfr_garske_mod(table, DelaySchedule::constant(model), t);
}

double cfr_garske_mod(const EpidemicTable& table, const DelaySchedule& schedule, Day t) {
  if (t < 0) throw Error(ErrorKind::kInvalidArgument, "negative day");
  double expected = 0.0;
  Count deaths = 0;
  for (Day d = 0; d <= last_case_day(table, t); ++d) {
    const Count c = table.cases(d);
    if (c > 0) expected += static_cast<double>(c) * schedule.model_for(d).cdf(t - d);
    deaths += deaths_by(table, d, t);
  }
  if (!(expected > 0.0)) {
    throw Error(ErrorKind::kInsufficientData, "delay-weighted case count is zero at day " + std::to_string(t));
  }
  return static_cast<double>(deaths) / expected;
}

DailyRateEstimate p_hat_daily(const EpidemicTable& table, const DelaySchedule& schedule, Day t) {
  if (t < 2 * kHalfWindow) throw Error(ErrorKind::kInvalidArgument, "daily rate estimation needs t >= 6");

  const auto n = static_cast<std::size_t>(t) + 1;
  std::vector<double> scaled(n, 0.0);
  std::vector<Count> cases(n, 0);
  for (Day d = 0; d <= last_case_day(table, t); ++d) {
    scaled[d] = scaled_cohort_deaths(table, schedule, d, t);
    cases[d] = table.cases(d);
  }

  DailyRateEstimate out;
  std::vector<double> p(n, 0.0);
  std::vector<bool> computed(n, false);
  for (Day centre = kHalfWindow; centre <= t - kHalfWindow; ++centre) {
    double num = 0.0;
    Count den = 0;
    for (Day d = centre - kHalfWindow; d <= centre + kHalfWindow; ++d) {
      num += scaled[d];
      den += cases[d];
    }
    if (den == 0) continue;
    double ratio = num / static_cast<double>(den);
    if (ratio > 1.0) {
      ratio = 1.0;
      out.clipped.push_back(centre);
    }
    p[centre] = ratio;
    computed[centre] = true;
  }

  const Day first = kHalfWindow;
  const Day last = t - kHalfWindow;
  if (std::none_of(computed.begin() + first, computed.begin() + last + 1, [](bool b) { return b; })) {
    throw Error(ErrorKind::kInsufficientData, "no 7-day window with confirmed cases by day " + std::to_string(t));
  }
  // Empty windows take the nearest computed value, earlier day on ties.
  for (Day centre = first; centre <= last; ++centre) {
    if (computed[centre]) continue;
    for (Day offset = 1;; ++offset) {
      if (centre - offset >= first && computed[centre - offset]) {
        p[centre] = p[centre - offset];
        break;
      }
      if (centre + offset <= last && computed[centre + offset]) {
        p[centre] = p[centre + offset];
        break;
      }
    }
    out.borrowed.push_back(centre);
  }
  for (Day d = 0; d < first; ++d) p[d] = p[first];
  for (Day d = last + 1; d <= t; ++d) p[d] = p[last];
  out.rates = DailyRates(std::move(p));
  return out;
}

double variance_cfr(std::span<const Count> cases, const DailyRates& rates, const DelaySchedule& schedule,
                    Day t) {
  if (t < 0) throw Error(ErrorKind::kInvalidArgument, "negative day");
  const Day last = std::min<Day>(t, static_cast<Day>(cases.size()) - 1);
  double total = 0.0;
  Count r_t = 0;
  for (Day d = 0; d <= last; ++d) {
    const Count c = cases[d];
    r_t += c;
    if (c == 0) continue;
    const double p = rates[d];
    if (p == 0.0) continue;
    const double f = schedule.model_for(d).divisor_cdf(t - d);
    if (!(f > 0.0)) throw a1_violation(d, t);
    total += static_cast<double>(c) * p * (1.0 - p * f) / f;
  }
  if (r_t <= 0) throw Error(ErrorKind::kInsufficientData, "variance undefined: no cases by day " + std::to_string(t));
  return std::max(0.0, total) / (static_cast<double>(r_t) * static_cast<double>(r_t));
}

double variance_cfr(const EpidemicTable& table, const DailyRates& rates, const DelaySchedule& schedule, Day t) {
  return variance_cfr(table.cases(), rates, schedule, t);
}

// Acklam's rational approximation (relative error below 1.2e-9) followed by
// one Halley step against erfc, which brings it to near machine precision.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::kInvalidArgument, "normal quantile needs 0 < p < 1");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

Interval confidence_interval(double cfr, double v, double alpha) {
  if (!(v >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "variance must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::kInvalidArgument, "alpha must lie in (0, 1)");
  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(v);
  Interval ci{cfr - half, cfr + half};
  ci.low = std::min(std::max(ci.low, 0.0), cfr);
  ci.high = std::max(std::min(ci.high, 1.0), cfr);
  return ci;
}

AssumptionReport validate_assumptions(const DailyRates& rates, const DelaySchedule& schedule, Day t) {
  AssumptionReport report;
  report.min_same_day_cdf = std::numeric_limits<double>::infinity();
  report.min_rate = std::numeric_limits<double>::infinity();
  report.max_rate = -std::numeric_limits<double>::infinity();
  // A constant schedule has a single F(0) to inspect.
  const Day model_days = schedule.is_constant() ? 0 : t;
  for (Day d = 0; d <= model_days; ++d) {
    const auto& model = schedule.model_for(d);
    report.min_same_day_cdf = std::min(report.min_same_day_cdf, model.divisor_cdf(0));
    report.clamped = report.clamped || model.divisor_clamped(0);
  }
  for (Day d = 0; d <= t; ++d) {
    report.min_rate = std::min(report.min_rate, rates[d]);
    report.max_rate = std::max(report.max_rate, rates[d]);
  }
  report.a1_positive_same_day = report.min_same_day_cdf > 0.0;
  report.a2_rates_above_zero = report.min_rate > 0.0;
  report.a3_rates_below_one = report.max_rate < 1.0;
  return report;
}

std::optional<EstimateRow> estimate_day(const EpidemicTable& table, Day t, const SeriesOptions& options,
                                        bool* assumption_warning) {
  if (assumption_warning) *assumption_warning = false;
  if (t < 0 || table.empty()) return std::nullopt;
  EstimateRow row;
  row.t = t;
  row.r_t = cases_through(table, t);
  if (row.r_t <= 0) return std::nullopt;

  std::optional<DelaySchedule> fitted;
  if (!options.schedule) {
    try {
      fitted = DelaySchedule::constant(fit_empirical(table, t, options.lookback));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kInsufficientData) return std::nullopt;
      throw;
    }
  }
  const DelaySchedule& schedule = options.schedule ? *options.schedule : *fitted;

  row.cfr_naive = cfr_naive(table, t);
  row.cfr = cfr_proposed(table, schedule, t);
  try {
    const auto garske_day = schedule.last_day() ? std::min(t, *schedule.last_day()) : t;
    row.cfr_garske = cfr_garske(table, schedule.model_for(garske_day), t);
    row.cfr_garske_mod = cfr_garske_mod(table, schedule, t);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInsufficientData) return std::nullopt;
    throw;
  }

  std::optional<DailyRates> estimated;
  if (!options.rates && t >= 2 * kHalfWindow) estimated = p_hat_daily(table, schedule, t).rates;
  const DailyRates* rates = options.rates ? &*options.rates : (estimated ? &*estimated : nullptr);
  if (rates) {
    const double v = variance_cfr(table, *rates, schedule, t);
    row.variance = v;
    row.ci = confidence_interval(row.cfr, v, options.alpha);
    if (assumption_warning) *assumption_warning = !validate_assumptions(*rates, schedule, t).all_hold();
  }
  if (options.with_final) row.cfr_final = cfr_final(table, t);
  if (options.rates) row.cfr_true = cfr_true(table.cases(), *options.rates, t);
  return row;
}

EstimateSeries estimate_series(const EpidemicTable& table, const SeriesOptions& options) {
  if (options.from < 0 || options.to < options.from) {
    throw Error(ErrorKind::kInvalidArgument, "invalid day range");
  }
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "alpha must lie in (0, 1)");
  }
  EstimateSeries series;
  for (Day t = options.from; t <= options.to; ++t) {
    bool warning = false;
    auto row = estimate_day(table, t, options, &warning);
    if (!row) continue;
    if (warning) series.assumption_warnings.push_back(t);
    series.rows.push_back(std::move(*row));
  }
  return series;
}

}  // namespace cfr
