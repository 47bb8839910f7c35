#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "cfr/estimators.hpp"
#include "cfr/linelist.hpp"
#include "cfr/survival.hpp"

namespace cfr {

// p_d = c1 for d < d_star and c2 from d_star on.
struct StepRates {
  double c1 = 0.1;
  double c2 = 0.05;
  Day d_star = 120;
};

/// Synthetic epidemic configuration for replicate studies.
struct Scenario {
  std::vector<Count> rising_arm;
  // Append the reversed arm so the curve is symmetric around its peak.
  bool symmetric = true;
  std::variant<StepRates, DailyRates> rates = StepRates{};
  DelaySchedule delay = DelaySchedule::constant(SurvivalModel::negative_binomial(10.79, 0.88));
  // Last simulated and evaluated day.
  Day horizon = 0;
  std::uint64_t seed = 20200303;
  int replicates = 1000;
};

void validate(const Scenario& scenario);

/// Daily case counts on days 0..horizon.
std::vector<Count> build_curve(const Scenario& scenario);

/// Generating daily fatality probabilities on days 0..horizon.
DailyRates scenario_rates(const Scenario& scenario);

/// Seed of the RNG stream for one replicate: SplitMix64 applied to
/// seed + 0x9E3779B97F4A7C15 * (replicate_index + 1). Streams depend only on
/// (seed, index), never on evaluation order.
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate_index);

/// One synthetic epidemic: Binomial(c_d, p_d) deaths per day with lags drawn
/// i.i.d. from the day's delay model by inverse CDF on a mt19937_64 stream.
EpidemicTable simulate_replicate(const Scenario& scenario, std::uint64_t replicate_index);

enum class StudyMode {
  // True F and true p_d drive the estimators and the variance.
  kKnownFKnownP,
  // Empirical F refitted each day with the lookback rule, p_d from 7-day windows.
  kEstimatedFEstimatedP,
};

struct StudyOptions {
  StudyMode mode = StudyMode::kKnownFKnownP;
  double alpha = 0.05;
  Day lookback = 45;
  // First evaluated day. Defaults to 0 in known mode and 2 * lookback otherwise.
  std::optional<Day> first_day;
  // Evaluate only every `stride`-th day from the first.
  Day stride = 1;
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  // Days whose per-replicate (cfr, variance) pairs are retained in the result.
  std::vector<Day> keep_days;
};

struct ReplicateResult {
  EstimateSeries series;
  // Aligned with series.rows; nullopt where the interval is undefined.
  std::vector<std::optional<bool>> hit;
  std::vector<std::optional<double>> ci_length;
};

/// Evaluates every study day on one simulated table.
ReplicateResult evaluate_replicate(const Scenario& scenario, const EpidemicTable& table,
                                   const StudyOptions& options);

struct MeanStat {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  int n = 0;
};

struct DaySummary {
  Day t = 0;
  Count r_t = 0;
  double cfr_true = 0.0;
  MeanStat naive;
  MeanStat cfr;
  MeanStat garske;
  MeanStat garske_mod;
  MeanStat final_rate;
  // Replicates with a defined interval, fraction covering cfr_true, binomial SE.
  int ci_defined = 0;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double mean_ci_length = 0.0;
};

struct KeptDay {
  Day t = 0;
  double cfr_true = 0.0;
  // One entry per replicate in index order; nullopt where the day was not evaluable.
  std::vector<std::optional<double>> cfr;
  std::vector<std::optional<double>> variance;
};

struct StudyResult {
  std::vector<DaySummary> days;
  std::vector<KeptDay> kept;

  const DaySummary* day(Day t) const;
  /// Minimum coverage over days with r_t >= cases (nullopt when none qualify).
  std::optional<double> min_coverage_from_cases(Count cases) const;
  /// Minimum coverage over days t >= first.
  std::optional<double> min_coverage_from_day(Day first) const;
};

/// Runs scenario.replicates replicates and aggregates them in ascending
/// replicate order, so results are bit-identical for any thread count.
StudyResult run_study(const Scenario& scenario, const StudyOptions& options);

/// A 158-day synthetic rising arm (about 0.22 million cases). Illustrative only.
std::vector<Count> illustrative_rising_arm();

/// A 301-day illustrative outbreak curve (about 1.6 million cases) whose first
/// 158 days equal illustrative_rising_arm().
std::vector<Count> illustrative_outbreak_curve();

/// Smooth illustrative daily fatality probabilities for illustrative_outbreak_curve().
std::vector<double> illustrative_outbreak_rates();

}  // namespace cfr
