#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <variant>
#include <vector>

#include "cfr/linelist.hpp"

namespace cfr {

// Empirical confirmation-to-death CDF. table[k] = P(T <= k); the last entry is 1.
struct EmpiricalCdf {
  std::vector<double> table;
  Count n_deaths = 0;  // size of the sample the table was built from
};

// Negative binomial in mean/dispersion form:
//   pmf(j) = Gamma(j+r) / (Gamma(r) j!) * (r/(r+mu))^r * (mu/(r+mu))^j
struct NegBinomial {
  double mu = 1.0;
  double r = 1.0;
};

// Every death happens exactly `lag` days after confirmation.
struct PointMass {
  Day lag = 0;
};

// Point mass at zero with weight pi mixed with NegBinomial(mu, r).
struct Zinb {
  double pi = 0.0;
  double mu = 1.0;
  double r = 1.0;
};

/// Distribution of days from confirmation to death, conditional on death.
///
/// Immutable. Parametric models precompute their CDF out to the point where
/// the remaining tail mass is below double resolution, so `cdf` is O(1) and
/// copies share the table.
class SurvivalModel {
 public:
  using Params = std::variant<EmpiricalCdf, NegBinomial, Zinb, PointMass>;

  static SurvivalModel empirical(std::vector<double> cdf_table, Count n_deaths);
  static SurvivalModel negative_binomial(double mu, double r);
  static SurvivalModel zinb(double pi, double mu, double r);
  static SurvivalModel point_mass(Day lag);

  const Params& params() const { return params_; }
  bool is_empirical() const { return std::holds_alternative<EmpiricalCdf>(params_); }
  std::string_view name() const;

  double cdf(Day k) const;
  double pmf(Day k) const;

  /// CDF value to use as a divisor. Identical to cdf(k) except for empirical
  /// models, where a zero is replaced by 1/(n_deaths + 1).
  double divisor_cdf(Day k) const;
  /// True when divisor_cdf(k) differs from cdf(k).
  bool divisor_clamped(Day k) const;

  /// Smallest k with u < cdf(k), for u in [0, 1). Used for inverse-CDF sampling.
  Day quantile(double u) const;

  double mean() const;

 private:
  explicit SurvivalModel(Params params);

  Params params_;
  std::shared_ptr<const std::vector<double>> cdf_;
};

/// Observed confirmation-to-death lags for resolved deaths.
struct DelaySample {
  std::vector<Day> lags;
};

/// Lags of deaths confirmed on or before `t - lookback` and dead by day `t`.
DelaySample eligible_delays(const EpidemicTable& table, Day t, Day lookback);

/// Empirical CDF of the lags in `eligible_delays(table, t, lookback)`.
/// Throws Error(kInsufficientData) when there is no eligible death.
SurvivalModel fit_empirical(const EpidemicTable& table, Day t, Day lookback = 45);

/// Same as fit_empirical but from an explicit sample.
SurvivalModel empirical_from_sample(const DelaySample& sample);

double log_likelihood(const SurvivalModel& model, const DelaySample& sample);

struct FitResult {
  SurvivalModel model;
  double log_likelihood = 0.0;
  std::size_t n = 0;
  // ZINB only: the sample has no zeros, so pi was pinned at 0.
  bool pi_degenerate = false;
};

// Box constraints of the maximum-likelihood search.
inline constexpr double kMinMu = 1e-3;
inline constexpr double kMaxMu = 1e3;
inline constexpr double kMinR = 1e-3;
inline constexpr double kMaxR = 1e3;
inline constexpr double kMaxPi = 1.0 - 1e-6;

/// Maximum-likelihood NegBinomial fit. Throws Error(kInsufficientData) for an
/// empty sample and when all lags are equal ("dispersion unidentifiable").
FitResult fit_nb_mle(const DelaySample& sample);

/// Maximum-likelihood ZINB fit. A sample without zeros yields pi = 0 and sets
/// `pi_degenerate`. A sample without any lag >= 2 is rejected.
FitResult fit_zinb_mle(const DelaySample& sample);

}  // namespace cfr
