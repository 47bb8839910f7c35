#include "cfr/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cfr/error.hpp"
#include "nelder_mead.hpp"

namespace cfr {
namespace {

void check_nb(double mu, double r) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw Error(ErrorKind::kInvalidArgument, "NB mean must be > 0");
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::kInvalidArgument, "NB dispersion must be > 0");
}

// Cumulative NB probabilities out to where the remaining tail is negligible.
std::vector<double> nb_cdf_table(double mu, double r) {
  const double log_p0 = -r * std::log1p(mu / r);
  const double log_q = -std::log1p(r / mu);
  const double mode = std::max(0.0, (r - 1.0) * mu / r);
  std::vector<double> cdf;
  double log_pmf = log_p0;
  double total = 0.0;
  for (std::size_t j = 0; j < 2'000'000; ++j) {
    const double pmf = std::exp(log_pmf);
    total += pmf;
    cdf.push_back(std::min(total, 1.0));
    if (static_cast<double>(j) > mode && pmf < 1e-20 && total > 1.0 - 1e-14) break;
    log_pmf += std::log((static_cast<double>(j) + r) / (static_cast<double>(j) + 1.0)) + log_q;
  }
  return cdf;
}

// Histogram of lags: counts[x] = number of observations equal to x.
struct LagHistogram {
  std::vector<double> counts;
  double n = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

LagHistogram histogram(const DelaySample& sample) {
  LagHistogram h;
  Day longest = 0;
  for (Day x : sample.lags) {
    if (x < 0) throw Error(ErrorKind::kInvalidArgument, "negative lag in delay sample");
    longest = std::max(longest, x);
  }
  h.counts.assign(static_cast<std::size_t>(longest) + 1, 0.0);
  for (Day x : sample.lags) {
    h.counts[x] += 1.0;
    h.n += 1.0;
    h.sum += x;
    h.sum_sq += static_cast<double>(x) * x;
  }
  return h;
}

// Sum over positive observations of log NB pmf, plus log pmf(0) separately.
struct NbTerms {
  double positive = 0.0;  // sum over x > 0 of log pmf(x)
  double log_p0 = 0.0;
};

NbTerms nb_terms(const LagHistogram& h, double mu, double r) {
  const double log_p = -std::log1p(mu / r);
  const double log_q = -std::log1p(r / mu);
  NbTerms terms;
  terms.log_p0 = r * log_p;
  double rising = 0.0;  // log Gamma(x + r) - log Gamma(r)
  double log_fact = 0.0;
  for (std::size_t x = 1; x < h.counts.size(); ++x) {
    rising += std::log(r + static_cast<double>(x) - 1.0);
    log_fact += std::log(static_cast<double>(x));
    if (h.counts[x] == 0.0) continue;
    terms.positive += h.counts[x] * (rising - log_fact + r * log_p + static_cast<double>(x) * log_q);
  }
  return terms;
}

double nb_loglik(const LagHistogram& h, double mu, double r) {
  const auto terms = nb_terms(h, mu, r);
  return terms.positive + h.counts[0] * terms.log_p0;
}

double zinb_loglik(const LagHistogram& h, double pi, double mu, double r) {
  const auto terms = nb_terms(h, mu, r);
  const double positives = h.n - h.counts[0];
  double ll = terms.positive + positives * std::log1p(-pi);
  if (h.counts[0] > 0.0) ll += h.counts[0] * std::log(pi + (1.0 - pi) * std::exp(terms.log_p0));
  return ll;
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(p / (1.0 - p));
}

// Maps R onto (lo, hi) on a log scale and back.
double to_box(double u, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * sigmoid(u));
}
double from_box(double x, double lo, double hi) {
  return logit((std::log(std::clamp(x, lo, hi)) - std::log(lo)) / (std::log(hi) - std::log(lo)));
}

double moment_dispersion(double mean, double var) {
  if (var > mean * (1.0 + 1e-9)) return std::clamp(mean * mean / (var - mean), kMinR, kMaxR);
  return kMaxR / 10.0;
}

LagHistogram eligible_histogram(const EpidemicTable& table, Day t, Day lookback) {
  if (t < 0) throw Error(ErrorKind::kInvalidArgument, "negative day");
  if (lookback < 0) throw Error(ErrorKind::kInvalidArgument, "negative lookback");
  LagHistogram h;
  const Day last = std::min(t - lookback, table.num_days() - 1);
  for (Day d = 0; d <= last; ++d) {
    const auto row = table.death_row(d);
    const auto limit = std::min<std::size_t>(row.size(), static_cast<std::size_t>(t - d) + 1);
    if (h.counts.size() < limit) h.counts.resize(limit, 0.0);
    for (std::size_t k = 0; k < limit; ++k) {
      h.counts[k] += static_cast<double>(row[k]);
      h.n += static_cast<double>(row[k]);
    }
  }
  return h;
}

SurvivalModel empirical_from_histogram(const LagHistogram& h) {
  if (h.n <= 0.0) throw Error(ErrorKind::kInsufficientData, "insufficient resolved deaths for empirical fit");
  std::size_t last = h.counts.size();
  while (last > 0 && h.counts[last - 1] == 0.0) --last;
  std::vector<double> cdf(last);
  double running = 0.0;
  for (std::size_t k = 0; k < last; ++k) {
    running += h.counts[k];
    cdf[k] = running / h.n;
  }
  cdf.back() = 1.0;
  return SurvivalModel::empirical(std::move(cdf), static_cast<Count>(h.n));
}

}  // namespace

SurvivalModel::SurvivalModel(Params params) : params_(std::move(params)) {
  if (const auto* nb = std::get_if<NegBinomial>(&params_)) {
    cdf_ = std::make_shared<const std::vector<double>>(nb_cdf_table(nb->mu, nb->r));
  } else if (const auto* z = std::get_if<Zinb>(&params_)) {
    auto table = nb_cdf_table(z->mu, z->r);
    for (auto& v : table) v = std::min(1.0, z->pi + (1.0 - z->pi) * v);
    cdf_ = std::make_shared<const std::vector<double>>(std::move(table));
  } else if (const auto* e = std::get_if<EmpiricalCdf>(&params_)) {
    cdf_ = std::make_shared<const std::vector<double>>(e->table);
  } else {
    const auto lag = std::get<PointMass>(params_).lag;
    std::vector<double> table(static_cast<std::size_t>(lag) + 1, 0.0);
    table.back() = 1.0;
    cdf_ = std::make_shared<const std::vector<double>>(std::move(table));
  }
}

SurvivalModel SurvivalModel::empirical(std::vector<double> cdf_table, Count n_deaths) {
  if (cdf_table.empty()) throw Error(ErrorKind::kInvalidArgument, "empty empirical CDF table");
  if (n_deaths < 1) throw Error(ErrorKind::kInvalidArgument, "empirical CDF needs at least one death");
  double previous = 0.0;
  for (double v : cdf_table) {
    if (!(v >= previous) || v > 1.0) {
      throw Error(ErrorKind::kInvalidArgument, "empirical CDF must be non-decreasing within [0, 1]");
    }
    previous = v;
  }
  if (std::abs(cdf_table.back() - 1.0) > 1e-9) {
    throw Error(ErrorKind::kInvalidArgument, "empirical CDF table must end at 1");
  }
  cdf_table.back() = 1.0;
  return SurvivalModel(EmpiricalCdf{std::move(cdf_table), n_deaths});
}

SurvivalModel SurvivalModel::negative_binomial(double mu, double r) {
  check_nb(mu, r);
  return SurvivalModel(NegBinomial{mu, r});
}

SurvivalModel SurvivalModel::zinb(double pi, double mu, double r) {
  check_nb(mu, r);
  if (!(pi >= 0.0 && pi < 1.0)) throw Error(ErrorKind::kInvalidArgument, "ZINB pi must lie in [0, 1)");
  return SurvivalModel(Zinb{pi, mu, r});
}

SurvivalModel SurvivalModel::point_mass(Day lag) {
  if (lag < 0) throw Error(ErrorKind::kInvalidArgument, "point-mass lag must be >= 0");
  return SurvivalModel(PointMass{lag});
}

std::string_view SurvivalModel::name() const {
  switch (params_.index()) {
    case 0: return "empirical";
    case 1: return "nb";
    case 2: return "zinb";
    default: return "point";
  }
}

double SurvivalModel::cdf(Day k) const {
  if (k < 0) throw Error(ErrorKind::kInvalidArgument, "cdf evaluated at a negative lag");
  const auto& table = *cdf_;
  if (static_cast<std::size_t>(k) < table.size()) return table[k];
  return is_empirical() || std::holds_alternative<PointMass>(params_) ? 1.0 : table.back();
}

double SurvivalModel::pmf(Day k) const {
  if (k < 0) throw Error(ErrorKind::kInvalidArgument, "pmf evaluated at a negative lag");
  return k == 0 ? cdf(0) : cdf(k) - cdf(k - 1);
}

double SurvivalModel::divisor_cdf(Day k) const {
  const double value = cdf(k);
  if (value > 0.0) return value;
  if (const auto* e = std::get_if<EmpiricalCdf>(&params_)) return 1.0 / static_cast<double>(e->n_deaths + 1);
  return value;
}

bool SurvivalModel::divisor_clamped(Day k) const { return is_empirical() && cdf(k) == 0.0; }

Day SurvivalModel::quantile(double u) const {
  if (!(u >= 0.0 && u < 1.0)) throw Error(ErrorKind::kInvalidArgument, "quantile level must lie in [0, 1)");
  const auto& table = *cdf_;
  const auto it = std::upper_bound(table.begin(), table.end(), u);
  return static_cast<Day>(it - table.begin());
}

double SurvivalModel::mean() const {
  if (const auto* nb = std::get_if<NegBinomial>(&params_)) return nb->mu;
  if (const auto* z = std::get_if<Zinb>(&params_)) return (1.0 - z->pi) * z->mu;
  if (const auto* p = std::get_if<PointMass>(&params_)) return p->lag;
  double total = 0.0;
  for (double v : *cdf_) total += 1.0 - v;
  return total;
}

DelaySample eligible_delays(const EpidemicTable& table, Day t, Day lookback) {
  const auto h = eligible_histogram(table, t, lookback);
  DelaySample sample;
  sample.lags.reserve(static_cast<std::size_t>(h.n));
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    sample.lags.insert(sample.lags.end(), static_cast<std::size_t>(h.counts[k]), static_cast<Day>(k));
  }
  return sample;
}

SurvivalModel fit_empirical(const EpidemicTable& table, Day t, Day lookback) {
  return empirical_from_histogram(eligible_histogram(table, t, lookback));
}

SurvivalModel empirical_from_sample(const DelaySample& sample) {
  return empirical_from_histogram(histogram(sample));
}

double log_likelihood(const SurvivalModel& model, const DelaySample& sample) {
  const auto h = histogram(sample);
  if (const auto* nb = std::get_if<NegBinomial>(&model.params())) {
    return nb_loglik(h, nb->mu, nb->r);
  }
  if (const auto* z = std::get_if<Zinb>(&model.params())) {
    return zinb_loglik(h, z->pi, z->mu, z->r);
  }
  double ll = 0.0;
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    if (h.counts[k] > 0.0) ll += h.counts[k] * std::log(model.pmf(static_cast<Day>(k)));
  }
  return ll;
}

FitResult fit_nb_mle(const DelaySample& sample) {
  if (sample.lags.empty()) throw Error(ErrorKind::kInsufficientData, "empty delay sample");
  const auto h = histogram(sample);
  const double mean = h.sum / h.n;
  const double var = h.sum_sq / h.n - mean * mean;
  if (std::all_of(sample.lags.begin(), sample.lags.end(), [&](Day x) { return x == sample.lags.front(); })) {
    throw Error(ErrorKind::kInsufficientData, "dispersion unidentifiable: all lags are equal");
  }

  auto objective = [&](const std::vector<double>& u) {
    return -nb_loglik(h, to_box(u[0], kMinMu, kMaxMu), to_box(u[1], kMinR, kMaxR));
  };
  const std::vector<double> start{from_box(std::max(mean, kMinMu), kMinMu, kMaxMu),
                                  from_box(moment_dispersion(mean, var), kMinR, kMaxR)};
  const auto best = detail::nelder_mead(objective, start, 0.5, 1e-8);
  double mu = to_box(best.x[0], kMinMu, kMaxMu);
  double r = to_box(best.x[1], kMinR, kMaxR);

  // The mean parameter's score vanishes at the sample mean for every r, so the
  // profile likelihood in r alone pins down the interior optimum.
  if (mean >= kMinMu && mean <= kMaxMu) {
    const double lo = std::log(std::max(kMinR, r / 8.0));
    const double hi = std::log(std::min(kMaxR, r * 8.0));
    const double log_r = detail::golden_section_max(
        [&](double lr) { return nb_loglik(h, mean, std::exp(lr)); }, lo, hi);
    if (nb_loglik(h, mean, std::exp(log_r)) >= nb_loglik(h, mu, r)) {
      mu = mean;
      r = std::exp(log_r);
    }
  }
  auto model = SurvivalModel::negative_binomial(mu, r);
  return FitResult{model, nb_loglik(h, mu, r), sample.lags.size(), false};
}

FitResult fit_zinb_mle(const DelaySample& sample) {
  if (sample.lags.empty()) throw Error(ErrorKind::kInsufficientData, "empty delay sample");
  const auto h = histogram(sample);
  if (h.counts.size() < 3) {
    throw Error(ErrorKind::kInsufficientData, "ZINB unidentifiable: no lag of 2 days or more");
  }
  if (h.counts[0] == 0.0) {
    auto nb = fit_nb_mle(sample);
    const auto& p = std::get<NegBinomial>(nb.model.params());
    return FitResult{SurvivalModel::zinb(0.0, p.mu, p.r), nb.log_likelihood, nb.n, true};
  }

  const double mean = h.sum / h.n;
  const double var = h.sum_sq / h.n - mean * mean;
  const double r0 = moment_dispersion(mean, var);
  const double nb_zero = std::pow(r0 / (r0 + mean), r0);
  const double pi0 = std::clamp(h.counts[0] / h.n - nb_zero, 0.01, 0.9);
  const double mu0 = std::clamp(mean / (1.0 - pi0), kMinMu, kMaxMu);

  auto pi_of = [](double u) { return kMaxPi * sigmoid(u); };
  auto objective = [&](const std::vector<double>& u) {
    return -zinb_loglik(h, pi_of(u[0]), to_box(u[1], kMinMu, kMaxMu), to_box(u[2], kMinR, kMaxR));
  };
  const std::vector<double> start{logit(pi0 / kMaxPi), from_box(mu0, kMinMu, kMaxMu),
                                  from_box(r0, kMinR, kMaxR)};
  auto best = detail::nelder_mead(objective, start, 0.5, 1e-8);

  // The zero-inflation mass may sit on the pi = 0 boundary; compare with the nested NB fit.
  double pi = pi_of(best.x[0]);
  double mu = to_box(best.x[1], kMinMu, kMaxMu);
  double r = to_box(best.x[2], kMinR, kMaxR);
  double ll = -best.value;
  if (var > 0.0) {
    const auto nb = fit_nb_mle(sample);
    const auto& p = std::get<NegBinomial>(nb.model.params());
    const double nb_ll = zinb_loglik(h, 0.0, p.mu, p.r);
    if (nb_ll > ll) {
      pi = 0.0;
      mu = p.mu;
      r = p.r;
      ll = nb_ll;
    }
  }
  return FitResult{SurvivalModel::zinb(pi, mu, r), ll, sample.lags.size(), false};
}

}  // namespace cfr
