#include "cfr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <thread>
#include <utility>

#include "cfr/error.hpp"

namespace cfr {
namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

struct Anchor {
  Day day;
  double value;
};

template <typename Interp>
std::vector<double> interpolate(std::span<const Anchor> anchors, Day length, Interp interp) {
  std::vector<double> out(static_cast<std::size_t>(length));
  std::size_t seg = 0;
  for (Day d = 0; d < length; ++d) {
    while (seg + 2 < anchors.size() && d > anchors[seg + 1].day) ++seg;
    const auto& a = anchors[seg];
    const auto& b = anchors[seg + 1];
    const double w = static_cast<double>(d - a.day) / static_cast<double>(b.day - a.day);
    out[d] = interp(a.value, b.value, w);
  }
  return out;
}

constexpr Anchor kCaseAnchors[] = {
    {0, 1},       {15, 60},     {30, 110},    {45, 140},    {60, 180},    {75, 330},
    {90, 620},    {105, 1500},  {120, 2700},  {135, 3700},  {158, 6900},  {180, 9500},
    {200, 11000}, {230, 14000}, {250, 11500}, {265, 8500},  {280, 6500},  {300, 7500},
};

constexpr Anchor kRateAnchors[] = {
    {0, 0.05},    {30, 0.06},   {60, 0.05},   {90, 0.035},  {120, 0.025},
    {158, 0.022}, {200, 0.025}, {240, 0.027}, {300, 0.022},
};

void accumulate(MeanStat& stat, double& m2, double x) {
  ++stat.n;
  const double delta = x - stat.mean;
  stat.mean += delta / stat.n;
  m2 += delta * (x - stat.mean);
}

void finish(MeanStat& stat, double m2) {
  stat.se = stat.n > 1 ? std::sqrt(m2 / (stat.n - 1) / stat.n) : 0.0;
}

// Running aggregates for one evaluation day.
struct DayAccumulator {
  DaySummary summary;
  double m2_naive = 0.0, m2_cfr = 0.0, m2_garske = 0.0, m2_garske_mod = 0.0, m2_final = 0.0;
  int hits = 0;
  double length_sum = 0.0;
};

}  // namespace

void validate(const Scenario& scenario) {
  if (scenario.rising_arm.empty()) throw Error(ErrorKind::kInvalidArgument, "scenario arm is empty");
  for (Count c : scenario.rising_arm) {
    if (c < 0) throw Error(ErrorKind::kInvalidArgument, "negative daily case count in arm");
  }
  if (scenario.replicates < 1) throw Error(ErrorKind::kInvalidArgument, "replicates must be >= 1");
  const Day support = static_cast<Day>(scenario.rising_arm.size()) * (scenario.symmetric ? 2 : 1);
  if (scenario.horizon < support - 1) {
    throw Error(ErrorKind::kInvalidArgument, "horizon " + std::to_string(scenario.horizon) +
                                                 " is shorter than the " + std::to_string(support) +
                                                 "-day case curve");
  }
  if (const auto* step = std::get_if<StepRates>(&scenario.rates)) {
    if (!(step->c1 > 0.0 && step->c1 < 1.0 && step->c2 > 0.0 && step->c2 < 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "step rates c1, c2 must lie in (0, 1)");
    }
    if (step->d_star < 0 || step->d_star >= support) {
      throw Error(ErrorKind::kInvalidArgument, "d_star must fall within the case curve");
    }
  } else {
    const auto& rates = std::get<DailyRates>(scenario.rates);
    if (rates.size() < support) {
      throw Error(ErrorKind::kInvalidArgument, "explicit daily rates do not cover the case curve");
    }
  }
  if (const auto last = scenario.delay.last_day(); last && *last < support - 1) {
    throw Error(ErrorKind::kInvalidArgument, "delay schedule does not cover the case curve");
  }
}

std::vector<Count> build_curve(const Scenario& scenario) {
  if (scenario.rising_arm.empty()) throw Error(ErrorKind::kInvalidArgument, "scenario arm is empty");
  std::vector<Count> curve = scenario.rising_arm;
  if (scenario.symmetric) curve.insert(curve.end(), scenario.rising_arm.rbegin(), scenario.rising_arm.rend());
  if (scenario.horizon + 1 < static_cast<Day>(curve.size())) {
    throw Error(ErrorKind::kInvalidArgument, "horizon is shorter than the constructed case curve");
  }
  curve.resize(static_cast<std::size_t>(scenario.horizon) + 1, 0);
  return curve;
}

DailyRates scenario_rates(const Scenario& scenario) {
  const auto length = static_cast<std::size_t>(scenario.horizon) + 1;
  std::vector<double> p(length, 0.0);
  if (const auto* step = std::get_if<StepRates>(&scenario.rates)) {
    for (std::size_t d = 0; d < length; ++d) p[d] = static_cast<Day>(d) < step->d_star ? step->c1 : step->c2;
  } else {
    const auto& given = std::get<DailyRates>(scenario.rates).p;
    for (std::size_t d = 0; d < length; ++d) p[d] = d < given.size() ? given[d] : given.back();
  }
  return DailyRates(std::move(p));
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate_index) {
  return splitmix64(seed + 0x9E3779B97F4A7C15ull * (replicate_index + 1));
}

EpidemicTable simulate_replicate(const Scenario& scenario, std::uint64_t replicate_index) {
  validate(scenario);
  const auto curve = build_curve(scenario);
  const auto rates = scenario_rates(scenario);
  std::mt19937_64 engine(replicate_seed(scenario.seed, replicate_index));

  std::vector<std::vector<Count>> deaths(curve.size());
  for (std::size_t d = 0; d < curve.size(); ++d) {
    const Count c = curve[d];
    const double p = rates.p[d];
    if (c == 0 || p == 0.0) continue;
    const Count dead = std::binomial_distribution<Count>(c, p)(engine);
    const auto& model = scenario.delay.model_for(static_cast<Day>(d));
    auto& row = deaths[d];
    for (Count i = 0; i < dead; ++i) {
      const auto lag = static_cast<std::size_t>(model.quantile(uniform01(engine)));
      if (row.size() <= lag) row.resize(lag + 1, 0);
      ++row[lag];
    }
  }
  return EpidemicTable(curve, std::move(deaths));
}

namespace {

SeriesOptions series_options(const Scenario& scenario, const StudyOptions& options, const DailyRates& truth) {
  SeriesOptions series;
  series.alpha = options.alpha;
  series.lookback = options.lookback;
  series.with_final = true;
  if (options.mode == StudyMode::kKnownFKnownP) {
    series.schedule = scenario.delay;
    series.rates = truth;
  }
  return series;
}

Day first_study_day(const StudyOptions& options) {
  if (options.first_day) return *options.first_day;
  return options.mode == StudyMode::kKnownFKnownP ? 0 : 2 * options.lookback;
}

}  // namespace

ReplicateResult evaluate_replicate(const Scenario& scenario, const EpidemicTable& table,
                                   const StudyOptions& options) {
  if (options.stride < 1) throw Error(ErrorKind::kInvalidArgument, "stride must be >= 1");
  const auto truth = scenario_rates(scenario);
  const auto series_opts = series_options(scenario, options, truth);

  ReplicateResult result;
  for (Day t = first_study_day(options); t <= scenario.horizon; t += options.stride) {
    bool warning = false;
    auto row = estimate_day(table, t, series_opts, &warning);
    if (!row) continue;
    if (warning) result.series.assumption_warnings.push_back(t);
    if (!row->cfr_true) row->cfr_true = cfr_true(table.cases(), truth, t);
    if (row->ci) {
      result.hit.emplace_back(row->ci->contains(*row->cfr_true));
      result.ci_length.emplace_back(row->ci->length());
    } else {
      result.hit.emplace_back();
      result.ci_length.emplace_back();
    }
    result.series.rows.push_back(std::move(*row));
  }
  return result;
}

StudyResult run_study(const Scenario& scenario, const StudyOptions& options) {
  validate(scenario);
  if (options.stride < 1) throw Error(ErrorKind::kInvalidArgument, "stride must be >= 1");
  const auto curve = build_curve(scenario);
  const auto truth = scenario_rates(scenario);

  // Evaluation grid; a day is listed when it has at least one confirmed case.
  std::vector<DayAccumulator> acc;
  std::vector<std::size_t> slot(static_cast<std::size_t>(scenario.horizon) + 1, SIZE_MAX);
  Count running = 0;
  Day grid_day = first_study_day(options);
  for (Day t = 0; t <= scenario.horizon; ++t) {
    running += curve[t];
    if (t < grid_day) continue;
    grid_day += options.stride;
    if (running == 0) continue;
    slot[t] = acc.size();
    DayAccumulator a;
    a.summary.t = t;
    a.summary.r_t = running;
    a.summary.cfr_true = cfr_true(curve, truth, t);
    acc.push_back(a);
  }

  StudyResult result;
  for (Day t : options.keep_days) {
    if (t < 0 || t > scenario.horizon) throw Error(ErrorKind::kInvalidArgument, "kept day outside horizon");
    KeptDay kept;
    kept.t = t;
    kept.cfr_true = slot[t] != SIZE_MAX ? acc[slot[t]].summary.cfr_true : 0.0;
    kept.cfr.resize(static_cast<std::size_t>(scenario.replicates));
    kept.variance.resize(static_cast<std::size_t>(scenario.replicates));
    result.kept.push_back(std::move(kept));
  }

  const unsigned threads = std::max(1u, options.threads ? options.threads : std::thread::hardware_concurrency());
  const auto replicates = static_cast<std::size_t>(scenario.replicates);
  const std::size_t block = std::max<std::size_t>(threads * 4, 1);

  std::vector<ReplicateResult> pending(block);
  for (std::size_t begin = 0; begin < replicates; begin += block) {
    const std::size_t end = std::min(replicates, begin + block);
    auto work = [&](std::size_t worker) {
      for (std::size_t i = begin + worker; i < end; i += threads) {
        pending[i - begin] = evaluate_replicate(scenario, simulate_replicate(scenario, i), options);
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }

    for (std::size_t i = begin; i < end; ++i) {
      const auto& rep = pending[i - begin];
      for (std::size_t j = 0; j < rep.series.rows.size(); ++j) {
        const auto& row = rep.series.rows[j];
        if (slot[row.t] == SIZE_MAX) continue;
        auto& a = acc[slot[row.t]];
        accumulate(a.summary.naive, a.m2_naive, row.cfr_naive);
        accumulate(a.summary.cfr, a.m2_cfr, row.cfr);
        accumulate(a.summary.garske, a.m2_garske, row.cfr_garske);
        accumulate(a.summary.garske_mod, a.m2_garske_mod, row.cfr_garske_mod);
        if (row.cfr_final) accumulate(a.summary.final_rate, a.m2_final, *row.cfr_final);
        if (rep.hit[j]) {
          ++a.summary.ci_defined;
          a.hits += *rep.hit[j] ? 1 : 0;
          a.length_sum += *rep.ci_length[j];
        }
        for (auto& kept : result.kept) {
          if (kept.t != row.t) continue;
          kept.cfr[i] = row.cfr;
          kept.variance[i] = row.variance;
        }
      }
    }
  }

  for (auto& a : acc) {
    auto& s = a.summary;
    finish(s.naive, a.m2_naive);
    finish(s.cfr, a.m2_cfr);
    finish(s.garske, a.m2_garske);
    finish(s.garske_mod, a.m2_garske_mod);
    finish(s.final_rate, a.m2_final);
    if (s.ci_defined > 0) {
      s.coverage = static_cast<double>(a.hits) / s.ci_defined;
      s.coverage_se = std::sqrt(s.coverage * (1.0 - s.coverage) / s.ci_defined);
      s.mean_ci_length = a.length_sum / s.ci_defined;
    }
    result.days.push_back(s);
  }
  return result;
}

const DaySummary* StudyResult::day(Day t) const {
  const auto it = std::lower_bound(days.begin(), days.end(), t,
                                   [](const DaySummary& s, Day value) { return s.t < value; });
  return it != days.end() && it->t == t ? &*it : nullptr;
}

std::optional<double> StudyResult::min_coverage_from_cases(Count cases) const {
  std::optional<double> lowest;
  for (const auto& s : days) {
    if (s.r_t < cases || s.ci_defined == 0) continue;
    lowest = lowest ? std::min(*lowest, s.coverage) : s.coverage;
  }
  return lowest;
}

std::optional<double> StudyResult::min_coverage_from_day(Day first) const {
  std::optional<double> lowest;
  for (const auto& s : days) {
    if (s.t < first || s.ci_defined == 0) continue;
    lowest = lowest ? std::min(*lowest, s.coverage) : s.coverage;
  }
  return lowest;
}

std::vector<Count> illustrative_rising_arm() {
  auto curve = illustrative_outbreak_curve();
  curve.resize(158);
  return curve;
}

std::vector<Count> illustrative_outbreak_curve() {
  const auto values = interpolate(kCaseAnchors, 301, [](double a, double b, double w) {
    return std::exp((1.0 - w) * std::log(a) + w * std::log(b));
  });
  std::vector<Count> curve(values.size());
  std::transform(values.begin(), values.end(), curve.begin(),
                 [](double v) { return static_cast<Count>(std::llround(v)); });
  return curve;
}

std::vector<double> illustrative_outbreak_rates() {
  return interpolate(kRateAnchors, 301, [](double a, double b, double w) { return (1.0 - w) * a + w * b; });
}

}  // namespace cfr
