#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "cfr/error.hpp"
#include "cfr/estimators.hpp"
#include "cfr/linelist.hpp"
#include "cfr/simulation.hpp"
#include "cfr/survival.hpp"

namespace cfr::cli {
namespace {

constexpr const char* kVersion = "1.0.0";

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  invalid command line (unknown flag, bad value, conflicting flags)\n"
    "  3  input file missing or unreadable\n"
    "  4  malformed input data\n"
    "  5  estimation failed (insufficient data, violated model assumption)\n"
    "  6  output could not be written\n";

// Failure carrying its exit code.
struct Failure {
  int code;
  std::string message;
};

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string metadata(const RunConfig& config) {
  std::string header = "# cfrtool " + std::string(kVersion) + "\n";
  header += "# flags: " + join(config.echoed_args, " ") + "\n";
  if (config.subcommand == Subcommand::kSimulate || config.subcommand == Subcommand::kCoverage) {
    header += "# seed: " + std::to_string(config.seed) + "\n";
  }
  return header;
}

// Writes to a sibling temporary file and renames it into place, or to `out` for "-".
void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path == "-") {
    out << content;
    out.flush();
    return;
  }
  const std::filesystem::path target(path);
  auto tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw Failure{kExitOutputFailed, "cannot write output file " + path};
    file << content;
    file.flush();
    if (!file) throw Failure{kExitOutputFailed, "cannot write output file " + path};
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Failure{kExitOutputFailed, "cannot move output into place at " + path};
  }
}

std::ifstream open_input(const std::string& path, const char* what) {
  if (path.empty()) throw Failure{kExitUsage, std::string("missing ") + what + " path"};
  std::ifstream in(path);
  if (!in || std::filesystem::is_directory(path)) {
    throw Failure{kExitInputUnreadable, std::string("cannot read ") + what + " " + path};
  }
  return in;
}

std::chrono::year_month_day parse_epoch(const std::string& text) {
  const auto date = parse_iso_date(text);
  if (!date) throw Failure{kExitUsage, "--epoch must be an ISO-8601 date, got '" + text + "'"};
  return *date;
}

LineList read_linelist(const RunConfig& config) {
  auto in = open_input(config.input, "input file");
  try {
    return parse_csv(in, parse_epoch(config.epoch));
  } catch (const Error& e) {
    throw Failure{kExitMalformedInput, config.input + ": " + e.what()};
  }
}

// Data lines of a CSV, skipping '#' comments and blank lines; the first line is the header.
std::vector<std::vector<std::string>> read_rows(std::istream& in, std::vector<std::string>* comments = nullptr) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (comments) comments->push_back(line);
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

double to_double(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Failure{kExitMalformedInput, where + ": not a number '" + text + "'"};
  }
}

// Single numeric column, optionally preceded by a header line.
std::vector<double> read_column(const std::string& path, const char* what) {
  auto in = open_input(path, what);
  auto rows = read_rows(in);
  std::vector<double> values;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto& cell = rows[i].back();
    if (i == 0 && !cell.empty() && !std::isdigit(static_cast<unsigned char>(cell.front())) &&
        cell.front() != '.' && cell.front() != '-') {
      continue;
    }
    values.push_back(to_double(cell, path + " row " + std::to_string(i + 1)));
  }
  if (values.empty()) throw Failure{kExitMalformedInput, path + ": no values"};
  return values;
}

SurvivalModel parse_delay(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Failure{kExitUsage, "--delay must look like nb:MU,R, zinb:PI,MU,R or point:K"};
  const auto kind = spec.substr(0, colon);
  std::vector<double> args;
  std::stringstream ss(spec.substr(colon + 1));
  std::string part;
  while (std::getline(ss, part, ',')) args.push_back(to_double(part, "--delay"));
  try {
    if (kind == "nb" && args.size() == 2) return SurvivalModel::negative_binomial(args[0], args[1]);
    if (kind == "zinb" && args.size() == 3) return SurvivalModel::zinb(args[0], args[1], args[2]);
    if (kind == "point" && args.size() == 1 && args[0] >= 0 && args[0] == std::floor(args[0])) {
      return SurvivalModel::point_mass(static_cast<Day>(args[0]));
    }
  } catch (const Error& e) {
    throw Failure{kExitUsage, std::string("--delay: ") + e.what()};
  }
  throw Failure{kExitUsage, "--delay must look like nb:MU,R, zinb:PI,MU,R or point:K, got '" + spec + "'"};
}

// Either a `k,cdf` table (with a `# n_deaths: N` comment) or a `model,pi,mu,r,loglik,n` parameter file.
SurvivalModel read_survival_file(const std::string& path) {
  auto in = open_input(path, "survival file");
  std::vector<std::string> comments;
  const auto rows = read_rows(in, &comments);
  if (rows.empty()) throw Failure{kExitMalformedInput, path + ": empty survival file"};
  const auto& header = rows.front();
  try {
    if (header.size() == 2 && header[0] == "k" && header[1] == "cdf") {
      std::optional<Count> n_deaths;
      for (const auto& c : comments) {
        const auto pos = c.find("n_deaths:");
        if (pos != std::string::npos) n_deaths = std::stoll(c.substr(pos + 9));
      }
      if (!n_deaths) throw Failure{kExitMalformedInput, path + ": missing '# n_deaths: N' line"};
      std::vector<double> table;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto where = path + " row " + std::to_string(i + 1);
        if (rows[i].size() != 2) throw Failure{kExitMalformedInput, where + ": expected k,cdf"};
        if (to_double(rows[i][0], where) != static_cast<double>(table.size())) {
          throw Failure{kExitMalformedInput, where + ": lags must be consecutive from 0"};
        }
        table.push_back(to_double(rows[i][1], where));
      }
      return SurvivalModel::empirical(std::move(table), *n_deaths);
    }
    if (header.size() == 6 && header[0] == "model") {
      std::optional<SurvivalModel> best;
      double best_ll = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto where = path + " row " + std::to_string(i + 1);
        const auto& row = rows[i];
        if (row.size() != 6) throw Failure{kExitMalformedInput, where + ": expected 6 fields"};
        const double ll = row[4].empty() ? -std::numeric_limits<double>::infinity() : to_double(row[4], where);
        SurvivalModel model = row[0] == "nb"     ? SurvivalModel::negative_binomial(to_double(row[2], where), to_double(row[3], where))
                              : row[0] == "zinb" ? SurvivalModel::zinb(to_double(row[1], where), to_double(row[2], where), to_double(row[3], where))
                                                 : throw Failure{kExitMalformedInput, where + ": unknown model '" + row[0] + "'"};
        if (!best || ll > best_ll) {
          best = model;
          best_ll = ll;
        }
      }
      if (!best) throw Failure{kExitMalformedInput, path + ": no model rows"};
      return *best;
    }
  } catch (const Error& e) {
    throw Failure{kExitMalformedInput, path + ": " + e.what()};
  }
  throw Failure{kExitMalformedInput, path + ": unrecognised header (expected k,cdf or model,pi,mu,r,loglik,n)"};
}

std::string series_csv(const RunConfig& config, const EstimateSeries& series, bool with_final, bool with_true) {
  std::string out = metadata(config);
  out += "t,r_t,cfr_naive,cfr,ci_low,ci_high,cfr_garske,cfr_garske_mod";
  if (with_final) out += ",cfr_final";
  if (with_true) out += ",cfr_true";
  out += "\n";
  for (const auto& row : series.rows) {
    out += std::to_string(row.t) + "," + std::to_string(row.r_t) + "," + fmt(row.cfr_naive) + "," + fmt(row.cfr) + ",";
    out += row.ci ? fmt(row.ci->low) + "," + fmt(row.ci->high) : std::string(",");
    out += "," + fmt(row.cfr_garske) + "," + fmt(row.cfr_garske_mod);
    if (with_final) out += "," + (row.cfr_final ? fmt(*row.cfr_final) : std::string());
    if (with_true) out += "," + (row.cfr_true ? fmt(*row.cfr_true) : std::string());
    out += "\n";
  }
  return out;
}

Day last_observed_day(const LineList& list) {
  Day last = -1;
  for (const auto& r : list.records) {
    last = std::max(last, r.confirm_day);
    if (r.death_day) last = std::max(last, *r.death_day);
  }
  return last;
}

int run_estimate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.survival == "file" && config.survival_file.empty()) {
    throw Failure{kExitUsage, "--survival file requires --survival-file"};
  }
  if (config.survival != "file" && !config.survival_file.empty()) {
    throw Failure{kExitUsage, "--survival-file is only valid with --survival file"};
  }
  std::optional<SurvivalModel> fixed;
  if (config.survival == "file") fixed = read_survival_file(config.survival_file);

  const auto list = read_linelist(config);
  const auto table = aggregate(list);

  SeriesOptions options;
  options.alpha = config.alpha;
  options.lookback = config.lookback;
  options.with_final = config.with_final;
  options.from = config.from.value_or(fixed ? 0 : 2 * config.lookback);
  options.to = config.to.value_or(std::max(table.num_days() - 1, 0));
  if (options.from < 0 || options.to < 0) throw Failure{kExitUsage, "--from/--to must be >= 0"};

  EstimateSeries series;
  if (fixed) {
    options.schedule = DelaySchedule::constant(*fixed);
    if (options.from <= options.to) series = estimate_series(table, options);
  } else if (config.survival == "empirical") {
    if (options.from <= options.to) series = estimate_series(table, options);
  } else {
    // Parametric fits are refitted at every day from the lookback-eligible deaths.
    for (Day t = options.from; t <= options.to; ++t) {
      const auto sample = eligible_delays(table, t, config.lookback);
      std::optional<SurvivalModel> model;
      try {
        model = config.survival == "nb" ? fit_nb_mle(sample).model : fit_zinb_mle(sample).model;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInsufficientData) throw;
        if (config.verbosity > 0) err << "day " << t << ": skipped (" << e.what() << ")\n";
        continue;
      }
      auto day_options = options;
      day_options.schedule = DelaySchedule::constant(*model);
      bool warning = false;
      if (auto row = estimate_day(table, t, day_options, &warning)) {
        if (warning) series.assumption_warnings.push_back(t);
        series.rows.push_back(std::move(*row));
      }
    }
  }
  if (series.rows.empty()) {
    throw Error(ErrorKind::kInsufficientData, "no day in [" + std::to_string(options.from) + ", " +
                                                  std::to_string(options.to) +
                                                  "] could be evaluated: insufficient resolved deaths or no cases");
  }
  if (!series.assumption_warnings.empty() && config.verbosity >= 0) {
    err << "warning: interval assumptions fail on " << series.assumption_warnings.size()
        << " day(s), first at day " << series.assumption_warnings.front() << "\n";
  }
  write_output(config.output, series_csv(config, series, config.with_final, false), out);
  return kExitOk;
}

int run_fit_survival(const RunConfig& config, std::ostream& out, std::ostream&) {
  const auto list = read_linelist(config);
  const auto table = aggregate(list);
  const Day t = config.fit_day.value_or(last_observed_day(list));
  if (t < 0) throw Error(ErrorKind::kInsufficientData, "line list is empty");
  const auto sample = eligible_delays(table, t, config.lookback);
  const auto empirical = empirical_from_sample(sample);
  const auto nb = fit_nb_mle(sample);
  const auto zinb = fit_zinb_mle(sample);

  std::string params = metadata(config);
  params += "# fit_day: " + std::to_string(t) + "\n";
  params += "model,pi,mu,r,loglik,n\n";
  const auto& nbp = std::get<NegBinomial>(nb.model.params());
  params += "nb,0," + fmt(nbp.mu) + "," + fmt(nbp.r) + "," + fmt(nb.log_likelihood) + "," + std::to_string(nb.n) + "\n";
  const auto& zp = std::get<Zinb>(zinb.model.params());
  params += "zinb," + fmt(zp.pi) + "," + fmt(zp.mu) + "," + fmt(zp.r) + "," + fmt(zinb.log_likelihood) + "," +
            std::to_string(zinb.n) + "\n";

  std::string cdf = metadata(config);
  cdf += "# n_deaths: " + std::to_string(sample.lags.size()) + "\n";
  cdf += "k,cdf\n";
  const auto& table_values = std::get<EmpiricalCdf>(empirical.params()).table;
  for (std::size_t k = 0; k < table_values.size(); ++k) cdf += std::to_string(k) + "," + fmt(table_values[k]) + "\n";

  if (config.cdf_output.empty()) {
    write_output(config.output, params + "\n" + cdf, out);
  } else {
    write_output(config.output, params, out);
    write_output(config.cdf_output, cdf, out);
  }
  return kExitOk;
}

Scenario build_scenario(const RunConfig& config) {
  Scenario scenario;
  scenario.seed = config.seed;
  scenario.replicates = config.replicates;
  const bool outbreak = config.preset == "outbreak";
  const bool explicit_step = config.c1 || config.c2 || config.dstar;
  if (explicit_step && !config.rates_file.empty()) {
    throw Failure{kExitUsage, "--rates-file cannot be combined with --c1/--c2/--dstar"};
  }

  if (!config.arm_file.empty()) {
    for (double v : read_column(config.arm_file, "arm file")) {
      if (v < 0 || v != std::floor(v)) throw Failure{kExitMalformedInput, config.arm_file + ": counts must be non-negative integers"};
      scenario.rising_arm.push_back(static_cast<Count>(v));
    }
  } else {
    scenario.rising_arm = outbreak ? illustrative_outbreak_curve() : illustrative_rising_arm();
  }
  scenario.symmetric = outbreak ? false : config.symmetric;

  if (!config.rates_file.empty()) {
    try {
      scenario.rates = DailyRates(read_column(config.rates_file, "rates file"));
    } catch (const Error& e) {
      throw Failure{kExitMalformedInput, config.rates_file + ": " + e.what()};
    }
  } else if (outbreak && !explicit_step) {
    scenario.rates = DailyRates(illustrative_outbreak_rates());
  } else {
    scenario.rates = StepRates{config.c1.value_or(0.1), config.c2.value_or(0.05), config.dstar.value_or(120)};
  }

  if (!config.delay.empty()) {
    scenario.delay = DelaySchedule::constant(parse_delay(config.delay));
  } else {
    scenario.delay = DelaySchedule::constant(outbreak ? SurvivalModel::zinb(0.103, 12.59, 1.2191)
                                                      : SurvivalModel::negative_binomial(10.79, 0.88));
  }
  const Day support = static_cast<Day>(scenario.rising_arm.size()) * (scenario.symmetric ? 2 : 1);
  scenario.horizon = config.horizon.value_or(outbreak ? support : support - 1 + 90);
  try {
    validate(scenario);
  } catch (const Error& e) {
    throw Failure{kExitUsage, e.what()};
  }
  return scenario;
}

StudyOptions study_options(const RunConfig& config, StudyMode default_mode) {
  StudyOptions options;
  options.mode = default_mode;
  if (config.mode == "known") options.mode = StudyMode::kKnownFKnownP;
  if (config.mode == "estimated") options.mode = StudyMode::kEstimatedFEstimatedP;
  options.alpha = config.alpha;
  options.lookback = config.lookback;
  options.first_day = config.from;
  options.threads = config.threads;
  return options;
}

int run_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto scenario = build_scenario(config);
  const auto options = study_options(config, StudyMode::kKnownFKnownP);

  if (!config.replicate_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.replicate_dir, ec);
    if (ec) throw Failure{kExitOutputFailed, "cannot create directory " + config.replicate_dir};
    for (int i = 0; i < scenario.replicates; ++i) {
      const auto table = simulate_replicate(scenario, static_cast<std::uint64_t>(i));
      const auto result = evaluate_replicate(scenario, table, options);
      char name[32];
      std::snprintf(name, sizeof name, "replicate_%05d.csv", i);
      write_output((std::filesystem::path(config.replicate_dir) / name).string(),
                   series_csv(config, result.series, true, true), out);
    }
    if (config.verbosity > 0) err << "wrote " << scenario.replicates << " replicate files\n";
    if (config.output == "-") return kExitOk;
  }

  const auto study = run_study(scenario, options);
  std::string csv = metadata(config);
  csv +=
      "t,r_t,cfr_true,mean_cfr_naive,se_cfr_naive,mean_cfr,se_cfr,mean_cfr_garske,se_cfr_garske,"
      "mean_cfr_garske_mod,se_cfr_garske_mod,mean_cfr_final,se_cfr_final,mean_coverage,coverage_se,mean_ci_length\n";
  for (const auto& d : study.days) {
    csv += std::to_string(d.t) + "," + std::to_string(d.r_t) + "," + fmt(d.cfr_true);
    for (const auto* s : {&d.naive, &d.cfr, &d.garske, &d.garske_mod, &d.final_rate}) {
      csv += "," + fmt(s->mean) + "," + fmt(s->se);
    }
    csv += d.ci_defined ? "," + fmt(d.coverage) + "," + fmt(d.coverage_se) + "," + fmt(d.mean_ci_length) : std::string(",,,");
    csv += "\n";
  }
  write_output(config.output, csv, out);
  return kExitOk;
}

int run_coverage(const RunConfig& config, std::ostream& out, std::ostream&) {
  const auto scenario = build_scenario(config);
  const auto study = run_study(scenario, study_options(config, StudyMode::kEstimatedFEstimatedP));
  std::string csv = metadata(config);
  csv += "t,r_t,mean_coverage,coverage_se,mean_ci_length\n";
  for (const auto& d : study.days) {
    if (d.ci_defined == 0) continue;
    csv += std::to_string(d.t) + "," + std::to_string(d.r_t) + "," + fmt(d.coverage) + "," + fmt(d.coverage_se) +
           "," + fmt(d.mean_ci_length) + "\n";
  }
  write_output(config.output, csv, out);
  return kExitOk;
}

bool is_output_flag(const std::string& arg) {
  for (const char* flag : {"--output", "-o", "--cdf-output", "--replicate-dir"}) {
    if (arg == flag) return true;
  }
  return false;
}

std::vector<std::string> echo_args(const std::vector<std::string>& args) {
  std::vector<std::string> echoed;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (is_output_flag(args[i])) {
      ++i;
      continue;
    }
    const auto eq = args[i].find('=');
    if (eq != std::string::npos && is_output_flag(args[i].substr(0, eq))) continue;
    echoed.push_back(args[i]);
  }
  return echoed;
}

}  // namespace

std::variant<RunConfig, int> parse_args(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig config;
  CLI::App app{"Delay-adjusted case fatality rate estimation and Monte Carlo studies", "cfrtool"};
  app.footer(kExitCodeHelp);
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-o,--output", config.output, "Output CSV path, '-' for stdout")->capture_default_str();
    sub->add_flag("-v,--verbose", config.verbosity, "More diagnostics on stderr");
  };
  auto add_linelist = [&](CLI::App* sub) {
    sub->add_option("--input", config.input, "Line-list CSV with header confirm_date,death_date")->required();
    sub->add_option("--epoch", config.epoch, "Calendar date of day 0 (YYYY-MM-DD)")->capture_default_str();
    sub->add_option("--lookback", config.lookback, "Days excluded before the evaluation day when fitting the delay")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
  };

  auto* estimate = app.add_subcommand("estimate", "Compute the estimator series from a line list");
  add_common(estimate);
  add_linelist(estimate);
  estimate->add_option("--alpha", config.alpha, "Interval level is 1 - alpha")->capture_default_str()->check(CLI::Range(1e-9, 1.0 - 1e-9));
  estimate->add_option("--from", config.from, "First day (default 2*lookback, or 0 with --survival file)")->check(CLI::NonNegativeNumber);
  estimate->add_option("--to", config.to, "Last day (default: last confirmation day)")->check(CLI::NonNegativeNumber);
  estimate->add_option("--survival", config.survival, "Delay model source")
      ->capture_default_str()
      ->check(CLI::IsMember({"empirical", "nb", "zinb", "file"}));
  estimate->add_option("--survival-file", config.survival_file,
                       "k,cdf table or model,pi,mu,r,loglik,n parameters (with --survival file)");
  estimate->add_flag("--final", config.with_final, "Append cfr_final (every recorded death, for retrospective data)");

  auto* fit = app.add_subcommand("fit-survival", "Fit empirical, NB and ZINB delay distributions");
  add_common(fit);
  add_linelist(fit);
  fit->add_option("--t", config.fit_day, "Evaluation day (default: last observed day)")->check(CLI::NonNegativeNumber);
  fit->add_option("--cdf-output", config.cdf_output, "Empirical k,cdf table path (default: appended to --output)");

  auto add_scenario = [&](CLI::App* sub, const char* default_mode) {
    add_common(sub);
    sub->add_option("--preset", config.preset, "step: symmetric bundled arm, step p_d, NB delay; outbreak: 301-day bundled curve, smooth p_d, ZINB delay")
        ->capture_default_str()
        ->check(CLI::IsMember({"step", "outbreak"}));
    sub->add_option("--arm-file", config.arm_file, "Daily case counts, one per line (default: bundled illustrative arm)");
    sub->add_flag("--symmetric,!--no-symmetric", config.symmetric, "Mirror the arm (step preset)")->capture_default_str();
    sub->add_option("--c1", config.c1, "p_d before the change day (default 0.1)")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--c2", config.c2, "p_d from the change day on (default 0.05)")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--dstar", config.dstar, "Day p_d changes (default 120)")->check(CLI::NonNegativeNumber);
    sub->add_option("--rates-file", config.rates_file, "Explicit daily p_d, one per line");
    sub->add_option("--delay", config.delay, "Generating delay: nb:MU,R | zinb:PI,MU,R | point:K");
    sub->add_option("--seed", config.seed, "Master RNG seed")->capture_default_str();
    sub->add_option("--replicates", config.replicates, "Number of replicates")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--horizon", config.horizon, "Last simulated day (step: curve end + 90; outbreak: 301)")->check(CLI::NonNegativeNumber);
    sub->add_option("--mode", config.mode, std::string("known or estimated F and p_d (default ") + default_mode + ")")
        ->check(CLI::IsMember({"known", "estimated"}));
    sub->add_option("--alpha", config.alpha, "Interval level is 1 - alpha")->capture_default_str()->check(CLI::Range(1e-9, 1.0 - 1e-9));
    sub->add_option("--lookback", config.lookback, "Lookback for the empirical delay fit")->capture_default_str()->check(CLI::NonNegativeNumber);
    sub->add_option("--from", config.from, "First evaluated day (known: 0, estimated: 2*lookback)")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", config.threads, "Worker threads, 0 = hardware concurrency")->capture_default_str();
  };
  auto* simulate = app.add_subcommand("simulate", "Replicate study: per-day bias table or per-replicate series");
  add_scenario(simulate, "known");
  simulate->add_option("--replicate-dir", config.replicate_dir, "Also write one estimate CSV per replicate here");
  auto* coverage = app.add_subcommand("coverage", "Replicate study: per-day interval coverage");
  add_scenario(coverage, "estimated");

  std::vector<const char*> argv{"cfrtool"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  if (estimate->parsed()) config.subcommand = Subcommand::kEstimate;
  if (fit->parsed()) config.subcommand = Subcommand::kFitSurvival;
  if (simulate->parsed()) config.subcommand = Subcommand::kSimulate;
  if (coverage->parsed()) config.subcommand = Subcommand::kCoverage;
  config.echoed_args = echo_args(args);
  return config;
}

int dispatch(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.subcommand) {
      case Subcommand::kEstimate: return run_estimate(config, out, err);
      case Subcommand::kFitSurvival: return run_fit_survival(config, out, err);
      case Subcommand::kSimulate: return run_simulate(config, out, err);
      case Subcommand::kCoverage: return run_coverage(config, out, err);
      case Subcommand::kNone: break;
    }
    err << "error: no subcommand\n";
    return kExitUsage;
  } catch (const Failure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kParse ? kExitMalformedInput : kExitEstimation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto parsed = parse_args(args, out, err);
  if (const auto* code = std::get_if<int>(&parsed)) return *code;
  return dispatch(std::get<RunConfig>(parsed), out, err);
}

}  // namespace cfr::cli
