#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <variant>
#include <string>
#include <vector>

namespace cfr::cli {

// Process exit codes; documented in `cfrtool --help`.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitInputUnreadable = 3,
  kExitMalformedInput = 4,
  kExitEstimation = 5,
  kExitOutputFailed = 6,
};

enum class Subcommand { kNone, kEstimate, kFitSurvival, kSimulate, kCoverage };

// Every flag accepted by any subcommand, after parsing and before validation.
struct RunConfig {
  Subcommand subcommand = Subcommand::kNone;
  std::string output = "-";
  int verbosity = 0;
  // Flags as given on the command line, minus output destinations; echoed into CSV headers.
  std::vector<std::string> echoed_args;

  // estimate / fit-survival
  std::string input;
  std::string epoch = "1970-01-01";
  double alpha = 0.05;
  int lookback = 45;
  std::optional<int> from;
  std::optional<int> to;
  std::string survival = "empirical";
  std::string survival_file;
  bool with_final = false;
  std::optional<int> fit_day;
  std::string cdf_output;

  // simulate / coverage
  std::string preset = "step";
  std::string arm_file;
  bool symmetric = true;
  std::optional<double> c1;
  std::optional<double> c2;
  std::optional<int> dstar;
  std::string rates_file;
  std::string delay;
  std::uint64_t seed = 20200303;
  int replicates = 500;
  std::optional<int> horizon;
  std::string mode;
  unsigned threads = 0;
  std::string replicate_dir;
};

/// Parses argv-style arguments (without the program name) into a RunConfig.
/// Returns an exit code instead when parsing ends the run (help, usage error).
std::variant<RunConfig, int> parse_args(const std::vector<std::string>& args, std::ostream& out,
                                        std::ostream& err);

/// Runs a parsed configuration. Diagnostics go to `err`; CSV goes to `out`
/// when the output path is "-".
int dispatch(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args followed by dispatch.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cfr::cli
