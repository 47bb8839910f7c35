#pragma once

#include <chrono>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cfr {

using Day = int;
using Count = std::int64_t;

// One confirmed case. Days are offsets from the line list epoch.
struct CaseRecord {
  Day confirm_day = 0;
  std::optional<Day> death_day;

  bool died() const { return death_day.has_value(); }
  // Days from confirmation to death; only meaningful when died().
  Day lag() const { return *death_day - confirm_day; }
};

// Throws Error(kInvalidArgument) when the record breaks its invariants.
void validate(const CaseRecord& record);

struct LineList {
  std::vector<CaseRecord> records;
  std::chrono::year_month_day epoch{std::chrono::year{1970}, std::chrono::month{1},
                                    std::chrono::day{1}};
};

/// Parses an ISO-8601 calendar date (YYYY-MM-DD).
std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text);

/// Reads a line-list CSV with header `confirm_date,death_date`.
///
/// Each field is either an ISO-8601 date, converted to a day index relative to
/// `epoch`, or a bare non-negative integer day index. An empty death field
/// means the case has not died. Blank lines are skipped; CRLF is accepted.
/// Errors name the 1-based line number and the offending field.
LineList parse_csv(std::istream& in, std::chrono::year_month_day epoch);

/// Daily confirmed counts plus a death-lag table.
///
/// `cases(d)` is the number of cases confirmed on day d and `deaths(d, k)` the
/// number of those that died exactly k days after confirmation. Cumulative
/// sums over both axes are precomputed so the per-day accessors are O(1).
class EpidemicTable {
 public:
  EpidemicTable() = default;

  // `deaths[d]` may be shorter than the longest row; missing lags count as 0.
  EpidemicTable(std::vector<Count> cases, std::vector<std::vector<Count>> deaths);

  Day num_days() const { return static_cast<Day>(cases_.size()); }
  bool empty() const { return cases_.empty(); }

  std::span<const Count> cases() const { return cases_; }
  Count cases(Day d) const;

  // Deaths exactly `lag` days after confirmation on day d (0 beyond the row).
  Count deaths(Day d, Day lag) const;
  // Longest lag with a recorded death on day d, or -1 when none.
  Day max_lag(Day d) const;
  Day max_lag() const;

  // Total eventual deaths among day-d confirmations.
  Count total_deaths(Day d) const;

  std::span<const Count> death_row(Day d) const;

 private:
  friend Count deaths_by(const EpidemicTable&, Day, Day);
  friend Count cumulative_cases(const EpidemicTable&, Day);

  std::vector<Count> cases_;
  std::vector<std::vector<Count>> deaths_;
  // cum_deaths_[d][k] = deaths on day d with lag <= k.
  std::vector<std::vector<Count>> cum_deaths_;
  std::vector<Count> cum_cases_;
};

EpidemicTable aggregate(const LineList& list);

/// Cases confirmed on day d that have died by day t inclusive.
Count deaths_by(const EpidemicTable& table, Day d, Day t);

/// Cases confirmed on days 0..t.
Count cumulative_cases(const EpidemicTable& table, Day t);

/// Deaths observed by day t among all confirmations up to t.
Count total_deaths_by(const EpidemicTable& table, Day t);

}  // namespace cfr
