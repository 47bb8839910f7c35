#include "cfr/linelist.hpp"

#include <algorithm>
#include <charconv>
#include <string>

#include "cfr/error.hpp"

namespace cfr {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

Error parse_error(std::size_t line, std::string_view field, std::string_view detail) {
  return Error(ErrorKind::kParse, "line " + std::to_string(line) + ", field " +
                                      std::string(field) + ": " + std::string(detail));
}

Day parse_day(std::string_view text, std::chrono::year_month_day epoch, std::size_t line,
              std::string_view field) {
  if (text.find('-') != std::string_view::npos && text.size() == 10) {
    const auto date = parse_iso_date(text);
    if (!date) throw parse_error(line, field, "invalid date '" + std::string(text) + "'");
    const auto offset = (std::chrono::sys_days{*date} - std::chrono::sys_days{epoch}).count();
    if (offset < 0) {
      throw parse_error(line, field, "date '" + std::string(text) + "' precedes the epoch");
    }
    return static_cast<Day>(offset);
  }
  const auto value = parse_int<long long>(text);
  if (!value) throw parse_error(line, field, "invalid date or day index '" + std::string(text) + "'");
  if (*value < 0) throw parse_error(line, field, "negative day index " + std::to_string(*value));
  if (*value > 1'000'000) throw parse_error(line, field, "day index out of range");
  return static_cast<Day>(*value);
}

}  // namespace

void validate(const CaseRecord& record) {
  if (record.confirm_day < 0) {
    throw Error(ErrorKind::kInvalidArgument, "negative confirmation day");
  }
  if (record.death_day && *record.death_day < record.confirm_day) {
    throw Error(ErrorKind::kInvalidArgument, "death precedes confirmation");
  }
}

std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = parse_int<int>(text.substr(0, 4));
  const auto m = parse_int<unsigned>(text.substr(5, 2));
  const auto d = parse_int<unsigned>(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day date{std::chrono::year{*y}, std::chrono::month{*m},
                                         std::chrono::day{*d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

LineList parse_csv(std::istream& in, std::chrono::year_month_day epoch) {
  LineList list;
  list.epoch = epoch;

  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (line.empty() || line.front() == '#') continue;

    if (!header_seen) {
      header_seen = true;
      if (line != "confirm_date,death_date") {
        throw parse_error(line_no, "header",
                          "expected 'confirm_date,death_date', got '" + std::string(line) + "'");
      }
      continue;
    }

    const auto comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw parse_error(line_no, "death_date", "missing column");
    }
    const auto confirm_text = trim(line.substr(0, comma));
    const auto death_text = trim(line.substr(comma + 1));
    if (death_text.find(',') != std::string_view::npos) {
      throw parse_error(line_no, "death_date", "unexpected extra column");
    }
    if (confirm_text.empty()) throw parse_error(line_no, "confirm_date", "empty field");

    CaseRecord record;
    record.confirm_day = parse_day(confirm_text, epoch, line_no, "confirm_date");
    if (!death_text.empty()) {
      record.death_day = parse_day(death_text, epoch, line_no, "death_date");
      if (*record.death_day < record.confirm_day) {
        throw Error(ErrorKind::kParse,
                    "death precedes confirmation at line " + std::to_string(line_no));
      }
    }
    list.records.push_back(record);
  }
  return list;
}

EpidemicTable::EpidemicTable(std::vector<Count> cases, std::vector<std::vector<Count>> deaths)
    : cases_(std::move(cases)), deaths_(std::move(deaths)) {
  if (deaths_.size() != cases_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "death table rows must match the case series length");
  }
  cum_cases_.resize(cases_.size());
  cum_deaths_.resize(deaths_.size());
  Count running = 0;
  for (std::size_t d = 0; d < cases_.size(); ++d) {
    if (cases_[d] < 0) throw Error(ErrorKind::kInvalidArgument, "negative case count");
    auto& row = deaths_[d];
    while (!row.empty() && row.back() == 0) row.pop_back();
    auto& cum = cum_deaths_[d];
    cum.resize(row.size());
    Count total = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] < 0) throw Error(ErrorKind::kInvalidArgument, "negative death count");
      total += row[k];
      cum[k] = total;
    }
    if (total > cases_[d]) {
      throw Error(ErrorKind::kInvalidArgument,
                  "day " + std::to_string(d) + " has more deaths than confirmed cases");
    }
    running += cases_[d];
    cum_cases_[d] = running;
  }
}

Count EpidemicTable::cases(Day d) const {
  if (d < 0 || d >= num_days()) throw Error(ErrorKind::kInvalidArgument, "day outside table");
  return cases_[d];
}

Count EpidemicTable::deaths(Day d, Day lag) const {
  if (d < 0 || d >= num_days()) throw Error(ErrorKind::kInvalidArgument, "day outside table");
  if (lag < 0) throw Error(ErrorKind::kInvalidArgument, "negative lag");
  const auto& row = deaths_[d];
  return static_cast<std::size_t>(lag) < row.size() ? row[lag] : 0;
}

Day EpidemicTable::max_lag(Day d) const {
  if (d < 0 || d >= num_days()) throw Error(ErrorKind::kInvalidArgument, "day outside table");
  return static_cast<Day>(deaths_[d].size()) - 1;
}

Day EpidemicTable::max_lag() const {
  Day longest = -1;
  for (const auto& row : deaths_) longest = std::max(longest, static_cast<Day>(row.size()) - 1);
  return longest;
}

Count EpidemicTable::total_deaths(Day d) const {
  if (d < 0 || d >= num_days()) throw Error(ErrorKind::kInvalidArgument, "day outside table");
  const auto& cum = cum_deaths_[d];
  return cum.empty() ? 0 : cum.back();
}

std::span<const Count> EpidemicTable::death_row(Day d) const {
  if (d < 0 || d >= num_days()) throw Error(ErrorKind::kInvalidArgument, "day outside table");
  return deaths_[d];
}

EpidemicTable aggregate(const LineList& list) {
  Day last = -1;
  for (const auto& record : list.records) {
    validate(record);
    last = std::max(last, record.confirm_day);
  }
  std::vector<Count> cases(static_cast<std::size_t>(last + 1), 0);
  std::vector<std::vector<Count>> deaths(cases.size());
  for (const auto& record : list.records) {
    ++cases[record.confirm_day];
    if (record.died()) {
      auto& row = deaths[record.confirm_day];
      const auto lag = static_cast<std::size_t>(record.lag());
      if (row.size() <= lag) row.resize(lag + 1, 0);
      ++row[lag];
    }
  }
  return EpidemicTable(std::move(cases), std::move(deaths));
}

Count deaths_by(const EpidemicTable& table, Day d, Day t) {
  if (d < 0 || d > t) throw Error(ErrorKind::kInvalidArgument, "deaths_by requires 0 <= d <= t");
  if (d >= table.num_days()) throw Error(ErrorKind::kInvalidArgument, "day outside table");
  const auto& cum = table.cum_deaths_[d];
  if (cum.empty()) return 0;
  const auto lag = static_cast<std::size_t>(t - d);
  return lag < cum.size() ? cum[lag] : cum.back();
}

Count cumulative_cases(const EpidemicTable& table, Day t) {
  if (t < 0 || t >= table.num_days()) {
    throw Error(ErrorKind::kInvalidArgument, "day " + std::to_string(t) + " outside table");
  }
  return table.cum_cases_[t];
}

Count total_deaths_by(const EpidemicTable& table, Day t) {
  if (t < 0) throw Error(ErrorKind::kInvalidArgument, "negative day");
  const Day last = std::min(t, table.num_days() - 1);
  Count total = 0;
  for (Day d = 0; d <= last; ++d) total += deaths_by(table, d, t);
  return total;
}

}  // namespace cfr
