#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cfr/error.hpp"
#include "cfr/linelist.hpp"
#include "oracles.hpp"

namespace cfr {
namespace {

using std::chrono::day;
using std::chrono::month;
using std::chrono::year;

const std::chrono::year_month_day kEpoch{year{2020}, month{3}, day{3}};

LineList parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, kEpoch);
}

LineList random_list(std::mt19937_64& rng, int n, int days) {
  std::uniform_int_distribution<int> day_dist(0, days - 1);
  std::uniform_int_distribution<int> lag_dist(0, 60);
  std::bernoulli_distribution dies(0.3);
  LineList list;
  for (int i = 0; i < n; ++i) {
    CaseRecord r;
    r.confirm_day = day_dist(rng);
    if (dies(rng)) r.death_day = r.confirm_day + lag_dist(rng);
    list.records.push_back(r);
  }
  return list;
}

TEST(ParseCsv, IntegerDaysAndOptionalDeath) {
  const auto list = parse("confirm_date,death_date\n0,3\n1,\n");
  ASSERT_EQ(list.records.size(), 2u);
  EXPECT_EQ(list.records[0].confirm_day, 0);
  ASSERT_TRUE(list.records[0].died());
  EXPECT_EQ(list.records[0].lag(), 3);
  EXPECT_FALSE(list.records[1].died());
}

TEST(ParseCsv, IsoDatesRelativeToEpochWithCrlf) {
  const auto list = parse("confirm_date,death_date\r\n2020-03-03,2020-03-10\r\n2020-04-01,\r\n");
  ASSERT_EQ(list.records.size(), 2u);
  EXPECT_EQ(list.records[0].confirm_day, 0);
  EXPECT_EQ(*list.records[0].death_day, 7);
  EXPECT_EQ(list.records[1].confirm_day, 29);
}

TEST(ParseCsv, EmptyBodyGivesEmptyList) {
  EXPECT_TRUE(parse("confirm_date,death_date\n").records.empty());
  EXPECT_TRUE(parse("").records.empty());
}

TEST(ParseCsv, DeathBeforeConfirmationNamesLine) {
  try {
    parse("confirm_date,death_date\n0,1\n5,2\n");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_STREQ(e.what(), "death precedes confirmation at line 3");
  }
}

TEST(ParseCsv, MalformedFieldsNameLineAndField) {
  auto message = [](const std::string& text) {
    try {
      parse(text);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(message("confirm_date,death_date\n2020-02-30,\n"),
            "line 2, field confirm_date: invalid date '2020-02-30'");
  EXPECT_EQ(message("confirm_date,death_date\n1,x\n"),
            "line 2, field death_date: invalid date or day index 'x'");
  EXPECT_EQ(message("confirm_date,death_date\n-4,\n"), "line 2, field confirm_date: negative day index -4");
  EXPECT_EQ(message("confirm_date,death_date\n2020-03-01,\n"),
            "line 2, field confirm_date: date '2020-03-01' precedes the epoch");
  EXPECT_NE(message("date,death\n1,2\n").find("header"), std::string::npos);
}

TEST(Aggregate, CountsCasesAndLags) {
  LineList list;
  list.records = {{0, 2}, {0, std::nullopt}, {1, 2}};
  const auto table = aggregate(list);
  ASSERT_EQ(table.num_days(), 2);
  EXPECT_EQ(table.cases(0), 2);
  EXPECT_EQ(table.cases(1), 1);
  EXPECT_EQ(table.deaths(0, 2), 1);
  EXPECT_EQ(table.deaths(1, 1), 1);
  EXPECT_EQ(table.deaths(0, 0), 0);
  EXPECT_EQ(table.deaths(0, 1), 0);
  EXPECT_EQ(table.deaths(1, 0), 0);
  EXPECT_EQ(table.deaths(1, 7), 0);
}

TEST(Aggregate, LateConfirmationsPadEarlierDays) {
  LineList list;
  list.records = {{5, std::nullopt}, {5, std::nullopt}, {5, std::nullopt}};
  const auto table = aggregate(list);
  const std::vector<Count> expected{0, 0, 0, 0, 0, 3};
  EXPECT_EQ(std::vector<Count>(table.cases().begin(), table.cases().end()), expected);
  EXPECT_EQ(table.max_lag(), -1);
}

TEST(Aggregate, TotalsMatchLinearScan) {
  std::mt19937_64 rng(17);
  const auto list = random_list(rng, 10'000, 120);
  const auto table = aggregate(list);
  Count cases = 0, deaths = 0;
  for (Day d = 0; d < table.num_days(); ++d) {
    cases += table.cases(d);
    deaths += table.total_deaths(d);
  }
  Count scanned_deaths = 0;
  for (const auto& r : list.records) scanned_deaths += r.died();
  EXPECT_EQ(cases, 10'000);
  EXPECT_EQ(deaths, scanned_deaths);
}

TEST(EpidemicTable, RejectsMoreDeathsThanCases) {
  EXPECT_THROW(EpidemicTable({1}, {{1, 1}}), Error);
  EXPECT_THROW(EpidemicTable({1, 2}, {{0}}), Error);
  EXPECT_THROW(EpidemicTable({-1}, {{}}), Error);
}

TEST(DeathsBy, CountsUpToDay) {
  const EpidemicTable table({5}, {{0, 0, 1, 0, 0, 1}});
  EXPECT_EQ(deaths_by(table, 0, 3), 1);
  EXPECT_EQ(deaths_by(table, 0, 0), 0);
  EXPECT_EQ(deaths_by(table, 0, 5), 2);
  EXPECT_EQ(deaths_by(table, 0, 500), 2);
  EXPECT_THROW(deaths_by(table, 1, 0), Error);
  EXPECT_THROW(deaths_by(table, 3, 4), Error);
}

TEST(DeathsBy, MatchesRecordScanAndIsMonotone) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto list = random_list(rng, 800, 40);
    const auto table = aggregate(list);
    for (Day d = 0; d < table.num_days(); ++d) {
      Count previous = 0;
      for (Day t = d; t < d + 70; ++t) {
        const Count n = deaths_by(table, d, t);
        ASSERT_EQ(n, oracle::scan_deaths_by(list, d, t)) << "d=" << d << " t=" << t;
        ASSERT_GE(n, previous);
        previous = n;
      }
      EXPECT_EQ(deaths_by(table, d, d + table.max_lag() + 1), table.total_deaths(d));
    }
    for (Day t = 0; t < table.num_days(); t += 7) {
      Count total = 0;
      for (Day d = 0; d <= t; ++d) total += deaths_by(table, d, t);
      Count scanned = 0;
      for (const auto& r : list.records) scanned += r.death_day && *r.death_day <= t;
      EXPECT_EQ(total, scanned);
      EXPECT_EQ(total_deaths_by(table, t), scanned);
    }
  }
}

TEST(CumulativeCases, PrefixSums) {
  const EpidemicTable table({3, 0, 7}, {{}, {}, {}});
  EXPECT_EQ(cumulative_cases(table, 2), 10);
  EXPECT_EQ(cumulative_cases(table, 0), 3);
  EXPECT_THROW(cumulative_cases(table, 3), Error);
  EXPECT_THROW(cumulative_cases(table, -1), Error);

  std::mt19937_64 rng(9);
  const auto random = aggregate(random_list(rng, 2'000, 90));
  for (Day t = 1; t < random.num_days(); ++t) {
    EXPECT_EQ(cumulative_cases(random, t), cumulative_cases(random, t - 1) + random.cases(t));
  }
}

TEST(CaseRecord, Validation) {
  EXPECT_THROW(validate(CaseRecord{-1, std::nullopt}), Error);
  EXPECT_THROW(validate(CaseRecord{4, 3}), Error);
  EXPECT_NO_THROW(validate(CaseRecord{4, 4}));
}

}  // namespace
}  // namespace cfr
