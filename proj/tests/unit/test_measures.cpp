#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "uturn/measures.hpp"
#include "uturn/rng.hpp"

using namespace uturn;

namespace {

std::vector<Turn> turns_with(const std::vector<double>& durations) {
  std::vector<Turn> out;
  double t = 0.0;
  for (double d : durations) {
    out.push_back({t, t + d, kPi, 1.0});
    t += d + 5.0;
  }
  return out;
}

}  // namespace

TEST_SUITE("measures") {
  TEST_CASE("turn speed uses a fixed pi") {
    CHECK(turn_speed(2.0) == doctest::Approx(1.570796).epsilon(1e-6));
    CHECK(turn_speed(2.2) == doctest::Approx(1.427997).epsilon(1e-6));
    CHECK(turn_speed(2.6) == doctest::Approx(1.208305).epsilon(1e-6));
    const Turn t{10.0, 12.5, 2.0, 1.0};
    CHECK(turn_speed(t) == kPi / 2.5);
    CHECK(integrated_turn_speed(t) == doctest::Approx(2.0 / 2.5));
  }

  TEST_CASE("turn speed is strictly decreasing with speed * duration = pi") {
    Rng rng(12);
    double prev_d = 0.0, prev_v = INFINITY;
    std::vector<double> ds;
    for (int i = 0; i < 500; ++i) ds.push_back(rng.uniform(0.5, 10.0));
    std::sort(ds.begin(), ds.end());
    for (double d : ds) {
      CHECK(std::abs(turn_speed(d) * d - kPi) <= 1e-12);
      if (d > prev_d) CHECK(turn_speed(d) < prev_v);
      prev_d = d;
      prev_v = turn_speed(d);
    }
  }

  TEST_CASE("median: midpoint rule") {
    CHECK(median(std::vector<double>{3.0, 1.0, 2.0}) == 2.0);
    CHECK(median(std::vector<double>{4.0, 1.0}) == 2.5);
    CHECK_THROWS_AS(median(std::vector<double>{}), InvalidArgument);
  }

  TEST_CASE("summarize_test examples") {
    const auto a = summarize_test(turns_with({2.0, 2.0, 2.0}), {});
    CHECK(a.n_turns == 3);
    CHECK(*a.turn_speed_median == doctest::Approx(1.570796).epsilon(1e-6));
    CHECK(*a.turn_duration_median == 2.0);
    const auto b = summarize_test(turns_with({2.0, 4.0}), {});
    CHECK(*b.turn_speed_median == doctest::Approx(1.178097).epsilon(1e-6));
    const auto c = summarize_test({}, {});
    CHECK(c.n_turns == 0);
    CHECK_FALSE(c.turn_speed_median.has_value());
    CHECK_FALSE(c.turn_duration_median.has_value());
  }

  TEST_CASE("summarize_test median lies within the per-turn range") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> ds(1 + rng.index(15));
      for (auto& d : ds) d = rng.uniform(0.6, 6.0);
      const auto r = summarize_test(turns_with(ds), {});
      CHECK(r.n_turns == r.per_turn.size());
      const double lo = kPi / *std::max_element(ds.begin(), ds.end());
      const double hi = kPi / *std::min_element(ds.begin(), ds.end());
      CHECK(*r.turn_speed_median >= lo - 1e-12);
      CHECK(*r.turn_speed_median <= hi + 1e-12);
    }
  }

  TEST_CASE("participant aggregate") {
    std::vector<TestResult> tests(3);
    tests[0].n_turns = tests[1].n_turns = tests[2].n_turns = 1;
    tests[0].turn_speed_median = 1.2;
    tests[1].turn_speed_median = 1.5;
    tests[2].turn_speed_median = 1.4;
    tests[0].meta.participant_id = "P1";
    const auto agg = aggregate_participant(tests);
    CHECK(agg.aggregate == 1.4);
    CHECK(agg.values.size() == 3);
    CHECK(agg.participant_id == "P1");
    std::vector<TestResult> none(2);
    CHECK_THROWS_AS(aggregate_participant(none), InvalidArgument);
  }

  TEST_CASE("k-split: disjoint, equal sized, reproducible") {
    std::vector<double> v(14);
    for (int i = 0; i < 14; ++i) v[i] = 1.0 + 0.01 * i;
    Rng r1(5), r2(5);
    const auto a = split_aggregate(v, 7, PartitionMode::random, r1);
    const auto b = split_aggregate(v, 7, PartitionMode::random, r2);
    REQUIRE(a.has_value());
    CHECK(a->first_indices.size() == 7);
    CHECK(a->second_indices.size() == 7);
    std::set<std::size_t> all(a->first_indices.begin(), a->first_indices.end());
    all.insert(a->second_indices.begin(), a->second_indices.end());
    CHECK(all.size() == 14);
    CHECK(a->first_indices == b->first_indices);
    std::vector<double> first;
    for (auto i : a->first_indices) first.push_back(v[i]);
    CHECK(a->first == median(first));
    Rng r3(1);
    CHECK_FALSE(split_aggregate(v, 8, PartitionMode::random, r3).has_value());
  }

  TEST_CASE("k-split: chronological takes the first 2k tests in order") {
    std::vector<double> v{5, 1, 4, 2, 3, 9};
    Rng rng(0);
    const auto s = split_aggregate(v, 2, PartitionMode::chronological, rng);
    REQUIRE(s.has_value());
    CHECK(s->first_indices == std::vector<std::size_t>{0, 1});
    CHECK(s->second_indices == std::vector<std::size_t>{2, 3});
    CHECK(s->first == 3.0);
    CHECK(s->second == 3.0);
  }

  TEST_CASE("k-split from test results ignores tests without turns") {
    std::vector<TestResult> tests(5);
    for (int i = 0; i < 5; ++i) {
      tests[i].n_turns = i == 2 ? 0 : 4;
      if (i != 2) tests[i].turn_speed_median = 1.0 + i;
    }
    CHECK(aggregate_participant(tests, 2, 7).has_value());
    CHECK_FALSE(aggregate_participant(tests, 3, 7).has_value());
    const auto a = aggregate_participant(tests, 2, 7);
    const auto b = aggregate_participant(tests, 2, 7);
    CHECK(a->first == b->first);
    CHECK(a->second == b->second);
  }
}
