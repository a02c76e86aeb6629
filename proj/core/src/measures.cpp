#include "uturn/measures.hpp"

#include <algorithm>
#include <numeric>

#include "uturn/rng.hpp"

namespace uturn {

double turn_speed(double duration_s) {
  if (!(duration_s > 0.0)) throw InvalidArgument("turn duration must be positive");
  return kPi / duration_s;
}

double turn_speed(const Turn& turn) { return turn_speed(turn.duration()); }

double integrated_turn_speed(const Turn& turn) {
  if (!(turn.duration() > 0.0)) throw InvalidArgument("turn duration must be positive");
  return std::abs(turn.angle) / turn.duration();
}

double median(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TestMeta TestMeta::from_stream(const SensorStream& stream) {
  return {stream.session_id, stream.participant_id, stream.day, stream.setting,
          stream.wear_location};
}

TestResult summarize_test(std::vector<Turn> turns, TestMeta meta) {
  TestResult r;
  r.meta = std::move(meta);
  r.n_turns = turns.size();
  if (!turns.empty()) {
    std::vector<double> speeds, durations;
    for (const auto& t : turns) {
      speeds.push_back(turn_speed(t));
      durations.push_back(t.duration());
    }
    r.turn_speed_median = median(speeds);
    r.turn_duration_median = median(durations);
  }
  r.per_turn = std::move(turns);
  return r;
}

namespace {

std::vector<double> eligible_values(std::span<const TestResult> tests) {
  std::vector<double> values;
  for (const auto& t : tests) {
    if (t.n_turns > 0 && t.turn_speed_median) values.push_back(*t.turn_speed_median);
  }
  return values;
}

}  // namespace

ParticipantAggregate aggregate_participant(std::span<const TestResult> tests) {
  ParticipantAggregate agg;
  if (!tests.empty()) agg.participant_id = tests.front().meta.participant_id;
  agg.values = eligible_values(tests);
  if (agg.values.empty()) throw InvalidArgument("participant has no test with turns");
  agg.aggregate = median(agg.values);
  return agg;
}

std::optional<SplitAggregate> split_aggregate(std::span<const double> values, std::size_t k,
                                              PartitionMode mode, Rng& rng) {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  if (values.size() < 2 * k) return std::nullopt;
  SplitAggregate out;
  if (mode == PartitionMode::chronological) {
    for (std::size_t i = 0; i < k; ++i) {
      out.first_indices.push_back(i);
      out.second_indices.push_back(k + i);
    }
  } else {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    for (std::size_t i = 0; i < k; ++i) {
      out.first_indices.push_back(order[2 * i]);
      out.second_indices.push_back(order[2 * i + 1]);
    }
  }
  std::vector<double> a, b;
  for (auto i : out.first_indices) a.push_back(values[i]);
  for (auto i : out.second_indices) b.push_back(values[i]);
  out.first = median(a);
  out.second = median(b);
  return out;
}

std::optional<SplitAggregate> aggregate_participant(std::span<const TestResult> tests,
                                                    std::size_t k, std::uint64_t seed,
                                                    PartitionMode mode) {
  const auto values = eligible_values(tests);
  Rng rng(seed);
  return split_aggregate(values, k, mode, rng);
}

}  // namespace uturn
