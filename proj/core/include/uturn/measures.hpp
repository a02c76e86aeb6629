#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uturn/detect.hpp"
#include "uturn/ingest.hpp"
#include "uturn/rng.hpp"

namespace uturn {

/// Turn speed with the turn angle fixed at pi rad: pi / duration.
double turn_speed(const Turn& turn);
double turn_speed(double duration_s);

/// |integrated angle| / duration; secondary measure only.
double integrated_turn_speed(const Turn& turn);

/// Median with the midpoint rule for even counts. Empty input throws.
double median(std::span<const double> values);

struct TestMeta {
  std::string session_id;
  std::string participant_id;
  std::optional<int> day;
  Setting setting = Setting::unsupervised;
  WearLocation wear_location = WearLocation::belt_front;

  static TestMeta from_stream(const SensorStream& stream);
};

/// Per-test summary. Medians are absent iff no turn was detected.
struct TestResult {
  TestMeta meta;
  std::size_t n_turns = 0;
  std::optional<double> turn_speed_median;     // rad/s
  std::optional<double> turn_duration_median;  // s
  std::vector<Turn> per_turn;
};

TestResult summarize_test(std::vector<Turn> turns, TestMeta meta);

enum class PartitionMode {
  random,         // seeded random split of randomly chosen days
  chronological,  // first k tests vs the next k
};

struct ParticipantAggregate {
  std::string participant_id;
  std::vector<double> values;  // per-test turn speed medians
  double aggregate = 0.0;      // median(values)
};

/// Median of per-test medians over every test with at least one turn.
/// Throws InvalidArgument if no test qualifies.
ParticipantAggregate aggregate_participant(std::span<const TestResult> tests);

/// Two disjoint k-test sets, summarized by their medians.
struct SplitAggregate {
  std::vector<std::size_t> first_indices;   // into the eligible values
  std::vector<std::size_t> second_indices;
  double first = 0.0;
  double second = 0.0;
};

/// Splits 2k of the given per-test values into two disjoint sets of k.
///
/// Random mode draws one uniformly random permutation of the values from
/// `rng` and assigns its even positions 0,2,..,2k-2 to the first set and odd
/// positions to the second. For a fixed generator state the k-sets are
/// therefore nested across k. Returns nullopt when fewer than 2k values exist.
std::optional<SplitAggregate> split_aggregate(std::span<const double> values, std::size_t k,
                                              PartitionMode mode, Rng& rng);

/// Convenience overload over TestResults, keeping only tests with turns.
std::optional<SplitAggregate> aggregate_participant(std::span<const TestResult> tests,
                                                    std::size_t k, std::uint64_t seed,
                                                    PartitionMode mode = PartitionMode::random);

}  // namespace uturn
