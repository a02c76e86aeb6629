#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uturn/ingest.hpp"

namespace uturn {

enum class MatchKind { tp, fp, fn };

std::string_view to_string(MatchKind k);

struct MatchOutcome {
  MatchKind kind = MatchKind::fp;
  std::optional<TurnAnnotation> detected;
  std::optional<TurnAnnotation> reference;
  // True positives only. Overlap is relative to the reference duration;
  // errors are detected minus reference, negative when the detected turn
  // started (ended) first.
  double overlap_fraction = 0.0;
  double onset_error_s = 0.0;
  double end_error_s = 0.0;
};

/// Intersection length over the reference turn's duration.
double overlap_fraction(const TurnAnnotation& detected, const TurnAnnotation& reference);

/// One-to-one matching of detected to reference turns.
///
/// A pair is admissible when the detected turn covers at least `overlap_min`
/// of the reference turn. Admissible pairs are first taken greedily in
/// descending overlap (ties: earlier reference, then earlier detection).
/// The greedy matching is then grown with augmenting paths until it has
/// maximum cardinality. Unmatched detections are false positives, unmatched
/// references false negatives. Output is ordered by time.
///
/// Both lists must be sorted and internally non-overlapping.
std::vector<MatchOutcome> classify_turns(std::span<const TurnAnnotation> detected,
                                         std::span<const TurnAnnotation> reference,
                                         double overlap_min = 0.20);

struct DetectionScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  /// False when there were no turns at all (tp = fp = fn = 0).
  bool defined = false;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_overlap_pct = 0.0;
  double onset_error_mean = 0.0;
  double onset_error_sd = 0.0;
  double end_error_mean = 0.0;
  double end_error_sd = 0.0;
};

DetectionScore score(std::span<const MatchOutcome> outcomes);

/// Distribution summary used for cohort tables.
struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  Interval mean_ci;  // normal approximation
  double sd = 0.0;
  double min = 0.0;
  double p05 = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quantile of sorted data (q in [0,1]).
double quantile_sorted(std::span<const double> sorted, double q);

SummaryStats summarize(std::span<const double> values);

/// Summary of F1 scores in percent over the defined scores. Undefined scores
/// are skipped and counted in `excluded`.
struct CohortScoreStats {
  SummaryStats f1_pct;
  std::size_t excluded = 0;
};

CohortScoreStats cohort_score_stats(std::span<const DetectionScore> per_participant);

std::string outcomes_to_csv(std::span<const MatchOutcome> outcomes);

}  // namespace uturn
