#include "uturn/match.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>

#include "uturn/csv.hpp"

namespace uturn {

namespace {

void check_sorted_disjoint(std::span<const TurnAnnotation> turns, const char* what) {
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (!(turns[i].end_s > turns[i].start_s)) {
      throw InvalidArgument(std::string(what) + " turn with end <= start");
    }
    if (i > 0 && turns[i].start_s < turns[i - 1].end_s) {
      throw InvalidArgument(std::string(what) + " turns unsorted or overlapping");
    }
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string_view to_string(MatchKind k) {
  switch (k) {
    case MatchKind::tp: return "TP";
    case MatchKind::fp: return "FP";
    case MatchKind::fn: return "FN";
  }
  return "?";
}

double overlap_fraction(const TurnAnnotation& detected, const TurnAnnotation& reference) {
  const double inter = std::min(detected.end_s, reference.end_s) -
                       std::max(detected.start_s, reference.start_s);
  return std::max(0.0, inter) / reference.duration();
}

std::vector<MatchOutcome> classify_turns(std::span<const TurnAnnotation> detected,
                                         std::span<const TurnAnnotation> reference,
                                         double overlap_min) {
  check_sorted_disjoint(detected, "detected");
  check_sorted_disjoint(reference, "reference");
  if (!(overlap_min > 0.0) || overlap_min > 1.0) {
    throw InvalidArgument("overlap_min must be in (0, 1]");
  }

  struct Candidate {
    std::size_t ref;
    std::size_t det;
    double overlap;
  };
  std::vector<Candidate> candidates;
  for (std::size_t r = 0; r < reference.size(); ++r) {
    for (std::size_t d = 0; d < detected.size(); ++d) {
      const double f = overlap_fraction(detected[d], reference[r]);
      if (f >= overlap_min && f > 0.0) candidates.push_back({r, d, f});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.overlap, a.ref, a.det) < std::tie(a.overlap, b.ref, b.det);
  });

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> ref_match(reference.size(), kNone);
  std::vector<std::size_t> det_match(detected.size(), kNone);
  for (const auto& c : candidates) {
    if (ref_match[c.ref] == kNone && det_match[c.det] == kNone) {
      ref_match[c.ref] = c.det;
      det_match[c.det] = c.ref;
    }
  }

  // Augmenting paths from each unmatched reference, exploring detections in
  // descending overlap.
  std::vector<std::vector<std::size_t>> adjacency(reference.size());
  for (const auto& c : candidates) adjacency[c.ref].push_back(c.det);
  std::vector<char> visited(detected.size());
  std::function<bool(std::size_t)> augment = [&](std::size_t r) {
    for (std::size_t d : adjacency[r]) {
      if (visited[d]) continue;
      visited[d] = 1;
      if (det_match[d] == kNone || augment(det_match[d])) {
        det_match[d] = r;
        ref_match[r] = d;
        return true;
      }
    }
    return false;
  };
  for (std::size_t r = 0; r < reference.size(); ++r) {
    if (ref_match[r] != kNone) continue;
    std::fill(visited.begin(), visited.end(), 0);
    augment(r);
  }

  std::vector<MatchOutcome> out;
  for (std::size_t r = 0; r < reference.size(); ++r) {
    MatchOutcome o;
    o.reference = reference[r];
    if (ref_match[r] == kNone) {
      o.kind = MatchKind::fn;
    } else {
      const auto& det = detected[ref_match[r]];
      o.kind = MatchKind::tp;
      o.detected = det;
      o.overlap_fraction = overlap_fraction(det, reference[r]);
      o.onset_error_s = det.start_s - reference[r].start_s;
      o.end_error_s = det.end_s - reference[r].end_s;
    }
    out.push_back(o);
  }
  for (std::size_t d = 0; d < detected.size(); ++d) {
    if (det_match[d] != kNone) continue;
    MatchOutcome o;
    o.kind = MatchKind::fp;
    o.detected = detected[d];
    out.push_back(o);
  }
  const auto key = [](const MatchOutcome& o) {
    return o.detected ? o.detected->start_s : o.reference->start_s;
  };
  std::stable_sort(out.begin(), out.end(), [&](const MatchOutcome& a, const MatchOutcome& b) {
    return key(a) < key(b);
  });
  return out;
}

DetectionScore score(std::span<const MatchOutcome> outcomes) {
  DetectionScore s;
  std::vector<double> overlaps, onset, end;
  for (const auto& o : outcomes) {
    switch (o.kind) {
      case MatchKind::tp:
        ++s.tp;
        overlaps.push_back(o.overlap_fraction * 100.0);
        onset.push_back(o.onset_error_s);
        end.push_back(o.end_error_s);
        break;
      case MatchKind::fp: ++s.fp; break;
      case MatchKind::fn: ++s.fn; break;
    }
  }
  s.defined = s.tp + s.fp + s.fn > 0;
  if (!s.defined) return s;
  const auto tp = static_cast<double>(s.tp);
  if (s.tp + s.fp > 0) s.precision = tp / static_cast<double>(s.tp + s.fp);
  if (s.tp + s.fn > 0) s.recall = tp / static_cast<double>(s.tp + s.fn);
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  s.mean_overlap_pct = mean_of(overlaps);
  s.onset_error_mean = mean_of(onset);
  s.onset_error_sd = sample_sd(onset);
  s.end_error_mean = mean_of(end);
  s.end_error_sd = sample_sd(end);
  return s;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty set");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("summary of an empty set");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  SummaryStats s;
  s.n = v.size();
  s.mean = mean_of(v);
  s.sd = sample_sd(v);
  const double half = 1.96 * s.sd / std::sqrt(static_cast<double>(s.n));
  s.mean_ci = {s.mean - half, s.mean + half};
  s.min = v.front();
  s.max = v.back();
  s.p05 = quantile_sorted(v, 0.05);
  s.q1 = quantile_sorted(v, 0.25);
  s.median = quantile_sorted(v, 0.5);
  s.q3 = quantile_sorted(v, 0.75);
  s.p95 = quantile_sorted(v, 0.95);
  return s;
}

CohortScoreStats cohort_score_stats(std::span<const DetectionScore> per_participant) {
  CohortScoreStats out;
  std::vector<double> f1;
  for (const auto& s : per_participant) {
    if (s.defined) {
      f1.push_back(s.f1 * 100.0);
    } else {
      ++out.excluded;
    }
  }
  if (f1.empty()) throw InvalidArgument("no defined detection score");
  out.f1_pct = summarize(f1);
  return out;
}

std::string outcomes_to_csv(std::span<const MatchOutcome> outcomes) {
  std::string out = "kind,det_start,det_end,ref_start,ref_end,overlap,onset_err,end_err\n";
  for (const auto& o : outcomes) {
    out += std::string(to_string(o.kind));
    out += "," + (o.detected ? format_double(o.detected->start_s) : std::string());
    out += "," + (o.detected ? format_double(o.detected->end_s) : std::string());
    out += "," + (o.reference ? format_double(o.reference->start_s) : std::string());
    out += "," + (o.reference ? format_double(o.reference->end_s) : std::string());
    if (o.kind == MatchKind::tp) {
      out += "," + format_double(o.overlap_fraction) + "," + format_double(o.onset_error_s) +
             "," + format_double(o.end_error_s);
    } else {
      out += ",,,";
    }
    out += "\n";
  }
  return out;
}

}  // namespace uturn
