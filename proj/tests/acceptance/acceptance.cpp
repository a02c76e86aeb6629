// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Tolerances are fixed here and must not be relaxed to make a run pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "uturn/detect.hpp"
#include "uturn/match.hpp"
#include "uturn/measures.hpp"
#include "uturn/stats.hpp"
#include "uturn/synth.hpp"

using namespace uturn;

namespace {

constexpr double kTimingTol = 0.2;       // s, mean |onset| and |end| error
constexpr double kOverlapMin = 80.0;     // %, mean temporal overlap
constexpr double kDetectBudget = 5.0;    // s, criterion 1 runtime
constexpr double kIdentityTol = 1e-12;
constexpr double kIccTol = 1e-9;
constexpr double kRhoMin = 0.6;
constexpr double kGroupAlpha = 0.01;
constexpr double kCohortBudget = 60.0;   // s, criterion 10 runtime

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
    }
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SensorStream yaw_stream(const std::function<double(double)>& w, double duration) {
  SensorStream s;
  const auto n = static_cast<std::size_t>(std::llround(duration * kDefaultRate)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    SensorSample x;
    x.t = static_cast<double>(i) / kDefaultRate;
    x.accel = {0.0, 0.0, kGravity};
    x.gyro = {0.0, 0.0, w(x.t)};
    s.samples.push_back(x);
  }
  return s;
}

std::function<double(double)> pulse(double t0, double d, double angle) {
  return [=](double t) {
    if (t < t0 || t > t0 + d) return 0.0;
    return angle / d * (1.0 - std::cos(2.0 * kPi * (t - t0) / d));
  };
}

Outcome detection_on_clean_cohort() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1);
  std::vector<MatchOutcome> pooled;
  for (int s = 0; s < 20; ++s) {
    SessionSpec spec;
    spec.n_turns = 12;
    spec.turn_durations.clear();
    for (int i = 0; i < 12; ++i) spec.turn_durations.push_back(rng.uniform(1.5, 3.5));
    spec.pelvis_osc_amp = 15.0 * kDegToRad;
    spec.seed = static_cast<std::uint64_t>(s);
    const auto session = generate_session(spec);
    const auto det = to_annotations(detect_turns(session.stream));
    const auto out = classify_turns(det, session.truth);
    pooled.insert(pooled.end(), out.begin(), out.end());
  }
  const double elapsed = seconds_since(t0);
  const auto sc = score(pooled);
  double onset = 0.0, end = 0.0;
  for (const auto& m : pooled) {
    if (m.kind != MatchKind::tp) continue;
    onset += std::abs(m.onset_error_s);
    end += std::abs(m.end_error_s);
  }
  onset /= static_cast<double>(std::max<std::size_t>(sc.tp, 1));
  end /= static_cast<double>(std::max<std::size_t>(sc.tp, 1));
  o.require(sc.tp == 240 && sc.fp == 0 && sc.fn == 0, "F1 = 100%");
  o.require(onset <= kTimingTol, "mean |onset error| <= 0.2 s");
  o.require(end <= kTimingTol, "mean |end error| <= 0.2 s");
  o.require(sc.mean_overlap_pct >= kOverlapMin, "mean overlap >= 80%");
  o.require(elapsed < kDetectBudget, "runtime < 5 s");
  o.note("F1 " + fmt("%.1f%%", 100.0 * sc.f1) + ", |onset| " + fmt("%.3f s", onset) + ", |end| " +
         fmt("%.3f s", end) + ", overlap " + fmt("%.1f%%", sc.mean_overlap_pct) + ", " +
         fmt("%.2f s", elapsed));
  return o;
}

Outcome threshold_gates() {
  Outcome o;
  const auto count = [](double angle_deg, double duration) {
    return detect_turns(yaw_stream(pulse(4.0, duration, angle_deg * kDegToRad), 12.0)).size();
  };
  const auto n85 = count(85.0, 2.0);
  const auto n_spin = count(180.0, 0.4);
  const auto n95 = count(95.0, 2.0);
  o.require(n85 == 0, "85 deg turn rejected");
  o.require(n_spin == 0, "0.4 s spin rejected");
  o.require(n95 == 1, "95 deg / 2 s turn accepted");

  // Walking only: pelvis rotation on top of a slow veer.
  SessionSpec walk;
  walk.n_turns = 0;
  walk.walk_bout = 8.0;
  walk.pelvis_osc_freq = 2.0;
  walk.heading_drift = 14.0 * kDegToRad;
  const auto stream = generate_session(walk).stream;
  DetectorConfig low;
  low.rate_threshold = 5.0 * kDegToRad;
  const auto fp_low = detect_turns(stream, low).size();
  const auto fp_default = detect_turns(stream).size();
  o.require(fp_low > 0, "5 deg/s trigger produces pelvis false positives");
  o.require(fp_default == 0, "20 deg/s trigger removes all false positives");
  o.note("counts 85deg=" + std::to_string(n85) + " spin=" + std::to_string(n_spin) +
         " 95deg=" + std::to_string(n95) + ", walking FP 5dps=" + std::to_string(fp_low) +
         " 20dps=" + std::to_string(fp_default));
  return o;
}

Outcome measure_identities() {
  Outcome o;
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double d = rng.uniform(0.5, 10.0);
    worst = std::max(worst, std::abs(turn_speed(d) * d - kPi));
  }
  o.require(worst <= kIdentityTol, "turn_speed(d) * d = pi");
  std::size_t mismatches = 0;
  for (int c = 0; c < 10000; ++c) {
    std::vector<double> v(1 + rng.index(20));
    for (auto& x : v) x = std::round(rng.uniform(0.5, 2.5) * 100.0) / 100.0;
    const double m = median(v);
    rng.shuffle(v.begin(), v.end());
    if (median(v) != m) ++mismatches;
  }
  o.require(mismatches == 0, "median permutation invariance");
  o.note("max |speed*d - pi| " + fmt("%.2e", worst) + ", permutation mismatches " +
         std::to_string(mismatches) + "/10000");
  return o;
}

Outcome sem_to_mdc() {
  Outcome o;
  Rng rng(4);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double sem = rng.uniform(0.0, 1.0);
    worst = std::max(worst, std::abs(mdc_from_sem(sem) - 1.96 * std::sqrt(2.0) * sem));
  }
  o.require(worst <= kIdentityTol, "MDC = 1.96 sqrt(2) SEM");
  const double a = mdc_from_sem(0.15), b = mdc_from_sem(0.06);
  o.require(std::abs(a - 0.4158) < 5e-5, "SEM 0.15 -> 0.4158");
  o.require(std::abs(b - 0.1663) < 5e-5, "SEM 0.06 -> 0.1663");
  o.note("MDC(0.15) " + fmt("%.4f", a) + ", MDC(0.06) " + fmt("%.4f", b));
  return o;
}

Outcome icc_correctness() {
  Outcome o;
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.index(18), m = 2 + rng.index(3);
    std::vector<std::vector<double>> rows(n, std::vector<double>(m));
    Matrix x(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      const double subject = rng.normal(1.4, 0.3);
      for (std::size_t j = 0; j < m; ++j) {
        rows[i][j] = x(i, j) = subject + 0.05 * static_cast<double>(j) + rng.normal(0.0, 0.15);
      }
    }
    const auto ref = oracle::icc(rows);
    worst = std::max(worst, std::abs(icc_single(x, IccModel::two_way_mixed_31) - ref.agreement));
    worst = std::max(worst, std::abs(icc_single(x, IccModel::two_way_random_21) - ref.agreement));
    worst = std::max(worst, std::abs(icc_single(x, IccModel::two_way_mixed_31, IccType::consistency) -
                                     ref.consistency));
  }
  o.require(worst <= kIccTol, "ICC equals the ANOVA oracle");

  Matrix same(10, 2), offset(10, 2);
  for (std::size_t i = 0; i < 10; ++i) {
    same(i, 0) = same(i, 1) = 1.0 + 0.1 * static_cast<double>(i);
    offset(i, 0) = same(i, 0);
    offset(i, 1) = same(i, 0) + 0.02 * static_cast<double>(i % 3);
  }
  const double one = icc_single(same, IccModel::two_way_mixed_31);
  o.require(std::abs(one - 1.0) <= kIdentityTol, "identical columns give 1");
  const double base = icc_single(offset, IccModel::two_way_mixed_31);
  for (std::size_t i = 0; i < 10; ++i) offset(i, 1) += 0.25;
  const double shifted = icc_single(offset, IccModel::two_way_mixed_31);
  o.require(shifted < base, "constant offset lowers absolute agreement");
  o.note("max |ICC - oracle| " + fmt("%.2e", worst) + ", offset " + fmt("%.4f", base) + " -> " +
         fmt("%.4f", shifted));
  return o;
}

Outcome bland_altman_properties() {
  Outcome o;
  Rng rng(6);
  std::vector<double> a(30), b(30), a_off(30);
  for (std::size_t i = 0; i < 30; ++i) {
    a[i] = rng.normal(1.4, 0.3);
    b[i] = a[i] + rng.normal(0.05, 0.1);
    a_off[i] = a[i] + 0.25;
  }
  const auto id = bland_altman(a, a);
  o.require(id.bias == 0.0 && id.loa_lower == 0.0 && id.loa_upper == 0.0, "identity gives (0,0,0)");
  const auto off = bland_altman(a_off, a);
  o.require(std::abs(off.bias - 0.25) <= kIdentityTol && std::abs(off.loa_lower - 0.25) <= kIdentityTol &&
                std::abs(off.loa_upper - 0.25) <= kIdentityTol,
            "offset c gives (c,c,c)");
  const double asym = std::abs(bland_altman(a, b).bias + bland_altman(b, a).bias);
  o.require(asym <= kIdentityTol, "bias(a,b) = -bias(b,a)");
  o.note("offset (" + fmt("%.6f", off.bias) + "," + fmt("%.6f", off.loa_lower) + "," +
         fmt("%.6f", off.loa_upper) + "), antisymmetry residual " + fmt("%.1e", asym));
  return o;
}

Outcome bootstrap_reproducibility() {
  Outcome o;
  Rng rng(7);
  std::vector<double> data(40);
  for (auto& x : data) x = rng.normal(1.3, 0.35);
  const auto mean = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  BootstrapOptions opt;
  opt.n_reps = 500;
  opt.seed = 2024;
  const auto first = bootstrap_ci(data, mean, opt);
  const auto second = bootstrap_ci(data, mean, opt);
  opt.threads = 4;
  const auto threaded = bootstrap_ci(data, mean, opt);
  const auto same_bits = [](const Interval& x, const Interval& y) {
    return std::memcmp(&x.lower, &y.lower, sizeof(double)) == 0 &&
           std::memcmp(&x.upper, &y.upper, sizeof(double)) == 0;
  };
  o.require(same_bits(first, second) && same_bits(first, threaded), "bitwise reproducible");
  const auto [lo, hi] = oracle::bootstrap_mean_ci(data, 500, 2024);
  o.require(first.lower == lo && first.upper == hi, "equals the duplicate implementation");
  o.note("CI [" + fmt("%.6f", first.lower) + ", " + fmt("%.6f", first.upper) + "]");
  return o;
}

Outcome matching_optimality() {
  Outcome o;
  Rng rng(8);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TurnAnnotation> sides[2];
    std::vector<oracle::Span> spans[2];
    for (int s = 0; s < 2; ++s) {
      const std::size_t n = rng.index(7);
      double t = rng.uniform(0.0, 2.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = rng.uniform(0.3, 4.0);
        sides[s].push_back({t, t + d, AnnotationSource::reference});
        spans[s].push_back({t, t + d});
        t += d + rng.uniform(0.05, 3.0);
      }
    }
    const auto sc = score(classify_turns(sides[0], sides[1]));
    if (sc.tp != oracle::max_matching(spans[0], spans[1], 0.2)) ++mismatches;
  }
  o.require(mismatches == 0, "cardinality equals exhaustive maximum matching");

  const std::vector<TurnAnnotation> det{{12.2, 14.0, AnnotationSource::detector}};
  const std::vector<TurnAnnotation> ref{{10.0, 12.6, AnnotationSource::reference}};
  const double frac = overlap_fraction(det[0], ref[0]);
  const auto sc = score(classify_turns(det, ref));
  o.require(std::abs(frac - 0.4 / 2.6) <= kIdentityTol, "worked example overlap 15.4%");
  o.require(sc.tp == 0 && sc.fp == 1 && sc.fn == 1, "worked example FP + FN");
  o.note("mismatches " + std::to_string(mismatches) + "/200, example overlap " +
         fmt("%.1f%%", 100.0 * frac));
  return o;
}

Outcome nonparametrics() {
  Outcome o;
  const std::vector<double> x{1, 2, 3, 4};
  const double up = spearman(x, std::vector<double>{10, 20, 30, 40}).rho;
  const double down = spearman(x, std::vector<double>{4, 3, 2, 1}).rho;
  o.require(up == 1.0 && down == -1.0, "Spearman +-1 on monotone data");
  const std::vector<double> y{2, 1, 4, 3};
  const double rho = spearman(x, y).rho;
  o.require(std::abs(rho - 0.6) <= kIdentityTol &&
                std::abs(rho - oracle::spearman(x, y)) <= kIdentityTol,
            "rho = 0.6 on the 4-point fixture");
  const std::vector<double> a{1, 2}, b{3, 4};
  const auto mw = mann_whitney(a, b);
  o.require(std::abs(mw.p_value - oracle::mann_whitney_exact_p(a, b)) <= kIdentityTol &&
                std::abs(mw.p_value - 1.0 / 3.0) <= 5e-5,
            "exact p = 0.3333");
  Rng rng(9);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> g1(1 + rng.index(25)), g2(1 + rng.index(25));
    if (g1.size() + g2.size() < 4) g2.resize(3);
    for (auto& v : g1) v = std::round(rng.normal(0.0, 1.0) * 3.0);
    for (auto& v : g2) v = std::round(rng.normal(0.3, 1.0) * 3.0);
    try {
      const auto r = mann_whitney(g1, g2);
      if (r.u_a + r.u_b != static_cast<double>(g1.size() * g2.size())) ++violations;
    } catch (const UndefinedStatistic&) {
      // all values tied; no U to check
    }
  }
  o.require(violations == 0, "U(a) + U(b) = n1 n2");
  o.note("rho " + fmt("%.4f", rho) + ", p " + fmt("%.4f", mw.p_value) + ", U-sum violations " +
         std::to_string(violations) + "/1000");
  return o;
}

Outcome cohort_reconstruction() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  CohortSpec spec = CohortSpec::graded_default();
  spec.seed = 0;
  const auto cohort = generate_cohort(spec);

  std::vector<ParticipantTests> tests;
  std::vector<double> aggregate, edss, lowest, highest;
  for (const auto& p : cohort.participants) {
    ParticipantTests pt{p.participant_id, {}};
    for (const auto& s : p.sessions) {
      const auto session = generate_session(s);
      const auto r = summarize_test(detect_turns(session.stream), TestMeta::from_stream(session.stream));
      if (r.turn_speed_median) pt.medians.push_back(*r.turn_speed_median);
    }
    if (!pt.medians.empty()) {
      const double m = median(pt.medians);
      aggregate.push_back(m);
      edss.push_back(p.edss_proxy);
      if (p.level == 0) lowest.push_back(m);
      if (p.level + 1 == cohort.levels.size()) highest.push_back(m);
    }
    tests.push_back(std::move(pt));
  }

  ReliabilityOptions ro;
  ro.seed = 0;
  ro.threads = 4;
  const auto curve = reliability_curve(tests, ro);
  bool icc_increasing = true, n_decreasing = true;
  std::string table;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& r = curve[i];
    table += (i ? " " : "") + std::string("k") + std::to_string(r.k) + ":" +
             fmt("%.3f", r.icc21.value) + "/n" + std::to_string(r.n);
    if (!r.available) icc_increasing = false;
    if (i == 0) continue;
    icc_increasing = icc_increasing && r.icc21.value > curve[i - 1].icc21.value;
    n_decreasing = n_decreasing && r.n <= curve[i - 1].n;
  }
  n_decreasing = n_decreasing && curve.back().n < curve.front().n;
  const auto rho = spearman(aggregate, edss);
  const auto mw = mann_whitney(lowest, highest);
  const double elapsed = seconds_since(t0);

  o.require(icc_increasing, "ICC(2,1) strictly increasing in k");
  o.require(n_decreasing, "retained n decreasing in k");
  o.require(rho.rho < 0.0 && std::abs(rho.rho) >= kRhoMin, "rho <= -0.6");
  o.require(mw.p_value < kGroupAlpha, "extreme groups separated at p < 0.01");
  o.require(elapsed < kCohortBudget, "runtime < 60 s");
  o.note(table + ", rho " + fmt("%.3f", rho.rho) + ", p " + fmt("%.2e", mw.p_value) + ", " +
         fmt("%.1f s", elapsed));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"detection on a clean synthetic cohort", detection_on_clean_cohort},
      {"threshold gates", threshold_gates},
      {"turn speed and median identities", measure_identities},
      {"SEM to MDC", sem_to_mdc},
      {"ICC correctness", icc_correctness},
      {"Bland-Altman properties", bland_altman_properties},
      {"bootstrap reproducibility", bootstrap_reproducibility},
      {"matching optimality", matching_optimality},
      {"nonparametric statistics", nonparametrics},
      {"synthetic cohort reconstruction", cohort_reconstruction},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
