#include "uturn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uturn/csv.hpp"
#include "uturn/rng.hpp"

namespace uturn {

namespace {

constexpr double kMinTurnDuration = 0.8;
constexpr double kMaxTurnDuration = 8.0;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (auto f : split(s, ',')) {
    if (!trim(f).empty()) out.push_back(parse_double(f));
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

// Raised-cosine taper over `ramp` seconds at both ends of a bout of length L.
double taper(double tau, double length, double ramp) {
  if (ramp <= 0.0) return 1.0;
  if (tau < ramp) return 0.5 * (1.0 - std::cos(kPi * tau / ramp));
  if (length - tau < ramp) return 0.5 * (1.0 - std::cos(kPi * (length - tau) / ramp));
  return 1.0;
}

}  // namespace

void SessionSpec::validate() const {
  if (turn_durations.empty() || (turn_durations.size() != 1 && turn_durations.size() != n_turns)) {
    throw InvalidArgument("turn_durations must hold one value or one per turn");
  }
  for (double d : turn_durations) {
    if (!(d >= 0.1)) throw InvalidArgument("turn duration must be >= 0.1 s");
  }
  if (!(rate > 0.0) || !(rate > 2.0 * pelvis_osc_freq)) {
    throw InvalidArgument("rate must exceed twice the pelvis oscillation frequency");
  }
  if (!(walk_bout > 0.0)) throw InvalidArgument("walk_bout must be positive");
  if (gyro_noise_sd < 0.0 || accel_noise_sd < 0.0) {
    throw InvalidArgument("noise SD must be non-negative");
  }
}

double SessionSpec::turn_duration(std::size_t i) const {
  return turn_durations.size() == 1 ? turn_durations.front() : turn_durations.at(i);
}

std::map<std::string, std::string> SessionSpec::to_key_values() const {
  std::map<std::string, std::string> kv{
      {"n_turns", std::to_string(n_turns)},
      {"turn_durations", join(turn_durations)},
      {"walk_bout", format_double(walk_bout)},
      {"pelvis_osc_amp", format_double(pelvis_osc_amp)},
      {"pelvis_osc_freq", format_double(pelvis_osc_freq)},
      {"heading_drift", format_double(heading_drift)},
      {"gyro_noise_sd", format_double(gyro_noise_sd)},
      {"accel_noise_sd", format_double(accel_noise_sd)},
      {"tilt_deg", format_double(tilt_deg)},
      {"rate", format_double(rate)},
      {"seed", std::to_string(seed)},
      {"session_id", session_id},
      {"wear_location", std::string(to_string(wear_location))},
      {"setting", std::string(to_string(setting))},
  };
  if (!participant_id.empty()) kv["participant_id"] = participant_id;
  if (day) kv["day"] = std::to_string(*day);
  return kv;
}

SessionSpec SessionSpec::from_key_values(const std::map<std::string, std::string>& kv) {
  SessionSpec s;
  for (const auto& [key, value] : kv) {
    if (key == "n_turns") s.n_turns = static_cast<std::size_t>(parse_long(value));
    else if (key == "turn_durations") s.turn_durations = parse_list(value);
    else if (key == "walk_bout") s.walk_bout = parse_double(value);
    else if (key == "pelvis_osc_amp") s.pelvis_osc_amp = parse_double(value);
    else if (key == "pelvis_osc_freq") s.pelvis_osc_freq = parse_double(value);
    else if (key == "heading_drift") s.heading_drift = parse_double(value);
    else if (key == "gyro_noise_sd") s.gyro_noise_sd = parse_double(value);
    else if (key == "accel_noise_sd") s.accel_noise_sd = parse_double(value);
    else if (key == "tilt_deg") s.tilt_deg = parse_double(value);
    else if (key == "rate") s.rate = parse_double(value);
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_long(value));
    else if (key == "session_id") s.session_id = value;
    else if (key == "participant_id") s.participant_id = value;
    else if (key == "day") s.day = static_cast<int>(parse_long(value));
    else if (key == "wear_location") s.wear_location = parse_wear_location(value);
    else if (key == "setting") s.setting = parse_setting(value);
    else if (key != "mode") throw InvalidArgument("unknown session key '" + key + "'");
  }
  s.validate();
  return s;
}

SessionProfile::SessionProfile(const SessionSpec& spec) : spec_(spec) {
  spec_.validate();
  double t = 0.0;
  for (std::size_t i = 0; i < spec_.n_turns; ++i) {
    bouts_.push_back({t, t + spec_.walk_bout, i % 2 == 0 ? 1 : -1});
    t += spec_.walk_bout;
    const double d = spec_.turn_duration(i);
    truth_.push_back({t, t + d, AnnotationSource::synthetic_truth});
    signs_.push_back(i % 2 == 0 ? 1 : -1);
    t += d;
  }
  bouts_.push_back({t, t + spec_.walk_bout, spec_.n_turns % 2 == 0 ? 1 : -1});
  total_ = t + spec_.walk_bout;
}

double SessionProfile::yaw_rate(double t) const {
  const auto turn = std::upper_bound(
      truth_.begin(), truth_.end(), t,
      [](double v, const TurnAnnotation& a) { return v < a.start_s; });
  if (turn != truth_.begin()) {
    const auto& a = *std::prev(turn);
    if (t < a.end_s) {
      const double d = a.duration();
      const auto sign = signs_[static_cast<std::size_t>(std::prev(turn) - truth_.begin())];
      return sign * (kPi / d) * (1.0 - std::cos(2.0 * kPi * (t - a.start_s) / d));
    }
  }
  for (const auto& b : bouts_) {
    if (t >= b.start && t < b.end) {
      const double tau = t - b.start;
      const double length = b.end - b.start;
      const double w = taper(tau, length, std::min(0.25, length / 4.0));
      return w * (spec_.pelvis_osc_amp * std::sin(2.0 * kPi * spec_.pelvis_osc_freq * tau) +
                  b.drift_sign * spec_.heading_drift);
    }
  }
  return 0.0;
}

SyntheticSession generate_session(const SessionSpec& spec) {
  const SessionProfile profile(spec);
  Rng rng(spec.seed);

  const double tilt = spec.tilt_deg * kDegToRad;
  const Vec3 up{0.0, std::sin(tilt), std::cos(tilt)};

  SyntheticSession out;
  auto& stream = out.stream;
  stream.nominal_rate = spec.rate;
  stream.session_id = spec.session_id;
  stream.participant_id = spec.participant_id;
  stream.day = spec.day;
  stream.wear_location = spec.wear_location;
  stream.setting = spec.setting;

  const auto n = static_cast<std::size_t>(std::floor(profile.total_duration() * spec.rate + 1e-9)) + 1;
  stream.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SensorSample s;
    s.t = static_cast<double>(i) / spec.rate;
    const double w = profile.yaw_rate(s.t);
    for (int k = 0; k < 3; ++k) {
      s.gyro[k] = w * up[k];
      s.accel[k] = kGravity * up[k];
    }
    if (spec.gyro_noise_sd > 0.0) {
      for (int k = 0; k < 3; ++k) s.gyro[k] += rng.normal(0.0, spec.gyro_noise_sd);
    }
    if (spec.accel_noise_sd > 0.0) {
      for (int k = 0; k < 3; ++k) s.accel[k] += rng.normal(0.0, spec.accel_noise_sd);
    }
    stream.samples.push_back(s);
  }
  out.truth = profile.truth();
  return out;
}

void CohortSpec::validate() const {
  if (n_participants == 0) throw InvalidArgument("cohort needs participants");
  if (levels.empty()) throw InvalidArgument("cohort needs at least one level");
  for (const auto& l : levels) {
    if (!(l.weight > 0.0) || !(l.turn_duration_mean > 0.0) || l.edss_hi < l.edss_lo ||
        l.fall_prob < 0.0 || l.fall_prob > 1.0 || l.aid_prob < 0.0 || l.aid_prob > 1.0) {
      throw InvalidArgument("invalid disability level '" + l.name + "'");
    }
  }
  if (test_count_pmf.empty() || test_count_pmf.size() > n_days + 1) {
    throw InvalidArgument("test_count_pmf must cover 0..n_days");
  }
  double total = 0.0;
  for (double p : test_count_pmf) {
    if (p < 0.0) throw InvalidArgument("negative probability in test_count_pmf");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) throw InvalidArgument("test_count_pmf must sum to 1");
  if (turns_per_test == 0) throw InvalidArgument("turns_per_test must be positive");
}

double CohortSpec::mean_test_count() const {
  double m = 0.0;
  for (std::size_t c = 0; c < test_count_pmf.size(); ++c) {
    m += static_cast<double>(c) * test_count_pmf[c];
  }
  return m;
}

CohortSpec CohortSpec::graded_default() {
  CohortSpec s;
  s.levels = {
      {"EDSS 0-3.5", 0.40, 1.8, 0.0, 3.5, 0.15, 0.05},
      {"EDSS 4-5.5", 0.35, 2.4, 4.0, 5.5, 0.35, 0.50},
      {"EDSS 6-6.5", 0.25, 3.2, 6.0, 6.5, 0.60, 0.95},
  };
  // Shaped after a two-week availability pattern in which ~29% complete all
  // 14 days and nearly everyone completes at least 2.
  s.test_count_pmf = {0.0,   0.0,   0.011, 0.011, 0.012, 0.032, 0.015, 0.0399,
                      0.02,  0.0679, 0.03, 0.0799, 0.1256, 0.27,  0.2857};
  const double total = std::accumulate(s.test_count_pmf.begin(), s.test_count_pmf.end(), 0.0);
  for (double& p : s.test_count_pmf) p /= total;
  return s;
}

std::map<std::string, std::string> CohortSpec::to_key_values() const {
  std::map<std::string, std::string> kv{
      {"mode", "cohort"},
      {"n_participants", std::to_string(n_participants)},
      {"test_count_pmf", join(test_count_pmf)},
      {"n_days", std::to_string(n_days)},
      {"between_sd_log", format_double(between_sd_log)},
      {"within_sd_log", format_double(within_sd_log)},
      {"per_turn_sd_log", format_double(per_turn_sd_log)},
      {"turns_per_test", std::to_string(turns_per_test)},
      {"walk_bout", format_double(walk_bout)},
      {"pelvis_osc_amp", format_double(pelvis_osc_amp)},
      {"pelvis_osc_freq", format_double(pelvis_osc_freq)},
      {"gyro_noise_sd", format_double(gyro_noise_sd)},
      {"accel_noise_sd", format_double(accel_noise_sd)},
      {"rate", format_double(rate)},
      {"seed", std::to_string(seed)},
  };
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string p = "level." + std::to_string(i) + ".";
    const auto& l = levels[i];
    kv[p + "name"] = l.name;
    kv[p + "weight"] = format_double(l.weight);
    kv[p + "turn_duration_mean"] = format_double(l.turn_duration_mean);
    kv[p + "edss_lo"] = format_double(l.edss_lo);
    kv[p + "edss_hi"] = format_double(l.edss_hi);
    kv[p + "fall_prob"] = format_double(l.fall_prob);
    kv[p + "aid_prob"] = format_double(l.aid_prob);
  }
  return kv;
}

CohortSpec CohortSpec::from_key_values(const std::map<std::string, std::string>& kv) {
  CohortSpec s = graded_default();
  std::map<std::size_t, DisabilityLevel> levels;
  for (const auto& [key, value] : kv) {
    if (key.rfind("level.", 0) == 0) {
      const auto parts = split(key, '.');
      if (parts.size() != 3) throw InvalidArgument("bad level key '" + key + "'");
      auto& l = levels[static_cast<std::size_t>(parse_long(parts[1]))];
      const auto field = parts[2];
      if (field == "name") l.name = value;
      else if (field == "weight") l.weight = parse_double(value);
      else if (field == "turn_duration_mean") l.turn_duration_mean = parse_double(value);
      else if (field == "edss_lo") l.edss_lo = parse_double(value);
      else if (field == "edss_hi") l.edss_hi = parse_double(value);
      else if (field == "fall_prob") l.fall_prob = parse_double(value);
      else if (field == "aid_prob") l.aid_prob = parse_double(value);
      else throw InvalidArgument("unknown level field '" + std::string(field) + "'");
    } else if (key == "n_participants") s.n_participants = static_cast<std::size_t>(parse_long(value));
    else if (key == "test_count_pmf") s.test_count_pmf = parse_list(value);
    else if (key == "n_days") s.n_days = static_cast<std::size_t>(parse_long(value));
    else if (key == "between_sd_log") s.between_sd_log = parse_double(value);
    else if (key == "within_sd_log") s.within_sd_log = parse_double(value);
    else if (key == "per_turn_sd_log") s.per_turn_sd_log = parse_double(value);
    else if (key == "turns_per_test") s.turns_per_test = static_cast<std::size_t>(parse_long(value));
    else if (key == "walk_bout") s.walk_bout = parse_double(value);
    else if (key == "pelvis_osc_amp") s.pelvis_osc_amp = parse_double(value);
    else if (key == "pelvis_osc_freq") s.pelvis_osc_freq = parse_double(value);
    else if (key == "gyro_noise_sd") s.gyro_noise_sd = parse_double(value);
    else if (key == "accel_noise_sd") s.accel_noise_sd = parse_double(value);
    else if (key == "rate") s.rate = parse_double(value);
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_long(value));
    else if (key != "mode") throw InvalidArgument("unknown cohort key '" + key + "'");
  }
  if (!levels.empty()) {
    s.levels.clear();
    for (auto& [i, l] : levels) s.levels.push_back(l);
  }
  s.validate();
  return s;
}

Cohort generate_cohort(const CohortSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Cohort cohort;
  cohort.levels = spec.levels;

  // Largest-remainder allocation of participants to levels.
  const double total_weight = std::accumulate(
      spec.levels.begin(), spec.levels.end(), 0.0,
      [](double acc, const DisabilityLevel& l) { return acc + l.weight; });
  std::vector<std::size_t> counts(spec.levels.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < spec.levels.size(); ++i) {
    const double exact =
        static_cast<double>(spec.n_participants) * spec.levels[i].weight / total_weight;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.push_back({exact - std::floor(exact), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < spec.n_participants; ++i, ++assigned) {
    ++counts[remainders[i % remainders.size()].second];
  }
  std::vector<std::size_t> level_of;
  for (std::size_t i = 0; i < counts.size(); ++i) level_of.insert(level_of.end(), counts[i], i);
  rng.shuffle(level_of.begin(), level_of.end());

  std::vector<double> cdf(spec.test_count_pmf.size());
  std::partial_sum(spec.test_count_pmf.begin(), spec.test_count_pmf.end(), cdf.begin());

  for (std::size_t p = 0; p < spec.n_participants; ++p) {
    ParticipantPlan plan;
    char id[16];
    std::snprintf(id, sizeof id, "P%03zu", p + 1);
    plan.participant_id = id;
    plan.level = level_of[p];
    const auto& level = spec.levels[plan.level];
    plan.typical_duration = level.turn_duration_mean * std::exp(rng.normal(0.0, spec.between_sd_log));
    const double edss = level.edss_lo + rng.uniform01() * (level.edss_hi - level.edss_lo);
    plan.edss_proxy = std::clamp(std::round(edss * 2.0) / 2.0, level.edss_lo, level.edss_hi);
    plan.fall = rng.bernoulli(level.fall_prob);
    plan.aid = rng.bernoulli(level.aid_prob);

    const double u = rng.uniform01() * cdf.back();
    const auto count = static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    std::vector<int> days(spec.n_days);
    std::iota(days.begin(), days.end(), 1);
    rng.shuffle(days.begin(), days.end());
    days.resize(std::min(count, spec.n_days));
    std::sort(days.begin(), days.end());

    for (int day : days) {
      SessionSpec s;
      s.n_turns = spec.turns_per_test;
      const double test_duration = plan.typical_duration * std::exp(rng.normal(0.0, spec.within_sd_log));
      s.turn_durations.clear();
      for (std::size_t t = 0; t < spec.turns_per_test; ++t) {
        const double d = test_duration * std::exp(rng.normal(0.0, spec.per_turn_sd_log));
        s.turn_durations.push_back(std::clamp(d, kMinTurnDuration, kMaxTurnDuration));
      }
      s.walk_bout = spec.walk_bout;
      s.pelvis_osc_amp = spec.pelvis_osc_amp;
      s.pelvis_osc_freq = spec.pelvis_osc_freq;
      s.gyro_noise_sd = spec.gyro_noise_sd;
      s.accel_noise_sd = spec.accel_noise_sd;
      s.rate = spec.rate;
      s.seed = mix_seed(spec.seed, p * 1000 + static_cast<std::uint64_t>(day));
      s.participant_id = plan.participant_id;
      s.day = day;
      s.session_id = plan.participant_id + "__d" + (day < 10 ? "0" : "") + std::to_string(day);
      s.setting = Setting::unsupervised;
      s.wear_location = WearLocation::belt_front;
      plan.sessions.push_back(std::move(s));
    }
    cohort.participants.push_back(std::move(plan));
  }
  return cohort;
}

std::string covariates_to_csv(const Cohort& cohort) {
  std::string out = "participant_id,edss_proxy,fall,aid,level\n";
  for (const auto& p : cohort.participants) {
    out += p.participant_id + "," + format_double(p.edss_proxy) + "," + (p.fall ? "1" : "0") +
           "," + (p.aid ? "1" : "0") + "," + std::to_string(p.level) + "\n";
  }
  return out;
}

}  // namespace uturn
