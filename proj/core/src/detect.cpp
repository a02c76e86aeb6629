#include "uturn/detect.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "uturn/csv.hpp"
#include "uturn/filter.hpp"

namespace uturn {

void DetectorConfig::validate() const {
  const auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!finite_pos(end_threshold) || !(end_threshold <= rate_threshold) ||
      !std::isfinite(rate_threshold)) {
    throw InvalidArgument("need 0 < end_threshold <= rate_threshold");
  }
  if (!finite_pos(min_duration) || !(min_duration < max_duration) ||
      !std::isfinite(max_duration)) {
    throw InvalidArgument("need 0 < min_duration < max_duration");
  }
  if (!finite_pos(min_angle)) throw InvalidArgument("min_angle must be positive");
  if (!(merge_gap >= 0.0) || !std::isfinite(merge_gap)) {
    throw InvalidArgument("merge_gap must be non-negative");
  }
  if (!finite_pos(filter_cutoff) || !finite_pos(gravity_cutoff)) {
    throw InvalidArgument("filter cutoffs must be positive");
  }
}

void DetectorConfig::validate(double sample_rate) const {
  validate();
  if (!(filter_cutoff < sample_rate / 2.0) || !(gravity_cutoff < sample_rate / 2.0)) {
    throw InvalidArgument("filter cutoff must be below the Nyquist frequency");
  }
}

std::map<std::string, std::string> DetectorConfig::to_key_values() const {
  return {
      {"rate_threshold", format_double(rate_threshold)},
      {"end_threshold", format_double(end_threshold)},
      {"min_angle", format_double(min_angle)},
      {"min_duration", format_double(min_duration)},
      {"max_duration", format_double(max_duration)},
      {"merge_gap", format_double(merge_gap)},
      {"filter_cutoff", format_double(filter_cutoff)},
      {"gravity_cutoff", format_double(gravity_cutoff)},
  };
}

DetectorConfig DetectorConfig::from_key_values(
    const std::map<std::string, std::string>& kv, DetectorConfig base) {
  const std::map<std::string, double DetectorConfig::*> fields{
      {"rate_threshold", &DetectorConfig::rate_threshold},
      {"end_threshold", &DetectorConfig::end_threshold},
      {"min_angle", &DetectorConfig::min_angle},
      {"min_duration", &DetectorConfig::min_duration},
      {"max_duration", &DetectorConfig::max_duration},
      {"merge_gap", &DetectorConfig::merge_gap},
      {"filter_cutoff", &DetectorConfig::filter_cutoff},
      {"gravity_cutoff", &DetectorConfig::gravity_cutoff},
  };
  for (const auto& [key, value] : kv) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw InvalidArgument("unknown detector key '" + key + "'");
    base.*(it->second) = parse_double(value);
  }
  base.validate();
  return base;
}

DetectorConfig DetectorConfig::from_key_values(
    const std::map<std::string, std::string>& kv) {
  return from_key_values(kv, DetectorConfig{});
}

YawRateSeries estimate_vertical_rate(const SensorStream& stream,
                                     const DetectorConfig& config) {
  const auto& samples = stream.samples;
  const std::size_t n = samples.size();
  if (n < 2) throw InvalidArgument("stream needs at least 2 samples");
  if (!is_uniform(stream)) throw InvalidArgument("stream is not uniformly sampled");
  const double rate = stream.nominal_rate;
  config.validate(rate);

  // Free-fall / dead sensor check on one-second windows.
  const std::size_t window =
      std::min(n, std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(rate))));
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = norm(samples[i].accel);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += mag[i];
    if (i >= window) acc -= mag[i - window];
    if (i + 1 >= window && acc / static_cast<double>(window) < 1.0) {
      throw QualityError("accelerometer magnitude below 1 m/s^2 near t=" +
                         format_double(samples[i].t));
    }
  }

  std::array<std::vector<double>, 3> axes;
  for (auto& a : axes) a.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) axes[k][i] = samples[i].accel[k];
  }
  const auto gravity_sections = butterworth_lowpass(4, config.gravity_cutoff, rate);
  for (auto& a : axes) a = filtfilt(gravity_sections, a);

  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 g{axes[0][i], axes[1][i], axes[2][i]};
    const double len = norm(g);
    if (!(len > 0.0)) throw QualityError("gravity direction undefined");
    raw[i] = dot(samples[i].gyro, g) / len;
  }

  YawRateSeries out;
  out.rate = rate;
  out.t.reserve(n);
  for (const auto& s : samples) out.t.push_back(s.t);
  out.omega_v = lowpass_zero_phase(raw, config.filter_cutoff, rate);
  out.omega_raw = std::move(raw);
  return out;
}

TurnSegmenter::TurnSegmenter(const DetectorConfig& config) : config_(config) {
  config_.validate();
}

void TurnSegmenter::push(double t, double omega_v, std::vector<Turn>& out) {
  if (have_prev_) integral_ += 0.5 * (omega_v + prev_omega_) * (t - prev_t_);
  have_prev_ = true;
  prev_t_ = t;
  prev_omega_ = omega_v;

  const double magnitude = std::abs(omega_v);
  const int sign = omega_v >= config_.end_threshold    ? 1
                   : omega_v <= -config_.end_threshold ? -1
                                                       : 0;
  const bool core = magnitude >= config_.rate_threshold;

  if (region_ && region_->sign == sign) {
    region_->end_t = t;
    region_->end_integral = integral_;
    region_->has_core = region_->has_core || core;
    region_->peak = std::max(region_->peak, magnitude);
    return;
  }
  if (region_) close_region();
  if (group_ && (t - group_->end_t >= config_.merge_gap || (sign != 0 && sign != group_->sign))) {
    finalize_group(out);
  }
  if (sign != 0) region_ = Region{sign, t, integral_, t, integral_, core, magnitude};
}

void TurnSegmenter::flush(std::vector<Turn>& out) {
  if (region_) close_region();
  finalize_group(out);
}

void TurnSegmenter::close_region() {
  const Region r = *region_;
  region_.reset();
  // A group still open here has the region's sign and lies within merge_gap;
  // otherwise it was finalized when the region started.
  if (!group_) group_ = Group{r.sign, r.start_t, r.end_t, std::nullopt, 0.0};
  group_->end_t = r.end_t;
  group_->peak = std::max(group_->peak, r.peak);
  if (r.has_core) {
    if (!group_->core) {
      group_->core = r;
    } else {
      group_->core->end_t = r.end_t;
      group_->core->end_integral = r.end_integral;
    }
  }
}

void TurnSegmenter::finalize_group(std::vector<Turn>& out) {
  if (!group_) return;
  const Group g = *group_;
  group_.reset();
  if (!g.core) return;
  Turn turn;
  turn.start_s = g.core->start_t;
  turn.end_s = g.core->end_t;
  turn.angle = g.core->end_integral - g.core->start_integral;
  turn.peak_rate = g.peak;
  const double duration = turn.duration();
  if (std::abs(turn.angle) >= config_.min_angle && duration >= config_.min_duration &&
      g.end_t - g.start_t <= config_.max_duration) {
    out.push_back(turn);
  }
}

std::vector<Turn> segment_turns(const YawRateSeries& series, const DetectorConfig& config) {
  if (series.t.size() != series.omega_v.size()) {
    throw InvalidArgument("yaw-rate series length mismatch");
  }
  TurnSegmenter segmenter(config);
  std::vector<Turn> turns;
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    segmenter.push(series.t[i], series.omega_v[i], turns);
  }
  segmenter.flush(turns);
  if (series.omega_raw.size() == series.t.size()) {
    std::erase_if(turns, [&](const Turn& turn) {
      return unsmoothed_duration(turn, series, config) < config.min_duration;
    });
  }
  return turns;
}

double unsmoothed_duration(const Turn& turn, const YawRateSeries& series,
                           const DetectorConfig& config) {
  if (series.omega_raw.size() != series.t.size()) {
    throw InvalidArgument("series has no unsmoothed rate");
  }
  const double sign = turn.angle >= 0.0 ? 1.0 : -1.0;
  const auto first = std::lower_bound(series.t.begin(), series.t.end(), turn.start_s);
  const auto last = std::upper_bound(series.t.begin(), series.t.end(), turn.end_s);
  std::optional<double> lo, hi;
  for (auto it = first; it != last; ++it) {
    const auto i = static_cast<std::size_t>(it - series.t.begin());
    if (sign * series.omega_raw[i] >= config.end_threshold) {
      if (!lo) lo = *it;
      hi = *it;
    }
  }
  return lo ? *hi - *lo : 0.0;
}

std::vector<Turn> detect_turns(const SensorStream& stream, const DetectorConfig& config) {
  config.validate();
  if (stream.samples.size() < 2 || stream.duration() < config.min_duration) {
    throw InvalidArgument("stream shorter than the minimum turn duration");
  }
  if (!is_uniform(stream)) {
    return segment_turns(
        estimate_vertical_rate(resample_uniform(stream, stream.nominal_rate), config),
        config);
  }
  return segment_turns(estimate_vertical_rate(stream, config), config);
}

std::vector<TurnAnnotation> to_annotations(const std::vector<Turn>& turns) {
  std::vector<TurnAnnotation> out;
  out.reserve(turns.size());
  for (const auto& t : turns) {
    out.push_back({t.start_s, t.end_s, AnnotationSource::detector});
  }
  return out;
}

std::string turns_to_json(const std::vector<Turn>& turns) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : turns) {
    arr.push_back({{"start_s", t.start_s},
                   {"end_s", t.end_s},
                   {"duration_s", t.duration()},
                   {"angle_rad", t.angle},
                   {"direction", to_string(t.direction())},
                   {"peak_rate", t.peak_rate}});
  }
  return nlohmann::json{{"turns", arr}}.dump(2) + "\n";
}

}  // namespace uturn
