#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uturn/common.hpp"

namespace uturn {

struct SensorSample {
  double t = 0.0;  // seconds from stream start
  Vec3 accel{};    // m/s^2
  Vec3 gyro{};     // rad/s
  std::optional<Vec3> mag;  // uT
};

enum class WearLocation {
  belt_front,
  belt_back,
  pocket_front_left,
  pocket_front_right,
  pocket_back_left,
  pocket_back_right,
};

/// Wear location relabeled by the leg's role in the turn.
enum class WearRole {
  belt_front,
  belt_back,
  pocket_front_inner,
  pocket_front_outer,
  pocket_back_inner,
  pocket_back_outer,
};

enum class Setting { supervised, unsupervised };

enum class TurnDirection { left, right };

std::string_view to_string(WearLocation v);
std::string_view to_string(WearRole v);
std::string_view to_string(Setting v);
std::string_view to_string(TurnDirection v);

WearLocation parse_wear_location(std::string_view s);
Setting parse_setting(std::string_view s);

inline constexpr double kDefaultRate = 50.0;

/// Timestamped IMU recording of one test.
struct SensorStream {
  std::vector<SensorSample> samples;
  double nominal_rate = kDefaultRate;
  WearLocation wear_location = WearLocation::belt_front;
  std::string session_id;
  Setting setting = Setting::unsupervised;
  /// Optional grouping metadata carried through the CLI pipeline.
  std::string participant_id;
  std::optional<int> day;
  /// Non-fatal quality findings (e.g. sampling gaps), human readable.
  std::vector<std::string> warnings;

  double duration() const {
    return samples.size() < 2 ? 0.0 : samples.back().t - samples.front().t;
  }
};

enum class AnnotationSource { reference, detector, synthetic_truth };

struct TurnAnnotation {
  double start_s = 0.0;
  double end_s = 0.0;
  AnnotationSource source = AnnotationSource::reference;

  double duration() const { return end_s - start_s; }
};

enum class StreamFormat { csv, json };

/// Parses a sensor recording.
///
/// CSV: optional leading `# key=value` metadata lines (session_id, setting,
/// wear_location, participant_id, day, nominal_rate), then a header naming
/// `t,ax,ay,az,gx,gy,gz` and optionally `mx,my,mz`. Gyro columns named
/// `gx_dps` etc. are read in deg/s and converted. Columns may appear in any
/// order. JSON: the session envelope written by `serialize_stream`.
///
/// When no nominal rate is given, it is inferred from the median sample
/// spacing. Gaps longer than 0.2 s are recorded in `warnings`.
SensorStream parse_stream(std::string_view text, StreamFormat format);

/// Writes the stream with 17 significant digits so that parsing the output
/// reproduces every value exactly.
std::string serialize_stream(const SensorStream& stream, StreamFormat format);

/// Linear resampling onto the grid t0 + i/rate, i = 0..floor(span*rate).
SensorStream resample_uniform(const SensorStream& stream, double rate);

/// True if every sample spacing is within `rel_tol` of 1/nominal_rate.
bool is_uniform(const SensorStream& stream, double rel_tol = 1e-3);

/// Sampling gaps longer than `max_gap` seconds, as (start, end) pairs.
std::vector<Interval> find_gaps(const SensorStream& stream, double max_gap = 0.2);

/// Copy of `stream` with every timestamp shifted by `dt`.
SensorStream shift_time(const SensorStream& stream, double dt);

/// Lag L (seconds) such that b(t) ~ a(t - L), i.e. b is a delayed by L.
///
/// Scans every integer-sample lag in [-max_lag, max_lag] and maximizes the
/// Pearson correlation of the gyroscope magnitude over the overlapping
/// region. Ties go to the smaller |L|. Both streams must be uniform at the
/// same rate.
double sync_offset(const SensorStream& a, const SensorStream& b, double max_lag);

WearRole resolve_wear_role(WearLocation physical, TurnDirection direction);

/// Parses `start_s,end_s` rows (header optional). Output is sorted by start.
std::vector<TurnAnnotation> parse_annotations(
    std::string_view text, AnnotationSource source = AnnotationSource::reference);

std::string serialize_annotations(const std::vector<TurnAnnotation>& annotations);

}  // namespace uturn
