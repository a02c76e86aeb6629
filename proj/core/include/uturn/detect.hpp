#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uturn/common.hpp"
#include "uturn/ingest.hpp"

namespace uturn {

/// Turn detector parameters. Rates in rad/s, angles in rad, times in s.
struct DetectorConfig {
  double rate_threshold = 20.0 * kDegToRad;  // trigger on |omega_v|
  double end_threshold = 5.0 * kDegToRad;    // boundary hysteresis
  double min_angle = 90.0 * kDegToRad;
  double min_duration = 0.5;
  double max_duration = 10.0;
  double merge_gap = 0.2;
  double filter_cutoff = 1.5;   // Hz, yaw-rate low-pass
  double gravity_cutoff = 0.25; // Hz, accelerometer low-pass for gravity

  /// Throws InvalidArgument when the parameters are inconsistent.
  void validate() const;
  /// Also checks the filter cutoffs against the Nyquist frequency.
  void validate(double sample_rate) const;

  std::map<std::string, std::string> to_key_values() const;
  /// Overrides the fields named in `kv`; unknown keys throw InvalidArgument.
  static DetectorConfig from_key_values(const std::map<std::string, std::string>& kv,
                                        DetectorConfig base);
  static DetectorConfig from_key_values(const std::map<std::string, std::string>& kv);
};

struct Turn {
  double start_s = 0.0;
  double end_s = 0.0;
  double angle = 0.0;  // signed, + = left (counter-clockwise seen from above)
  double peak_rate = 0.0;  // max |omega_v| inside the turn

  double duration() const { return end_s - start_s; }
  TurnDirection direction() const {
    return angle >= 0.0 ? TurnDirection::left : TurnDirection::right;
  }
};

/// Low-pass filtered rotation rate about the gravity axis on a uniform grid.
struct YawRateSeries {
  std::vector<double> t;
  std::vector<double> omega_v;
  /// Same projection before smoothing; optional (empty when unknown).
  std::vector<double> omega_raw;
  double rate = kDefaultRate;
};

/// Projects the gyroscope onto the gravity direction estimated from the
/// low-passed accelerometer, then low-passes the result (zero phase).
/// Throws QualityError when the mean accelerometer magnitude over any
/// one-second window is below 1 m/s^2, InvalidArgument on non-uniform input.
YawRateSeries estimate_vertical_rate(const SensorStream& stream,
                                     const DetectorConfig& config = {});

/// Segments turns from a yaw-rate signal sample by sample.
///
/// A region is a maximal run of samples with the same sign and
/// |omega_v| >= end_threshold. Consecutive same-sign regions separated by
/// less than merge_gap form a group. A group yields a turn when one of its
/// regions contains a core sample (|omega_v| >= rate_threshold). The turn
/// spans from the first to the last core-bearing region of the group, so
/// low-rate fragments at the edges are trimmed while fragments bridging two
/// core regions are kept. The turn is accepted when its integrated angle
/// and duration pass the limits and the whole group is no longer than
/// max_duration. Groups do not depend on rate_threshold, which makes the
/// turn count non-increasing in it. State is constant-size.
class TurnSegmenter {
 public:
  explicit TurnSegmenter(const DetectorConfig& config);

  /// Feeds the next sample; appends any finalized turn to `out`.
  void push(double t, double omega_v, std::vector<Turn>& out);
  /// Ends the stream; appends any turn still pending to `out`.
  void flush(std::vector<Turn>& out);

 private:
  struct Region {
    int sign = 0;
    double start_t = 0.0;
    double start_integral = 0.0;
    double end_t = 0.0;
    double end_integral = 0.0;
    bool has_core = false;
    double peak = 0.0;
  };
  struct Group {
    int sign = 0;
    double start_t = 0.0;
    double end_t = 0.0;
    std::optional<Region> core;  // first core start .. last core end
    double peak = 0.0;
  };

  void close_region();
  void finalize_group(std::vector<Turn>& out);

  DetectorConfig config_;
  bool have_prev_ = false;
  double prev_t_ = 0.0;
  double prev_omega_ = 0.0;
  double integral_ = 0.0;
  std::optional<Region> region_;
  std::optional<Group> group_;
};

/// Turn length on the unsmoothed rate: first to last sample inside the turn
/// whose rate, signed by the turn direction, reaches end_threshold. Smoothing
/// stretches brief spins to the filter's impulse-response width, so the
/// minimum-duration gate is checked on this length as well.
double unsmoothed_duration(const Turn& turn, const YawRateSeries& series,
                           const DetectorConfig& config);

/// Full pipeline: resample if needed, estimate the vertical rate, segment.
/// Output is time-sorted and non-overlapping; an empty result is valid.
std::vector<Turn> detect_turns(const SensorStream& stream, const DetectorConfig& config = {});

/// Segmentation only, on an already computed yaw-rate series.
std::vector<Turn> segment_turns(const YawRateSeries& series, const DetectorConfig& config);

std::vector<TurnAnnotation> to_annotations(const std::vector<Turn>& turns);

/// Extended turn listing with angle, direction and peak rate.
std::string turns_to_json(const std::vector<Turn>& turns);

}  // namespace uturn
