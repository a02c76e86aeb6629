#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uturn/common.hpp"
#include "uturn/ingest.hpp"

namespace uturn {

/// One synthetic test: walking bouts alternating with U-turns.
///
/// The session starts and ends with a walking bout. Turn i is a
/// raised-cosine yaw-rate pulse of duration d_i whose integral is exactly
/// pi; turn signs alternate starting with a left turn. During walking the
/// yaw rate carries a tapered pelvis oscillation and an optional slow veer
/// (`heading_drift`, sign alternating per bout).
struct SessionSpec {
  std::size_t n_turns = 12;
  /// Single value applied to every turn, or one value per turn.
  std::vector<double> turn_durations{2.0};
  double walk_bout = 5.0;                      // s
  double pelvis_osc_amp = 15.0 * kDegToRad;    // rad/s
  double pelvis_osc_freq = 1.0;                // Hz
  double heading_drift = 0.0;                  // rad/s
  double gyro_noise_sd = 0.0;                  // rad/s per axis
  double accel_noise_sd = 0.0;                 // m/s^2 per axis
  double tilt_deg = 0.0;                       // static tilt about the phone x axis
  double rate = kDefaultRate;
  std::uint64_t seed = 0;

  std::string session_id = "synthetic";
  std::string participant_id;
  std::optional<int> day;
  WearLocation wear_location = WearLocation::belt_front;
  Setting setting = Setting::unsupervised;

  void validate() const;
  double turn_duration(std::size_t i) const;

  std::map<std::string, std::string> to_key_values() const;
  static SessionSpec from_key_values(const std::map<std::string, std::string>& kv);
};

inline constexpr double kGravity = 9.81;

/// Closed-form noise-free yaw-rate profile of a session.
class SessionProfile {
 public:
  explicit SessionProfile(const SessionSpec& spec);

  double total_duration() const { return total_; }
  /// Vertical rotation rate at time t (rad/s), noise free.
  double yaw_rate(double t) const;
  /// Exact turn supports.
  const std::vector<TurnAnnotation>& truth() const { return truth_; }
  const std::vector<int>& turn_signs() const { return signs_; }

 private:
  struct Bout {
    double start, end;
    int drift_sign;
  };
  SessionSpec spec_;
  std::vector<TurnAnnotation> truth_;
  std::vector<int> signs_;
  std::vector<Bout> bouts_;
  double total_ = 0.0;
};

struct SyntheticSession {
  SensorStream stream;
  std::vector<TurnAnnotation> truth;
};

/// Samples the profile at t = i / rate. Gyro = yaw rate along the body-frame
/// up axis plus noise; accel = gravity along the same axis plus noise.
/// Pure function of the SessionSpec, seed included.
SyntheticSession generate_session(const SessionSpec& spec);

/// Disability level of a synthetic cohort.
struct DisabilityLevel {
  std::string name;
  double weight = 1.0;               // share of participants
  double turn_duration_mean = 2.4;   // s, typical turn duration at this level
  double edss_lo = 0.0;              // EDSS-proxy range, drawn uniformly
  double edss_hi = 3.5;
  double fall_prob = 0.2;
  double aid_prob = 0.1;
};

struct CohortSpec {
  std::size_t n_participants = 91;
  std::vector<DisabilityLevel> levels;
  /// test_count_pmf[c] = probability of completing c tests; c <= n_days.
  std::vector<double> test_count_pmf;
  std::size_t n_days = 14;
  double between_sd_log = 0.15;   // participant deviation of log duration
  double within_sd_log = 0.12;    // test-to-test deviation of log duration
  double per_turn_sd_log = 0.10;  // turn-to-turn deviation of log duration
  std::size_t turns_per_test = 8;
  double walk_bout = 4.0;
  double pelvis_osc_amp = 15.0 * kDegToRad;
  double pelvis_osc_freq = 1.0;
  double gyro_noise_sd = 0.0;
  double accel_noise_sd = 0.0;
  double rate = kDefaultRate;
  std::uint64_t seed = 0;

  void validate() const;
  double mean_test_count() const;

  /// Three graded levels (EDSS 0-3.5, 4-5.5, 6-6.5) and a 14-day
  /// availability distribution with mean 11.6 tests.
  static CohortSpec graded_default();

  std::map<std::string, std::string> to_key_values() const;
  /// Reads scalar keys; levels use `level.<i>.<field>` keys and the pmf uses
  /// a comma-separated `test_count_pmf`.
  static CohortSpec from_key_values(const std::map<std::string, std::string>& kv);
};

struct ParticipantPlan {
  std::string participant_id;
  std::size_t level = 0;
  double edss_proxy = 0.0;
  bool fall = false;
  bool aid = false;
  double typical_duration = 0.0;
  std::vector<SessionSpec> sessions;  // one per completed day, chronological
};

struct Cohort {
  std::vector<ParticipantPlan> participants;
  std::vector<DisabilityLevel> levels;
};

/// Fully seeded cohort plan; sessions are materialized on demand with
/// generate_session.
Cohort generate_cohort(const CohortSpec& spec);

/// `participant_id,edss_proxy,fall,aid,level`
std::string covariates_to_csv(const Cohort& cohort);

}  // namespace uturn
