#pragma once

#include <span>
#include <vector>

namespace uturn {

/// One second-order section, normalized so that a0 == 1.
struct Biquad {
  double b0, b1, b2;
  double a1, a2;
};

/// Digital Butterworth low-pass as cascaded biquads (bilinear transform with
/// prewarping). `order` must be even and positive; `cutoff_hz` must lie in
/// (0, sample_rate/2).
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double sample_rate);

/// Zero-phase forward-backward filtering.
///
/// The signal is extended at both ends by odd reflection and each pass is
/// started from the steady-state section state, so a constant input yields
/// the same constant output.
std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x);

/// Convenience: 4th-order Butterworth zero-phase low-pass.
std::vector<double> lowpass_zero_phase(std::span<const double> x, double cutoff_hz,
                                       double sample_rate, int order = 4);

}  // namespace uturn
