#include "uturn/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "uturn/common.hpp"

namespace uturn {

namespace {

struct SectionState {
  double z1 = 0.0;
  double z2 = 0.0;
};

// Transposed direct form II.
inline double step(const Biquad& s, SectionState& st, double x) {
  const double y = s.b0 * x + st.z1;
  st.z1 = s.b1 * x - s.a1 * y + st.z2;
  st.z2 = s.b2 * x - s.a2 * y;
  return y;
}

// Section states that hold the cascade at steady state for constant input x0.
std::vector<SectionState> steady_state(std::span<const Biquad> sections, double x0) {
  std::vector<SectionState> states(sections.size());
  double x = x0;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const auto& s = sections[i];
    const double y = x * (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    states[i].z2 = s.b2 * x - s.a2 * y;
    states[i].z1 = y - s.b0 * x;
    x = y;
  }
  return states;
}

void run_pass(std::span<const Biquad> sections, std::vector<double>& signal) {
  auto states = steady_state(sections, signal.front());
  for (double& v : signal) {
    double x = v;
    for (std::size_t i = 0; i < sections.size(); ++i) x = step(sections[i], states[i], x);
    v = x;
  }
}

}  // namespace

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double sample_rate) {
  if (order <= 0 || order % 2 != 0) {
    throw InvalidArgument("Butterworth order must be a positive even number");
  }
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0)) {
    throw InvalidArgument("cutoff must lie strictly between 0 and the Nyquist frequency");
  }
  const double k = 2.0 * sample_rate;
  const double wc = k * std::tan(kPi * cutoff_hz / sample_rate);
  std::vector<Biquad> sections;
  sections.reserve(static_cast<std::size_t>(order / 2));
  for (int p = 0; p < order / 2; ++p) {
    // Analog prototype pole pair at angle theta from the negative real axis.
    const double theta = kPi * (2.0 * p + 1.0) / (2.0 * order);
    const double damping = 2.0 * std::cos(theta) * wc;  // -2 Re(pole) * wc
    const double a0 = k * k + damping * k + wc * wc;
    Biquad s;
    s.b0 = wc * wc / a0;
    s.b1 = 2.0 * wc * wc / a0;
    s.b2 = wc * wc / a0;
    s.a1 = (2.0 * wc * wc - 2.0 * k * k) / a0;
    s.a2 = (k * k - damping * k + wc * wc) / a0;
    sections.push_back(s);
  }
  return sections;
}

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  if (n == 1) return {x[0]};
  const std::size_t pad = std::min(n - 1, 3 * (2 * sections.size() + 1));

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_pass(sections, ext);
  std::reverse(ext.begin(), ext.end());
  run_pass(sections, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> lowpass_zero_phase(std::span<const double> x, double cutoff_hz,
                                       double sample_rate, int order) {
  const auto sections = butterworth_lowpass(order, cutoff_hz, sample_rate);
  return filtfilt(sections, x);
}

}  // namespace uturn
