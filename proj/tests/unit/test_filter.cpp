#include <cmath>
#include <complex>

#include "doctest.h"
#include "uturn/common.hpp"
#include "uturn/filter.hpp"

using namespace uturn;

namespace {

double gain(const std::vector<Biquad>& sos, double f, double fs) {
  const std::complex<double> z = std::polar(1.0, -2.0 * kPi * f / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sos) h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
  return std::abs(h);
}

}  // namespace

TEST_SUITE("filter") {
  TEST_CASE("4th-order 1.5 Hz response matches scipy.signal.butter") {
    const auto sos = butterworth_lowpass(4, 1.5, 50.0);
    REQUIRE(sos.size() == 2);
    // |H| from scipy.signal.sosfreqz(butter(4, 1.5, fs=50, output='sos')).
    CHECK(gain(sos, 0.0, 50.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gain(sos, 0.5, 50.0) == doctest::Approx(0.9999253918773419).epsilon(1e-12));
    CHECK(gain(sos, 1.5, 50.0) == doctest::Approx(0.7071067811865502).epsilon(1e-12));
    CHECK(gain(sos, 5.0, 50.0) == doctest::Approx(0.007163470508477529).epsilon(1e-10));
  }

  TEST_CASE("filtfilt matches scipy.signal.sosfiltfilt") {
    std::vector<double> x(60);
    for (int i = 0; i < 60; ++i) x[i] = std::sin(0.3 * i) + 0.5 * std::cos(1.1 * i);
    const auto y = filtfilt(butterworth_lowpass(4, 1.5, 50.0), x);
    REQUIRE(y.size() == 60);
    CHECK(y[0] == doctest::Approx(0.38210426859059277).epsilon(1e-10));
    CHECK(y[7] == doctest::Approx(0.10009101556960336).epsilon(1e-10));
    CHECK(y[30] == doctest::Approx(0.014784661304391674).epsilon(1e-9));
    CHECK(y[59] == doctest::Approx(-0.7540179466607311).epsilon(1e-10));
  }

  TEST_CASE("constant input is preserved") {
    const std::vector<double> x(200, 3.25);
    for (double v : lowpass_zero_phase(x, 0.25, 50.0)) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
  }

  TEST_CASE("zero phase: a symmetric pulse stays centred") {
    std::vector<double> x(501, 0.0);
    for (int i = 0; i < 501; ++i) x[i] = std::exp(-0.5 * std::pow((i - 250) / 20.0, 2));
    const auto y = lowpass_zero_phase(x, 1.5, 50.0);
    const auto peak = std::max_element(y.begin(), y.end()) - y.begin();
    CHECK(peak == 250);
    for (int k = 1; k < 200; ++k) CHECK(y[250 - k] == doctest::Approx(y[250 + k]).epsilon(1e-9));
  }

  TEST_CASE("invalid designs are rejected") {
    CHECK_THROWS_AS(butterworth_lowpass(3, 1.0, 50.0), InvalidArgument);
    CHECK_THROWS_AS(butterworth_lowpass(4, 25.0, 50.0), InvalidArgument);
    CHECK_THROWS_AS(butterworth_lowpass(4, 0.0, 50.0), InvalidArgument);
  }
}
