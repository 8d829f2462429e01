#include <cmath>

#include <doctest.h>

#include "oracles.hpp"
#include "rydmis/errors.hpp"
#include "rydmis/schedule.hpp"

using namespace rydmis;

TEST_CASE("waveform boundary and plateau values") {
  const AnnealSchedule s = default_schedule(2.0);
  CHECK(s.omega(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(s.omega(2.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(s.omega(0.3) == doctest::Approx(s.omega_max));       // end of up-ramp
  CHECK(s.omega(1.0) == doctest::Approx(s.omega_max));       // plateau
  CHECK(s.omega(1.7) == doctest::Approx(s.omega_max));       // start of down
  CHECK(s.omega(0.15) ==
        doctest::Approx(0.5 * s.omega_max));                 // half of cosine
  CHECK(s.delta(0.0) == doctest::Approx(s.delta_initial));
  CHECK(s.delta(0.2) == doctest::Approx(s.delta_initial));
  CHECK(s.delta(1.0) ==
        doctest::Approx(0.5 * (s.delta_initial + s.delta_final)));
  CHECK(s.delta(1.8) == doctest::Approx(s.delta_final));
  CHECK(s.delta(2.0) == doctest::Approx(s.delta_final));
}

TEST_CASE("derivatives match symmetric finite differences") {
  const AnnealSchedule s = default_schedule(1.3);
  for (const double t : {0.05, 0.11, 0.17, 0.4, 0.8, 1.03, 1.15, 1.24}) {
    const double od = oracle::fd([&](double x) { return s.omega(x); }, t, 1e-6);
    const double dd = oracle::fd([&](double x) { return s.delta(x); }, t, 1e-6);
    CHECK(s.omega_dot(t) == doctest::Approx(od).epsilon(1e-6));
    CHECK(s.delta_dot(t) == doctest::Approx(dd).epsilon(1e-6));
  }
}

TEST_CASE("waveforms are C1 across knots") {
  const AnnealSchedule s = default_schedule(1.0);
  for (const double k : {0.15, 0.85}) {
    const double eps = 1e-9;
    CHECK(s.omega(k - eps) == doctest::Approx(s.omega(k + eps)).epsilon(1e-6));
    CHECK(s.omega_dot(k - eps) ==
          doctest::Approx(s.omega_dot(k + eps)).epsilon(1e-4));
    CHECK(s.delta(k - eps) == doctest::Approx(s.delta(k + eps)).epsilon(1e-6));
  }
}

TEST_CASE("knots cover the three smooth segments") {
  const AnnealSchedule s = default_schedule(4.0);
  const std::vector<double> k = s.knots();
  REQUIRE(k.size() == 4);
  CHECK(k[0] == doctest::Approx(0.0));
  CHECK(k[1] == doctest::Approx(0.6));
  CHECK(k[2] == doctest::Approx(3.4));
  CHECK(k[3] == doctest::Approx(4.0));
}

TEST_CASE("per-segment detuning slope") {
  const AnnealSchedule s = default_schedule(2.0);
  CHECK(s.delta_dot_segment(0) == 0.0);
  CHECK(s.delta_dot_segment(2) == 0.0);
  const double slope = (s.delta_final - s.delta_initial) / (0.7 * 2.0);
  CHECK(s.delta_dot_segment(1) == doctest::Approx(slope));
  // Matches the pointwise derivative strictly inside the sweep.
  CHECK(s.delta_dot_segment(1) == doctest::Approx(s.delta_dot(1.0)));
  CHECK_THROWS_AS(s.delta_dot_segment(-1), spec_error);
  CHECK_THROWS_AS(s.delta_dot_segment(3), spec_error);
}

TEST_CASE("JSON round trip") {
  const AnnealSchedule s = default_schedule(0.7, 10.0, -30.0, 40.0);
  const AnnealSchedule r = AnnealSchedule::from_json(s.to_json());
  CHECK(r.t_total_us == s.t_total_us);
  CHECK(r.omega_max == s.omega_max);
  CHECK(r.delta_initial == s.delta_initial);
  CHECK(r.delta_final == s.delta_final);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(default_schedule(-1.0), spec_error);
  CHECK_THROWS_AS(default_schedule(1.0, -2.0), spec_error);
  CHECK_THROWS_AS(default_schedule(1.0, 2.0, 5.0, 10.0), spec_error);
  CHECK_THROWS_AS(default_schedule(1.0, 2.0, -5.0, -1.0), spec_error);
}
