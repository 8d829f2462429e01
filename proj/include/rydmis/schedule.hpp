#pragma once

#include <string>
#include <vector>

#include "rydmis/constants.hpp"

namespace rydmis {

// Annealing waveforms ("cosine-ramp-v1"):
//   Omega: cosine half-ramp 0 -> omega_max over [0, 0.15 T], hold,
//          cosine half-ramp -> 0 over [0.85 T, T].  C^1 everywhere.
//   Delta: hold delta_initial over [0, 0.15 T], linear sweep to
//          delta_final over [0.15 T, 0.85 T], hold.
// Derivatives are analytic per segment.
struct AnnealSchedule {
  double t_total_us;
  double omega_max;       // rad/us, > 0
  double delta_initial;   // rad/us, < 0
  double delta_final;     // rad/us, > 0

  double omega(double t) const;
  double delta(double t) const;
  double omega_dot(double t) const;
  double delta_dot(double t) const;

  // Detuning slope inside knot interval seg (0..2); constant there. Using the
  // interval index avoids sampling the discontinuous derivative at a knot.
  double delta_dot_segment(int seg) const;

  // Integral of delta over [0, t]; the accumulated detuning phase per
  // excitation used by the rotating-frame integrator.
  double delta_integral(double t) const;

  // Breakpoints of the piecewise definition, including 0 and T.
  std::vector<double> knots() const;

  std::string to_json() const;
  static AnnealSchedule from_json(const std::string& text);
};

// Defaults: Rydberg-experiment-typical amplitudes. T is calibrated by the
// acceptance harness so the no-driving 11-atom baseline lands mid-band.
inline constexpr double kDefaultOmegaMax = kTwoPi * 4.0;
inline constexpr double kDefaultDeltaInitial = -kTwoPi * 13.0;
inline constexpr double kDefaultDeltaFinal = kTwoPi * 11.0;
inline constexpr double kDefaultTTotalUs = 1.0;

AnnealSchedule default_schedule(double t_total_us = kDefaultTTotalUs,
                                double omega_max = kDefaultOmegaMax,
                                double delta_initial = kDefaultDeltaInitial,
                                double delta_final = kDefaultDeltaFinal);

}  // namespace rydmis
