#pragma once

#include <functional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "rydmis/graph.hpp"
#include "rydmis/protocol.hpp"
#include "rydmis/schedule.hpp"

namespace rydmis {

struct StateVector {
  Eigen::VectorXcd amplitudes;  // dim 2^n, configuration basis
  double t = 0.0;               // us
};

struct EvolutionResult {
  StateVector final_state;
  double fidelity = 0.0;
  int d_mis_used = 0;
  std::string protocol_descriptor;
  double wall_time_s = 0.0;
  long rhs_evaluations = 0;
  double max_norm_drift = 0.0;
};

struct EvolveOptions {
  double rtol = 1e-8;          // local error tolerance, in [1e-12, 1e-4]
  long max_steps = 20000000;   // attempted steps across the whole evolution
  std::function<void(const StateVector&)> observer;  // after accepted steps
};

// Integrates i d/dt psi = [H0(t) + Omega_dot A_Omega + Delta_dot A_Delta] psi
// from the zero-excitation configuration at t = 0 to t = T with an adaptive
// Dormand-Prince 5(4) scheme, one smooth schedule segment at a time. The
// right-hand side projects out the component along psi — equivalent to
// shifting H by <psi|H|psi>, a pure global phase — so the step size tracks
// transitions rather than overall phase rotation. Norm drift beyond 1e-6 at
// an accepted step raises numeric_error; smaller drift is renormalized and
// the maximum is reported.
EvolutionResult evolve(const GraphInstance& g, const AnnealSchedule& schedule,
                       DriveProtocol& protocol, const EvolveOptions& opts = {});

// F_s = sum of |<b|psi>|^2 over MIS bitmasks whose diagonal energy at t = T,
// E(b) = sum_{i>j} V_ij b_i b_j - Delta(T) popcount(b), lies strictly below
// every non-MIS energy; a tie within 1e-9 relative excludes the MIS state.
// Requires Omega(T) = 0 so the final Hamiltonian is diagonal.
std::pair<double, int> mis_fidelity(const Eigen::VectorXcd& psi,
                                    const GraphInstance& g,
                                    const AnnealSchedule& schedule);

}  // namespace rydmis
