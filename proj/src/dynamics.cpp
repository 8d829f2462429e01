#include "rydmis/dynamics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "rydmis/errors.hpp"
#include "rydmis/hilbert.hpp"

namespace rydmis {

namespace {

// Dormand-Prince 5(4) tableau (FSAL).
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0,
                 kE4 = 71.0 / 1920.0, kE5 = -17253.0 / 339200.0,
                 kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0,
                 kC5 = 8.0 / 9.0;

// The working state is y = e^{i theta(t)} psi with the diagonal phase
// theta_b(t) = vdiag_b t - pop_b Phi(t), Phi(t) = integral of delta. The
// diagonal of H (static interactions and the detuning term) then drops out
// of the equation of motion analytically, so the step size is set by the
// drive and counterdiabatic scales instead of the far larger interaction
// energies of barely populated blockade-violating configurations. All
// protocols keep seeing the lab-frame state; amplitude magnitudes (norms,
// fidelities) are frame-invariant and the final state is rotated back.
struct Rhs {
  const InstanceTables& tab;
  const AnnealSchedule& sched;
  DriveProtocol& protocol;
  int segment = 0;
  long evaluations = 0;
  Eigen::VectorXcd phase, psi_lab, f_lab;

  void phases(double t, Eigen::VectorXcd& ph) const {
    const double phi = sched.delta_integral(t);
    const Eigen::Index dim = tab.dim();
    ph.resize(dim);
    for (Eigen::Index b = 0; b < dim; ++b)
      ph[b] = std::polar(1.0, tab.vdiag[b] * t - tab.pop[b] * phi);
  }

  void operator()(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& f) {
    ++evaluations;
    phases(t, phase);
    psi_lab = phase.conjugate().cwiseProduct(y);
    apply_sigma_x_sum(tab.n, psi_lab, f_lab);
    f_lab *= std::complex<double>(0.0, -sched.omega(t));
    protocol.accumulate_cd(t, segment, psi_lab, f_lab);
    f = phase.cwiseProduct(f_lab);
    // Remove the component along y: equivalent to shifting the generator by
    // its expectation value, a global phase, but it keeps |f| ~ transition
    // rate instead of energy.
    const double n2 = y.squaredNorm();
    if (n2 > 0.0) f -= (y.dot(f) / n2) * y;
  }
};

}  // namespace

EvolutionResult evolve(const GraphInstance& g, const AnnealSchedule& schedule,
                       DriveProtocol& protocol, const EvolveOptions& opts) {
  if (!(opts.rtol >= 1e-12 && opts.rtol <= 1e-4))
    throw spec_error("rtol must lie in [1e-12, 1e-4]");
  const auto wall_start = std::chrono::steady_clock::now();
  const InstanceTables tab = build_tables(g);
  const Eigen::Index dim = tab.dim();

  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dim);
  y[0] = 1.0;  // no Rydberg excitation
  double max_drift = 0.0;
  long steps = 0;

  Rhs rhs{tab, schedule, protocol};
  Eigen::VectorXcd k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim),
      k7(dim), ytmp(dim), ynew(dim), err(dim);

  const std::vector<double> knots = schedule.knots();
  for (int seg = 0; seg + 1 < static_cast<int>(knots.size()); ++seg) {
    const double ta = knots[seg], tb = knots[seg + 1];
    if (!(tb > ta)) continue;
    rhs.segment = seg;
    double t = ta;
    rhs(t, y, k1);  // FSAL seed for this segment

    // Initial step from the first derivative scale.
    const double f0 = k1.norm();
    double h = std::min(tb - ta, f0 > 0.0 ? 0.05 / f0 : (tb - ta) * 0.1);

    while (t < tb) {
      if (++steps > opts.max_steps)
        throw numeric_error("integration step budget exhausted");
      h = std::min(h, tb - t);

      ytmp = y + h * (kA21 * k1);
      rhs(t + kC2 * h, ytmp, k2);
      ytmp = y + h * (kA31 * k1 + kA32 * k2);
      rhs(t + kC3 * h, ytmp, k3);
      ytmp = y + h * (kA41 * k1 + kA42 * k2 + kA43 * k3);
      rhs(t + kC4 * h, ytmp, k4);
      ytmp = y + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4);
      rhs(t + kC5 * h, ytmp, k5);
      ytmp = y + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
      rhs(t + h, ytmp, k6);
      ynew = y + h * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
      rhs(t + h, ynew, k7);
      err = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);

      const double scale = std::max(1.0, std::max(y.norm(), ynew.norm()));
      const double e = err.norm() / (opts.rtol * scale);
      if (e <= 1.0) {
        t += h;
        y.swap(ynew);
        k1.swap(k7);
        const double drift = std::abs(y.norm() - 1.0);
        max_drift = std::max(max_drift, drift);
        if (drift > 1e-6)
          throw numeric_error("state norm drifted beyond 1e-6");
        if (drift > 0.0) y /= y.norm();
        if (opts.observer) {
          rhs.phases(t, rhs.phase);
          opts.observer(StateVector{rhs.phase.conjugate().cwiseProduct(y), t});
        }
      }
      const double factor =
          e > 0.0 ? 0.9 * std::pow(e, -0.2) : 5.0;
      h *= std::clamp(factor, 0.2, 5.0);
      if (!(h > 0.0) || !std::isfinite(h))
        throw numeric_error("step size underflow");
    }
  }

  rhs.phases(schedule.t_total_us, rhs.phase);
  y = rhs.phase.conjugate().cwiseProduct(y);

  EvolutionResult res;
  res.final_state = StateVector{std::move(y), schedule.t_total_us};
  const auto [fs, d_used] =
      mis_fidelity(res.final_state.amplitudes, g, schedule);
  res.fidelity = fs;
  res.d_mis_used = d_used;
  res.protocol_descriptor = protocol.descriptor();
  res.rhs_evaluations = rhs.evaluations;
  res.max_norm_drift = max_drift;
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    wall_start)
          .count();
  return res;
}

std::pair<double, int> mis_fidelity(const Eigen::VectorXcd& psi,
                                    const GraphInstance& g,
                                    const AnnealSchedule& schedule) {
  if (schedule.omega(schedule.t_total_us) != 0.0)
    throw spec_error("mis_fidelity requires Omega(T) = 0");
  const InstanceTables tab = build_tables(g);
  const Eigen::Index dim = tab.dim();
  if (psi.size() != dim) throw spec_error("state dimension mismatch");

  const double delta_final = schedule.delta(schedule.t_total_us);
  const MisSolution mis = solve_mis_exact(g);
  std::vector<char> is_mis(dim, 0);
  for (const std::uint64_t b : mis.mis_states) is_mis[b] = 1;

  double min_non_mis = std::numeric_limits<double>::infinity();
  for (Eigen::Index b = 0; b < dim; ++b) {
    if (is_mis[b]) continue;
    min_non_mis =
        std::min(min_non_mis, tab.vdiag[b] - delta_final * tab.pop[b]);
  }

  double fs = 0.0;
  int used = 0;
  for (const std::uint64_t b : mis.mis_states) {
    const double e = tab.vdiag[b] - delta_final * tab.pop[b];
    const double tie_scale =
        std::max({std::abs(e), std::abs(min_non_mis), 1.0});
    if (e < min_non_mis && min_non_mis - e > 1e-9 * tie_scale) {
      fs += std::norm(psi[static_cast<Eigen::Index>(b)]);
      ++used;
    }
  }
  return {fs, used};
}

}  // namespace rydmis
