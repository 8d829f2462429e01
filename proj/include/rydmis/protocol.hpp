#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rydmis/graph.hpp"
#include "rydmis/hilbert.hpp"
#include "rydmis/krylov.hpp"
#include "rydmis/schedule.hpp"
#include "rydmis/subspace.hpp"

namespace rydmis {

enum class ProtocolKind {
  None,
  ExactFull,
  ExactSubNN,
  ExactSubNNN,
  KrylovFull,
  KrylovSubNN,
  KrylovSubNNN,
  KrylovCostNN,
  KrylovCostNNN,
};

const char* protocol_name(ProtocolKind kind);  // "EXACT_SUB_NN", ...
ProtocolKind protocol_from_name(const std::string& name);

struct ProtocolOptions {
  int l = 1;                     // Krylov expansion order
  double epsilon = -1.0;         // subspace-cost regularizer; < 0 = default
  double gap_tol = -1.0;         // exact-AGP degeneracy cut; < 0 = default
  int grid_dim_threshold = 600;  // full-space Krylov: tables above this dim
  int grid_nodes = 17;           // Chebyshev nodes for the detuning-sweep
                                 // segment; ramp segments get 3x - 2
};

// Supplies the counterdiabatic part of the equation of motion. Evolution runs
// in the full 2^n basis and calls accumulate_cd at every integrator stage:
//   out += -i [Omega_dot A_Omega(t) + Delta_dot A_Delta(t)] psi
// with drive derivatives taken one-sidedly inside the given schedule segment
// so the right-hand side stays smooth over each integration interval.
// Instances hold mutable scratch and are not shareable across threads.
class DriveProtocol {
 public:
  virtual ~DriveProtocol() = default;
  virtual std::string descriptor() const = 0;
  virtual void accumulate_cd(double t, int segment, const Eigen::VectorXcd& psi,
                             Eigen::VectorXcd& out) = 0;
};

// Precomputed variational-coefficient tables for full-space Krylov protocols
// at dimensions where a per-stage eigendecomposition is prohibitive. The
// polynomial coefficients of A^(l) are smooth in t (near-degenerate gaps drop
// out of the least-squares weights), so they are sampled on Chebyshev nodes
// per schedule segment and interpolated; the operator action at a stage time
// is still evaluated exactly from H(t) via nested-commutator matvecs. One
// grid serves several orders and cost variants from shared spectral data.
class AlphaGrid {
 public:
  struct Eval {
    Eigen::VectorXd cheb;   // shifted-Chebyshev coefficients u_j, size l
    double range = 0.0;     // spectral range R(t)
    double center = 0.0;    // spectral midpoint (roundoff control only)
    bool active = false;    // false when this drive is frozen in the segment
  };
  Eval eval(KrylovVariant variant, int l, DriveParam param, int segment,
            double t) const;
  ~AlphaGrid();

  struct Impl;

 private:
  AlphaGrid();
  std::unique_ptr<Impl> impl_;
  friend std::shared_ptr<const AlphaGrid> build_alpha_grid(
      const GraphInstance&, const AnnealSchedule&,
      const std::vector<KrylovVariant>&, const std::vector<int>&, double, int);
};

std::shared_ptr<const AlphaGrid> build_alpha_grid(
    const GraphInstance& g, const AnnealSchedule& schedule,
    const std::vector<KrylovVariant>& variants, const std::vector<int>& orders,
    double epsilon = -1.0, int nodes_per_segment = 17);

// Factory. A prebuilt grid may be shared by all Krylov protocols on the same
// (instance, schedule); when omitted, full-space Krylov protocols above the
// dimension threshold build a private one.
std::unique_ptr<DriveProtocol> make_protocol(
    ProtocolKind kind, const GraphInstance& g, const AnnealSchedule& schedule,
    const ProtocolOptions& opts = {},
    std::shared_ptr<const AlphaGrid> grid = nullptr);

}  // namespace rydmis
