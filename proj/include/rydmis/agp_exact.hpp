#pragma once

#include <utility>

#include <Eigen/Dense>

#include "rydmis/hilbert.hpp"
#include "rydmis/schedule.hpp"
#include "rydmis/subspace.hpp"

namespace rydmis {

struct EigenDecomposition {
  Eigen::VectorXd energies;  // ascending
  Eigen::MatrixXd vectors;   // columns = eigenvectors (orthonormal)
};

// Real-symmetric eigendecomposition (LAPACK dsyevd).
EigenDecomposition eig_sym(const Eigen::MatrixXd& h);

// Fraction of the spectral range below which a gap counts as degenerate.
inline constexpr double kDefaultGapTolFrac = 1e-8;

// Exact adiabatic gauge potential: in the eigenbasis of h,
//   A~_mn = i <m|dh|n> / (E_n - E_m)   for |E_n - E_m| > gap_tol,
// zero otherwise (including the diagonal; gauge choice), rotated back to
// the computational basis. gap_tol < 0 selects 1e-8 * spectral range.
OperatorMatrix exact_agp(const OperatorMatrix& h, const OperatorMatrix& dh,
                         double gap_tol = -1.0);

// Gauge potentials for both drive parameters of H_CD = H0 + Omega_dot A_Omega
// + Delta_dot A_Delta at time t. For a non-Full projector, H and each dH are
// restricted to the subspace, the AGP is computed there and embedded back.
// Returned operators are always in the full basis.
std::pair<OperatorMatrix, OperatorMatrix> cd_terms_exact(
    const GraphInstance& g, const AnnealSchedule& schedule, double t,
    const SubspaceProjector& space, double gap_tol = -1.0);

}  // namespace rydmis
