#pragma once

#include <cstdint>
#include <Eigen/Dense>

#include "rydmis/constants.hpp"
#include "rydmis/graph.hpp"

namespace rydmis {

enum class BasisKind { Full, Subspace };
enum class DriveParam { Omega, Delta };

// Dense Hermitian operator tagged with the basis it lives in.
struct OperatorMatrix {
  Eigen::MatrixXcd m;
  BasisKind basis = BasisKind::Full;
  int n_sites = 0;                 // Full basis: dim == 2^n_sites
  std::uint64_t projector_id = 0;  // Subspace basis: owning projector
  bool hermitian = false;

  Eigen::Index dim() const { return m.rows(); }
};

// Dense desk-scale cap: exact eigendecomposition is the workhorse.
inline constexpr int kMaxSites = 14;

// Per-instance lookup tables over the 2^n configuration basis.
//   vdiag[b] = sum_{i>j} C0 / |r_i - r_j|^6  b_i b_j   (all pairs, 1/r^6 tail)
//   pop[b]   = popcount(b)
struct InstanceTables {
  int n = 0;
  Eigen::VectorXd vdiag;
  Eigen::VectorXd pop;
  Eigen::Index dim() const { return vdiag.size(); }
};

InstanceTables build_tables(const GraphInstance& g, double c0 = kC0);

// H0 = sum_{i>j} C0/r^6 n_i n_j + Omega sum_i sigma_x^i - Delta sum_i n_i.
OperatorMatrix build_hamiltonian(const GraphInstance& g, double omega,
                                 double delta);

// dH0/dOmega = sum_i sigma_x^i;  dH0/dDelta = -sum_i n_i.
OperatorMatrix d_hamiltonian(const GraphInstance& g, DriveParam which);

// Fast internal forms (real symmetric; H is real in this basis).
Eigen::MatrixXd dense_h(const InstanceTables& tab, double omega, double delta);

// out = H(omega, delta) * in, O(n 2^n).
void apply_h(const InstanceTables& tab, double omega, double delta,
             const Eigen::VectorXcd& in, Eigen::VectorXcd& out);

// out = (sum_i sigma_x^i) * in
void apply_sigma_x_sum(int n, const Eigen::VectorXcd& in, Eigen::VectorXcd& out);

// out = -(number operator sum) * in
void apply_minus_number_sum(const InstanceTables& tab,
                            const Eigen::VectorXcd& in, Eigen::VectorXcd& out);

}  // namespace rydmis
