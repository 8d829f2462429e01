#include "rydmis/hilbert.hpp"

#include <bit>
#include <cmath>

#include "rydmis/errors.hpp"

namespace rydmis {

namespace {

void check_cap(int n) {
  if (n > kMaxSites) throw spec_error("dimension cap exceeded (n_sites > 14)");
}

}  // namespace

InstanceTables build_tables(const GraphInstance& g, double c0) {
  check_cap(g.n_sites);
  const int n = g.n_sites;
  const Eigen::Index dim = Eigen::Index{1} << n;

  // Pairwise interaction strengths, full 1/r^6 tail over all pairs.
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = g.coords_um[i][0] - g.coords_um[j][0];
      const double dy = g.coords_um[i][1] - g.coords_um[j][1];
      const double r2 = dx * dx + dy * dy;
      if (r2 <= 0.0) throw spec_error("coincident coordinates in 1/r^6");
      v(i, j) = v(j, i) = c0 / (r2 * r2 * r2);
    }
  }

  InstanceTables tab;
  tab.n = n;
  tab.vdiag = Eigen::VectorXd::Zero(dim);
  tab.pop = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    tab.pop[b] = std::popcount(static_cast<std::uint64_t>(b));
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!(b >> i & 1)) continue;
      for (int j = i + 1; j < n; ++j)
        if (b >> j & 1) e += v(i, j);
    }
    tab.vdiag[b] = e;
  }
  return tab;
}

Eigen::MatrixXd dense_h(const InstanceTables& tab, double omega, double delta) {
  const Eigen::Index dim = tab.dim();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    h(b, b) = tab.vdiag[b] - delta * tab.pop[b];
    for (int i = 0; i < tab.n; ++i) h(b ^ (Eigen::Index{1} << i), b) += omega;
  }
  return h;
}

OperatorMatrix build_hamiltonian(const GraphInstance& g, double omega,
                                 double delta) {
  const InstanceTables tab = build_tables(g);
  OperatorMatrix op;
  op.m = dense_h(tab, omega, delta).cast<std::complex<double>>();
  op.basis = BasisKind::Full;
  op.n_sites = g.n_sites;
  op.hermitian = true;
  return op;
}

OperatorMatrix d_hamiltonian(const GraphInstance& g, DriveParam which) {
  check_cap(g.n_sites);
  const int n = g.n_sites;
  const Eigen::Index dim = Eigen::Index{1} << n;
  OperatorMatrix op;
  op.m = Eigen::MatrixXcd::Zero(dim, dim);
  op.basis = BasisKind::Full;
  op.n_sites = n;
  op.hermitian = true;
  if (which == DriveParam::Omega) {
    for (Eigen::Index b = 0; b < dim; ++b)
      for (int i = 0; i < n; ++i) op.m(b ^ (Eigen::Index{1} << i), b) += 1.0;
  } else {
    for (Eigen::Index b = 0; b < dim; ++b)
      op.m(b, b) = -static_cast<double>(std::popcount(static_cast<std::uint64_t>(b)));
  }
  return op;
}

void apply_h(const InstanceTables& tab, double omega, double delta,
             const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
  const Eigen::Index dim = tab.dim();
  out.resize(dim);
  for (Eigen::Index b = 0; b < dim; ++b)
    out[b] = (tab.vdiag[b] - delta * tab.pop[b]) * in[b];
  if (omega != 0.0) {
    for (int i = 0; i < tab.n; ++i) {
      const Eigen::Index bit = Eigen::Index{1} << i;
      for (Eigen::Index b = 0; b < dim; ++b) out[b] += omega * in[b ^ bit];
    }
  }
}

void apply_sigma_x_sum(int n, const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
  const Eigen::Index dim = in.size();
  out.setZero(dim);
  for (int i = 0; i < n; ++i) {
    const Eigen::Index bit = Eigen::Index{1} << i;
    for (Eigen::Index b = 0; b < dim; ++b) out[b] += in[b ^ bit];
  }
}

void apply_minus_number_sum(const InstanceTables& tab,
                            const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
  out = (-tab.pop.array()).cast<std::complex<double>>() * in.array();
}

}  // namespace rydmis
