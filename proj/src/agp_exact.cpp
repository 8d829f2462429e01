#include "rydmis/agp_exact.hpp"

#include <cmath>
#include <complex>

#include <lapacke.h>

#include "rydmis/errors.hpp"

namespace rydmis {

EigenDecomposition eig_sym(const Eigen::MatrixXd& h) {
  EigenDecomposition ed;
  ed.vectors = h;
  ed.energies.resize(h.rows());
  const auto n = static_cast<lapack_int>(h.rows());
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, ed.vectors.data(), n,
                     ed.energies.data());
  if (info != 0) throw numeric_error("dsyevd failed, info=" + std::to_string(info));
  return ed;
}

namespace {

void check_hermitian(const OperatorMatrix& op, const char* what) {
  const double scale = op.m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  const double dev = (op.m - op.m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > 1e-10 * scale)
    throw spec_error(std::string(what) + ": matrix is not Hermitian");
}

bool is_real(const Eigen::MatrixXcd& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  return m.imag().cwiseAbs().maxCoeff() <= 1e-14 * std::max(scale, 1.0);
}

}  // namespace

OperatorMatrix exact_agp(const OperatorMatrix& h, const OperatorMatrix& dh,
                         double gap_tol) {
  if (h.basis != dh.basis || h.dim() != dh.dim() ||
      (h.basis == BasisKind::Subspace && h.projector_id != dh.projector_id))
    throw spec_error("exact_agp: h and dh must share a basis");
  check_hermitian(h, "exact_agp(h)");
  check_hermitian(dh, "exact_agp(dh)");

  const Eigen::Index dim = h.dim();
  OperatorMatrix out;
  out.basis = h.basis;
  out.n_sites = h.n_sites;
  out.projector_id = h.projector_id;
  out.hermitian = true;

  if (is_real(h.m) && is_real(dh.m)) {
    const EigenDecomposition ed = eig_sym(h.m.real());
    if (gap_tol < 0.0)
      gap_tol = kDefaultGapTolFrac *
                (ed.energies[dim - 1] - ed.energies[0]);
    const Eigen::MatrixXd dht =
        ed.vectors.transpose() * dh.m.real() * ed.vectors;
    // K is real antisymmetric; A = i K.
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index n = 0; n < dim; ++n) {
      for (Eigen::Index m = 0; m < dim; ++m) {
        const double gap = ed.energies[n] - ed.energies[m];
        if (std::abs(gap) > gap_tol) k(m, n) = dht(m, n) / gap;
      }
    }
    const Eigen::MatrixXd k_lab = ed.vectors * k * ed.vectors.transpose();
    out.m = std::complex<double>(0.0, 1.0) * k_lab.cast<std::complex<double>>();
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.m);
  if (es.info() != Eigen::Success)
    throw numeric_error("complex Hermitian eigendecomposition failed");
  const Eigen::VectorXd& e = es.eigenvalues();
  if (gap_tol < 0.0) gap_tol = kDefaultGapTolFrac * (e[dim - 1] - e[0]);
  const Eigen::MatrixXcd dht = es.eigenvectors().adjoint() * dh.m * es.eigenvectors();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  const std::complex<double> ii(0.0, 1.0);
  for (Eigen::Index n = 0; n < dim; ++n) {
    for (Eigen::Index m = 0; m < dim; ++m) {
      const double gap = e[n] - e[m];
      if (std::abs(gap) > gap_tol) a(m, n) = ii * dht(m, n) / gap;
    }
  }
  out.m = es.eigenvectors() * a * es.eigenvectors().adjoint();
  return out;
}

std::pair<OperatorMatrix, OperatorMatrix> cd_terms_exact(
    const GraphInstance& g, const AnnealSchedule& schedule, double t,
    const SubspaceProjector& space, double gap_tol) {
  if (t < 0.0 || t > schedule.t_total_us)
    throw spec_error("cd_terms_exact: t outside [0, T]");
  const OperatorMatrix h = build_hamiltonian(g, schedule.omega(t), schedule.delta(t));
  const OperatorMatrix dh_omega = d_hamiltonian(g, DriveParam::Omega);
  const OperatorMatrix dh_delta = d_hamiltonian(g, DriveParam::Delta);

  if (space.kind == ExclusionKind::Full) {
    return {exact_agp(h, dh_omega, gap_tol), exact_agp(h, dh_delta, gap_tol)};
  }
  const OperatorMatrix h_sub = restrict_to(h, space);
  const OperatorMatrix a_omega =
      exact_agp(h_sub, restrict_to(dh_omega, space), gap_tol);
  const OperatorMatrix a_delta =
      exact_agp(h_sub, restrict_to(dh_delta, space), gap_tol);
  return {embed(a_omega, space), embed(a_delta, space)};
}

}  // namespace rydmis
