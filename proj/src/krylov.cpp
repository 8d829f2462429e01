#include "rydmis/krylov.hpp"

#include <cmath>
#include <complex>

#include "rydmis/errors.hpp"

namespace rydmis {

namespace {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

Eigen::MatrixXcd comm(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return a * b - b * a;
}

// Tr(A^dag B)
std::complex<double> inner_full(const Eigen::MatrixXcd& a,
                                const Eigen::MatrixXcd& b) {
  return (a.conjugate().cwiseProduct(b)).sum();
}

// Tr(A^dag P B P): elementwise over the kept x kept block.
std::complex<double> inner_masked(const Eigen::MatrixXcd& a,
                                  const Eigen::MatrixXcd& b,
                                  const SubspaceProjector& p) {
  std::complex<double> s = 0.0;
  for (const auto col : p.kept)
    for (const auto row : p.kept)
      s += std::conj(a(row, col)) * b(row, col);
  return s;
}

}  // namespace

KrylovBasis build_krylov_basis(const OperatorMatrix& h,
                               const OperatorMatrix& dh, int l) {
  if (l < 1) throw spec_error("build_krylov_basis: l must be >= 1");
  if (h.basis != dh.basis || h.dim() != dh.dim() ||
      (h.basis == BasisKind::Subspace && h.projector_id != dh.projector_id))
    throw spec_error("build_krylov_basis: h and dh must share a basis");
  KrylovBasis kb;
  kb.order_l = l;
  kb.basis = h.basis;
  kb.n_sites = h.n_sites;
  kb.projector_id = h.projector_id;
  kb.ops_odd.reserve(l);
  kb.ops_even.reserve(l);
  kb.ops_odd.push_back(comm(h.m, dh.m));
  kb.ops_even.push_back(comm(h.m, kb.ops_odd.back()));
  for (int k = 1; k < l; ++k) {
    kb.ops_odd.push_back(comm(h.m, kb.ops_even.back()));
    kb.ops_even.push_back(comm(h.m, kb.ops_odd.back()));
  }
  return kb;
}

double default_epsilon(const SubspaceProjector& p) {
  const double dim = static_cast<double>(Eigen::Index{1} << p.n_sites);
  return 1e-6 * p.d_is() / dim;
}

VariationalSolution solve_variational(const KrylovBasis& basis,
                                      const OperatorMatrix& dh, CostKind kind,
                                      const SubspaceProjector* p,
                                      double epsilon) {
  const int l = basis.order_l;
  const bool subspace_cost = kind != CostKind::FullTrace;
  if (subspace_cost) {
    if (p == nullptr) throw spec_error("subspace cost requires a projector");
    if (basis.basis != BasisKind::Full)
      throw spec_error("subspace cost requires a full-space basis");
    if (epsilon < 0) throw spec_error("epsilon must be >= 0");
  }

  auto inner = [&](const Eigen::MatrixXcd& a,
                   const Eigen::MatrixXcd& b) -> double {
    if (!subspace_cost) return inner_full(a, b).real();
    return inner_masked(a, b, *p).real() + epsilon * inner_full(a, b).real();
  };

  // Unit-Frobenius column normalization keeps the system well scaled; the
  // raw nested commutators grow as ||H||^(2k).
  std::vector<double> scale(l);
  for (int k = 0; k < l; ++k) {
    const double s = basis.ops_odd[k].norm();
    scale[k] = s > 0 ? s : 1.0;
    if (!std::isfinite(s))
      throw numeric_error("krylov basis operator has non-finite norm");
  }

  LMatrix m(l, l);
  LVector b(l);
  for (int i = 0; i < l; ++i) {
    const Eigen::MatrixXcd qi = basis.ops_even[i] / scale[i];
    b[i] = -static_cast<long double>(0.5 * (inner(dh.m, qi) + inner(qi, dh.m)));
    for (int j = 0; j <= i; ++j) {
      const Eigen::MatrixXcd qj = basis.ops_even[j] / scale[j];
      const long double v = 0.5 * (inner(qi, qj) + inner(qj, qi));
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  Eigen::CompleteOrthogonalDecomposition<LMatrix> cod(m);
  const LVector beta = cod.solve(b);

  VariationalSolution sol;
  sol.cost_kind = kind;
  sol.epsilon = subspace_cost ? epsilon : 0.0;
  sol.alphas.resize(l);
  for (int k = 0; k < l; ++k) {
    sol.alphas[k] = static_cast<double>(beta[k]) / scale[k];
    if (!std::isfinite(sol.alphas[k]))
      throw numeric_error("non-finite variational coefficient");
  }

  Eigen::MatrixXcd g = dh.m;
  for (int k = 0; k < l; ++k) g += sol.alphas[k] * basis.ops_even[k];
  sol.cost_value = inner(g, g);
  return sol;
}

OperatorMatrix krylov_agp_matrix(const KrylovBasis& basis,
                                 const Eigen::VectorXd& alphas) {
  if (alphas.size() != basis.order_l)
    throw spec_error("krylov_agp_matrix: coefficient count mismatch");
  OperatorMatrix a;
  a.basis = basis.basis;
  a.n_sites = basis.n_sites;
  a.projector_id = basis.projector_id;
  a.hermitian = true;
  const Eigen::Index dim = basis.ops_odd[0].rows();
  a.m = Eigen::MatrixXcd::Zero(dim, dim);
  for (int k = 0; k < basis.order_l; ++k) a.m += alphas[k] * basis.ops_odd[k];
  a.m *= std::complex<double>(0.0, 1.0);
  return a;
}

// ---------------------------------------------------------------------------
// Spectral path

namespace {

// Monomial coefficients of the shifted Chebyshev polynomials T_j(2x-1).
std::vector<std::vector<long double>> shifted_cheb_coeffs(int count) {
  std::vector<std::vector<long double>> t(count);
  if (count > 0) t[0] = {1.0L};
  if (count > 1) t[1] = {-1.0L, 2.0L};
  for (int j = 2; j < count; ++j) {
    // T_{j} = 2(2x-1) T_{j-1} - T_{j-2}
    std::vector<long double> c(j + 1, 0.0L);
    for (std::size_t m = 0; m < t[j - 1].size(); ++m) {
      c[m + 1] += 4.0L * t[j - 1][m];
      c[m] -= 2.0L * t[j - 1][m];
    }
    for (std::size_t m = 0; m < t[j - 2].size(); ++m) c[m] -= t[j - 2][m];
    t[j] = std::move(c);
  }
  return t;
}

}  // namespace

struct SpectralSystem::Impl {
  int l_max = 0;
  double range = 0.0;
  LMatrix m_tot;
  LVector c_tot;
  long double const_tot = 0.0L;
  std::vector<long double> xmom;  // sum w x^q over off-diagonal pairs
};

int SpectralSystem::l_max() const { return impl_->l_max; }

SpectralSystem::SpectralSystem(const SpectralContext& ctx, int l_max,
                               const SubspaceCostData* sub)
    : impl_(std::make_shared<Impl>()) {
  const int l = l_max;
  if (l < 1) throw spec_error("spectral solve: l must be >= 1");
  const Eigen::Index dim = ctx.ed.energies.size();
  const double r = ctx.range;
  impl_->l_max = l;
  impl_->range = r;

  // Normal equations from elementwise Chebyshev matrix recurrences. With
  //   x = ((E_m - E_n)/R)^2,  z = 2x - 1,  B_j = T_j(z) o (x o dht),
  // the basis operators are f_j o dht = B_j, so
  //   m_full(j,k) = sum B_j o B_k,  c_full[j] = sum dht o B_j,
  // and the subspace blocks are D_j = W B_j W^T. The shifted-Chebyshev basis
  // keeps everything O(1)-scaled, so double-precision BLAS reductions carry
  // the accuracy; only the tiny l x l system is refined in long double.
  Eigen::MatrixXd zm(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index rr = 0; rr < dim; ++rr) {
      const double g =
          r > 0 ? (ctx.ed.energies[rr] - ctx.ed.energies[c]) / r : 0.0;
      zm(rr, c) = 2.0 * g * g - 1.0;
    }
  const Eigen::ArrayXXd x_arr = 0.5 * (zm.array() + 1.0);

  std::vector<Eigen::MatrixXd> basis_ops(l);  // B_0 .. B_{l-1}
  basis_ops[0] = (x_arr * ctx.dht.array()).matrix();
  if (l > 1) basis_ops[1] = zm.cwiseProduct(basis_ops[0]);
  for (int j = 2; j < l; ++j)
    basis_ops[j] = 2.0 * zm.cwiseProduct(basis_ops[j - 1]) - basis_ops[j - 2];

  LMatrix m_full(l, l);
  LVector c_full(l);
  for (int j = 0; j < l; ++j) {
    c_full[j] = ctx.dht.cwiseProduct(basis_ops[j]).sum();
    for (int k = 0; k <= j; ++k) {
      const long double v = basis_ops[j].cwiseProduct(basis_ops[k]).sum();
      m_full(j, k) = v;
      m_full(k, j) = v;
    }
  }
  const long double const_full = ctx.dht.squaredNorm();

  // Weighted gap moments sum w x^q (basis-operator norms; q = 0 unused).
  std::vector<long double> xmom(2 * l, 0.0L);
  {
    Eigen::ArrayXXd w_xq = ctx.dht.array().square();
    for (int q = 1; q <= 2 * l - 1; ++q) {
      w_xq *= x_arr;
      xmom[q] = w_xq.sum();
    }
  }
  impl_->xmom = xmom;

  LMatrix m_tot;
  LVector c_tot;
  long double const_tot;

  if (sub == nullptr) {
    m_tot = m_full;
    c_tot = c_full;
    const_tot = const_full;
  } else {
    m_tot = LMatrix::Zero(l, l);
    c_tot = LVector::Zero(l);
    std::vector<Eigen::MatrixXd> blocks(l);  // D_j over the kept block
    for (int j = 0; j < l; ++j) {
      const Eigen::MatrixXd wy = sub->u_rows * basis_ops[j];
      blocks[j] = wy * sub->u_rows.transpose();
    }
    for (int j = 0; j < l; ++j) {
      c_tot[j] = sub->dh_block.cwiseProduct(blocks[j]).sum();
      for (int k = 0; k <= j; ++k) {
        const long double v = blocks[j].cwiseProduct(blocks[k]).sum();
        m_tot(j, k) = v;
        m_tot(k, j) = v;
      }
    }
    const long double eps = sub->epsilon;
    m_tot += eps * m_full;
    c_tot += eps * c_full;
    const_tot = static_cast<long double>(sub->dh_block.squaredNorm()) +
                eps * const_full;
  }
  impl_->m_tot = std::move(m_tot);
  impl_->c_tot = std::move(c_tot);
  impl_->const_tot = const_tot;
}

SpectralSolveResult SpectralSystem::solve(int l) const {
  if (l < 1 || l > impl_->l_max)
    throw spec_error("spectral solve: order outside the built range");
  const double r = impl_->range;

  SpectralSolveResult out;
  out.alphas = Eigen::VectorXd::Zero(l);
  out.cheb = Eigen::VectorXd::Zero(l);
  out.o_norms.assign(l, 0.0);
  for (int k = 1; k <= l; ++k)
    out.o_norms[k - 1] = std::sqrt(static_cast<double>(impl_->xmom[2 * k - 1])) *
                         std::pow(r, 2 * k - 1);

  const LMatrix m_l = impl_->m_tot.topLeftCorner(l, l);
  const LVector c_l = impl_->c_tot.head(l);
  Eigen::CompleteOrthogonalDecomposition<LMatrix> cod(m_l);
  const LVector u = cod.solve(LVector(-c_l));
  for (int j = 0; j < l; ++j) {
    out.cheb[j] = static_cast<double>(u[j]);
    if (!std::isfinite(out.cheb[j]))
      throw numeric_error("non-finite spectral variational coefficient");
  }
  out.cost = static_cast<double>(impl_->const_tot +
                                 2.0L * (u.transpose() * c_l)(0, 0) +
                                 (u.transpose() * m_l * u)(0, 0));

  // Chebyshev -> monomial in x, then alpha_{m+1} = c_m R^{-2(m+1)}.
  const auto cheb_mono = shifted_cheb_coeffs(l);
  std::vector<long double> mono(l, 0.0L);
  for (int j = 0; j < l; ++j)
    for (std::size_t mdeg = 0; mdeg < cheb_mono[j].size(); ++mdeg)
      mono[mdeg] += u[j] * cheb_mono[j][mdeg];
  if (r > 0.0) {
    long double rpow = r * r;
    for (int mdeg = 0; mdeg < l; ++mdeg) {
      out.alphas[mdeg] = static_cast<double>(mono[mdeg] / rpow);
      rpow *= r * r;
    }
  }
  return out;
}

SpectralSolveResult solve_variational_spectral(const SpectralContext& ctx,
                                               int l,
                                               const SubspaceCostData* sub) {
  return SpectralSystem(ctx, l, sub).solve(l);
}

Eigen::MatrixXd krylov_agp_antisym(const SpectralContext& ctx,
                                   const Eigen::VectorXd& cheb) {
  const Eigen::Index dim = ctx.ed.energies.size();
  const int l = static_cast<int>(cheb.size());
  const double r = ctx.range;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
  if (r > 0.0) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      for (Eigen::Index rr = 0; rr < dim; ++rr) {
        const double g = (ctx.ed.energies[rr] - ctx.ed.energies[c]) / r;
        const double z = 2.0 * g * g - 1.0;
        double tp = 1.0, tc = z, q = 0.0;
        for (int j = 0; j < l; ++j) {
          q += cheb[j] * (j == 0 ? 1.0 : tc);
          if (j >= 1) {
            const double tn = 2.0 * z * tc - tp;
            tp = tc;
            tc = tn;
          }
        }
        // omega p(omega^2) = (omega / R^2) q(x)
        k(rr, c) = (g / r) * q * ctx.dht(rr, c);
      }
    }
  }
  return ctx.ed.vectors * k * ctx.ed.vectors.transpose();
}

// ---------------------------------------------------------------------------
// cd_terms_krylov

namespace {

struct DenseOps {
  Eigen::MatrixXd h;       // dense H in the working basis
  Eigen::MatrixXd dh_omega;
  Eigen::MatrixXd dh_delta;
};

DenseOps dense_ops_full(const InstanceTables& tab, double omega, double delta) {
  DenseOps ops;
  ops.h = dense_h(tab, omega, delta);
  const Eigen::Index dim = tab.dim();
  ops.dh_omega = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b)
    for (int i = 0; i < tab.n; ++i)
      ops.dh_omega(b ^ (Eigen::Index{1} << i), b) += 1.0;
  ops.dh_delta = Eigen::MatrixXd::Zero(dim, dim);
  ops.dh_delta.diagonal() = -tab.pop;
  return ops;
}

DenseOps dense_ops_sub(const InstanceTables& tab, const SubspaceProjector& p,
                       double omega, double delta) {
  const int d = p.d_is();
  DenseOps ops;
  ops.h = Eigen::MatrixXd::Zero(d, d);
  ops.dh_omega = Eigen::MatrixXd::Zero(d, d);
  ops.dh_delta = Eigen::MatrixXd::Zero(d, d);
  for (int a = 0; a < d; ++a) {
    const Eigen::Index b = p.kept[a];
    ops.h(a, a) = tab.vdiag[b] - delta * tab.pop[b];
    ops.dh_delta(a, a) = -tab.pop[b];
    for (int i = 0; i < tab.n; ++i) {
      const std::int32_t other = p.pos_of[b ^ (Eigen::Index{1} << i)];
      if (other >= 0) {
        ops.dh_omega(other, a) += 1.0;
        ops.h(other, a) += omega;
      }
    }
  }
  return ops;
}

SpectralContext make_context(const Eigen::MatrixXd& h,
                             const Eigen::MatrixXd& dh) {
  SpectralContext ctx;
  ctx.ed = eig_sym(h);
  const Eigen::Index dim = h.rows();
  ctx.range = ctx.ed.energies[dim - 1] - ctx.ed.energies[0];
  ctx.dht = ctx.ed.vectors.transpose() * dh * ctx.ed.vectors;
  return ctx;
}

OperatorMatrix antisym_to_operator(const Eigen::MatrixXd& k, BasisKind basis,
                                   int n_sites, std::uint64_t projector_id) {
  OperatorMatrix a;
  a.m = std::complex<double>(0.0, 1.0) * k.cast<std::complex<double>>();
  a.basis = basis;
  a.n_sites = n_sites;
  a.projector_id = projector_id;
  a.hermitian = true;
  return a;
}

}  // namespace

std::pair<OperatorMatrix, OperatorMatrix> cd_terms_krylov(
    const GraphInstance& g, const AnnealSchedule& schedule, double t, int l,
    KrylovVariant variant, double epsilon) {
  if (t < 0.0 || t > schedule.t_total_us)
    throw spec_error("cd_terms_krylov: t outside [0, T]");
  if (l < 1) throw spec_error("cd_terms_krylov: l must be >= 1");
  const InstanceTables tab = build_tables(g);
  const double omega = schedule.omega(t), delta = schedule.delta(t);

  if (variant == KrylovVariant::Full) {
    const DenseOps ops = dense_ops_full(tab, omega, delta);
    SpectralContext ctx = make_context(ops.h, ops.dh_omega);
    const auto sol_o = solve_variational_spectral(ctx, l);
    OperatorMatrix a_omega = antisym_to_operator(
        krylov_agp_antisym(ctx, sol_o.cheb), BasisKind::Full, g.n_sites, 0);
    ctx.dht = ctx.ed.vectors.transpose() * ops.dh_delta * ctx.ed.vectors;
    const auto sol_d = solve_variational_spectral(ctx, l);
    OperatorMatrix a_delta = antisym_to_operator(
        krylov_agp_antisym(ctx, sol_d.cheb), BasisKind::Full, g.n_sites, 0);
    return {std::move(a_omega), std::move(a_delta)};
  }

  if (variant == KrylovVariant::SubBuiltNN || variant == KrylovVariant::SubBuiltNNN) {
    const SubspaceProjector p = build_projector(
        g, variant == KrylovVariant::SubBuiltNN ? ExclusionKind::NN
                                                : ExclusionKind::NNN);
    const DenseOps ops = dense_ops_sub(tab, p, omega, delta);
    SpectralContext ctx = make_context(ops.h, ops.dh_omega);
    const auto sol_o = solve_variational_spectral(ctx, l);
    OperatorMatrix a_omega = antisym_to_operator(
        krylov_agp_antisym(ctx, sol_o.cheb), BasisKind::Subspace, g.n_sites, p.id);
    ctx.dht = ctx.ed.vectors.transpose() * ops.dh_delta * ctx.ed.vectors;
    const auto sol_d = solve_variational_spectral(ctx, l);
    OperatorMatrix a_delta = antisym_to_operator(
        krylov_agp_antisym(ctx, sol_d.cheb), BasisKind::Subspace, g.n_sites, p.id);
    return {embed(a_omega, p), embed(a_delta, p)};
  }

  // Subspace-restricted cost function on a full-space basis.
  const SubspaceProjector p = build_projector(
      g, variant == KrylovVariant::CostNN ? ExclusionKind::NN
                                          : ExclusionKind::NNN);
  if (epsilon < 0.0) epsilon = default_epsilon(p);
  const DenseOps ops = dense_ops_full(tab, omega, delta);
  SpectralContext ctx = make_context(ops.h, ops.dh_omega);
  const int d = p.d_is();
  SubspaceCostData sub;
  sub.epsilon = epsilon;
  sub.u_rows.resize(d, ctx.ed.vectors.cols());
  for (int a = 0; a < d; ++a) sub.u_rows.row(a) = ctx.ed.vectors.row(p.kept[a]);
  sub.dh_block.resize(d, d);
  for (int c = 0; c < d; ++c)
    for (int a = 0; a < d; ++a)
      sub.dh_block(a, c) = ops.dh_omega(p.kept[a], p.kept[c]);
  const auto sol_o = solve_variational_spectral(ctx, l, &sub);
  OperatorMatrix a_omega = antisym_to_operator(
      krylov_agp_antisym(ctx, sol_o.cheb), BasisKind::Full, g.n_sites, 0);

  ctx.dht = ctx.ed.vectors.transpose() * ops.dh_delta * ctx.ed.vectors;
  for (int c = 0; c < d; ++c)
    for (int a = 0; a < d; ++a)
      sub.dh_block(a, c) = ops.dh_delta(p.kept[a], p.kept[c]);
  const auto sol_d = solve_variational_spectral(ctx, l, &sub);
  OperatorMatrix a_delta = antisym_to_operator(
      krylov_agp_antisym(ctx, sol_d.cheb), BasisKind::Full, g.n_sites, 0);
  return {std::move(a_omega), std::move(a_delta)};
}

}  // namespace rydmis
