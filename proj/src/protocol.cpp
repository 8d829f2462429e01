#include "rydmis/protocol.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <utility>

#include "rydmis/agp_exact.hpp"
#include "rydmis/errors.hpp"

namespace rydmis {

const char* protocol_name(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::None: return "NONE";
    case ProtocolKind::ExactFull: return "EXACT_FULL";
    case ProtocolKind::ExactSubNN: return "EXACT_SUB_NN";
    case ProtocolKind::ExactSubNNN: return "EXACT_SUB_NNN";
    case ProtocolKind::KrylovFull: return "KRYLOV_FULL";
    case ProtocolKind::KrylovSubNN: return "KRYLOV_SUB_NN";
    case ProtocolKind::KrylovSubNNN: return "KRYLOV_SUB_NNN";
    case ProtocolKind::KrylovCostNN: return "KRYLOV_COST_NN";
    case ProtocolKind::KrylovCostNNN: return "KRYLOV_COST_NNN";
  }
  throw spec_error("unknown protocol kind");
}

ProtocolKind protocol_from_name(const std::string& name) {
  static const std::map<std::string, ProtocolKind> table = {
      {"NONE", ProtocolKind::None},
      {"EXACT_FULL", ProtocolKind::ExactFull},
      {"EXACT_SUB_NN", ProtocolKind::ExactSubNN},
      {"EXACT_SUB_NNN", ProtocolKind::ExactSubNNN},
      {"KRYLOV_FULL", ProtocolKind::KrylovFull},
      {"KRYLOV_SUB_NN", ProtocolKind::KrylovSubNN},
      {"KRYLOV_SUB_NNN", ProtocolKind::KrylovSubNNN},
      {"KRYLOV_COST_NN", ProtocolKind::KrylovCostNN},
      {"KRYLOV_COST_NNN", ProtocolKind::KrylovCostNNN},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw spec_error("unknown protocol: " + name);
  return it->second;
}

namespace {

// y = M x for real M, complex x.
Eigen::VectorXcd real_apply(const Eigen::MatrixXd& m,
                            const Eigen::VectorXcd& x) {
  const Eigen::VectorXd re = m * x.real();
  const Eigen::VectorXd im = m * x.imag();
  Eigen::VectorXcd y(m.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = {re[i], im[i]};
  return y;
}

// U^T X U with X = sum_i sigma_x^i, using X's bit-flip structure.
Eigen::MatrixXd dht_sigma_x(int n, const Eigen::MatrixXd& u) {
  const Eigen::Index dim = u.rows();
  Eigen::MatrixXd xu = Eigen::MatrixXd::Zero(dim, u.cols());
  for (int i = 0; i < n; ++i) {
    const Eigen::Index bit = Eigen::Index{1} << i;
    for (Eigen::Index k = 0; k < u.cols(); ++k)
      for (Eigen::Index b = 0; b < dim; ++b) xu(b, k) += u(b ^ bit, k);
  }
  return u.transpose() * xu;
}

Eigen::MatrixXd dht_minus_number(const Eigen::VectorXd& pop,
                                 const Eigen::MatrixXd& u) {
  const Eigen::MatrixXd scaled = (-pop).asDiagonal() * u;
  return u.transpose() * scaled;
}

// Eigenbasis kernel of the exact AGP: K(m,n) = dht(m,n)/(E_n - E_m).
Eigen::MatrixXd exact_kernel(const EigenDecomposition& ed,
                             const Eigen::MatrixXd& dht, double gap_tol) {
  const Eigen::Index dim = ed.energies.size();
  if (gap_tol < 0.0)
    gap_tol = kDefaultGapTolFrac * (ed.energies[dim - 1] - ed.energies[0]);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index n = 0; n < dim; ++n)
    for (Eigen::Index m = 0; m < dim; ++m) {
      const double gap = ed.energies[n] - ed.energies[m];
      if (std::abs(gap) > gap_tol) k(m, n) = dht(m, n) / gap;
    }
  return k;
}

// Eigenbasis kernel of the Krylov AGP: K(m,n) = (w/R^2) q(x) dht(m,n).
Eigen::MatrixXd spectral_kernel(const SpectralContext& ctx,
                                const Eigen::VectorXd& cheb) {
  const Eigen::Index dim = ctx.ed.energies.size();
  const int l = static_cast<int>(cheb.size());
  const double r = ctx.range;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
  if (r <= 0.0) return k;
  for (Eigen::Index c = 0; c < dim; ++c)
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
      k(rr, c) = (g / r) * q * ctx.dht(rr, c);
    }
  return k;
}

KrylovVariant variant_of(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::KrylovFull: return KrylovVariant::Full;
    case ProtocolKind::KrylovSubNN: return KrylovVariant::SubBuiltNN;
    case ProtocolKind::KrylovSubNNN: return KrylovVariant::SubBuiltNNN;
    case ProtocolKind::KrylovCostNN: return KrylovVariant::CostNN;
    case ProtocolKind::KrylovCostNNN: return KrylovVariant::CostNNN;
    default: throw spec_error("not a Krylov protocol");
  }
}

// Subspace-restricted single-bit-flip block (dH/dOmega on kept states).
Eigen::MatrixXd sigma_x_block(const SubspaceProjector& p) {
  const int d = p.d_is();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
  for (int c = 0; c < d; ++c)
    for (int i = 0; i < p.n_sites; ++i) {
      const std::int32_t other =
          p.pos_of[p.kept[c] ^ (std::int32_t{1} << i)];
      if (other >= 0) b(other, c) += 1.0;
    }
  return b;
}

// ---------------------------------------------------------------------------

class NoneProtocol final : public DriveProtocol {
 public:
  std::string descriptor() const override { return "NONE"; }
  void accumulate_cd(double, int, const Eigen::VectorXcd&,
                     Eigen::VectorXcd&) override {}
};

class ExactFullProtocol final : public DriveProtocol {
 public:
  ExactFullProtocol(const GraphInstance& g, const AnnealSchedule& s,
                    double gap_tol)
      : tab_(build_tables(g)), sched_(s), gap_tol_(gap_tol) {}

  std::string descriptor() const override { return "EXACT_FULL"; }

  void accumulate_cd(double t, int segment, const Eigen::VectorXcd& psi,
                     Eigen::VectorXcd& out) override {
    const double odot = sched_.omega_dot(t);
    const double ddot = sched_.delta_dot_segment(segment);
    if (odot == 0.0 && ddot == 0.0) return;
    const EigenDecomposition ed =
        eig_sym(dense_h(tab_, sched_.omega(t), sched_.delta(t)));
    const Eigen::VectorXcd a = real_apply(ed.vectors.transpose(), psi);
    // -i lam_dot (i K) psi = lam_dot U K U^T psi
    if (odot != 0.0) {
      const Eigen::MatrixXd k =
          exact_kernel(ed, dht_sigma_x(tab_.n, ed.vectors), gap_tol_);
      out += odot * real_apply(ed.vectors, real_apply(k, a));
    }
    if (ddot != 0.0) {
      const Eigen::MatrixXd k =
          exact_kernel(ed, dht_minus_number(tab_.pop, ed.vectors), gap_tol_);
      out += ddot * real_apply(ed.vectors, real_apply(k, a));
    }
  }

 private:
  InstanceTables tab_;
  AnnealSchedule sched_;
  double gap_tol_;
};

// Shared machinery for protocols whose gauge potential lives in an
// independent-set subspace: restrict, diagonalize there, act on psi[kept].
class SubspaceStageProtocol : public DriveProtocol {
 public:
  SubspaceStageProtocol(const GraphInstance& g, const AnnealSchedule& s,
                        ExclusionKind kind)
      : tab_(build_tables(g)), sched_(s), p_(build_projector(g, kind)) {
    const int d = p_.d_is();
    x_block_ = sigma_x_block(p_);
    diag0_.resize(d);
    pop_k_.resize(d);
    for (int a = 0; a < d; ++a) {
      diag0_[a] = tab_.vdiag[p_.kept[a]];
      pop_k_[a] = tab_.pop[p_.kept[a]];
    }
  }

  void accumulate_cd(double t, int segment, const Eigen::VectorXcd& psi,
                     Eigen::VectorXcd& out) override {
    const double odot = sched_.omega_dot(t);
    const double ddot = sched_.delta_dot_segment(segment);
    if (odot == 0.0 && ddot == 0.0) return;
    const int d = p_.d_is();
    Eigen::MatrixXd h = sched_.omega(t) * x_block_;
    h.diagonal() = diag0_ - sched_.delta(t) * pop_k_;
    const EigenDecomposition ed = eig_sym(h);

    Eigen::VectorXcd gathered(d);
    for (int a = 0; a < d; ++a) gathered[a] = psi[p_.kept[a]];
    const Eigen::VectorXcd ae = real_apply(ed.vectors.transpose(), gathered);

    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(d);
    if (odot != 0.0)
      acc += odot * real_apply(kernel(ed, ed.vectors.transpose() *
                                              (x_block_ * ed.vectors)),
                               ae);
    if (ddot != 0.0)
      acc += ddot * real_apply(kernel(ed, dht_minus_number(pop_k_, ed.vectors)),
                               ae);
    const Eigen::VectorXcd lab = real_apply(ed.vectors, acc);
    for (int a = 0; a < d; ++a) out[p_.kept[a]] += lab[a];
  }

 protected:
  virtual Eigen::MatrixXd kernel(const EigenDecomposition& ed,
                                 const Eigen::MatrixXd& dht) = 0;

  InstanceTables tab_;
  AnnealSchedule sched_;
  SubspaceProjector p_;
  Eigen::MatrixXd x_block_;
  Eigen::VectorXd diag0_, pop_k_;
};

class ExactSubProtocol final : public SubspaceStageProtocol {
 public:
  ExactSubProtocol(const GraphInstance& g, const AnnealSchedule& s,
                   ExclusionKind kind, double gap_tol)
      : SubspaceStageProtocol(g, s, kind), gap_tol_(gap_tol),
        name_(kind == ExclusionKind::NN ? "EXACT_SUB_NN" : "EXACT_SUB_NNN") {}
  std::string descriptor() const override { return name_; }

 protected:
  Eigen::MatrixXd kernel(const EigenDecomposition& ed,
                         const Eigen::MatrixXd& dht) override {
    return exact_kernel(ed, dht, gap_tol_);
  }

 private:
  double gap_tol_;
  std::string name_;
};

class KrylovSubProtocol final : public SubspaceStageProtocol {
 public:
  KrylovSubProtocol(const GraphInstance& g, const AnnealSchedule& s,
                    ExclusionKind kind, int l)
      : SubspaceStageProtocol(g, s, kind), l_(l),
        name_(std::string(kind == ExclusionKind::NN ? "KRYLOV_SUB_NN"
                                                    : "KRYLOV_SUB_NNN") +
              " l=" + std::to_string(l)) {
    if (l < 1) throw spec_error("Krylov order must be >= 1");
  }
  std::string descriptor() const override { return name_; }

 protected:
  Eigen::MatrixXd kernel(const EigenDecomposition& ed,
                         const Eigen::MatrixXd& dht) override {
    SpectralContext ctx;
    ctx.ed = ed;
    ctx.range = ed.energies[ed.energies.size() - 1] - ed.energies[0];
    ctx.dht = dht;
    const SpectralSolveResult sol = solve_variational_spectral(ctx, l_);
    return spectral_kernel(ctx, sol.cheb);
  }

 private:
  int l_;
  std::string name_;
};

// Full-space Krylov protocols at modest dimension: per-stage spectral solve.
class KrylovFullStageProtocol final : public DriveProtocol {
 public:
  KrylovFullStageProtocol(const GraphInstance& g, const AnnealSchedule& s,
                          ProtocolKind kind, int l, double epsilon)
      : tab_(build_tables(g)), sched_(s), kind_(kind), l_(l) {
    if (l < 1) throw spec_error("Krylov order must be >= 1");
    if (kind != ProtocolKind::KrylovFull) {
      p_ = build_projector(g, kind == ProtocolKind::KrylovCostNN
                                  ? ExclusionKind::NN
                                  : ExclusionKind::NNN);
      epsilon_ = epsilon < 0.0 ? default_epsilon(p_) : epsilon;
      const int d = p_.d_is();
      dh_omega_block_ = sigma_x_block(p_);
      dh_delta_block_ = Eigen::MatrixXd::Zero(d, d);
      for (int a = 0; a < d; ++a)
        dh_delta_block_(a, a) = -tab_.pop[p_.kept[a]];
    }
  }

  std::string descriptor() const override {
    return std::string(protocol_name(kind_)) + " l=" + std::to_string(l_);
  }

  void accumulate_cd(double t, int segment, const Eigen::VectorXcd& psi,
                     Eigen::VectorXcd& out) override {
    const double odot = sched_.omega_dot(t);
    const double ddot = sched_.delta_dot_segment(segment);
    if (odot == 0.0 && ddot == 0.0) return;

    SpectralContext ctx;
    ctx.ed = eig_sym(dense_h(tab_, sched_.omega(t), sched_.delta(t)));
    const Eigen::Index dim = tab_.dim();
    ctx.range = ctx.ed.energies[dim - 1] - ctx.ed.energies[0];

    SubspaceCostData sub;
    const bool cost = kind_ != ProtocolKind::KrylovFull;
    if (cost) {
      const int d = p_.d_is();
      sub.epsilon = epsilon_;
      sub.u_rows.resize(d, dim);
      for (int a = 0; a < d; ++a) sub.u_rows.row(a) = ctx.ed.vectors.row(p_.kept[a]);
    }

    const Eigen::VectorXcd a = real_apply(ctx.ed.vectors.transpose(), psi);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(dim);
    if (odot != 0.0) {
      ctx.dht = dht_sigma_x(tab_.n, ctx.ed.vectors);
      if (cost) sub.dh_block = dh_omega_block_;
      const auto sol = solve_variational_spectral(ctx, l_, cost ? &sub : nullptr);
      acc += odot * real_apply(spectral_kernel(ctx, sol.cheb), a);
    }
    if (ddot != 0.0) {
      ctx.dht = dht_minus_number(tab_.pop, ctx.ed.vectors);
      if (cost) sub.dh_block = dh_delta_block_;
      const auto sol = solve_variational_spectral(ctx, l_, cost ? &sub : nullptr);
      acc += ddot * real_apply(spectral_kernel(ctx, sol.cheb), a);
    }
    out += real_apply(ctx.ed.vectors, acc);
  }

 private:
  InstanceTables tab_;
  AnnealSchedule sched_;
  ProtocolKind kind_;
  int l_;
  SubspaceProjector p_;
  double epsilon_ = 0.0;
  Eigen::MatrixXd dh_omega_block_, dh_delta_block_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Coefficient grid

struct AlphaGrid::Impl {
  std::vector<double> knots;
  std::vector<Eigen::VectorXd> t_nodes;           // per segment
  std::vector<Eigen::VectorXd> r_nodes, c_nodes;  // per segment
  // {variant, l, param, segment} -> l x n_nodes table of Chebyshev coeffs
  std::map<std::array<int, 4>, Eigen::MatrixXd> u;
  std::set<std::pair<int, int>> built;            // (variant, l) coverage
};

AlphaGrid::AlphaGrid() : impl_(new Impl) {}
AlphaGrid::~AlphaGrid() = default;

namespace {

// Barycentric interpolation on Chebyshev points of the second kind; rows of
// vals are independent functions sampled at the nodes.
Eigen::VectorXd bary_eval(const Eigen::VectorXd& nodes,
                          const Eigen::MatrixXd& vals, double t) {
  const Eigen::Index n = nodes.size();
  const double span = std::abs(nodes[n - 1] - nodes[0]);
  Eigen::VectorXd num = Eigen::VectorXd::Zero(vals.rows());
  double den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = t - nodes[i];
    if (std::abs(d) < 1e-14 * span) return vals.col(i);
    double w = (i % 2 == 0) ? 1.0 : -1.0;
    if (i == 0 || i == n - 1) w *= 0.5;
    const double c = w / d;
    num += c * vals.col(i);
    den += c;
  }
  return num / den;
}

}  // namespace

AlphaGrid::Eval AlphaGrid::eval(KrylovVariant variant, int l, DriveParam param,
                                int segment, double t) const {
  if (!impl_->built.count({static_cast<int>(variant), l}))
    throw spec_error("coefficient grid was not built for this protocol/order");
  if (segment < 0 || segment + 1 >= static_cast<int>(impl_->knots.size()))
    throw spec_error("coefficient grid: segment out of range");
  Eval ev;
  const auto it = impl_->u.find(std::array<int, 4>{
      static_cast<int>(variant), l, static_cast<int>(param), segment});
  if (it == impl_->u.end()) return ev;  // drive frozen in this segment
  const Eigen::VectorXd& nodes = impl_->t_nodes[segment];
  ev.cheb = bary_eval(nodes, it->second, t);
  ev.range = bary_eval(nodes, impl_->r_nodes[segment].transpose(), t)[0];
  ev.center = bary_eval(nodes, impl_->c_nodes[segment].transpose(), t)[0];
  ev.active = true;
  return ev;
}

std::shared_ptr<const AlphaGrid> build_alpha_grid(
    const GraphInstance& g, const AnnealSchedule& schedule,
    const std::vector<KrylovVariant>& variants, const std::vector<int>& orders,
    double epsilon, int nodes_per_segment) {
  if (variants.empty() || orders.empty())
    throw spec_error("coefficient grid needs at least one variant and order");
  if (nodes_per_segment < 4)
    throw spec_error("coefficient grid needs at least 4 nodes per segment");
  int l_max = 0;
  for (const int l : orders) {
    if (l < 1) throw spec_error("Krylov order must be >= 1");
    l_max = std::max(l_max, l);
  }
  for (const KrylovVariant v : variants)
    if (v == KrylovVariant::SubBuiltNN || v == KrylovVariant::SubBuiltNNN)
      throw spec_error("coefficient grid covers full-space variants only");

  const InstanceTables tab = build_tables(g);
  const Eigen::Index dim = tab.dim();
  std::shared_ptr<AlphaGrid> grid(new AlphaGrid);
  AlphaGrid::Impl& gi = *grid->impl_;
  gi.knots = schedule.knots();
  const int n_seg = static_cast<int>(gi.knots.size()) - 1;
  gi.t_nodes.resize(n_seg);
  gi.r_nodes.resize(n_seg);
  gi.c_nodes.resize(n_seg);
  for (const KrylovVariant v : variants)
    for (const int l : orders) gi.built.insert({static_cast<int>(v), l});

  struct CostSetup {
    KrylovVariant variant;
    SubspaceProjector p;
    Eigen::MatrixXd dh_omega_block, dh_delta_block;
    double epsilon;
  };
  std::vector<CostSetup> costs;
  bool want_full = false;
  for (const KrylovVariant v : variants) {
    if (v == KrylovVariant::Full) {
      want_full = true;
      continue;
    }
    CostSetup cs;
    cs.variant = v;
    cs.p = build_projector(g, v == KrylovVariant::CostNN ? ExclusionKind::NN
                                                         : ExclusionKind::NNN);
    cs.epsilon = epsilon < 0.0 ? default_epsilon(cs.p) : epsilon;
    const int d = cs.p.d_is();
    cs.dh_omega_block = sigma_x_block(cs.p);
    cs.dh_delta_block = Eigen::MatrixXd::Zero(d, d);
    for (int a = 0; a < d; ++a) cs.dh_delta_block(a, a) = -tab.pop[cs.p.kept[a]];
    costs.push_back(std::move(cs));
  }

  for (int s = 0; s < n_seg; ++s) {
    const double ta = gi.knots[s], tb = gi.knots[s + 1];
    // Ramp segments (detuning frozen, Rabi amplitude sweeping through zero)
    // have faster coefficient variation than the long detuning sweep; sample
    // them about three times as densely for the same interpolation error.
    const int nn = schedule.delta_dot_segment(s) == 0.0
                       ? 3 * nodes_per_segment - 2
                       : nodes_per_segment;
    Eigen::VectorXd nodes(nn);
    for (int i = 0; i < nn; ++i)
      nodes[i] = ta + (tb - ta) * 0.5 *
                          (1.0 - std::cos(std::numbers::pi * i / (nn - 1)));
    gi.t_nodes[s] = nodes;
    gi.r_nodes[s].resize(nn);
    gi.c_nodes[s].resize(nn);

    bool omega_active = false;
    for (int i = 0; i < nn; ++i)
      omega_active |= std::abs(schedule.omega_dot(nodes[i])) >
                      1e-12 * std::abs(schedule.omega_max);
    const bool delta_active = schedule.delta_dot_segment(s) != 0.0;
    std::vector<DriveParam> params;
    if (omega_active) params.push_back(DriveParam::Omega);
    if (delta_active) params.push_back(DriveParam::Delta);

    // Allocate tables for active params.
    for (const DriveParam param : params) {
      const int pi = static_cast<int>(param);
      if (want_full)
        for (const int l : orders)
          gi.u[{static_cast<int>(KrylovVariant::Full), l, pi, s}] =
              Eigen::MatrixXd::Zero(l, nn);
      for (const CostSetup& cs : costs)
        for (const int l : orders)
          gi.u[{static_cast<int>(cs.variant), l, pi, s}] =
              Eigen::MatrixXd::Zero(l, nn);
    }

    for (int i = 0; i < nn; ++i) {
      const double t = nodes[i];
      SpectralContext ctx;
      ctx.ed = eig_sym(dense_h(tab, schedule.omega(t), schedule.delta(t)));
      ctx.range = ctx.ed.energies[dim - 1] - ctx.ed.energies[0];
      gi.r_nodes[s][i] = ctx.range;
      gi.c_nodes[s][i] = 0.5 * (ctx.ed.energies[dim - 1] + ctx.ed.energies[0]);

      for (const DriveParam param : params) {
        const int pi = static_cast<int>(param);
        ctx.dht = param == DriveParam::Omega
                      ? dht_sigma_x(tab.n, ctx.ed.vectors)
                      : dht_minus_number(tab.pop, ctx.ed.vectors);
        if (want_full) {
          const SpectralSystem sys(ctx, l_max);
          for (const int l : orders)
            gi.u[{static_cast<int>(KrylovVariant::Full), l, pi, s}].col(i) =
                sys.solve(l).cheb;
        }
        for (const CostSetup& cs : costs) {
          const int d = cs.p.d_is();
          SubspaceCostData sub;
          sub.epsilon = cs.epsilon;
          sub.u_rows.resize(d, dim);
          for (int a = 0; a < d; ++a)
            sub.u_rows.row(a) = ctx.ed.vectors.row(cs.p.kept[a]);
          sub.dh_block = param == DriveParam::Omega ? cs.dh_omega_block
                                                    : cs.dh_delta_block;
          const SpectralSystem sys(ctx, l_max, &sub);
          for (const int l : orders)
            gi.u[{static_cast<int>(cs.variant), l, pi, s}].col(i) =
                sys.solve(l).cheb;
        }
      }
    }
  }
  return grid;
}

namespace {

// A^(l) psi via nested commutators, evaluated without forming any dim^2
// matrix. With P = sum_j u_j T_j(2 x - 1)[dH] and x = ad_H^2 / R^2,
//   K psi = (1/R^2) (H_c (P psi) - P (H_c psi)),   A = i K.
// Operators are represented by their action on the family v_p = H_c^p psi;
// applying x consumes two family slots, so b_j is tracked at p <= 2j+1.
// Clenshaw keeps every intermediate bounded (x has spectrum in [0, 1]).
class CommutatorApplier {
 public:
  CommutatorApplier(const InstanceTables& tab, double omega, double delta,
                    double center)
      : tab_(tab), omega_(omega), delta_(delta), center_(center) {}

  Eigen::VectorXcd apply(const Eigen::VectorXd& u, double range,
                         DriveParam param, const Eigen::VectorXcd& psi) {
    const int big_n = static_cast<int>(u.size()) - 1;
    const int pmax = 2 * big_n + 1;
    const double r2 = range * range;
    if (!(r2 > 0.0)) return Eigen::VectorXcd::Zero(psi.size());

    std::vector<Eigen::VectorXcd> v(pmax + 1), w(pmax + 1);
    v[0] = psi;
    for (int p = 1; p <= pmax; ++p) hc(v[p - 1], v[p]);
    for (int p = 0; p <= pmax; ++p) {
      if (param == DriveParam::Omega)
        apply_sigma_x_sum(tab_.n, v[p], w[p]);
      else
        apply_minus_number_sum(tab_, v[p], w[p]);
    }

    std::vector<Eigen::VectorXcd> b1, b2, bj, h;
    for (int j = big_n; j >= 0; --j) {
      const int size_j = 2 * j + 2;  // p = 0..2j+1
      bj.assign(size_j, Eigen::VectorXcd());
      if (!b1.empty()) {
        // h[p] = H_c b_{j+1}[p], needed through p = 2j+3
        h.resize(size_j + 2);
        for (int p = 0; p < size_j + 2; ++p) hc(b1[p], h[p]);
      }
      Eigen::VectorXcd hh;
      for (int p = 0; p < size_j; ++p) {
        bj[p] = u[j] * w[p];
        if (!b1.empty()) {
          hc(h[p], hh);
          // 2 z b_{j+1} = 4 x b_{j+1} - 2 b_{j+1}
          bj[p] += (4.0 / r2) * (hh - 2.0 * h[p + 1] + b1[p + 2]) - 2.0 * b1[p];
        }
        if (!b2.empty()) bj[p] -= b2[p];
      }
      b2 = std::move(b1);
      b1 = std::move(bj);
      bj.clear();
    }

    // P = b_0 - z b_1
    Eigen::VectorXcd p0 = b1[0], p1 = b1[1];
    if (!b2.empty()) {
      Eigen::VectorXcd hh;
      for (int p = 0; p <= 1; ++p) {
        Eigen::VectorXcd h0, h1;
        hc(b2[p], h0);
        hc(h0, hh);
        hc(b2[p + 1], h1);
        const Eigen::VectorXcd zb =
            (2.0 / r2) * (hh - 2.0 * h1 + b2[p + 2]) - b2[p];
        (p == 0 ? p0 : p1) -= zb;
      }
    }
    Eigen::VectorXcd hp0;
    hc(p0, hp0);
    return (hp0 - p1) / r2;
  }

 private:
  void hc(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    apply_h(tab_, omega_, delta_, in, out);
    out -= center_ * in;
  }

  const InstanceTables& tab_;
  double omega_, delta_, center_;
};

class KrylovGridProtocol final : public DriveProtocol {
 public:
  KrylovGridProtocol(const GraphInstance& g, const AnnealSchedule& s,
                     ProtocolKind kind, int l,
                     std::shared_ptr<const AlphaGrid> grid)
      : tab_(build_tables(g)), sched_(s), kind_(kind), l_(l),
        grid_(std::move(grid)) {
    if (!grid_) throw spec_error("grid protocol requires a coefficient grid");
  }

  std::string descriptor() const override {
    return std::string(protocol_name(kind_)) + " l=" + std::to_string(l_);
  }

  void accumulate_cd(double t, int segment, const Eigen::VectorXcd& psi,
                     Eigen::VectorXcd& out) override {
    const double odot = sched_.omega_dot(t);
    const double ddot = sched_.delta_dot_segment(segment);
    if (odot == 0.0 && ddot == 0.0) return;
    const KrylovVariant variant = variant_of(kind_);
    const double omega = sched_.omega(t), delta = sched_.delta(t);
    if (odot != 0.0) {
      const AlphaGrid::Eval ev =
          grid_->eval(variant, l_, DriveParam::Omega, segment, t);
      if (ev.active) {
        CommutatorApplier ca(tab_, omega, delta, ev.center);
        out += odot * ca.apply(ev.cheb, ev.range, DriveParam::Omega, psi);
      }
    }
    if (ddot != 0.0) {
      const AlphaGrid::Eval ev =
          grid_->eval(variant, l_, DriveParam::Delta, segment, t);
      if (ev.active) {
        CommutatorApplier ca(tab_, omega, delta, ev.center);
        out += ddot * ca.apply(ev.cheb, ev.range, DriveParam::Delta, psi);
      }
    }
  }

 private:
  InstanceTables tab_;
  AnnealSchedule sched_;
  ProtocolKind kind_;
  int l_;
  std::shared_ptr<const AlphaGrid> grid_;
};

}  // namespace

std::unique_ptr<DriveProtocol> make_protocol(
    ProtocolKind kind, const GraphInstance& g, const AnnealSchedule& schedule,
    const ProtocolOptions& opts, std::shared_ptr<const AlphaGrid> grid) {
  switch (kind) {
    case ProtocolKind::None:
      return std::make_unique<NoneProtocol>();
    case ProtocolKind::ExactFull:
      return std::make_unique<ExactFullProtocol>(g, schedule, opts.gap_tol);
    case ProtocolKind::ExactSubNN:
      return std::make_unique<ExactSubProtocol>(g, schedule, ExclusionKind::NN,
                                                opts.gap_tol);
    case ProtocolKind::ExactSubNNN:
      return std::make_unique<ExactSubProtocol>(g, schedule,
                                                ExclusionKind::NNN, opts.gap_tol);
    case ProtocolKind::KrylovSubNN:
      return std::make_unique<KrylovSubProtocol>(g, schedule, ExclusionKind::NN,
                                                 opts.l);
    case ProtocolKind::KrylovSubNNN:
      return std::make_unique<KrylovSubProtocol>(g, schedule,
                                                 ExclusionKind::NNN, opts.l);
    case ProtocolKind::KrylovFull:
    case ProtocolKind::KrylovCostNN:
    case ProtocolKind::KrylovCostNNN: {
      const Eigen::Index dim = Eigen::Index{1} << g.n_sites;
      if (!grid && dim <= opts.grid_dim_threshold)
        return std::make_unique<KrylovFullStageProtocol>(g, schedule, kind,
                                                         opts.l, opts.epsilon);
      if (!grid)
        grid = build_alpha_grid(g, schedule, {variant_of(kind)}, {opts.l},
                                opts.epsilon, opts.grid_nodes);
      return std::make_unique<KrylovGridProtocol>(g, schedule, kind, opts.l,
                                                  std::move(grid));
    }
  }
  throw spec_error("unknown protocol kind");
}

}  // namespace rydmis
