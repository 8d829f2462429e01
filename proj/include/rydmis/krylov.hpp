#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rydmis/agp_exact.hpp"
#include "rydmis/hilbert.hpp"
#include "rydmis/schedule.hpp"
#include "rydmis/subspace.hpp"

namespace rydmis {

// Nested-commutator operator basis for one drive parameter:
//   O_1 = [H, dH],  O_{k+1} = [H, [H, O_k]]   (2k-1 nestings)
//   Q_k = [H, O_k]                            (2k nestings)
// O_k is anti-Hermitian and Q_k Hermitian for real-symmetric H, dH.
struct KrylovBasis {
  int order_l = 0;
  std::vector<Eigen::MatrixXcd> ops_odd;   // O_1..O_l
  std::vector<Eigen::MatrixXcd> ops_even;  // Q_1..Q_l
  BasisKind basis = BasisKind::Full;
  int n_sites = 0;
  std::uint64_t projector_id = 0;
};

KrylovBasis build_krylov_basis(const OperatorMatrix& h,
                               const OperatorMatrix& dh, int l);

enum class CostKind { FullTrace, SubspaceNN, SubspaceNNN };

struct VariationalSolution {
  Eigen::VectorXd alphas;  // alpha_1..alpha_l
  double cost_value = 0.0; // S_l in the inner product that was minimized
  CostKind cost_kind = CostKind::FullTrace;
  double epsilon = 0.0;
};

// Default regularizer weight for subspace costs: 1e-6 * Tr(P)/dim.
double default_epsilon(const SubspaceProjector& p);

// Minimizes S_l = <G,G> with G = dH + sum_k alpha_k Q_k, where <A,B> is
// Tr(A^dag B) (FullTrace) or Tr(A^dag P B P) + eps Tr(A^dag B) (Subspace*).
// O_k columns are normalized to unit Frobenius norm inside the solve; a
// singular system falls back to the minimum-norm least-squares solution.
VariationalSolution solve_variational(const KrylovBasis& basis,
                                      const OperatorMatrix& dh, CostKind kind,
                                      const SubspaceProjector* p = nullptr,
                                      double epsilon = 0.0);

// A^(l) = i sum_k alpha_k O_k.
OperatorMatrix krylov_agp_matrix(const KrylovBasis& basis,
                                 const Eigen::VectorXd& alphas);

enum class KrylovVariant {
  Full,         // basis and cost in the full space
  SubBuiltNN,   // basis built and solved inside the NN subspace, embedded
  SubBuiltNNN,
  CostNN,       // full-space basis, subspace-restricted cost function
  CostNNN,
};

// Gauge-potential pair (A_Omega, A_Delta) from the order-l Krylov ansatz at
// time t, always returned in the full basis. epsilon < 0 selects the default.
std::pair<OperatorMatrix, OperatorMatrix> cd_terms_krylov(
    const GraphInstance& g, const AnnealSchedule& schedule, double t, int l,
    KrylovVariant variant, double epsilon = -1.0);

// ---------------------------------------------------------------------------
// Spectral evaluation path. In the eigenbasis of H the basis operators are
// diagonal-gap polynomials, O_k ~ w^(2k-1) dH~, so the variational solve
// reduces to a weighted polynomial least-squares over squared gaps. Solved
// in a shifted-Chebyshev basis with long double accumulation, then converted
// back to monomial alpha_k. Identical math to solve_variational, far cheaper.

struct SpectralContext {
  EigenDecomposition ed;   // of the (restricted) Hamiltonian
  double range = 0.0;      // spectral range E_max - E_min
  Eigen::MatrixXd dht;     // U^T dH U for one drive parameter
};

struct SpectralSolveResult {
  Eigen::VectorXd alphas;       // monomial alpha_1..alpha_l
  Eigen::VectorXd cheb;         // internal Chebyshev coefficients u_j
  double cost = 0.0;
  std::vector<double> o_norms;  // ||O_k||_F, k=1..l
};

// Subspace-cost inputs: rows of U at kept indices and dH restricted block.
struct SubspaceCostData {
  Eigen::MatrixXd u_rows;   // d x dim
  Eigen::MatrixXd dh_block; // d x d
  double epsilon = 0.0;
};

SpectralSolveResult solve_variational_spectral(
    const SpectralContext& ctx, int l,
    const SubspaceCostData* sub = nullptr);

// Normal-equation data built once for orders up to l_max; solve(l) extracts
// the leading l x l block. The expensive gap-moment accumulation is shared,
// so sweeping l on a fixed (H, dH) costs one pass over matrix elements.
class SpectralSystem {
 public:
  SpectralSystem(const SpectralContext& ctx, int l_max,
                 const SubspaceCostData* sub = nullptr);
  SpectralSolveResult solve(int l) const;
  int l_max() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// A^(l) as a dense matrix from a spectral solve (i * real antisymmetric).
Eigen::MatrixXd krylov_agp_antisym(const SpectralContext& ctx,
                                   const Eigen::VectorXd& cheb);

}  // namespace rydmis
