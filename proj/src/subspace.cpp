#include "rydmis/subspace.hpp"

#include "rydmis/errors.hpp"

namespace rydmis {

namespace {

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

SubspaceProjector build_projector(const GraphInstance& g, ExclusionKind kind) {
  if (g.n_sites > kMaxSites) throw spec_error("dimension cap exceeded");
  const Eigen::Index dim = Eigen::Index{1} << g.n_sites;
  const std::vector<std::pair<int, int>> no_edges;
  const auto& edges = kind == ExclusionKind::NN    ? g.edges_nn
                      : kind == ExclusionKind::NNN ? g.edges_nnn
                                                   : no_edges;
  SubspaceProjector p;
  p.n_sites = g.n_sites;
  p.kind = kind;
  p.pos_of.assign(dim, -1);
  for (Eigen::Index b = 0; b < dim; ++b) {
    if (is_independent_set(static_cast<std::uint64_t>(b), edges)) {
      p.pos_of[b] = static_cast<std::int32_t>(p.kept.size());
      p.kept.push_back(static_cast<std::int32_t>(b));
    }
  }
  std::uint64_t h = fnv1a(&p.n_sites, sizeof(p.n_sites), 14695981039346656037ull);
  p.id = fnv1a(p.kept.data(), p.kept.size() * sizeof(std::int32_t), h);
  return p;
}

OperatorMatrix restrict_to(const OperatorMatrix& m, const SubspaceProjector& p) {
  if (m.basis != BasisKind::Full || m.n_sites != p.n_sites ||
      m.dim() != (Eigen::Index{1} << p.n_sites))
    throw spec_error("restrict_to: basis mismatch");
  const int d = p.d_is();
  OperatorMatrix out;
  out.m.resize(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) out.m(i, j) = m.m(p.kept[i], p.kept[j]);
  out.basis = BasisKind::Subspace;
  out.n_sites = p.n_sites;
  out.projector_id = p.id;
  out.hermitian = m.hermitian;
  return out;
}

OperatorMatrix embed(const OperatorMatrix& m, const SubspaceProjector& p) {
  if (m.basis != BasisKind::Subspace || m.projector_id != p.id ||
      m.dim() != p.d_is())
    throw spec_error("embed: basis mismatch");
  const Eigen::Index dim = Eigen::Index{1} << p.n_sites;
  const int d = p.d_is();
  OperatorMatrix out;
  out.m = Eigen::MatrixXcd::Zero(dim, dim);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) out.m(p.kept[i], p.kept[j]) = m.m(i, j);
  out.basis = BasisKind::Full;
  out.n_sites = p.n_sites;
  out.hermitian = m.hermitian;
  return out;
}

}  // namespace rydmis
