#include <algorithm>
#include <set>

#include <doctest.h>

#include "oracles.hpp"
#include "rydmis/errors.hpp"
#include "rydmis/graph.hpp"
#include "rydmis/hilbert.hpp"
#include "rydmis/subspace.hpp"

using namespace rydmis;

TEST_CASE("kept masks are exactly the exclusion-free configurations") {
  const GraphInstance g = sample_king_graph(3, 3, 6.0 / 9.0, 21);
  for (const ExclusionKind kind :
       {ExclusionKind::Full, ExclusionKind::NN, ExclusionKind::NNN}) {
    const SubspaceProjector p = build_projector(g, kind);
    const auto& edges = kind == ExclusionKind::NN    ? g.edges_nn
                        : kind == ExclusionKind::NNN ? g.edges_nnn
                                                     : std::vector<std::pair<int, int>>{};
    std::vector<std::int32_t> expect;
    for (std::uint64_t b = 0; b < (1ull << g.n_sites); ++b)
      if (oracle::independent(b, edges))
        expect.push_back(static_cast<std::int32_t>(b));
    CHECK(p.kept == expect);
    CHECK(std::is_sorted(p.kept.begin(), p.kept.end()));
    CHECK(p.d_is() == static_cast<int>(expect.size()));
    // pos_of inverts kept and is -1 elsewhere.
    for (std::uint64_t b = 0; b < (1ull << g.n_sites); ++b) {
      const std::int32_t pos = p.pos_of[b];
      if (std::binary_search(expect.begin(), expect.end(),
                             static_cast<std::int32_t>(b))) {
        CHECK(p.kept[pos] == static_cast<std::int32_t>(b));
      } else {
        CHECK(pos == -1);
      }
    }
  }
}

TEST_CASE("subspace nesting: NNN within NN within full") {
  const GraphInstance g = sample_king_graph(4, 4, 11.0 / 16.0, 5);
  const SubspaceProjector full = build_projector(g, ExclusionKind::Full);
  const SubspaceProjector nn = build_projector(g, ExclusionKind::NN);
  const SubspaceProjector nnn = build_projector(g, ExclusionKind::NNN);
  CHECK(full.d_is() == 1 << g.n_sites);
  CHECK(nn.d_is() < full.d_is());
  CHECK(nnn.d_is() < nn.d_is());
  const std::set<std::int32_t> nn_set(nn.kept.begin(), nn.kept.end());
  for (const std::int32_t b : nnn.kept) CHECK(nn_set.count(b) == 1);
  CHECK(full.id != nn.id);
  CHECK(nn.id != nnn.id);
}

TEST_CASE("restrict and embed round trips") {
  const GraphInstance g = sample_king_graph(3, 3, 6.0 / 9.0, 8);
  const SubspaceProjector p = build_projector(g, ExclusionKind::NN);
  const OperatorMatrix h = build_hamiltonian(g, 2.0, 5.0);

  const OperatorMatrix hr = restrict_to(h, p);
  CHECK(hr.basis == BasisKind::Subspace);
  CHECK(hr.dim() == p.d_is());
  CHECK(hr.hermitian);
  CHECK(hr.projector_id == p.id);
  for (int a = 0; a < p.d_is(); ++a)
    for (int b = 0; b < p.d_is(); ++b)
      CHECK(hr.m(a, b) == h.m(p.kept[a], p.kept[b]));

  const OperatorMatrix he = embed(hr, p);
  CHECK(he.basis == BasisKind::Full);
  CHECK(he.dim() == h.dim());
  // Embedded matrix equals P H P: original inside the block, zero elsewhere.
  for (Eigen::Index r = 0; r < h.dim(); ++r)
    for (Eigen::Index c = 0; c < h.dim(); ++c) {
      const bool in_block = p.pos_of[r] >= 0 && p.pos_of[c] >= 0;
      CHECK(he.m(r, c) == (in_block ? h.m(r, c) : std::complex<double>{}));
    }
  // restrict(embed(x)) is the identity.
  const OperatorMatrix back = restrict_to(he, p);
  CHECK(back.m.isApprox(hr.m));
}

TEST_CASE("projector identity is enforced") {
  const GraphInstance g = sample_king_graph(3, 3, 6.0 / 9.0, 8);
  const SubspaceProjector nn = build_projector(g, ExclusionKind::NN);
  const SubspaceProjector nnn = build_projector(g, ExclusionKind::NNN);
  const OperatorMatrix h = build_hamiltonian(g, 2.0, 5.0);
  const OperatorMatrix hr = restrict_to(h, nn);
  CHECK_THROWS_AS(embed(hr, nnn), spec_error);
  CHECK_THROWS_AS(restrict_to(hr, nn), spec_error);  // already restricted
}
