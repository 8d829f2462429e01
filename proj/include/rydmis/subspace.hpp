#pragma once

#include <cstdint>
#include <vector>

#include "rydmis/graph.hpp"
#include "rydmis/hilbert.hpp"

namespace rydmis {

enum class ExclusionKind { Full, NN, NNN };

// Independent-set subspace of the 2^n configuration basis: bitmasks with no
// simultaneously excited pair from the exclusion edge set. kept is sorted
// ascending by bitmask value so the subspace basis order is reproducible.
struct SubspaceProjector {
  int n_sites = 0;
  ExclusionKind kind = ExclusionKind::Full;
  std::vector<std::int32_t> kept;     // full-basis indices, ascending
  std::vector<std::int32_t> pos_of;   // 2^n -> subspace index or -1
  std::uint64_t id = 0;               // hash of (n, kept)

  int d_is() const { return static_cast<int>(kept.size()); }
};

SubspaceProjector build_projector(const GraphInstance& g, ExclusionKind kind);

// M[kept, kept]; Hermiticity preserved.
OperatorMatrix restrict_to(const OperatorMatrix& m, const SubspaceProjector& p);

// Scatter back into the 2^n matrix, zero elsewhere (U_IS M U_IS^T).
OperatorMatrix embed(const OperatorMatrix& m, const SubspaceProjector& p);

}  // namespace rydmis
