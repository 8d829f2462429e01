#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rydmis/constants.hpp"

namespace rydmis {

// A king's-lattice unit-disk graph instance: occupied sites of a
// rows x cols square lattice with spacing `spacing_um`.
//
// edges_nn : pairs within a*(1+delta)          (side moves; the strongly
//            blockaded pairs, interaction ~26x the drive amplitude)
// edges_nnn: pairs within sqrt(2)*a*(1+delta)  (side + diagonal moves; the
//            king unit-disk edges that define the independence problem)
struct GraphInstance {
  int n_sites = 0;
  std::vector<std::array<int, 2>> cells;          // integer lattice points
  std::vector<std::array<double, 2>> coords_um;   // cells * spacing_um
  double spacing_um = kDefaultSpacingUm;
  std::vector<std::pair<int, int>> edges_nn;      // smaller index first
  std::vector<std::pair<int, int>> edges_nnn;     // superset of edges_nn
  int rows = 0, cols = 0;
  double fill_fraction = 0.0;
  std::uint64_t seed = 0;

  // Edges of the graph whose maximum independent sets are being sought.
  const std::vector<std::pair<int, int>>& graph_edges() const {
    return edges_nnn;
  }
};

struct MisSolution {
  int mis_size = 0;
  std::vector<std::uint64_t> mis_states;  // bitmasks, ascending
  int d_mis = 0;
};

// Relative tolerance guarding float ties at exactly a and sqrt(2)*a.
inline constexpr double kEdgeRadiusTol = 1e-6;

// Uniformly samples round(fill*rows*cols) occupied sites. Deterministic in
// the seed. Throws spec_error for fill outside (0,1] or a zero site count.
GraphInstance sample_king_graph(int rows, int cols, double fill,
                                std::uint64_t seed,
                                double spacing_um = kDefaultSpacingUm);

// Builds an instance from explicit lattice cells (testing and file I/O).
GraphInstance make_instance(const std::vector<std::array<int, 2>>& cells,
                            int rows, int cols,
                            double spacing_um = kDefaultSpacingUm,
                            std::uint64_t seed = 0);

// Key invariant under the 8 dihedral maps of the square lattice composed
// with translations. Two instances share a key iff symmetry-related.
std::string canonical_form(const GraphInstance& g);

// Exhaustive branch-and-bound over graph_edges(); returns every maximum
// independent set. Requires n_sites <= 32.
MisSolution solve_mis_exact(const GraphInstance& g);

bool is_independent_set(std::uint64_t mask,
                        const std::vector<std::pair<int, int>>& edges);

// JSON instance file round trip. Edges are always recomputed on load.
std::string to_json(const GraphInstance& g);
GraphInstance instance_from_json(const std::string& text);
void save_instance(const GraphInstance& g, const std::string& path);
GraphInstance load_instance(const std::string& path);

}  // namespace rydmis
