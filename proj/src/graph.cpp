#include "rydmis/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "rydmis/errors.hpp"

namespace rydmis {

namespace {

void compute_edges(GraphInstance& g) {
  g.edges_nn.clear();
  g.edges_nnn.clear();
  const double r_nn = g.spacing_um * (1.0 + kEdgeRadiusTol);
  const double r_nnn = std::sqrt(2.0) * g.spacing_um * (1.0 + kEdgeRadiusTol);
  for (int i = 0; i < g.n_sites; ++i) {
    for (int j = i + 1; j < g.n_sites; ++j) {
      const double dx = g.coords_um[i][0] - g.coords_um[j][0];
      const double dy = g.coords_um[i][1] - g.coords_um[j][1];
      const double r = std::hypot(dx, dy);
      if (r <= r_nn) g.edges_nn.emplace_back(i, j);
      if (r <= r_nnn) g.edges_nnn.emplace_back(i, j);
    }
  }
}

void finalize(GraphInstance& g) {
  g.n_sites = static_cast<int>(g.cells.size());
  g.coords_um.resize(g.cells.size());
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    g.coords_um[i] = {g.cells[i][0] * g.spacing_um, g.cells[i][1] * g.spacing_um};
  }
  g.fill_fraction =
      g.rows > 0 && g.cols > 0
          ? static_cast<double>(g.n_sites) / (g.rows * g.cols)
          : 0.0;
  compute_edges(g);
}

}  // namespace

GraphInstance make_instance(const std::vector<std::array<int, 2>>& cells,
                            int rows, int cols, double spacing_um,
                            std::uint64_t seed) {
  if (cells.empty()) throw spec_error("instance must have at least one site");
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = i + 1; j < cells.size(); ++j)
      if (cells[i] == cells[j]) throw spec_error("coincident lattice sites");
  GraphInstance g;
  g.cells = cells;
  g.rows = rows;
  g.cols = cols;
  g.spacing_um = spacing_um;
  g.seed = seed;
  std::sort(g.cells.begin(), g.cells.end());
  finalize(g);
  return g;
}

GraphInstance sample_king_graph(int rows, int cols, double fill,
                                std::uint64_t seed, double spacing_um) {
  if (rows < 1 || cols < 1) throw spec_error("rows*cols must be >= 1");
  if (!(fill > 0.0 && fill <= 1.0)) throw spec_error("fill must be in (0,1]");
  const int total = rows * cols;
  const int n = static_cast<int>(std::lround(fill * total));
  if (n < 1) throw spec_error("target site count rounds to zero");

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::array<int, 2>> cells;
  cells.reserve(n);
  for (int k = 0; k < n; ++k)
    cells.push_back({order[k] % cols, order[k] / cols});
  return make_instance(cells, rows, cols, spacing_um, seed);
}

std::string canonical_form(const GraphInstance& g) {
  auto normalized = [](std::vector<std::array<int, 2>> pts) {
    int mx = pts[0][0], my = pts[0][1];
    for (const auto& p : pts) {
      mx = std::min(mx, p[0]);
      my = std::min(my, p[1]);
    }
    for (auto& p : pts) {
      p[0] -= mx;
      p[1] -= my;
    }
    std::sort(pts.begin(), pts.end());
    return pts;
  };

  std::string best;
  for (int map = 0; map < 8; ++map) {
    std::vector<std::array<int, 2>> pts = g.cells;
    for (auto& p : pts) {
      int x = p[0], y = p[1];
      if (map & 4) std::swap(x, y);
      if (map & 1) x = -x;
      if (map & 2) y = -y;
      p = {x, y};
    }
    pts = normalized(std::move(pts));
    std::string key;
    for (const auto& p : pts) {
      key += std::to_string(p[0]);
      key += ',';
      key += std::to_string(p[1]);
      key += ';';
    }
    if (best.empty() || key < best) best = key;
  }
  return best;
}

bool is_independent_set(std::uint64_t mask,
                        const std::vector<std::pair<int, int>>& edges) {
  for (const auto& [i, j] : edges)
    if ((mask >> i & 1) && (mask >> j & 1)) return false;
  return true;
}

namespace {

// Max independent set size by branch and bound on adjacency bitmasks.
int mis_size_bb(const std::vector<std::uint64_t>& adj, std::uint64_t cand,
                int current, int best) {
  while (cand) {
    if (current + std::popcount(cand) <= best) return best;
    const int v = std::countr_zero(cand);
    cand &= cand - 1;
    // include v
    best = std::max(best, mis_size_bb(adj, cand & ~adj[v], current + 1, best));
    // exclude v: continue loop
  }
  return std::max(best, current);
}

void enumerate_mis(const std::vector<std::uint64_t>& adj, std::uint64_t cand,
                   std::uint64_t chosen, int current, int target,
                   std::vector<std::uint64_t>& out) {
  if (current == target) {
    out.push_back(chosen);
    return;
  }
  while (cand) {
    if (current + std::popcount(cand) < target) return;
    const int v = std::countr_zero(cand);
    cand &= cand - 1;
    enumerate_mis(adj, cand & ~adj[v], chosen | (1ull << v), current + 1,
                  target, out);
  }
}

}  // namespace

MisSolution solve_mis_exact(const GraphInstance& g) {
  if (g.n_sites > 32) throw spec_error("solve_mis_exact: n_sites > 32");
  std::vector<std::uint64_t> adj(g.n_sites, 0);
  for (const auto& [i, j] : g.graph_edges()) {
    adj[i] |= 1ull << j;
    adj[j] |= 1ull << i;
  }
  const std::uint64_t all =
      g.n_sites == 64 ? ~0ull : ((1ull << g.n_sites) - 1);
  MisSolution sol;
  sol.mis_size = mis_size_bb(adj, all, 0, 0);
  enumerate_mis(adj, all, 0, 0, sol.mis_size, sol.mis_states);
  std::sort(sol.mis_states.begin(), sol.mis_states.end());
  sol.d_mis = static_cast<int>(sol.mis_states.size());
  return sol;
}

std::string to_json(const GraphInstance& g) {
  nlohmann::json j;
  j["spacing_um"] = g.spacing_um;
  j["lattice_dims"] = {g.rows, g.cols};
  auto coords = nlohmann::json::array();
  for (const auto& c : g.coords_um) coords.push_back({c[0], c[1]});
  j["coords"] = coords;
  j["seed"] = g.seed;
  return j.dump(2);
}

GraphInstance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw spec_error(std::string("bad instance JSON: ") + e.what());
  }
  if (!j.contains("spacing_um") || !j.contains("coords") ||
      !j.contains("lattice_dims"))
    throw spec_error("instance JSON missing required fields");
  const double a = j["spacing_um"].get<double>();
  if (!(a > 0)) throw spec_error("spacing_um must be positive");
  std::vector<std::array<int, 2>> cells;
  for (const auto& c : j["coords"]) {
    const double x = c[0].get<double>(), y = c[1].get<double>();
    cells.push_back({static_cast<int>(std::lround(x / a)),
                     static_cast<int>(std::lround(y / a))});
  }
  return make_instance(cells, j["lattice_dims"][0].get<int>(),
                       j["lattice_dims"][1].get<int>(), a,
                       j.value("seed", std::uint64_t{0}));
}

void save_instance(const GraphInstance& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw spec_error("cannot open " + path + " for writing");
  out << to_json(g) << '\n';
}

GraphInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw spec_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return instance_from_json(ss.str());
}

}  // namespace rydmis
