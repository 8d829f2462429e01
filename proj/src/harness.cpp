#include "rydmis/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "rydmis/agp_exact.hpp"
#include "rydmis/errors.hpp"
#include "rydmis/subspace.hpp"

namespace rydmis {

namespace {

constexpr double kFillLo = 0.62, kFillHi = 0.83;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

bool is_krylov(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::KrylovFull:
    case ProtocolKind::KrylovSubNN:
    case ProtocolKind::KrylovSubNNN:
    case ProtocolKind::KrylovCostNN:
    case ProtocolKind::KrylovCostNNN:
      return true;
    default:
      return false;
  }
}

ExclusionKind subspace_of(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::ExactSubNNN:
    case ProtocolKind::KrylovSubNNN:
    case ProtocolKind::KrylovCostNNN:
      return ExclusionKind::NNN;
    case ProtocolKind::ExactSubNN:
    case ProtocolKind::KrylovSubNN:
    case ProtocolKind::KrylovCostNN:
      return ExclusionKind::NN;
    default:
      return ExclusionKind::NNN;  // full-space runs: report solution-space dim
  }
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.n_atoms, a.protocol, a.l, a.instance_key) <
           std::tie(b.n_atoms, b.protocol, b.l, b.instance_key);
  });
}

// Mean and population-std summary rows per (n_atoms, protocol, l) group,
// over the numeric fidelity columns; recomputable from the detail rows.
void append_summaries(std::vector<ResultRow>& rows) {
  std::map<std::tuple<int, std::string, int>, std::vector<const ResultRow*>>
      groups;
  for (const ResultRow& r : rows)
    if (r.row_type == "detail")
      groups[{r.n_atoms, r.protocol, r.l}].push_back(&r);
  std::vector<ResultRow> extra;
  for (const auto& [key, members] : groups) {
    const double n = static_cast<double>(members.size());
    ResultRow mean, dev;
    mean.row_type = "mean";
    dev.row_type = "std";
    mean.n_atoms = dev.n_atoms = std::get<0>(key);
    mean.protocol = dev.protocol = std::get<1>(key);
    mean.l = dev.l = std::get<2>(key);
    auto stats = [&](auto field) {
      double m = 0.0;
      for (const ResultRow* r : members) m += r->*field;
      m /= n;
      double v = 0.0;
      for (const ResultRow* r : members) v += (r->*field - m) * (r->*field - m);
      return std::pair<double, double>{m, std::sqrt(v / n)};
    };
    std::tie(mean.f_s, dev.f_s) = stats(&ResultRow::f_s);
    std::tie(mean.one_minus_fs_sq, dev.one_minus_fs_sq) =
        stats(&ResultRow::one_minus_fs_sq);
    std::tie(mean.neg_ln_fs, dev.neg_ln_fs) = stats(&ResultRow::neg_ln_fs);
    std::tie(mean.wall_time_s, dev.wall_time_s) = stats(&ResultRow::wall_time_s);
    extra.push_back(std::move(mean));
    extra.push_back(std::move(dev));
  }
  rows.insert(rows.end(), extra.begin(), extra.end());
}

}  // namespace

void parallel_for(int n_tasks, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n_tasks <= 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min(workers, n_tasks);
  pool.reserve(count);
  for (int w = 0; w < count; ++w) pool.emplace_back(body);
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::pair<int, int> choose_lattice_dims(int n) {
  if (n < 1) throw spec_error("atom count must be positive");
  std::pair<int, int> best{0, 0};
  int best_skew = 1 << 30;
  double best_fill = 0.0;
  const int lo = static_cast<int>(std::ceil(n / kFillHi));
  const int hi = static_cast<int>(std::floor(n / kFillLo));
  for (int area = lo; area <= hi; ++area) {
    for (int r = 1; r * r <= area; ++r) {
      if (area % r != 0) continue;
      const int c = area / r;
      const double fill = static_cast<double>(n) / area;
      if (fill < kFillLo || fill > kFillHi) continue;
      const int skew = c - r;
      if (skew < best_skew || (skew == best_skew && fill > best_fill)) {
        best = {r, c};
        best_skew = skew;
        best_fill = fill;
      }
    }
  }
  if (best.first == 0)
    throw spec_error("no lattice shape reaches the fill band for n=" +
                     std::to_string(n));
  return best;
}

std::vector<std::pair<int, int>> all_lattice_shapes(int n) {
  std::vector<std::pair<int, int>> shapes;
  const int lo = static_cast<int>(std::ceil(n / kFillHi));
  const int hi = static_cast<int>(std::floor(n / kFillLo));
  for (int area = lo; area <= hi; ++area)
    for (int r = 1; r * r <= area; ++r) {
      if (area % r != 0) continue;
      const double fill = static_cast<double>(n) / area;
      if (fill >= kFillLo && fill <= kFillHi) shapes.push_back({r, area / r});
    }
  if (shapes.empty())
    throw spec_error("no lattice shape reaches the fill band for n=" +
                     std::to_string(n));
  std::sort(shapes.begin(), shapes.end(),
            [](const std::pair<int, int>& a, const std::pair<int, int>& b) {
              return std::pair(a.second - a.first, a.first * a.second) <
                     std::pair(b.second - b.first, b.first * b.second);
            });
  return shapes;
}

namespace {

std::vector<GraphInstance> sample_ensemble_impl(int n, int count,
                                                std::uint64_t seed,
                                                int resample_factor,
                                                bool allow_short) {
  const auto shapes = all_lattice_shapes(n);
  std::vector<GraphInstance> out;
  std::set<std::string> seen;
  const long budget = static_cast<long>(count) * resample_factor;
  for (long attempt = 0; attempt < budget && (int)out.size() < count;
       ++attempt) {
    const auto [rows, cols] = shapes[attempt % shapes.size()];
    GraphInstance g =
        sample_king_graph(rows, cols, static_cast<double>(n) / (rows * cols),
                          mix_seed(seed, attempt));
    if (seen.insert(canonical_form(g)).second) out.push_back(std::move(g));
  }
  if (!allow_short && static_cast<int>(out.size()) < count)
    throw spec_error("resampling budget exhausted before ensemble quota");
  return out;
}

}  // namespace

std::vector<GraphInstance> sample_ensemble(int n, int count,
                                           std::uint64_t seed,
                                           int resample_factor) {
  return sample_ensemble_impl(n, count, seed, resample_factor, false);
}

std::vector<GraphInstance> sample_ensemble_best_effort(int n, int count,
                                                       std::uint64_t seed,
                                                       int resample_factor) {
  return sample_ensemble_impl(n, count, seed, resample_factor, true);
}

ResultRow run_single(const GraphInstance& g, const AnnealSchedule& schedule,
                     ProtocolKind kind, int l, double rtol, double epsilon,
                     std::shared_ptr<const AlphaGrid> grid) {
  ProtocolOptions opts;
  opts.l = l;
  opts.epsilon = epsilon;
  const auto protocol = make_protocol(kind, g, schedule, opts, std::move(grid));
  EvolveOptions eo;
  eo.rtol = rtol;
  const EvolutionResult res = evolve(g, schedule, *protocol, eo);

  ResultRow row;
  row.instance_key = canonical_form(g);
  row.n_atoms = g.n_sites;
  row.protocol = protocol_name(kind);
  row.l = is_krylov(kind) ? l : 0;
  row.d_is = build_projector(g, subspace_of(kind)).d_is();
  row.d_mis = solve_mis_exact(g).d_mis;
  row.f_s = res.fidelity;
  row.one_minus_fs_sq = 1.0 - res.fidelity * res.fidelity;
  row.neg_ln_fs =
      res.fidelity > 0.0 ? -std::log(res.fidelity) : kNegLnInfSentinel;
  row.wall_time_s = res.wall_time_s;
  return row;
}

std::vector<ResultRow> run_sweep_atoms(const ExperimentSpec& spec) {
  std::vector<ProtocolKind> kinds = spec.protocols;
  if (kinds.empty())
    kinds = {ProtocolKind::None, ProtocolKind::ExactFull,
             ProtocolKind::ExactSubNN, ProtocolKind::ExactSubNNN};
  struct Task {
    GraphInstance g;
  };
  std::vector<Task> tasks;
  for (const int n : spec.atom_counts)
    for (GraphInstance& g :
         sample_ensemble(n, spec.instances_per_count, mix_seed(spec.seed, n),
                         spec.resample_factor))
      tasks.push_back({std::move(g)});

  std::vector<std::vector<ResultRow>> slots(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), spec.workers, [&](int i) {
    for (const ProtocolKind kind : kinds)
      slots[i].push_back(run_single(tasks[i].g, spec.schedule, kind, 1,
                                    spec.rtol, spec.epsilon));
  });

  std::vector<ResultRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  sort_rows(rows);
  append_summaries(rows);
  return rows;
}

std::vector<ResultRow> run_sweep_krylov(const ExperimentSpec& spec,
                                        const std::vector<int>& l_values) {
  if (l_values.empty()) throw spec_error("sweep-krylov needs orders");
  std::vector<GraphInstance> instances;
  for (const int n : spec.atom_counts)
    for (GraphInstance& g :
         sample_ensemble(n, spec.instances_per_count, mix_seed(spec.seed, n),
                         spec.resample_factor))
      instances.push_back(std::move(g));

  ProtocolOptions defaults;
  std::vector<std::vector<ResultRow>> slots(instances.size());
  parallel_for(static_cast<int>(instances.size()), spec.workers, [&](int i) {
    const GraphInstance& g = instances[i];
    const Eigen::Index dim = Eigen::Index{1} << g.n_sites;
    std::shared_ptr<const AlphaGrid> grid;
    if (dim > defaults.grid_dim_threshold)
      grid = build_alpha_grid(g, spec.schedule, {KrylovVariant::Full},
                              l_values, spec.epsilon, defaults.grid_nodes);
    for (const int l : l_values) {
      slots[i].push_back(run_single(g, spec.schedule, ProtocolKind::KrylovFull,
                                    l, spec.rtol, spec.epsilon, grid));
      slots[i].push_back(run_single(g, spec.schedule, ProtocolKind::KrylovSubNN,
                                    l, spec.rtol, spec.epsilon));
      slots[i].push_back(run_single(g, spec.schedule,
                                    ProtocolKind::KrylovSubNNN, l, spec.rtol,
                                    spec.epsilon));
    }
    // Exact subspace driving: the saturation level of the expansion.
    slots[i].push_back(
        run_single(g, spec.schedule, ProtocolKind::ExactSubNN, 0, spec.rtol));
    slots[i].push_back(
        run_single(g, spec.schedule, ProtocolKind::ExactSubNNN, 0, spec.rtol));
  });

  std::vector<ResultRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  sort_rows(rows);
  append_summaries(rows);
  return rows;
}

std::vector<ResultRow> run_hist_cost(const ExperimentSpec& spec,
                                     const std::vector<int>& l_values) {
  if (l_values.empty()) throw spec_error("hist-cost needs orders");
  std::vector<GraphInstance> instances;
  for (const int n : spec.atom_counts)
    for (GraphInstance& g :
         sample_ensemble(n, spec.instances_per_count, mix_seed(spec.seed, n),
                         spec.resample_factor))
      instances.push_back(std::move(g));

  ProtocolOptions defaults;
  std::vector<std::vector<ResultRow>> slots(instances.size());
  parallel_for(static_cast<int>(instances.size()), spec.workers, [&](int i) {
    const GraphInstance& g = instances[i];
    const Eigen::Index dim = Eigen::Index{1} << g.n_sites;
    std::shared_ptr<const AlphaGrid> grid;
    if (dim > defaults.grid_dim_threshold)
      grid = build_alpha_grid(
          g, spec.schedule,
          {KrylovVariant::Full, KrylovVariant::CostNN, KrylovVariant::CostNNN},
          l_values, spec.epsilon, defaults.grid_nodes);
    slots[i].push_back(
        run_single(g, spec.schedule, ProtocolKind::None, 0, spec.rtol));
    for (const int l : l_values)
      for (const ProtocolKind kind :
           {ProtocolKind::KrylovFull, ProtocolKind::KrylovCostNN,
            ProtocolKind::KrylovCostNNN})
        slots[i].push_back(run_single(g, spec.schedule, kind, l, spec.rtol,
                                      spec.epsilon, grid));
  });

  // Hardest decile: lowest 10% of instances by no-driving fidelity.
  std::vector<std::pair<double, std::string>> baseline;
  for (const auto& s : slots)
    for (const ResultRow& r : s)
      if (r.protocol == "NONE") baseline.emplace_back(r.f_s, r.instance_key);
  std::sort(baseline.begin(), baseline.end());
  const std::size_t k =
      std::max<std::size_t>(1, baseline.size() / 10);
  std::set<std::string> hardest;
  for (std::size_t i = 0; i < k; ++i) hardest.insert(baseline[i].second);

  std::vector<ResultRow> rows;
  for (auto& s : slots)
    for (ResultRow& r : s) {
      r.hardest_decile = hardest.count(r.instance_key) ? 1 : 0;
      rows.push_back(std::move(r));
    }
  sort_rows(rows);
  append_summaries(rows);
  return rows;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows, bool with_decile) {
  std::string out =
      "row_type,instance_key,n_atoms,protocol,l,d_is,d_mis,F_s,"
      "one_minus_Fs_sq,neg_ln_Fs,wall_time_s";
  if (with_decile) out += ",hardest_decile";
  out += "\r\n";
  for (const ResultRow& r : rows) {
    out += r.row_type;
    out += ',';
    out += csv_escape(r.instance_key);
    out += ',' + std::to_string(r.n_atoms);
    out += ',' + csv_escape(r.protocol);
    out += ',' + std::to_string(r.l);
    if (r.row_type == "detail") {
      out += ',' + std::to_string(r.d_is);
      out += ',' + std::to_string(r.d_mis);
    } else {
      out += ",,";
    }
    out += ',' + fmt(r.f_s);
    out += ',' + fmt(r.one_minus_fs_sq);
    out += ',' + fmt(r.neg_ln_fs);
    out += ',' + fmt(r.wall_time_s);
    if (with_decile)
      out += ',' + (r.hardest_decile < 0 ? std::string()
                                         : std::to_string(r.hardest_decile));
    out += "\r\n";
  }
  return out;
}

void write_rows_csv(const std::vector<ResultRow>& rows,
                    const std::string& path, bool with_decile) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw spec_error("cannot open output file: " + path);
  f << rows_to_csv(rows, with_decile);
}

void dump_agp_matrix(const GraphInstance& g, const AnnealSchedule& schedule,
                     double t, DriveParam param, ExclusionKind space,
                     const std::string& path) {
  const SubspaceProjector proj = build_projector(g, space);
  const auto [a_omega, a_delta] = cd_terms_exact(g, schedule, t, proj);
  const double lam_dot = param == DriveParam::Omega ? schedule.omega_dot(t)
                                                    : schedule.delta_dot(t);
  const Eigen::MatrixXcd m =
      lam_dot * (param == DriveParam::Omega ? a_omega.m : a_delta.m);
  const Eigen::Index dim = m.rows();

  const EigenDecomposition ed = eig_sym(
      dense_h(build_tables(g), schedule.omega(t), schedule.delta(t)));
  const Eigen::MatrixXcd u = ed.vectors.cast<std::complex<double>>();
  const Eigen::MatrixXcd energy = u.adjoint() * m * u;

  const SubspaceProjector nn = build_projector(g, ExclusionKind::NN);
  const SubspaceProjector nnn = build_projector(g, ExclusionKind::NNN);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw spec_error("cannot open output file: " + path);
  f << "basis,row,col,magnitude_log10,nn_kept,nnn_kept\r\n";
  auto log_mag = [](double v) { return v > 0.0 ? std::log10(v) : -400.0; };
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) {
      const bool nn_kept = nn.pos_of[r] >= 0 && nn.pos_of[c] >= 0;
      const bool nnn_kept = nnn.pos_of[r] >= 0 && nnn.pos_of[c] >= 0;
      f << "config," << r << ',' << c << ',' << fmt(log_mag(std::abs(m(r, c))))
        << ',' << (nn_kept ? 1 : 0) << ',' << (nnn_kept ? 1 : 0) << "\r\n";
    }
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r)
      f << "energy," << r << ',' << c << ','
        << fmt(log_mag(std::abs(energy(r, c)))) << ",0,0\r\n";
}

double calibrate_t_total(const std::vector<GraphInstance>& ensemble,
                         const AnnealSchedule& base, double rtol,
                         double band_lo, double band_hi) {
  if (ensemble.empty()) throw spec_error("calibrate_t_total: empty ensemble");
  auto mean_fidelity = [&](double t_total) {
    const AnnealSchedule s = default_schedule(
        t_total, base.omega_max, base.delta_initial, base.delta_final);
    double sum = 0.0;
    for (const GraphInstance& g : ensemble) {
      const auto none = make_protocol(ProtocolKind::None, g, s);
      EvolveOptions eo;
      eo.rtol = rtol;
      sum += evolve(g, s, *none, eo).fidelity;
    }
    return sum / ensemble.size();
  };

  double t = base.t_total_us;
  double f = mean_fidelity(t);
  if (f >= band_lo && f <= band_hi) return t;

  // Bracket the band by geometric stepping (fidelity grows with T), then
  // bisect on log T if a single step jumped across.
  double t_prev = t, f_prev = f;
  for (int it = 0; it < 40; ++it) {
    t_prev = t;
    f_prev = f;
    t = f > band_hi ? t / 1.5 : t * 1.5;
    if (t < 0.02 || t > 50.0)
      throw numeric_error("t_total calibration left the supported range");
    f = mean_fidelity(t);
    if (f >= band_lo && f <= band_hi) return t;
    if ((f_prev > band_hi) != (f > band_hi)) break;  // band jumped over
  }
  double lo = std::min(t, t_prev), hi = std::max(t, t_prev);
  for (int it = 0; it < 40; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double fm = mean_fidelity(mid);
    if (fm >= band_lo && fm <= band_hi) return mid;
    (fm > band_hi ? hi : lo) = mid;
  }
  throw numeric_error("t_total calibration failed to land in the band");
}

}  // namespace rydmis
