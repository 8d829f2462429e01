#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rydmis/dynamics.hpp"
#include "rydmis/graph.hpp"
#include "rydmis/protocol.hpp"
#include "rydmis/schedule.hpp"

namespace rydmis {

// neg_ln_fs stand-in for -ln(0); finite so CSV stays numeric.
inline constexpr double kNegLnInfSentinel = 1e300;

struct ExperimentSpec {
  std::vector<int> atom_counts{11};
  int instances_per_count = 1;
  std::vector<ProtocolKind> protocols;  // empty = the operation's default set
  AnnealSchedule schedule = default_schedule();
  double rtol = 1e-8;
  double epsilon = -1.0;   // subspace-cost regularizer; < 0 = default
  std::uint64_t seed = 1;
  int workers = 1;
  int resample_factor = 200;  // sampling attempts per requested instance
};

struct ResultRow {
  std::string row_type = "detail";  // detail | mean | std
  std::string instance_key;         // canonical form; empty on summary rows
  int n_atoms = 0;
  std::string protocol;
  int l = 0;        // 0 when the protocol has no expansion order
  int d_is = 0;     // protocol's subspace dimension (NNN, i.e. the
                    // solution-space size, for full-space runs)
  int d_mis = 0;    // number of maximum independent sets
  double f_s = 0.0;
  double one_minus_fs_sq = 0.0;
  double neg_ln_fs = 0.0;
  double wall_time_s = 0.0;
  int hardest_decile = -1;  // -1 = column absent; else 0/1 per instance
};

// Smallest near-square rows x cols grid whose fill n/(rows*cols) lands in
// the sampled-fill band [0.62, 0.83].
std::pair<int, int> choose_lattice_dims(int n);

// Every rows x cols shape (rows <= cols) whose fill lands in the band,
// nearest-square first. Small n admit few distinct instances per shape, so
// ensembles rotate through all of them.
std::vector<std::pair<int, int>> all_lattice_shapes(int n);

// Deduplicated (by canonical form) ensemble of n-atom instances. Throws
// spec_error if the resampling budget runs out before `count` is reached.
std::vector<GraphInstance> sample_ensemble(int n, int count,
                                           std::uint64_t seed,
                                           int resample_factor = 200);

// Same, but returns whatever was found when the graph family has fewer than
// `count` symmetry classes (e.g. 13 exist at n = 4).
std::vector<GraphInstance> sample_ensemble_best_effort(
    int n, int count, std::uint64_t seed, int resample_factor = 200);

// One evolution -> one row. A prebuilt coefficient grid may be shared.
ResultRow run_single(const GraphInstance& g, const AnnealSchedule& schedule,
                     ProtocolKind kind, int l, double rtol,
                     double epsilon = -1.0,
                     std::shared_ptr<const AlphaGrid> grid = nullptr);

// Fig-style experiment drivers. Detail rows are sorted deterministically;
// summary rows (mean, population std) follow per (n, protocol, l) group.
std::vector<ResultRow> run_sweep_atoms(const ExperimentSpec& spec);
std::vector<ResultRow> run_sweep_krylov(const ExperimentSpec& spec,
                                        const std::vector<int>& l_values);
std::vector<ResultRow> run_hist_cost(const ExperimentSpec& spec,
                                     const std::vector<int>& l_values = {3, 6,
                                                                         9});

std::string rows_to_csv(const std::vector<ResultRow>& rows, bool with_decile);
void write_rows_csv(const std::vector<ResultRow>& rows,
                    const std::string& path, bool with_decile);

// |lambda_dot * A_lambda| element magnitudes at time t in the configuration
// basis and in the eigenbasis of H(t) (ordered by ascending eigenvalue),
// as flat CSV: basis,row,col,magnitude_log10,nn_kept,nnn_kept. Zero elements
// get magnitude_log10 = -400. Membership flags apply to the configuration
// basis; they are 0 in the energy basis.
void dump_agp_matrix(const GraphInstance& g, const AnnealSchedule& schedule,
                     double t, DriveParam param, ExclusionKind space,
                     const std::string& path);

// Tunes T so the NONE-protocol ensemble mean fidelity falls inside
// [band_lo, band_hi]; all other experiments then reuse the returned T.
double calibrate_t_total(const std::vector<GraphInstance>& ensemble,
                         const AnnealSchedule& base, double rtol,
                         double band_lo = 0.05, double band_hi = 0.55);

// Shared work-queue helper: runs fn(0..n_tasks-1) on `workers` threads.
void parallel_for(int n_tasks, int workers,
                  const std::function<void(int)>& fn);

}  // namespace rydmis
