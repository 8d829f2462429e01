#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rydmis/dynamics.hpp"
#include "rydmis/errors.hpp"
#include "rydmis/graph.hpp"
#include "rydmis/harness.hpp"
#include "rydmis/protocol.hpp"
#include "rydmis/schedule.hpp"

namespace {

using namespace rydmis;

struct SharedOpts {
  std::uint64_t seed = 1;
  std::string out;
  double t_total = kDefaultTTotalUs;
  double omega_max = kDefaultOmegaMax;
  double delta_initial = kDefaultDeltaInitial;
  double delta_final = kDefaultDeltaFinal;
  double rtol = 1e-8;
  double epsilon = -1.0;
  int workers = 1;
};

void add_shared(CLI::App* sc, SharedOpts& o) {
  sc->add_option("--seed", o.seed, "RNG seed");
  sc->add_option("--out", o.out, "output file or directory");
  sc->add_option("--t-total", o.t_total, "anneal duration in us");
  sc->add_option("--omega-max", o.omega_max, "Rabi plateau, rad/us");
  sc->add_option("--delta-initial", o.delta_initial,
                 "initial detuning, rad/us (< 0)");
  sc->add_option("--delta-final", o.delta_final,
                 "final detuning, rad/us (> 0)");
  sc->add_option("--rtol", o.rtol, "integrator relative tolerance");
  sc->add_option("--epsilon", o.epsilon,
                 "subspace-cost regularizer (< 0: default)");
  sc->add_option("--workers", o.workers, "parallel evolutions");
}

AnnealSchedule schedule_of(const SharedOpts& o) {
  return default_schedule(o.t_total, o.omega_max, o.delta_initial,
                          o.delta_final);
}

ExperimentSpec spec_of(const SharedOpts& o, const std::vector<int>& counts,
                       int instances) {
  ExperimentSpec spec;
  spec.atom_counts = counts;
  spec.instances_per_count = instances;
  spec.schedule = schedule_of(o);
  spec.rtol = o.rtol;
  spec.epsilon = o.epsilon;
  spec.seed = o.seed;
  spec.workers = o.workers;
  return spec;
}

void require_out(const SharedOpts& o) {
  if (o.out.empty()) throw spec_error("--out is required for this command");
}

int run(int argc, char** argv) {
  CLI::App app{"Rydberg-array annealer for maximum independent sets on "
               "king's-lattice graphs, with counterdiabatic driving"};
  app.require_subcommand(1);
  SharedOpts o;

  // generate
  auto* gen = app.add_subcommand("generate", "sample instances to JSON files");
  int gen_n = 11, gen_count = 1;
  gen->add_option("--n", gen_n, "atoms per instance");
  gen->add_option("--count", gen_count, "number of distinct instances");
  add_shared(gen, o);

  // solve-mis
  auto* mis = app.add_subcommand("solve-mis", "MIS report for an instance");
  std::string in_path;
  mis->add_option("--in", in_path, "instance JSON file")->required();
  add_shared(mis, o);

  // sweep-atoms
  auto* sweep_a = app.add_subcommand(
      "sweep-atoms", "exact-driving fidelity vs atom count (CSV)");
  std::vector<int> counts{4, 5, 6, 7, 8, 9};
  int instances = 10;
  std::vector<std::string> proto_names;
  sweep_a->add_option("--counts", counts, "atom counts");
  sweep_a->add_option("--instances", instances, "instances per count");
  sweep_a->add_option("--protocols", proto_names,
                      "protocol names (default NONE + exact driving)");
  add_shared(sweep_a, o);

  // sweep-krylov
  auto* sweep_k = app.add_subcommand(
      "sweep-krylov", "fidelity vs expansion order (CSV)");
  std::vector<int> k_counts{11};
  int k_instances = 10;
  std::vector<int> k_orders{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  sweep_k->add_option("--counts", k_counts, "atom counts");
  sweep_k->add_option("--instances", k_instances, "instances per count");
  sweep_k->add_option("--l-values", k_orders, "expansion orders");
  add_shared(sweep_k, o);

  // hist-cost
  auto* hist = app.add_subcommand(
      "hist-cost", "full-trace vs subspace cost comparison (CSV)");
  std::vector<int> h_counts{11};
  int h_instances = 10;
  std::vector<int> h_orders{3, 6, 9};
  hist->add_option("--counts", h_counts, "atom counts");
  hist->add_option("--instances", h_instances, "instances per count");
  hist->add_option("--l-values", h_orders, "expansion orders");
  add_shared(hist, o);

  // dump-agp
  auto* dump = app.add_subcommand(
      "dump-agp", "gauge-potential element magnitudes (CSV)");
  std::string dump_in, dump_param = "omega", dump_space = "full";
  double dump_t = -1.0;
  dump->add_option("--in", dump_in, "instance JSON (else sampled from seed)");
  dump->add_option("--t", dump_t, "evaluation time, us (default T/2)");
  dump->add_option("--param", dump_param, "omega | delta");
  dump->add_option("--space", dump_space, "full | nn | nnn");
  int dump_n = 4;
  dump->add_option("--n", dump_n, "atoms when sampling an instance");
  add_shared(dump, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // command-line validation failure
  }

  if (gen->parsed()) {
    require_out(o);
    std::filesystem::create_directories(o.out);
    const auto ensemble = sample_ensemble(gen_n, gen_count, o.seed);
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "instance_%04zu.json", i);
      save_instance(ensemble[i], (std::filesystem::path(o.out) / name).string());
    }
    std::cout << "wrote " << ensemble.size() << " instances to " << o.out
              << "\n";
  } else if (mis->parsed()) {
    const GraphInstance g = load_instance(in_path);
    const MisSolution sol = solve_mis_exact(g);
    nlohmann::json j;
    j["n_sites"] = g.n_sites;
    j["canonical_form"] = canonical_form(g);
    j["mis_size"] = sol.mis_size;
    j["d_mis"] = sol.d_mis;
    j["mis_states"] = sol.mis_states;
    const std::string text = j.dump(2);
    if (o.out.empty()) {
      std::cout << text << "\n";
    } else {
      std::ofstream f(o.out, std::ios::binary);
      if (!f) throw spec_error("cannot open output file: " + o.out);
      f << text << "\n";
    }
  } else if (sweep_a->parsed()) {
    require_out(o);
    ExperimentSpec spec = spec_of(o, counts, instances);
    for (const std::string& name : proto_names)
      spec.protocols.push_back(protocol_from_name(name));
    write_rows_csv(run_sweep_atoms(spec), o.out, false);
  } else if (sweep_k->parsed()) {
    require_out(o);
    write_rows_csv(
        run_sweep_krylov(spec_of(o, k_counts, k_instances), k_orders), o.out,
        false);
  } else if (hist->parsed()) {
    require_out(o);
    write_rows_csv(run_hist_cost(spec_of(o, h_counts, h_instances), h_orders),
                   o.out, true);
  } else if (dump->parsed()) {
    require_out(o);
    const GraphInstance g = dump_in.empty()
                                ? sample_ensemble(dump_n, 1, o.seed).front()
                                : load_instance(dump_in);
    const AnnealSchedule sched = schedule_of(o);
    const double t = dump_t < 0.0 ? 0.5 * sched.t_total_us : dump_t;
    DriveParam param;
    if (dump_param == "omega") param = DriveParam::Omega;
    else if (dump_param == "delta") param = DriveParam::Delta;
    else throw spec_error("--param must be omega or delta");
    ExclusionKind space;
    if (dump_space == "full") space = ExclusionKind::Full;
    else if (dump_space == "nn") space = ExclusionKind::NN;
    else if (dump_space == "nnn") space = ExclusionKind::NNN;
    else throw spec_error("--space must be full, nn or nnn");
    dump_agp_matrix(g, sched, t, param, space, o.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rydmis::spec_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rydmis::numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
