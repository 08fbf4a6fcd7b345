// SPDX-License-Identifier: Apache-2.0
//
// wbh-sim: command line driver for the wireless backhaul admission
// simulator. Subcommands mirror the library: single solves, admission,
// the large-system solver, cross-method comparisons and seeded Monte
// Carlo campaigns. All outputs are reproducible from (config, seed).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "wbh/admission.hpp"
#include "wbh/harness.hpp"
#include "wbh/large_system.hpp"
#include "wbh/rng.hpp"
#include "wbh/solver.hpp"
#include "wbh/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wbh;

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;  // 0 = take the config file's seed
  std::string out_dir = "out";
  double epsilon = 1e-5;
  int max_iters = 10000;
  bool trace = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "master seed (default: from config)");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--epsilon", args.epsilon, "solver stop tolerance");
  cmd->add_option("--max-iters", args.max_iters, "solver iteration cap");
  cmd->add_flag("--trace", args.trace, "record per-iteration solver trace");
}

struct LoadedScenario {
  ScenarioFile file;
  std::uint64_t seed;
  SolverOptions solver;
};

LoadedScenario load(const CommonArgs& args) {
  LoadedScenario s;
  s.file = load_scenario_file(args.config_path);
  s.seed = args.seed != 0 ? args.seed : s.file.seed;
  s.solver.epsilon = args.epsilon;
  s.solver.max_iters = args.max_iters;
  s.solver.trace = args.trace;
  return s;
}

// layout / gains / channel come from the harness seed streams so that CLI
// results line up with monte-carlo rows for the same master seed
CellLayout make_layout(const LoadedScenario& s) {
  return gen_layout(s.file.config, s.file.cell, derive_seed(s.seed, 0, 0));
}

Vec gains_for(const LoadedScenario& s, const CellLayout& layout) {
  if (s.file.unit_gains) return Vec::Ones(s.file.config.N);
  return large_scale_gains(layout, derive_seed(s.seed, 0, 1));
}

void write_text(const fs::path& dir, const std::string& name,
                const std::string& text) {
  fs::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
  os << text;
}

json state_to_json(const SolverState& st, const ScenarioConfig& cfg,
                   const Channel& ch) {
  json j;
  j["converged"] = st.converged;
  j["iterations"] = st.iterations;
  j["mu"] = st.mu;
  for (int i = 0; i < cfg.N; ++i) {
    j["q"].push_back(st.q[i]);
    j["nu"].push_back(st.nu[i]);
    j["x"].push_back(st.x[i]);
    j["p_watts"].push_back(st.p[i] / cfg.M);
    j["p_dbm"].push_back(watts_to_dbm(st.p[i] / cfg.M));
  }
  Vec sinr = downlink_sinr(ch, st.U, st.p, cfg.n);
  for (int i = 0; i < cfg.N; ++i) j["sinr_db"].push_back(linear_to_db(sinr[i]));
  KktResiduals res = kkt_residuals(st, ch, cfg);
  j["kkt_residuals"] = {{"gap", res.gap},
                        {"dual_balance", res.dual_balance},
                        {"uplink_sinr", res.uplink_sinr},
                        {"uplink_power", res.uplink_power},
                        {"downlink_sinr", res.downlink_sinr},
                        {"downlink_power", res.downlink_power},
                        {"max", res.max()}};
  return j;
}

int cmd_gen_scenario(const CommonArgs& args) {
  LoadedScenario s = load(args);
  CellLayout layout = make_layout(s);
  Vec d = gains_for(s, layout);

  std::ostringstream csv;
  csv << "sap,x_m,y_m,distance_m,d_linear,d_db\n";
  for (int i = 0; i < layout.n_aps(); ++i) {
    csv << i << "," << layout.sap_positions(i, 0) << ","
        << layout.sap_positions(i, 1) << "," << layout.distance_m(i) << ","
        << d[i] << "," << linear_to_db(d[i]) << "\n";
  }
  write_text(args.out_dir, "layout.csv", csv.str());

  json j;
  j["M"] = s.file.config.M;
  j["N"] = s.file.config.N;
  j["P_watts"] = s.file.config.P;
  j["seed"] = s.seed;
  for (int i = 0; i < s.file.config.N; ++i) {
    j["gamma_linear"].push_back(s.file.config.gamma[i]);
    j["noise_watts"].push_back(s.file.config.n[i]);
  }
  write_text(args.out_dir, "scenario.json", j.dump(2) + "\n");
  std::cout << "wrote " << args.out_dir << "/layout.csv and scenario.json\n";
  return 0;
}

int cmd_solve_finite(const CommonArgs& args) {
  LoadedScenario s = load(args);
  CellLayout layout = make_layout(s);
  Vec d = gains_for(s, layout);
  Channel ch = gen_channel(d, s.file.config.M, derive_seed(s.seed, 0, 2));
  SolverState st = solve_l1(ch, s.file.config, s.solver);

  write_text(args.out_dir, "solution.json",
             state_to_json(st, s.file.config, ch).dump(2) + "\n");
  if (args.trace) {
    fs::create_directories(args.out_dir);
    std::ofstream os(fs::path(args.out_dir) / "trace.csv");
    emit_trace(st.trace, os);
  }
  std::cout << (st.converged ? "converged" : "NOT converged") << " in "
            << st.iterations << " iterations; max x = " << st.x.maxCoeff()
            << "\n";
  return st.converged ? 0 : 2;
}

int cmd_solve_large(const CommonArgs& args) {
  LoadedScenario s = load(args);
  CellLayout layout = make_layout(s);
  Vec d = gains_for(s, layout);
  LargeSystemSolution sol = solve_l1_large(d, s.file.config, s.solver);

  std::ostringstream csv;
  csv << "sap,d,q,nu,p_over_M_dbm,x\n";
  for (int i = 0; i < s.file.config.N; ++i) {
    csv << i << "," << d[i] << "," << sol.q[i] << "," << sol.nu[i] << ","
        << watts_to_dbm(sol.p[i] / s.file.config.M) << "," << sol.x[i]
        << "\n";
  }
  write_text(args.out_dir, "large_solution.csv", csv.str());
  std::cout << (sol.converged ? "converged" : "NOT converged") << " in "
            << sol.iterations << " iterations; max x = " << sol.x.maxCoeff()
            << "\n";
  return sol.converged ? 0 : 2;
}

int cmd_admit(const CommonArgs& args, bool exhaustive) {
  LoadedScenario s = load(args);
  CellLayout layout = make_layout(s);
  Vec d = gains_for(s, layout);
  Channel ch = gen_channel(d, s.file.config.M, derive_seed(s.seed, 0, 2));
  AdmissionOutcome out =
      exhaustive ? exhaustive_search(ch, s.file.config, s.solver)
                 : admit_saps(ch, s.file.config, s.solver);
  write_text(args.out_dir, exhaustive ? "exhaustive.json" : "admission.json",
             admission_to_json(out, ch, s.file.config) + "\n");
  std::cout << "admitted " << out.admitted.size() << " of " << s.file.config.N
            << " APs (" << out.solver_calls << " solver calls)\n";
  return 0;
}

int cmd_user_admit(const CommonArgs& args, double sap_power_dbm) {
  LoadedScenario s = load(args);
  CellLayout layout = make_layout(s);
  UserAdmissionProblem prob = synthesize_user_problem(
      layout, s.file.config, sap_power_dbm, derive_seed(s.seed, 0, 2));
  UserAdmissionOutcome out = admit_users(prob, s.solver);

  json j;
  j["admitted"] = out.admitted;
  j["solver_calls"] = out.solver_calls;
  j["subgradient_iterations"] = out.subgradient_iterations;
  j["subgradient_converged"] = out.subgradient_converged;
  j["removal_order"] = json::array();
  for (const auto& r : out.removal_order) {
    j["removal_order"].push_back({{"index", r.index}, {"x", r.gap}});
  }
  for (int k = 0; k < static_cast<int>(out.admitted.size()); ++k) {
    j["power_dbm"].push_back(watts_to_dbm(out.final_state.p[k]));
  }
  write_text(args.out_dir, "user_admission.json", j.dump(2) + "\n");
  std::cout << "admitted " << out.admitted.size() << " of "
            << layout.n_aps() << " users\n";
  return 0;
}

int cmd_compare(const CommonArgs& args, int trials) {
  LoadedScenario s = load(args);
  CellLayout layout = make_layout(s);
  Vec d = gains_for(s, layout);
  LargeVsMcResult cmp =
      compare_large_vs_mc(d, s.file.config, trials, s.seed, s.solver);
  fs::create_directories(args.out_dir);
  std::ofstream os(fs::path(args.out_dir) / "large_vs_mc.csv");
  write_large_vs_mc_csv(cmp, os);
  std::cout << "max relative error: p " << cmp.max_p_rel_err << ", nu "
            << cmp.max_nu_rel_err << " over " << trials << " trials\n";
  return 0;
}

int cmd_monte_carlo(const CommonArgs& args, const std::string& method,
                    int trials, int layouts, int max_failures,
                    double sap_power_dbm_for_mc) {
  LoadedScenario s = load(args);
  ExperimentSpec spec;
  spec.config = s.file.config;
  spec.cell = s.file.cell;
  spec.method = method_from_string(method);
  spec.trials = trials;
  spec.layouts = layouts;
  spec.seed = s.seed;
  spec.out_dir = args.out_dir;
  spec.solver = s.solver;
  spec.max_failures = max_failures;
  spec.unit_gains = s.file.unit_gains;
  spec.sap_power_dbm = sap_power_dbm_for_mc;
  ExperimentResult r = run_experiment(spec);
  std::cout << "mean admitted " << r.summary.mean_admitted << " (std "
            << r.summary.std_admitted << ") over " << r.rows.size()
            << " rows; results in " << args.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wireless backhaul admission control simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  int trials = 100;
  int layouts = 1;
  int max_failures = 0;
  double sap_power_dbm = 24.0;
  std::string method = "finite";

  auto* gen = app.add_subcommand("gen-scenario",
                                 "generate a layout and large-scale gains");
  add_common(gen, args);

  auto* fin = app.add_subcommand("solve-finite",
                                 "one realization of the fixed-point solver");
  add_common(fin, args);

  auto* lrg = app.add_subcommand("solve-large",
                                 "large-system solver on the layout gains");
  add_common(lrg, args);

  auto* adm = app.add_subcommand("admit", "iterative AP removal");
  add_common(adm, args);

  auto* exh = app.add_subcommand("exhaustive",
                                 "exhaustive-search admission (N <= 16)");
  add_common(exh, args);

  auto* usr = app.add_subcommand("user-admit",
                                 "user admission with per-AP power limits");
  add_common(usr, args);
  usr->add_option("--sap-power-dbm", sap_power_dbm,
                  "per-AP transmit power limit");

  auto* cmp = app.add_subcommand(
      "compare-large-mc", "large-system outputs vs finite Monte Carlo");
  add_common(cmp, args);
  cmp->add_option("--trials", trials, "channel realizations");

  auto* mc = app.add_subcommand("monte-carlo", "seeded experiment campaign");
  add_common(mc, args);
  mc->add_option("--method", method,
                 "finite | large | exhaustive | user-admit | maxmin-check");
  mc->add_option("--trials", trials, "realizations per layout");
  mc->add_option("--layouts", layouts, "number of AP layouts");
  mc->add_option("--max-failures", max_failures,
                 "allowed non-converged solver runs");
  mc->add_option("--sap-power-dbm", sap_power_dbm,
                 "per-AP cap for --method user-admit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_scenario(args);
    if (fin->parsed()) return cmd_solve_finite(args);
    if (lrg->parsed()) return cmd_solve_large(args);
    if (adm->parsed()) return cmd_admit(args, false);
    if (exh->parsed()) return cmd_admit(args, true);
    if (usr->parsed()) return cmd_user_admit(args, sap_power_dbm);
    if (cmp->parsed()) return cmd_compare(args, trials);
    if (mc->parsed())
      return cmd_monte_carlo(args, method, trials, layouts, max_failures,
                             sap_power_dbm);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
