// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration: seeded Monte Carlo campaigns over layouts and
// channel realizations, cross-method comparisons, CSV/JSON emission. All
// outputs are pure functions of (spec, master seed); timings are kept out
// of the deterministic result files.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wbh/admission.hpp"
#include "wbh/scenario.hpp"
#include "wbh/solver.hpp"

namespace wbh {

enum class Method {
  kFinite,       // admit_saps per realization
  kLarge,        // admit_saps_large per layout (realization-independent)
  kExhaustive,   // exhaustive_search per realization
  kUserAdmit,    // admit_users on a synthesized per-layout user problem
  kMaxminCheck,  // per-realization max-min SINR on the large-system selection
};

Method method_from_string(const std::string& name);
std::string method_name(Method m);

struct ExperimentSpec {
  ScenarioConfig config;
  CellParams cell;
  Method method = Method::kFinite;
  int trials = 1;   // channel realizations per layout
  int layouts = 1;  // AP location layouts
  std::uint64_t seed = 1;
  std::string out_dir;  // empty = no files written
  SolverOptions solver;
  double x_tol = kDefaultGapTol;
  int max_failures = 0;   // allowed non-converged solver runs
  bool unit_gains = false;  // d_i = 1 instead of pathloss + shadowing
  double sap_power_dbm = 24.0;  // per-AP cap for Method::kUserAdmit
};

struct ResultRow {
  int layout = 0;
  int trial = 0;
  Method method = Method::kFinite;
  int admitted = 0;
  double sum_power_dbm = 0;
  Vec x;        // per-AP gap (NaN where removed)
  Vec p_dbm;    // per-AP physical transmit power, dBm (NaN where removed)
  Vec sinr_db;  // per-AP achieved downlink SINR, dB (NaN where removed)
  double min_ratio = 0;  // min_i SINR_i/gamma_i over admitted APs
  int iterations = 0;
  bool solver_ok = true;
  double wall_ms = 0;
};

struct ExperimentSummary {
  Method method;
  int layouts = 0;
  int trials = 0;
  double mean_admitted = 0, std_admitted = 0;
  double mean_sum_power_dbm = 0, std_sum_power_dbm = 0;
  double mean_iterations = 0;
  double mean_wall_ms = 0;
  int failures = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // sorted by (layout, trial)
  ExperimentSummary summary;
};

// Runs layouts x trials instances of the chosen method. With out_dir set,
// writes results.csv (deterministic), timings.csv (wall clock, excluded
// from the deterministic set) and summary.json.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Per-AP comparison of the large-system solution against Monte Carlo means
// of the finite solver (spec.trials realizations of one layout's d).
struct LargeVsMcRow {
  int sap = 0;
  double d = 0;
  double p_large = 0, p_mc_mean = 0, p_mc_std = 0, p_rel_err = 0;
  double nu_large = 0, nu_mc_mean = 0, nu_mc_std = 0, nu_rel_err = 0;
};

struct LargeVsMcResult {
  std::vector<LargeVsMcRow> rows;
  double max_p_rel_err = 0;
  double max_nu_rel_err = 0;
};

LargeVsMcResult compare_large_vs_mc(const Vec& d, const ScenarioConfig& config,
                                    int trials, std::uint64_t seed,
                                    const SolverOptions& opts = {});
void write_large_vs_mc_csv(const LargeVsMcResult& result, std::ostream& os);

// Iteration-indexed CSV of q, nu, mu and max|dq| from a traced solver run.
void emit_trace(const std::vector<TraceRow>& trace, std::ostream& os);

// CSV / summary helpers shared by the CLI.
void write_results_csv(const ExperimentResult& result, int n_aps,
                       std::ostream& os, bool with_timing);
std::string summary_to_json(const ExperimentSummary& summary);

// Synthetic per-layout user admission instance for Method::kUserAdmit: one
// user per admitted small cell, direct gains from the in-cell distance and
// cross gains from inter-cell distances under the same pathloss law.
UserAdmissionProblem synthesize_user_problem(const CellLayout& layout,
                                             const ScenarioConfig& config,
                                             double sap_power_dbm,
                                             std::uint64_t seed);

}  // namespace wbh
