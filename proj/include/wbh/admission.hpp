// SPDX-License-Identifier: Apache-2.0
//
// AP selection on top of the solver: iterative removal of the worst-gap AP,
// an exhaustive-search oracle, and user admission under per-AP power limits
// via a projected subgradient on the power weights.

#pragma once

#include <string>
#include <vector>

#include "wbh/large_system.hpp"
#include "wbh/solver.hpp"

namespace wbh {

struct RemovalRecord {
  int index;   // original index
  double gap;  // x at removal (NaN for exhaustive search rejections)
};

template <class StateT>
struct AdmissionResult {
  std::vector<int> admitted;  // ascending original indices
  std::vector<RemovalRecord> removal_order;
  StateT final_state;  // on the admitted subset; default if none admitted
  int solver_calls = 0;
};

using AdmissionOutcome = AdmissionResult<SolverState>;
using LargeAdmissionOutcome = AdmissionResult<LargeSystemSolution>;

inline constexpr double kDefaultGapTol = 1e-6;

// Repeatedly solve on the current subset and drop argmax_i x_i (ties to the
// lowest index) until max x <= x_tol or no APs remain.
AdmissionOutcome admit_saps(const Channel& channel,
                            const ScenarioConfig& config,
                            const SolverOptions& opts = {},
                            double x_tol = kDefaultGapTol);

// Optimal benchmark: first feasible subset in decreasing cardinality,
// lexicographic within a cardinality. Guarded to N <= 16.
AdmissionOutcome exhaustive_search(const Channel& channel,
                                   const ScenarioConfig& config,
                                   const SolverOptions& opts = {},
                                   double x_tol = kDefaultGapTol);

// Same removal loop driven by the large-system solver on d only.
LargeAdmissionOutcome admit_saps_large(const Vec& d,
                                       const ScenarioConfig& config,
                                       const SolverOptions& opts = {},
                                       double x_tol = kDefaultGapTol);

// Scalar-channel user admission instance: direct link gains g_ii, cross
// gains g_ij, per-transmitter power limits and user SINR targets.
struct UserAdmissionProblem {
  Mat g;      // |S| x |S| nonnegative link gains
  Vec P_per;  // per-transmitter power limits, watts
  Vec n;      // noise variances
  Vec gamma;  // SINR targets, linear

  void validate() const;
  UserAdmissionProblem restrict_to(const std::vector<int>& idx) const;
};

struct SubgradientSchedule {
  double t0 = 1.0;     // step at iteration 1; t_k = t0 / k
  int max_iters = 500;
};

struct UserAdmissionOutcome {
  std::vector<int> admitted;
  std::vector<RemovalRecord> removal_order;
  SolverState final_state;  // fixed-gain state on the admitted subset
  Vec final_weights;        // weights of the last weighted-sum-power solve
  int solver_calls = 0;
  int subgradient_iterations = 0;
  bool subgradient_converged = true;  // false if any inner loop hit the cap
};

// Outer projected subgradient ascent on the power weights around the
// weighted-sum-power fixed-gain solve (w_i grows while user i exceeds its
// cap), then iterative removal of the largest-gap user.
UserAdmissionOutcome admit_users(const UserAdmissionProblem& problem,
                                 const SolverOptions& opts = {},
                                 const SubgradientSchedule& schedule = {},
                                 double x_tol = kDefaultGapTol);

// JSON result document: admitted indices, removal order with gaps, per-AP
// powers (dBm) and achieved SINRs (dB), solver call count.
std::string admission_to_json(const AdmissionOutcome& outcome,
                              const Channel& channel,
                              const ScenarioConfig& config);

}  // namespace wbh
