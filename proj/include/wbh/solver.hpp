// SPDX-License-Identifier: Apache-2.0
//
// Finite-system primal-dual fixed-point solver for the l1-relaxed AP
// admission problem, its fixed-gain (scalar channel) variant, KKT residual
// verification and the max-min SINR specialization.

#pragma once

#include <vector>

#include "wbh/beamforming.hpp"
#include "wbh/scenario.hpp"

namespace wbh {

struct SolverOptions {
  // Stop when max_i |q_i - q_prev_i| <= epsilon, measured in units where
  // the mean large-scale gain is one. The iteration is invariant under a
  // joint rescaling of channel gains and powers, so this keeps one default
  // meaningful whether noise is ~1 W or ~1e-13 W; for unit-gain scenarios
  // it is the plain absolute tolerance.
  double epsilon = 1e-5;
  int max_iters = 10000;
  bool averaging = true;    // halve the step: q <- (q_bar + q_prev)/2
  bool trace = false;       // record per-iteration (q, nu, mu, max|dq|)
};

struct TraceRow {
  int iteration;
  Vec q;
  Vec nu;
  double mu;
  double max_dq;
};

// Primal/dual iterate of the fixed-point solver. q and p are the scaled
// powers of the model (physical powers are q_i/M and p_i/M).
struct SolverState {
  Vec q;       // scaled dual uplink powers, > 0
  Vec nu;      // duals of the SINR constraints, > 0
  double mu = 0;  // dual of the power constraint, > 0
  Vec x;       // SINR gaps, x_i = max(nu_i - 1, 0) at termination
  Vec p;       // scaled downlink powers
  BeamformerSet U;
  int iterations = 0;
  bool converged = false;
  bool nu_underflow = false;        // some nu_i fell below 1e-12
  std::vector<double> dq_history;   // max|dq| per iteration
  std::vector<TraceRow> trace;      // filled when options.trace is set
};

// Iterates: snapshot q; per-AP power update against the MMSE quadratic
// form; normalization to n'q = M P; averaging with the snapshot; MMSE
// beamformer and equivalent-channel refresh; mu, p, nu updates from the
// stationarity system. Stops on max|q - q_snapshot| <= epsilon, then
// extracts x_i = max(nu_i - 1, 0). Non-convergence is reported through
// `converged`, never silently truncated.
SolverState solve_l1(const Channel& channel, const ScenarioConfig& config,
                     const SolverOptions& opts = {});

// Same iteration with a fixed gain matrix G (no beamformer update); used
// for scalar-channel problems and for replaying a frozen equivalent
// channel. config.M is the power scaling (use M = 1 for unscaled links).
SolverState solve_l1_fixed_gain(const Mat& G, const ScenarioConfig& config,
                                const SolverOptions& opts = {});

// Max-norm residuals of the stationarity system, each scaled by the
// magnitude of its left-hand side. A converged solve has all six small;
// the gap equation uses max(|lhs|, 1) since x is frequently zero.
struct KktResiduals {
  double gap;            // x_i vs max(nu_i - 1, 0)
  double dual_balance;   // M nu_i / q_i vs interference-weighted duals
  double uplink_sinr;    // (1+x_i) G_ii q_i / (M gamma_i) vs sum + w_i
  double uplink_power;   // n'q / M vs P
  double downlink_sinr;  // (1+x_i) G_ii p_i / (M gamma_i) vs sum + n_i
  double downlink_power; // w'p / M vs P

  double max() const;
};

KktResiduals kkt_residuals(const SolverState& state, const Channel& channel,
                           const ScenarioConfig& config);
KktResiduals kkt_residuals_fixed_gain(const SolverState& state, const Mat& G,
                                      const ScenarioConfig& config);

// Gap below which an iterate counts as feasible (x_i = 0 is a floating
// point equality).
inline constexpr double kMaxminGapTol = 1e-6;

// min_i SINR_i / gamma_i of the converged all-feasible state, plus the
// largest deviation of any AP's ratio from that minimum. Requires x = 0.
struct MaxminRatio {
  double ratio;
  double max_deviation;
};

MaxminRatio maxmin_ratio(const SolverState& state, const Channel& channel,
                         const ScenarioConfig& config);

// Max-min SINR balancing under the same budget: the power iteration of the
// solver with the dual factor pinned to one, plus the downlink power vector
// that realizes the balanced ratio. Valid whether or not the targets are
// met (ratio < 1 means the set is not supportable at these targets).
struct MaxminSolution {
  double ratio;  // balanced min_i SINR_i / gamma_i, from the downlink powers
  Vec q;         // scaled uplink powers at the balanced point
  Vec p;         // scaled downlink powers, w'p = M P
  BeamformerSet U;
  Vec sinr;      // achieved downlink SINRs
  int iterations = 0;
  bool converged = false;
};

MaxminSolution maxmin_solve(const Channel& channel,
                            const ScenarioConfig& config,
                            const SolverOptions& opts = {});

}  // namespace wbh
