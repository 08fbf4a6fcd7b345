// SPDX-License-Identifier: Apache-2.0
//
// Large-system (M, N -> infinity at bounded N/M) counterpart of the finite
// solver. The MMSE uplink SINR, the direct equivalent-channel gain and the
// cross gains concentrate around deterministic equivalents that depend only
// on the large-scale coefficients d, so the whole primal-dual iteration can
// be run without a channel realization in O(N^2) per iteration.

#pragma once

#include "wbh/scenario.hpp"
#include "wbh/solver.hpp"

namespace wbh {

// Deterministic-equivalent iterate. phi_i is the per-unit-power asymptotic
// MMSE SINR coefficient (uplink SINR_i -> q_i d_i phi_i); phi_prime_i its
// derivative analogue, always negative.
struct LargeSystemSolution {
  Vec q;
  Vec nu;
  double mu = 0;
  Vec x;
  Vec p;  // scaled downlink powers, physical p_i/M, w'p = M P
  Vec phi;
  Vec phi_prime;
  int iterations = 0;
  bool converged = false;
  std::vector<double> dq_history;
};

// Fully converged fixed point of
//   phi_i = (w_i + (1/M) sum_{j!=i} q_j d_j / (1 + q_j d_j phi_i))^{-1},
// iterated per AP from phi_i = 1/w_i. Used standalone for validation; the
// solver itself applies the map once per outer iteration.
Vec phi_fixed_point(const Vec& q, const Vec& d, const Vec& w, int M,
                    double tol = 1e-13);

// phi'_i = -phi_i (w_i + (1/M) sum_{j!=i} q_j d_j/(1+q_j d_j phi_i)^2)^{-1}
Vec phi_derivative(const Vec& q, const Vec& d, const Vec& w, int M,
                   const Vec& phi);

// Asymptotic cross gain |h_i^H u_j|^2 -> d_i / (1 + q_i d_i phi_j)^2, i != j.
double det_eq_cross_channel(const Vec& q, const Vec& d, const Vec& phi, int i,
                            int j);

// Large-system analogue of solve_l1 driven only by (d, targets, budget).
LargeSystemSolution solve_l1_large(const Vec& d, const ScenarioConfig& config,
                                   const SolverOptions& opts = {});

}  // namespace wbh
