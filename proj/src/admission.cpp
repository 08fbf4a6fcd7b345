// SPDX-License-Identifier: Apache-2.0

#include "wbh/admission.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "wbh/units.hpp"

namespace wbh {

namespace {

// Iterative removal: solve on the active set, stop at the first feasible
// subset, otherwise drop the argmax gap (ties to the lowest original
// index). Terminates in at most N solver calls.
template <class StateT, class SolveFn>
AdmissionResult<StateT> iterative_removal(int n, SolveFn&& solve,
                                          double x_tol) {
  AdmissionResult<StateT> out;
  std::vector<int> active(n);
  std::iota(active.begin(), active.end(), 0);

  while (!active.empty()) {
    StateT state = solve(active);
    ++out.solver_calls;
    int worst = 0;
    for (int k = 1; k < static_cast<int>(active.size()); ++k) {
      if (state.x[k] > state.x[worst]) worst = k;
    }
    if (state.x[worst] <= x_tol) {
      out.admitted = active;
      out.final_state = std::move(state);
      return out;
    }
    out.removal_order.push_back({active[worst], state.x[worst]});
    active.erase(active.begin() + worst);
  }
  return out;  // nothing admissible
}

}  // namespace

AdmissionOutcome admit_saps(const Channel& channel,
                            const ScenarioConfig& config,
                            const SolverOptions& opts, double x_tol) {
  config.validate();
  return iterative_removal<SolverState>(
      config.N,
      [&](const std::vector<int>& active) {
        return solve_l1(channel.restrict_to(active),
                        config.restrict_to(active), opts);
      },
      x_tol);
}

LargeAdmissionOutcome admit_saps_large(const Vec& d,
                                       const ScenarioConfig& config,
                                       const SolverOptions& opts,
                                       double x_tol) {
  config.validate();
  if (d.size() != config.N) {
    throw std::invalid_argument("admit_saps_large: d must have length N");
  }
  return iterative_removal<LargeSystemSolution>(
      config.N,
      [&](const std::vector<int>& active) {
        Vec d_sub(static_cast<int>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) {
          d_sub[static_cast<int>(k)] = d[active[k]];
        }
        return solve_l1_large(d_sub, config.restrict_to(active), opts);
      },
      x_tol);
}

AdmissionOutcome exhaustive_search(const Channel& channel,
                                   const ScenarioConfig& config,
                                   const SolverOptions& opts, double x_tol) {
  config.validate();
  if (config.N > 16) {
    throw std::invalid_argument(
        "exhaustive_search: N > 16 (2^N feasibility solves); use admit_saps");
  }
  AdmissionOutcome out;
  const int n = config.N;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // decreasing cardinality, lexicographic (combinations of sorted indices)
  for (int k = n; k >= 1; --k) {
    std::vector<int> subset(k);
    std::iota(subset.begin(), subset.end(), 0);
    while (true) {
      SolverState state = solve_l1(channel.restrict_to(subset),
                                   config.restrict_to(subset), opts);
      ++out.solver_calls;
      if (state.x.maxCoeff() <= x_tol) {
        out.admitted = subset;
        out.final_state = std::move(state);
        std::vector<bool> in(n, false);
        for (int idx : subset) in[idx] = true;
        for (int idx = 0; idx < n; ++idx) {
          if (!in[idx]) out.removal_order.push_back({idx, nan});
        }
        return out;
      }
      // next lexicographic combination of {0..n-1} of size k
      int pos = k - 1;
      while (pos >= 0 && subset[pos] == n - k + pos) --pos;
      if (pos < 0) break;
      ++subset[pos];
      for (int t = pos + 1; t < k; ++t) subset[t] = subset[t - 1] + 1;
    }
  }
  for (int idx = 0; idx < n; ++idx) out.removal_order.push_back({idx, nan});
  return out;
}

void UserAdmissionProblem::validate() const {
  const int n = static_cast<int>(g.rows());
  if (g.cols() != n || n < 1) {
    throw std::invalid_argument("user problem: g must be square");
  }
  if (P_per.size() != n || this->n.size() != n || gamma.size() != n) {
    throw std::invalid_argument("user problem: vector length mismatch");
  }
  for (int i = 0; i < n; ++i) {
    if (!(g(i, i) > 0.0)) {
      throw std::invalid_argument("user problem: g_ii must be > 0");
    }
    if (!(P_per[i] > 0.0) || !(this->n[i] > 0.0) || !(gamma[i] > 0.0)) {
      throw std::invalid_argument("user problem: P, n, gamma must be > 0");
    }
    for (int j = 0; j < n; ++j) {
      if (g(i, j) < 0.0) {
        throw std::invalid_argument("user problem: gains must be >= 0");
      }
    }
  }
}

UserAdmissionProblem UserAdmissionProblem::restrict_to(
    const std::vector<int>& idx) const {
  UserAdmissionProblem out;
  const int k = static_cast<int>(idx.size());
  out.g.resize(k, k);
  out.P_per.resize(k);
  out.n.resize(k);
  out.gamma.resize(k);
  for (int a = 0; a < k; ++a) {
    out.P_per[a] = P_per[idx[a]];
    out.n[a] = n[idx[a]];
    out.gamma[a] = gamma[idx[a]];
    for (int b = 0; b < k; ++b) out.g(a, b) = g(idx[a], idx[b]);
  }
  return out;
}

namespace {

constexpr double kPowerCapSlack = 1e-4;   // p*_i <= P_i (1 + slack)
constexpr double kObjectiveTol = 1e-6;
constexpr double kWeightFloor = 1e-10;    // keeps the inner problem posed

// Minimal powers meeting every target with equality: p = (I - B)^{-1} b for
// the normalized coupling matrix B_ij = gamma_i g_ij / g_ii. A positive
// solution within the caps certifies the set; the weighted-sum solver's
// fixed point always spends the whole budget, so it cannot be used to
// certify per-link caps when the set is supportable with slack.
bool min_power_solution(const UserAdmissionProblem& prob, Vec& p_min) {
  const int n = static_cast<int>(prob.g.rows());
  Mat A = Mat::Identity(n, n);
  Vec b(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i) A(i, j) = -prob.gamma[i] * prob.g(i, j) / prob.g(i, i);
    }
    b[i] = prob.gamma[i] * prob.n[i] / prob.g(i, i);
  }
  p_min = A.partialPivLu().solve(b);
  // positivity of the solution is equivalent to spectral radius < 1 here
  for (int i = 0; i < n; ++i) {
    if (!(p_min[i] > 0.0) || !std::isfinite(p_min[i])) return false;
    double check = prob.g(i, i) * p_min[i];
    double rhs = prob.gamma[i] * prob.n[i];
    for (int j = 0; j < n; ++j) {
      if (j != i) rhs += prob.gamma[i] * prob.g(i, j) * p_min[j];
    }
    if (std::abs(check - rhs) > 1e-6 * std::max(1.0, std::abs(rhs))) {
      return false;
    }
  }
  return true;
}

bool caps_feasible(const UserAdmissionProblem& prob, Vec& p_min) {
  if (!min_power_solution(prob, p_min)) return false;
  for (int i = 0; i < p_min.size(); ++i) {
    if (p_min[i] > prob.P_per[i]) return false;
  }
  return true;
}

struct SubgradientResult {
  SolverState state;
  Vec weights;
  int iterations = 0;
  bool converged = false;
};

// Inner loop of the user admission: maximize over the power weights the
// optimum f(w) of the weighted-sum-power problem. By the envelope theorem
// the ascent direction for w_i carries the sign of p*_i - P_i (a user above
// its cap gets a heavier weight), with diminishing steps t_k = t0 / k
// projected onto the nonnegative orthant. Sets that are supportable within
// their caps are certified up front through the minimal-power solution,
// which then replaces the budget-saturating powers of the fixed-point
// solve.
SubgradientResult solve_weighted_problem(const UserAdmissionProblem& prob,
                                         const SolverOptions& opts,
                                         const SubgradientSchedule& schedule) {
  if (!(schedule.t0 > 0.0) || schedule.max_iters < 1) {
    throw std::invalid_argument("admit_users: step schedule must be positive");
  }
  const int n = static_cast<int>(prob.g.rows());
  SubgradientResult res;
  res.weights = Vec::Ones(n);
  double prev_obj = std::numeric_limits<double>::infinity();

  Vec p_min;
  const bool feasible_within_caps = caps_feasible(prob, p_min);

  for (int k = 1; k <= schedule.max_iters; ++k) {
    Vec w_solver = res.weights.cwiseMax(kWeightFloor);
    ScenarioConfig cfg;
    cfg.M = 1;  // unscaled scalar links
    cfg.N = n;
    cfg.P = w_solver.dot(prob.P_per);
    cfg.w = w_solver;
    cfg.n = prob.n;
    cfg.gamma = prob.gamma;

    res.state = solve_l1_fixed_gain(prob.g, cfg, opts);
    res.iterations = k;

    if (feasible_within_caps) {
      // optimum objective is zero and the minimal powers respect the caps
      res.state.p = p_min;
      res.state.x.setZero();
      res.converged = true;
      break;
    }
    const Vec& p_star = res.state.p;

    double obj = res.state.x.sum();
    bool caps_ok = true;
    for (int i = 0; i < n; ++i) {
      if (p_star[i] > prob.P_per[i] * (1.0 + kPowerCapSlack)) caps_ok = false;
    }
    if (caps_ok && std::abs(obj - prev_obj) <= kObjectiveTol) {
      res.converged = true;
      break;
    }
    prev_obj = obj;

    double t = schedule.t0 / static_cast<double>(k);
    for (int i = 0; i < n; ++i) {
      res.weights[i] =
          std::max(res.weights[i] + t * (p_star[i] - prob.P_per[i]), 0.0);
    }
  }
  return res;
}

}  // namespace

UserAdmissionOutcome admit_users(const UserAdmissionProblem& problem,
                                 const SolverOptions& opts,
                                 const SubgradientSchedule& schedule,
                                 double x_tol) {
  problem.validate();
  UserAdmissionOutcome out;
  const int n = static_cast<int>(problem.g.rows());
  std::vector<int> active(n);
  std::iota(active.begin(), active.end(), 0);

  while (!active.empty()) {
    SubgradientResult res =
        solve_weighted_problem(problem.restrict_to(active), opts, schedule);
    out.solver_calls += res.iterations;
    out.subgradient_iterations += res.iterations;
    if (!res.converged) out.subgradient_converged = false;

    int worst = 0;
    for (int k = 1; k < static_cast<int>(active.size()); ++k) {
      if (res.state.x[k] > res.state.x[worst]) worst = k;
    }
    if (res.state.x[worst] <= x_tol) {
      out.admitted = active;
      out.final_state = std::move(res.state);
      out.final_weights = std::move(res.weights);
      return out;
    }
    out.removal_order.push_back({active[worst], res.state.x[worst]});
    active.erase(active.begin() + worst);
  }
  return out;
}

std::string admission_to_json(const AdmissionOutcome& outcome,
                              const Channel& channel,
                              const ScenarioConfig& config) {
  nlohmann::json j;
  j["admitted"] = outcome.admitted;
  j["solver_calls"] = outcome.solver_calls;
  j["removal_order"] = nlohmann::json::array();
  for (const auto& rec : outcome.removal_order) {
    nlohmann::json r;
    r["index"] = rec.index;
    if (std::isnan(rec.gap)) {
      r["x"] = nullptr;
    } else {
      r["x"] = rec.gap;
    }
    j["removal_order"].push_back(r);
  }
  j["power_dbm"] = nlohmann::json::array();
  j["sinr_db"] = nlohmann::json::array();
  if (!outcome.admitted.empty()) {
    const Channel sub = channel.restrict_to(outcome.admitted);
    const ScenarioConfig cfg = config.restrict_to(outcome.admitted);
    const Vec sinr = downlink_sinr(sub, outcome.final_state.U,
                                   outcome.final_state.p, cfg.n);
    for (int k = 0; k < cfg.N; ++k) {
      double p_watts = outcome.final_state.p[k] / config.M;
      j["power_dbm"].push_back(watts_to_dbm(p_watts));
      j["sinr_db"].push_back(linear_to_db(sinr[k]));
    }
  }
  return j.dump(2);
}

}  // namespace wbh
