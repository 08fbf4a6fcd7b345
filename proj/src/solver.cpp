// SPDX-License-Identifier: Apache-2.0

#include "wbh/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wbh {

namespace {

void check_opts(const SolverOptions& opts) {
  if (!(opts.epsilon > 0.0)) {
    throw std::invalid_argument("solver: epsilon must be > 0");
  }
  if (opts.max_iters < 1) {
    throw std::invalid_argument("solver: max_iters must be >= 1");
  }
}

// Initialization: nu_i = 1 and uniform q with n'q = M P. Any nu >= 1 and
// normalized q > 0 is admissible; the uniform point is the simplest one.
void init_state(SolverState& state, const ScenarioConfig& config) {
  const double MP = static_cast<double>(config.M) * config.P;
  state.q = Vec::Constant(config.N, MP / config.n.sum());
  state.nu = Vec::Ones(config.N);
  state.mu = 0.0;
  state.p = Vec::Zero(config.N);
  state.x = Vec::Zero(config.N);
}

void guard_iterate(const SolverState& state, const ScenarioConfig& config) {
  const double MP = static_cast<double>(config.M) * config.P;
  for (int i = 0; i < config.N; ++i) {
    if (!(state.q[i] > 0.0) || !(state.nu[i] > 0.0) || !(state.mu > 0.0)) {
      std::ostringstream msg;
      msg << "solver: iterate left the positive orthant at iteration "
          << state.iterations << " (q_" << i << " = " << state.q[i]
          << ", nu_" << i << " = " << state.nu[i] << ", mu = " << state.mu
          << "); the duals decay without bound on deeply feasible "
             "instances if the stop tolerance never fires";
      throw std::runtime_error(msg.str());
    }
    if (state.q[i] > 1e12 * MP / config.n[i]) {
      std::ostringstream msg;
      msg << "solver: divergence guard tripped at iteration "
          << state.iterations << " (q_" << i << " = " << state.q[i]
          << "); convergence is only guaranteed locally";
      throw std::runtime_error(msg.str());
    }
  }
}

void record_trace(SolverState& state, double max_dq) {
  if (max_dq >= 0.0) state.dq_history.push_back(max_dq);
  state.trace.push_back(TraceRow{state.iterations, state.q, state.nu,
                                 state.mu, max_dq});
}

// Shared tail of one iteration given the equivalent channel: the power
// dual mu, the downlink powers and the SINR duals. max(nu_i, 1) equals
// 1 + x_i here because x_i = max(nu_i - 1, 0); it must not be replaced by
// nu_i, which only coincides above the feasibility boundary.
void update_duals_and_powers(SolverState& state, const Mat& G,
                             const ScenarioConfig& config) {
  const int N = config.N;
  const double M = static_cast<double>(config.M);
  double mu = 0.0;
  for (int i = 0; i < N; ++i) {
    mu += M * config.gamma[i] * state.nu[i] * config.w[i] /
          (std::max(state.nu[i], 1.0) * G(i, i) * state.q[i] * config.P);
  }
  state.mu = mu;
  for (int i = 0; i < N; ++i) {
    // physical power p_i/M = M gamma_i nu_i / (max(nu_i,1) G_ii q_i mu)
    state.p[i] = M * M * config.gamma[i] * state.nu[i] /
                 (std::max(state.nu[i], 1.0) * G(i, i) * state.q[i] * mu);
  }
  Vec nu_next(N);
  for (int i = 0; i < N; ++i) {
    double interference = config.n[i];
    for (int j = 0; j < N; ++j) {
      if (j != i) interference += G(i, j) * state.p[j] / M;
    }
    nu_next[i] = interference * mu * state.q[i] / M;
  }
  state.nu = nu_next;
  if (state.nu.minCoeff() < 1e-12) state.nu_underflow = true;
}

void finish(SolverState& state) {
  state.x = (state.nu.array() - 1.0).max(0.0).matrix();
}

}  // namespace

SolverState solve_l1(const Channel& channel, const ScenarioConfig& config,
                     const SolverOptions& opts) {
  config.validate();
  check_opts(opts);
  if (channel.n_aps() != config.N || channel.n_antennas() != config.M) {
    throw std::invalid_argument("solve_l1: channel/config dimension mismatch");
  }
  const int N = config.N;
  const double M = static_cast<double>(config.M);
  const double MP = M * config.P;
  // epsilon applies to q expressed in unit-mean-gain units; q itself scales
  // like 1/mean(d)
  const double dq_stop = opts.epsilon / channel.d.mean();

  SolverState state;
  init_state(state, config);
  if (opts.trace) record_trace(state, -1.0);

  // quadratic forms h_i^H (sum_{j!=i} (q_j/M) h_j h_j^H + w_i I)^{-1} h_i
  // at the current q; refreshed once per iteration together with the
  // beamformers
  MmseResult mmse = mmse_with_quadratic_forms(channel, state.q, config.w);

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    const Vec q_snapshot = state.q;

    Vec q_bar(N);
    for (int i = 0; i < N; ++i) {
      q_bar[i] = M * config.gamma[i] /
                 (std::max(state.nu[i], 1.0) * mmse.quad[i]);
    }
    q_bar *= MP / config.n.dot(q_bar);
    if (opts.averaging) {
      state.q = 0.5 * (q_bar + q_snapshot);
    } else {
      state.q = q_bar;
    }

    mmse = mmse_with_quadratic_forms(channel, state.q, config.w);
    state.U = mmse.bf;
    const Mat G = equivalent_channel(channel, state.U).G;

    update_duals_and_powers(state, G, config);

    state.iterations = iter;
    guard_iterate(state, config);

    const double max_dq = (state.q - q_snapshot).cwiseAbs().maxCoeff();
    if (opts.trace) {
      record_trace(state, max_dq);
    } else {
      state.dq_history.push_back(max_dq);
    }
    if (max_dq <= dq_stop) {
      state.converged = true;
      break;
    }
  }
  finish(state);
  return state;
}

SolverState solve_l1_fixed_gain(const Mat& G, const ScenarioConfig& config,
                                const SolverOptions& opts) {
  config.validate();
  check_opts(opts);
  if (G.rows() != config.N || G.cols() != config.N) {
    throw std::invalid_argument("solve_l1_fixed_gain: G must be N x N");
  }
  for (int i = 0; i < config.N; ++i) {
    if (!(G(i, i) > 0.0)) {
      throw std::invalid_argument("solve_l1_fixed_gain: G_ii must be > 0");
    }
  }
  const int N = config.N;
  const double M = static_cast<double>(config.M);
  const double MP = M * config.P;
  // G_ii / M plays the role of the large-scale gain here
  const double dq_stop = opts.epsilon * M / G.diagonal().mean();

  SolverState state;
  init_state(state, config);
  if (opts.trace) record_trace(state, -1.0);

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    const Vec q_snapshot = state.q;

    // uplink SINR balance rearranged for q; the uplink of AP i sees the
    // column gains G_ji
    Vec q_bar(N);
    for (int i = 0; i < N; ++i) {
      double interference = config.w[i];
      for (int j = 0; j < N; ++j) {
        if (j != i) interference += G(j, i) * state.q[j] / M;
      }
      q_bar[i] = M * config.gamma[i] * interference /
                 (std::max(state.nu[i], 1.0) * G(i, i));
    }
    q_bar *= MP / config.n.dot(q_bar);
    if (opts.averaging) {
      state.q = 0.5 * (q_bar + q_snapshot);
    } else {
      state.q = q_bar;
    }

    update_duals_and_powers(state, G, config);

    state.iterations = iter;
    guard_iterate(state, config);

    const double max_dq = (state.q - q_snapshot).cwiseAbs().maxCoeff();
    if (opts.trace) {
      record_trace(state, max_dq);
    } else {
      state.dq_history.push_back(max_dq);
    }
    if (max_dq <= dq_stop) {
      state.converged = true;
      break;
    }
  }
  finish(state);
  return state;
}

namespace {

double scaled_residual(double lhs, double rhs, double floor = 0.0) {
  return std::abs(lhs - rhs) / std::max(std::abs(lhs), std::max(floor, 1e-300));
}

}  // namespace

double KktResiduals::max() const {
  return std::max({gap, dual_balance, uplink_sinr, uplink_power,
                   downlink_sinr, downlink_power});
}

KktResiduals kkt_residuals_fixed_gain(const SolverState& state, const Mat& G,
                                      const ScenarioConfig& config) {
  const int N = config.N;
  const double M = static_cast<double>(config.M);
  KktResiduals r{0, 0, 0, 0, 0, 0};

  for (int i = 0; i < N; ++i) {
    const double one_plus_x = 1.0 + state.x[i];

    r.gap = std::max(
        r.gap, scaled_residual(state.x[i], std::max(state.nu[i] - 1.0, 0.0),
                               1.0));

    double dual_rhs = state.mu * config.n[i];
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      dual_rhs += M * G(i, j) * config.gamma[j] * state.nu[j] /
                  ((1.0 + state.x[j]) * G(j, j) * state.q[j]);
    }
    r.dual_balance = std::max(
        r.dual_balance, scaled_residual(M * state.nu[i] / state.q[i], dual_rhs));

    double ul_rhs = config.w[i];
    double dl_rhs = config.n[i];
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      ul_rhs += G(j, i) * state.q[j] / M;
      dl_rhs += G(i, j) * state.p[j] / M;
    }
    r.uplink_sinr = std::max(
        r.uplink_sinr,
        scaled_residual(one_plus_x * G(i, i) * state.q[i] / (M * config.gamma[i]),
                        ul_rhs));
    r.downlink_sinr = std::max(
        r.downlink_sinr,
        scaled_residual(one_plus_x * G(i, i) * state.p[i] / (M * config.gamma[i]),
                        dl_rhs));
  }
  r.uplink_power = scaled_residual(config.n.dot(state.q) / M, config.P);
  r.downlink_power = scaled_residual(config.w.dot(state.p) / M, config.P);
  return r;
}

KktResiduals kkt_residuals(const SolverState& state, const Channel& channel,
                           const ScenarioConfig& config) {
  const Mat G = equivalent_channel(channel, state.U).G;
  return kkt_residuals_fixed_gain(state, G, config);
}

MaxminRatio maxmin_ratio(const SolverState& state, const Channel& channel,
                         const ScenarioConfig& config) {
  if (!state.converged) {
    throw std::invalid_argument("maxmin_ratio: state is not converged");
  }
  if (state.x.maxCoeff() > kMaxminGapTol) {
    throw std::invalid_argument(
        "maxmin_ratio: state is infeasible (some x_i > 0)");
  }
  const Vec sinr = downlink_sinr(channel, state.U, state.p, config.n);
  const Vec ratios = sinr.cwiseQuotient(config.gamma);
  MaxminRatio out;
  out.ratio = ratios.minCoeff();
  out.max_deviation = (ratios.array() - out.ratio).abs().maxCoeff();
  return out;
}

MaxminSolution maxmin_solve(const Channel& channel,
                            const ScenarioConfig& config,
                            const SolverOptions& opts) {
  config.validate();
  check_opts(opts);
  if (channel.n_aps() != config.N || channel.n_antennas() != config.M) {
    throw std::invalid_argument("maxmin_solve: dimension mismatch");
  }
  const int N = config.N;
  const double M = static_cast<double>(config.M);
  const double MP = M * config.P;

  MaxminSolution sol;
  sol.q = Vec::Constant(N, MP / config.n.sum());
  MmseResult mmse = mmse_with_quadratic_forms(channel, sol.q, config.w);
  const double dq_stop = opts.epsilon / channel.d.mean();

  // power iteration of the solver with the dual factor pinned to one:
  // q_i <- gamma_i q_i / SINR_i^U, renormalized to the budget
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    const Vec q_snapshot = sol.q;
    Vec q_bar(N);
    for (int i = 0; i < N; ++i) {
      q_bar[i] = M * config.gamma[i] / mmse.quad[i];
    }
    q_bar *= MP / config.n.dot(q_bar);
    sol.q = opts.averaging ? Vec(0.5 * (q_bar + q_snapshot)) : q_bar;
    mmse = mmse_with_quadratic_forms(channel, sol.q, config.w);
    sol.iterations = iter;
    if ((sol.q - q_snapshot).cwiseAbs().maxCoeff() <= dq_stop) {
      sol.converged = true;
      break;
    }
  }
  sol.U = mmse.bf;

  // balanced uplink ratio; by duality the downlink achieves the same ratio
  // under the budget, with powers from the linear balance system
  double r = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    r = std::min(r, (sol.q[i] / M) * mmse.quad[i] / config.gamma[i]);
  }

  const Mat G = equivalent_channel(channel, sol.U).G;
  Mat A = Mat::Identity(N, N);
  Vec b(N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (j != i) A(i, j) = -r * config.gamma[i] * G(i, j) / G(i, i);
    }
    b[i] = r * config.gamma[i] * config.n[i] / G(i, i);
  }
  Vec v = A.partialPivLu().solve(b);  // physical powers p_i/M
  if (!(v.minCoeff() > 0.0)) {
    throw std::runtime_error("maxmin_solve: downlink balance produced "
                             "non-positive powers");
  }
  v *= config.P / config.w.dot(v);
  sol.p = M * v;
  sol.sinr = downlink_sinr(channel, sol.U, sol.p, config.n);
  sol.ratio = sol.sinr.cwiseQuotient(config.gamma).minCoeff();
  return sol;
}

}  // namespace wbh
