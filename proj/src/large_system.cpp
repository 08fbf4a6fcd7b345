// SPDX-License-Identifier: Apache-2.0

#include "wbh/large_system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wbh {

namespace {

void check_inputs(const Vec& q, const Vec& d, const Vec& w, int M) {
  if (q.size() != d.size() || q.size() != w.size()) {
    throw std::invalid_argument("large system: vector length mismatch");
  }
  if (M < 1) throw std::invalid_argument("large system: M must be positive");
  for (int i = 0; i < q.size(); ++i) {
    if (q[i] < 0.0) throw std::invalid_argument("large system: q must be >= 0");
    if (!(d[i] > 0.0)) throw std::invalid_argument("large system: d must be > 0");
    if (!(w[i] > 0.0)) throw std::invalid_argument("large system: w must be > 0");
  }
}

double phi_map(double phi, int i, const Vec& q, const Vec& d, const Vec& w,
               double M) {
  double load = 0.0;
  for (int j = 0; j < q.size(); ++j) {
    if (j == i) continue;
    load += q[j] * d[j] / (1.0 + q[j] * d[j] * phi);
  }
  return 1.0 / (w[i] + load / M);
}

}  // namespace

Vec phi_fixed_point(const Vec& q, const Vec& d, const Vec& w, int M,
                    double tol) {
  check_inputs(q, d, w, M);
  const double Md = static_cast<double>(M);
  Vec phi(q.size());
  for (int i = 0; i < q.size(); ++i) {
    double value = 1.0 / w[i];
    for (int iter = 0; iter < 10000; ++iter) {
      double next = phi_map(value, i, q, d, w, Md);
      double delta = std::abs(next - value);
      value = next;
      if (delta <= tol) break;
    }
    phi[i] = value;
  }
  return phi;
}

Vec phi_derivative(const Vec& q, const Vec& d, const Vec& w, int M,
                   const Vec& phi) {
  check_inputs(q, d, w, M);
  if (phi.size() != q.size()) {
    throw std::invalid_argument("phi_derivative: phi length mismatch");
  }
  const double Md = static_cast<double>(M);
  Vec dphi(q.size());
  for (int i = 0; i < q.size(); ++i) {
    double load = 0.0;
    for (int j = 0; j < q.size(); ++j) {
      if (j == i) continue;
      double t = 1.0 + q[j] * d[j] * phi[i];
      load += q[j] * d[j] / (t * t);
    }
    dphi[i] = -phi[i] / (w[i] + load / Md);
  }
  return dphi;
}

double det_eq_cross_channel(const Vec& q, const Vec& d, const Vec& phi, int i,
                            int j) {
  if (i == j) {
    throw std::invalid_argument(
        "det_eq_cross_channel: i == j has a different limit (use the "
        "phi/phi' form)");
  }
  if (i < 0 || j < 0 || i >= q.size() || j >= q.size()) {
    throw std::invalid_argument("det_eq_cross_channel: index out of range");
  }
  double t = 1.0 + q[i] * d[i] * phi[j];
  return d[i] / (t * t);
}

LargeSystemSolution solve_l1_large(const Vec& d, const ScenarioConfig& config,
                                   const SolverOptions& opts) {
  config.validate();
  if (!(opts.epsilon > 0.0) || opts.max_iters < 1) {
    throw std::invalid_argument("solve_l1_large: bad options");
  }
  if (d.size() != config.N) {
    throw std::invalid_argument("solve_l1_large: d must have length N");
  }
  for (int i = 0; i < config.N; ++i) {
    if (!(d[i] > 0.0)) {
      throw std::invalid_argument("solve_l1_large: d must be > 0");
    }
  }

  const int N = config.N;
  const double M = static_cast<double>(config.M);
  const double MP = M * config.P;
  // same unit convention as the finite solver: epsilon is measured on q in
  // unit-mean-gain units
  const double dq_stop = opts.epsilon / d.mean();

  LargeSystemSolution sol;
  sol.q = Vec::Constant(N, MP / config.n.sum());
  sol.nu = Vec::Ones(N);
  sol.phi = config.w.cwiseInverse();
  sol.phi_prime = Vec::Zero(N);
  sol.p = Vec::Zero(N);

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    const Vec q_snapshot = sol.q;

    Vec q_bar(N);
    for (int i = 0; i < N; ++i) {
      q_bar[i] = config.gamma[i] /
                 (std::max(sol.nu[i], 1.0) * sol.phi[i] * d[i]);
    }
    q_bar *= MP / config.n.dot(q_bar);
    sol.q = opts.averaging ? Vec(0.5 * (q_bar + q_snapshot)) : q_bar;

    // one application of the fixed-point map per outer iteration; phi
    // tracks q and reaches its own fixed point as q settles
    Vec phi_next(N);
    for (int i = 0; i < N; ++i) {
      phi_next[i] = phi_map(sol.phi[i], i, sol.q, d, config.w, M);
    }
    sol.phi = phi_next;
    sol.phi_prime = phi_derivative(sol.q, d, config.w, config.M, sol.phi);

    // mu normalizes the downlink powers to the budget, w'p = M P; this is
    // the direct-gain stationarity formula with the equivalent channel
    // G_ii replaced by its deterministic equivalent M d_i phi_i^2/(-phi'_i)
    double mu = 0.0;
    for (int i = 0; i < N; ++i) {
      mu += -config.gamma[i] * sol.nu[i] * config.w[i] * sol.phi_prime[i] /
            (std::max(sol.nu[i], 1.0) * sol.q[i] * d[i] * sol.phi[i] *
             sol.phi[i] * config.P);
    }
    sol.mu = mu;
    for (int i = 0; i < N; ++i) {
      sol.p[i] = -M * config.gamma[i] * sol.nu[i] * sol.phi_prime[i] /
                 (std::max(sol.nu[i], 1.0) * sol.q[i] * d[i] * sol.phi[i] *
                  sol.phi[i] * mu);
    }
    Vec nu_next(N);
    for (int i = 0; i < N; ++i) {
      double interference = config.n[i];
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        double t = 1.0 + sol.q[i] * d[i] * sol.phi[j];
        interference += sol.p[j] * d[i] / (t * t) / M;
      }
      nu_next[i] = interference * mu * sol.q[i] / M;
    }
    sol.nu = nu_next;

    sol.iterations = iter;
    for (int i = 0; i < N; ++i) {
      if (!(sol.q[i] > 0.0) || !(sol.nu[i] > 0.0) || !(sol.mu > 0.0)) {
        throw std::runtime_error("solve_l1_large: iterate left the positive "
                                 "orthant");
      }
      if (sol.q[i] > 1e12 * MP / config.n[i]) {
        std::ostringstream msg;
        msg << "solve_l1_large: divergence guard tripped at iteration "
            << iter;
        throw std::runtime_error(msg.str());
      }
    }

    const double max_dq = (sol.q - q_snapshot).cwiseAbs().maxCoeff();
    sol.dq_history.push_back(max_dq);
    if (max_dq <= dq_stop) {
      sol.converged = true;
      break;
    }
  }
  sol.x = (sol.nu.array() - 1.0).max(0.0).matrix();
  return sol;
}

}  // namespace wbh
