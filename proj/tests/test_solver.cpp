// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "wbh/rng.hpp"
#include "wbh/solver.hpp"

using namespace wbh;

namespace {

ScenarioConfig make_config(int M, int N, double P, double gamma_lin) {
  ScenarioConfig c;
  c.M = M;
  c.N = N;
  c.P = P;
  c.w = Vec::Ones(N);
  c.n = Vec::Ones(N);
  c.gamma = Vec::Constant(N, gamma_lin);
  return c;
}

Channel unit_channel(int N, int M, std::uint64_t seed) {
  return gen_channel(Vec::Ones(N), M, seed);
}

}  // namespace

TEST_CASE("convergence scenario: M=3 N=4 gamma=3.01dB P=10") {
  ScenarioConfig cfg = make_config(3, 4, 10.0, 2.0);
  SolverOptions opts;
  opts.trace = true;
  // fixed representative draw; the q step is negligible by iteration 8
  Channel ch = unit_channel(4, 3, 3);
  SolverState st = solve_l1(ch, cfg, opts);
  CHECK(st.converged);
  CHECK(st.iterations < 50);
  // the q change is negligible within the first 8 iterations
  REQUIRE(st.dq_history.size() >= 8);
  CHECK(st.dq_history[7] <= 1e-3);
  // trace has one row per iteration plus the initial point
  CHECK(static_cast<int>(st.trace.size()) == st.iterations + 1);
  CHECK(st.trace.back().max_dq <= opts.epsilon);
}

TEST_CASE("single AP, generous budget: gap-free and budget-tight") {
  ScenarioConfig cfg = make_config(4, 1, 50.0, 2.0);
  Channel ch = unit_channel(1, 4, 7);
  SolverState st = solve_l1(ch, cfg);
  REQUIRE(st.converged);
  CHECK(st.x[0] == 0.0);
  CHECK(st.nu[0] <= 1.0 + 1e-9);
  // downlink SINR meets the target and the budget is fully used
  double sinr = (st.p[0] / 4.0) * ch.H.row(0).squaredNorm() / cfg.n[0];
  CHECK(sinr >= cfg.gamma[0] * (1.0 - 1e-9));
  CHECK(cfg.w.dot(st.p) / 4.0 == doctest::Approx(cfg.P).epsilon(1e-9));
}

TEST_CASE("kkt residuals vanish at convergence and detect perturbations") {
  // overloaded instance (N = 6 APs at 2x targets on M = 3 antennas) so the
  // dual fixed point is non-degenerate
  ScenarioConfig cfg = make_config(3, 6, 10.0, 2.0);
  Channel ch = unit_channel(6, 3, 3);
  SolverOptions opts;
  opts.epsilon = 1e-9;
  SolverState st = solve_l1(ch, cfg, opts);
  REQUIRE(st.converged);
  CHECK(st.x.maxCoeff() > 0.0);  // genuinely overloaded
  KktResiduals res = kkt_residuals(st, ch, cfg);
  CHECK(res.max() <= 1e-5);

  SolverState bad = st;
  bad.q[2] *= 1.5;
  KktResiduals res_bad = kkt_residuals(bad, ch, cfg);
  CHECK(res_bad.uplink_sinr > 1e-2);
}

TEST_CASE("hand-built single-AP stationary point has zero residuals") {
  // a single overloaded AP: the whole budget cannot reach gamma, so every
  // equation of the stationarity system is tight and solvable in closed form
  const int M = 3;
  Channel ch = unit_channel(1, M, 9);
  const double g = ch.H.row(0).squaredNorm();  // G_11 for the matched filter
  ScenarioConfig cfg = make_config(M, 1, 2.0, 1.0);
  const double q = M * cfg.P / cfg.n[0];
  cfg.gamma[0] = 2.0 * g * q / (M * cfg.w[0]);  // forces 1 + x = 2

  SolverState st;
  st.q = Vec::Constant(1, q);
  double one_plus_x = M * cfg.gamma[0] * cfg.w[0] / (g * q);
  st.nu = Vec::Constant(1, one_plus_x);
  st.x = Vec::Constant(1, one_plus_x - 1.0);
  st.mu = M * st.nu[0] / (q * cfg.n[0]);
  st.p = Vec::Constant(1, M * M * cfg.gamma[0] * st.nu[0] /
                              (one_plus_x * g * q * st.mu));
  st.U.U = ch.h(0) / ch.h(0).norm();
  st.converged = true;

  KktResiduals res = kkt_residuals(st, ch, cfg);
  CHECK(res.max() <= 1e-10);
}

TEST_CASE("duality invariant and weighted power identity") {
  ScenarioConfig cfg = make_config(3, 5, 8.0, 2.5);
  SolverOptions opts;
  opts.epsilon = 1e-9;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    Channel ch = unit_channel(5, 3, seed);
    SolverState st = solve_l1(ch, cfg, opts);
    REQUIRE(st.converged);

    Vec dl = downlink_sinr(ch, st.U, st.p, cfg.n);
    Vec ul = uplink_sinr(ch, st.U, st.q, cfg.w);
    for (int i = 0; i < cfg.N; ++i) {
      double target = cfg.gamma[i] / (1.0 + st.x[i]);
      CHECK(dl[i] == doctest::Approx(target).epsilon(1e-6));
      CHECK(ul[i] == doctest::Approx(target).epsilon(1e-6));
    }
    CHECK(cfg.w.dot(st.p) / cfg.M == doctest::Approx(cfg.P).epsilon(1e-8));
    CHECK(cfg.n.dot(st.q) / cfg.M == doctest::Approx(cfg.P).epsilon(1e-8));
  }
}

TEST_CASE("iterates stay normalized and positive; dq tail is monotone") {
  ScenarioConfig cfg = make_config(3, 6, 10.0, 2.0);
  Channel ch = unit_channel(6, 3, 17);
  SolverOptions opts;
  opts.trace = true;
  SolverState st = solve_l1(ch, cfg, opts);
  REQUIRE(st.converged);

  const double MP = cfg.M * cfg.P;
  for (const auto& row : st.trace) {
    CHECK(cfg.n.dot(row.q) == doctest::Approx(MP).epsilon(1e-8));
    CHECK(row.q.minCoeff() > 0.0);
    CHECK(row.nu.minCoeff() > 0.0);
  }
  // local contraction: the last stretch of max|dq| is nonincreasing
  const auto& dq = st.dq_history;
  REQUIRE(dq.size() >= 2);
  std::size_t start = dq.size() > 10 ? dq.size() - 10 : 1;
  for (std::size_t k = start; k < dq.size(); ++k) {
    CHECK(dq[k] <= dq[k - 1] * (1.0 + 1e-12));
  }
}

TEST_CASE("achieved sinr matches gamma/(1+x) in the loaded case") {
  ScenarioConfig cfg = make_config(4, 8, 10.0, 3.0);
  Channel ch = unit_channel(8, 4, 23);
  SolverOptions opts;
  opts.epsilon = 1e-8;
  SolverState st = solve_l1(ch, cfg, opts);
  REQUIRE(st.converged);
  Vec dl = downlink_sinr(ch, st.U, st.p, cfg.n);
  for (int i = 0; i < cfg.N; ++i) {
    if (st.x[i] > 0.0) {
      CHECK(dl[i] ==
            doctest::Approx(cfg.gamma[i] / (1.0 + st.x[i])).epsilon(1e-5));
    } else {
      CHECK(dl[i] >= cfg.gamma[i] * (1.0 - 1e-5));
    }
  }
}

TEST_CASE("non-convergence is reported, not silently truncated") {
  ScenarioConfig cfg = make_config(3, 4, 10.0, 2.0);
  Channel ch = unit_channel(4, 3, 29);
  SolverOptions opts;
  opts.max_iters = 2;
  SolverState st = solve_l1(ch, cfg, opts);
  CHECK_FALSE(st.converged);
  CHECK(st.iterations == 2);
}

TEST_CASE("averaging can be disabled") {
  ScenarioConfig cfg = make_config(3, 4, 10.0, 2.0);
  Channel ch = unit_channel(4, 3, 37);
  SolverOptions opts;
  opts.averaging = false;
  SolverState st = solve_l1(ch, cfg, opts);
  // the plain fixed-point map still converges on this instance and lands
  // on the same point as the averaged one
  REQUIRE(st.converged);
  SolverState avg = solve_l1(ch, cfg, SolverOptions{});
  for (int i = 0; i < cfg.N; ++i) {
    CHECK(st.q[i] == doctest::Approx(avg.q[i]).epsilon(1e-3));
  }
}

TEST_CASE("deep-feasible instances report dual underflow") {
  // huge margin: the duals decay by 1/r every iteration while q takes tens
  // of iterations to settle at the tight tolerance
  ScenarioConfig cfg = make_config(4, 2, 1e4, 1.01);
  Channel ch = unit_channel(2, 4, 41);
  SolverOptions opts;
  opts.epsilon = 1e-12;
  SolverState st = solve_l1(ch, cfg, opts);
  REQUIRE(st.converged);
  CHECK(st.x.maxCoeff() == 0.0);
  CHECK(st.nu.minCoeff() > 0.0);  // never clamped
  CHECK(st.nu_underflow);
}

TEST_CASE("option validation") {
  ScenarioConfig cfg = make_config(2, 2, 1.0, 2.0);
  Channel ch = unit_channel(2, 2, 31);
  SolverOptions opts;
  opts.epsilon = 0.0;
  CHECK_THROWS_AS(solve_l1(ch, cfg, opts), std::invalid_argument);
  opts.epsilon = 1e-5;
  opts.max_iters = 0;
  CHECK_THROWS_AS(solve_l1(ch, cfg, opts), std::invalid_argument);

  Channel wrong = unit_channel(3, 2, 31);
  CHECK_THROWS_AS(solve_l1(wrong, cfg, SolverOptions{}), std::invalid_argument);
}

TEST_CASE("maxmin: balanced ratios on feasible instances") {
  ScenarioConfig cfg = make_config(4, 3, 20.0, 1.5);
  SolverOptions opts;
  opts.epsilon = 1e-9;
  for (std::uint64_t seed : {41u, 42u, 43u}) {
    Channel ch = unit_channel(3, 4, seed);
    SolverState st = solve_l1(ch, cfg, opts);
    REQUIRE(st.converged);
    REQUIRE(st.x.maxCoeff() <= 1e-8);
    MaxminRatio mm = maxmin_ratio(st, ch, cfg);
    CHECK(mm.ratio >= 1.0);
    CHECK(mm.max_deviation <= 1e-4 * mm.ratio);
  }
}

TEST_CASE("maxmin: single AP ratio at full budget") {
  ScenarioConfig cfg = make_config(4, 1, 5.0, 2.0);
  Channel ch = unit_channel(1, 4, 47);
  SolverOptions opts;
  opts.epsilon = 1e-10;
  SolverState st = solve_l1(ch, cfg, opts);
  REQUIRE(st.converged);
  MaxminRatio mm = maxmin_ratio(st, ch, cfg);
  double full_budget_sinr = (cfg.M * cfg.P / cfg.w[0] / cfg.M) *
                            ch.H.row(0).squaredNorm() / cfg.n[0];
  CHECK(mm.ratio == doctest::Approx(full_budget_sinr / cfg.gamma[0]).epsilon(1e-6));
}

TEST_CASE("maxmin: uniform target scaling leaves the powers unchanged") {
  ScenarioConfig cfg = make_config(4, 3, 20.0, 1.2);
  Channel ch = unit_channel(3, 4, 53);
  SolverOptions opts;
  opts.epsilon = 1e-10;
  SolverState a = solve_l1(ch, cfg, opts);
  REQUIRE(a.converged);
  REQUIRE(a.x.maxCoeff() <= 1e-8);

  ScenarioConfig scaled = cfg;
  scaled.gamma *= 2.0;  // still feasible for this instance
  SolverState b = solve_l1(ch, scaled, opts);
  REQUIRE(b.converged);
  REQUIRE(b.x.maxCoeff() <= 1e-8);
  for (int i = 0; i < cfg.N; ++i) {
    CHECK(a.p[i] == doctest::Approx(b.p[i]).epsilon(1e-6));
  }
}

TEST_CASE("maxmin_ratio rejects infeasible and unconverged states") {
  ScenarioConfig cfg = make_config(3, 6, 10.0, 2.0);
  Channel ch = unit_channel(6, 3, 59);
  SolverState st = solve_l1(ch, cfg);
  REQUIRE(st.converged);
  REQUIRE(st.x.maxCoeff() > 1e-6);
  CHECK_THROWS_AS(maxmin_ratio(st, ch, cfg), std::invalid_argument);
  st.converged = false;
  CHECK_THROWS_AS(maxmin_ratio(st, ch, cfg), std::invalid_argument);
}

TEST_CASE("maxmin_solve balances the downlink at the uplink ratio") {
  ScenarioConfig cfg = make_config(4, 5, 4.0, 2.0);
  SolverOptions opts;
  opts.epsilon = 1e-10;
  for (std::uint64_t seed : {61u, 62u}) {
    Channel ch = unit_channel(5, 4, seed);
    MaxminSolution mm = maxmin_solve(ch, cfg, opts);
    REQUIRE(mm.converged);
    Vec ratios = mm.sinr.cwiseQuotient(cfg.gamma);
    CHECK((ratios.maxCoeff() - ratios.minCoeff()) <= 1e-5 * mm.ratio);
    CHECK(cfg.w.dot(mm.p) / cfg.M == doctest::Approx(cfg.P).epsilon(1e-9));
    // the l1 solver agrees with the balancing solution when feasible
    SolverState st = solve_l1(ch, cfg, opts);
    if (st.converged && st.x.maxCoeff() <= 1e-8) {
      MaxminRatio direct = maxmin_ratio(st, ch, cfg);
      CHECK(mm.ratio == doctest::Approx(direct.ratio).epsilon(1e-4));
    }
  }
}
