// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "wbh/harness.hpp"
#include "wbh/rng.hpp"
#include "wbh/units.hpp"

using namespace wbh;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.config.M = 2;
  spec.config.N = 3;
  spec.config.P = dbm_to_watts(30.0);
  spec.config.w = Vec::Ones(3);
  spec.config.n = Vec::Constant(3, dbm_to_watts(-93.98));
  spec.config.gamma = Vec::Constant(3, db_to_linear(6.02));
  spec.trials = 2;
  spec.layouts = 2;
  spec.seed = 99;
  return spec;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("experiment rows and reruns are deterministic") {
  namespace fs = std::filesystem;
  ExperimentSpec spec = small_spec();
  fs::path dir_a = fs::temp_directory_path() / "wbh_test_run_a";
  fs::path dir_b = fs::temp_directory_path() / "wbh_test_run_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  spec.out_dir = dir_a.string();
  ExperimentResult a = run_experiment(spec);
  spec.out_dir = dir_b.string();
  ExperimentResult b = run_experiment(spec);

  CHECK(a.rows.size() == 4);  // layouts x trials
  CHECK(slurp(dir_a / "results.csv") == slurp(dir_b / "results.csv"));
  CHECK(!slurp(dir_a / "results.csv").empty());
  CHECK(fs::exists(dir_a / "timings.csv"));
  CHECK(fs::exists(dir_a / "summary.json"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("single trial, single AP") {
  ExperimentSpec spec;
  spec.config.M = 4;
  spec.config.N = 1;
  spec.config.P = 1.0;
  spec.config.w = Vec::Ones(1);
  spec.config.n = Vec::Constant(1, dbm_to_watts(-93.98));
  spec.config.gamma = Vec::Constant(1, 2.0);
  spec.trials = 1;
  spec.layouts = 1;
  spec.seed = 5;
  ExperimentResult r = run_experiment(spec);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].admitted == 1);  // a lone AP at cellular SNR is feasible
  CHECK(r.summary.mean_admitted == 1.0);
}

TEST_CASE("summary aggregates reproduce exactly from rows") {
  ExperimentSpec spec = small_spec();
  ExperimentResult r = run_experiment(spec);

  double mean = 0;
  int cnt = 0;
  for (const auto& row : r.rows) {
    mean += row.admitted;
    ++cnt;
  }
  mean /= cnt;
  double var = 0;
  for (const auto& row : r.rows) {
    var += (row.admitted - mean) * (row.admitted - mean);
  }
  CHECK(r.summary.mean_admitted == mean);
  CHECK(r.summary.std_admitted == std::sqrt(var / cnt));

  auto j = nlohmann::json::parse(summary_to_json(r.summary));
  CHECK(j["mean_admitted"].get<double>() == r.summary.mean_admitted);
  CHECK(j["failures"].get<int>() == 0);
}

TEST_CASE("trace csv shape") {
  ScenarioConfig cfg;
  cfg.M = 3;
  cfg.N = 4;
  cfg.P = 10.0;
  cfg.w = Vec::Ones(4);
  cfg.n = Vec::Ones(4);
  cfg.gamma = Vec::Constant(4, 2.0);
  SolverOptions opts;
  opts.trace = true;
  Channel ch = gen_channel(Vec::Ones(4), 3, 1);
  SolverState st = solve_l1(ch, cfg, opts);
  REQUIRE(st.converged);

  std::ostringstream os;
  emit_trace(st.trace, os);
  std::istringstream is(os.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  // header + initial row + one row per iteration
  CHECK(static_cast<int>(lines.size()) == st.iterations + 2);
  // the last row's residual column is the converged max|dq|
  auto pos = lines.back().rfind(',');
  double last_dq = std::stod(lines.back().substr(pos + 1));
  CHECK(last_dq <= opts.epsilon);
}

TEST_CASE("methods produce rows with consistent schema") {
  ExperimentSpec spec = small_spec();
  for (Method m : {Method::kLarge, Method::kMaxminCheck, Method::kUserAdmit}) {
    spec.method = m;
    ExperimentResult r = run_experiment(spec);
    CHECK(r.rows.size() == 4);
    for (const auto& row : r.rows) {
      CHECK(row.x.size() == spec.config.N);
      CHECK(row.p_dbm.size() == spec.config.N);
      CHECK(row.sinr_db.size() == spec.config.N);
    }
  }
  CHECK(method_from_string("finite") == Method::kFinite);
  CHECK(method_name(Method::kExhaustive) == "exhaustive");
  CHECK_THROWS_AS(method_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("large-vs-mc errors shrink as the array grows"
          * doctest::test_suite("slow")) {
  const int N = 32;
  Rng rng(99);
  Vec d(N);
  for (int i = 0; i < N; ++i) {
    d[i] = std::pow(10.0, rng.uniform(-15.0, 0.0) / 10.0);
  }
  auto errs = [&](int M) {
    ScenarioConfig cfg;
    cfg.M = M;
    cfg.N = N;
    cfg.P = 20.0;
    cfg.w = Vec::Ones(N);
    cfg.n = Vec::Ones(N);
    cfg.gamma = Vec::Constant(N, db_to_linear(6.02));
    return compare_large_vs_mc(d, cfg, 60, 4242);
  };
  LargeVsMcResult at16 = errs(16);
  LargeVsMcResult at64 = errs(64);

  // the dual errors resolve the M-convergence cleanly; the power errors sit
  // at the Monte Carlo noise floor already at M=16 (the budget identity
  // pins their scale), so only aggregate non-worsening is meaningful there
  int nu_improved = 0;
  for (int i = 0; i < N; ++i) {
    if (at64.rows[i].nu_rel_err <= at16.rows[i].nu_rel_err) ++nu_improved;
  }
  CHECK(nu_improved * 3 >= 2 * N);
  CHECK(at64.max_p_rel_err <= at16.max_p_rel_err + 0.01);
}

TEST_CASE("finite solver wall time scales like the flop count"
          * doctest::test_suite("slow")) {
  using clock = std::chrono::steady_clock;
  SolverOptions opts;
  opts.epsilon = 1e-300;  // fixed iteration count
  opts.max_iters = 60;
  const int M = 8;

  auto time_n = [&](int N) {
    ScenarioConfig cfg;
    cfg.M = M;
    cfg.N = N;
    cfg.P = 10.0;
    cfg.w = Vec::Ones(N);
    cfg.n = Vec::Ones(N);
    cfg.gamma = Vec::Constant(N, 2.0);
    Channel ch = gen_channel(Vec::Ones(N), M, 7);
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      auto t0 = clock::now();
      SolverState st = solve_l1(ch, cfg, opts);
      auto t1 = clock::now();
      REQUIRE(st.iterations >= 20);  // iterate may go exactly stationary
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count() /
                                st.iterations);
    }
    return best;
  };

  time_n(16);  // warm up
  double t16 = time_n(16);
  double t32 = time_n(32);
  // per-iteration cost O(N^2 M^2 + N M^3): with M fixed, doubling N
  // predicts a factor in (2, 4]; allow a 2x band around it
  double factor = t32 / t16;
  CHECK(factor < 8.0);
  CHECK(factor > 1.0);
}
