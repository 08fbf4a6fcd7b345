// SPDX-License-Identifier: Apache-2.0

#include "wbh/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "wbh/large_system.hpp"
#include "wbh/rng.hpp"
#include "wbh/units.hpp"

namespace wbh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Full-precision, locale-independent number formatting; keeps result files
// byte-identical across runs.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Seed sub-streams per layout: 0 = positions, 1 = shadowing, 2+t = trial t.
std::uint64_t layout_seed(std::uint64_t master, int layout) {
  return derive_seed(master, static_cast<std::uint64_t>(layout), 0);
}
std::uint64_t gains_seed(std::uint64_t master, int layout) {
  return derive_seed(master, static_cast<std::uint64_t>(layout), 1);
}
std::uint64_t trial_seed(std::uint64_t master, int layout, int trial) {
  return derive_seed(master, static_cast<std::uint64_t>(layout),
                     2 + static_cast<std::uint64_t>(trial));
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  int c = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      s += x;
      ++c;
    }
  }
  return c > 0 ? s / c : kNaN;
}

double std_of(const std::vector<double>& v, double mean) {
  double s = 0;
  int c = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      double e = x - mean;
      s += e * e;
      ++c;
    }
  }
  return c > 0 ? std::sqrt(s / c) : kNaN;
}

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "finite") return Method::kFinite;
  if (name == "large") return Method::kLarge;
  if (name == "exhaustive") return Method::kExhaustive;
  if (name == "user-admit") return Method::kUserAdmit;
  if (name == "maxmin-check") return Method::kMaxminCheck;
  throw std::invalid_argument("unknown method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kFinite: return "finite";
    case Method::kLarge: return "large";
    case Method::kExhaustive: return "exhaustive";
    case Method::kUserAdmit: return "user-admit";
    case Method::kMaxminCheck: return "maxmin-check";
  }
  return "?";
}

namespace {

// Fill the per-AP columns of a row from a finite admission outcome.
void fill_row_finite(ResultRow& row, const AdmissionOutcome& outcome,
                     const Channel& channel, const ScenarioConfig& config) {
  const int N = config.N;
  row.admitted = static_cast<int>(outcome.admitted.size());
  row.x = Vec::Constant(N, kNaN);
  row.p_dbm = Vec::Constant(N, kNaN);
  row.sinr_db = Vec::Constant(N, kNaN);
  for (const auto& rec : outcome.removal_order) row.x[rec.index] = rec.gap;
  row.min_ratio = kNaN;
  row.solver_ok = true;
  if (outcome.admitted.empty()) {
    row.sum_power_dbm = kNaN;
    return;
  }
  const Channel sub = channel.restrict_to(outcome.admitted);
  const ScenarioConfig cfg = config.restrict_to(outcome.admitted);
  const SolverState& st = outcome.final_state;
  const Vec sinr = downlink_sinr(sub, st.U, st.p, cfg.n);
  double sum_w = 0;
  double ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.N; ++k) {
    int orig = outcome.admitted[k];
    row.x[orig] = st.x[k];
    double p_watts = st.p[k] / config.M;
    sum_w += p_watts;
    row.p_dbm[orig] = watts_to_dbm(p_watts);
    row.sinr_db[orig] = linear_to_db(sinr[k]);
    ratio = std::min(ratio, sinr[k] / cfg.gamma[k]);
  }
  row.sum_power_dbm = watts_to_dbm(sum_w);
  row.min_ratio = ratio;
  row.iterations = st.iterations;
  row.solver_ok = st.converged;
}

void fill_row_large(ResultRow& row, const LargeAdmissionOutcome& outcome,
                    const ScenarioConfig& config) {
  const int N = config.N;
  row.admitted = static_cast<int>(outcome.admitted.size());
  row.x = Vec::Constant(N, kNaN);
  row.p_dbm = Vec::Constant(N, kNaN);
  row.sinr_db = Vec::Constant(N, kNaN);
  for (const auto& rec : outcome.removal_order) row.x[rec.index] = rec.gap;
  row.min_ratio = kNaN;
  if (outcome.admitted.empty()) {
    row.sum_power_dbm = kNaN;
    return;
  }
  const ScenarioConfig cfg = config.restrict_to(outcome.admitted);
  const LargeSystemSolution& st = outcome.final_state;
  double sum_w = 0;
  double ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.N; ++k) {
    int orig = outcome.admitted[k];
    row.x[orig] = st.x[k];
    double p_watts = st.p[k] / config.M;
    sum_w += p_watts;
    row.p_dbm[orig] = watts_to_dbm(p_watts);
    // asymptotic achieved SINR is gamma_i / (1 + x_i)
    double sinr = cfg.gamma[k] / (1.0 + st.x[k]);
    row.sinr_db[orig] = linear_to_db(sinr);
    ratio = std::min(ratio, 1.0 / (1.0 + st.x[k]));
  }
  row.sum_power_dbm = watts_to_dbm(sum_w);
  row.min_ratio = ratio;
  row.iterations = st.iterations;
  row.solver_ok = st.converged;
}

}  // namespace

UserAdmissionProblem synthesize_user_problem(const CellLayout& layout,
                                             const ScenarioConfig& config,
                                             double sap_power_dbm,
                                             std::uint64_t seed) {
  const int N = layout.n_aps();
  Rng rng(seed);
  Mat user_pos(N, 2);
  for (int i = 0; i < N; ++i) {
    // user uniform in its small cell, at least 1 m from the AP
    double r;
    do {
      r = layout.small_cell_radius_m * std::sqrt(rng.uniform());
    } while (r < 1.0);
    double theta = 2.0 * M_PI * rng.uniform();
    user_pos(i, 0) = layout.sap_positions(i, 0) + r * std::cos(theta);
    user_pos(i, 1) = layout.sap_positions(i, 1) + r * std::sin(theta);
  }
  UserAdmissionProblem prob;
  prob.g.resize(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      double dx = user_pos(i, 0) - layout.sap_positions(j, 0);
      double dy = user_pos(i, 1) - layout.sap_positions(j, 1);
      double d_km = std::max(std::hypot(dx, dy), 1.0) / 1000.0;
      double loss_db = layout.pathloss_intercept_db +
                       layout.pathloss_slope_db * std::log10(d_km);
      prob.g(i, j) = db_to_linear(-loss_db);
    }
  }
  prob.P_per = Vec::Constant(N, dbm_to_watts(sap_power_dbm));
  prob.n = config.n;
  prob.gamma = config.gamma;
  return prob;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.config.validate();
  if (spec.trials < 1 || spec.layouts < 1) {
    throw std::invalid_argument("experiment: trials and layouts must be >= 1");
  }
  ExperimentResult result;
  int failures = 0;

  for (int l = 0; l < spec.layouts; ++l) {
    const CellLayout layout =
        gen_layout(spec.config, spec.cell, layout_seed(spec.seed, l));
    const Vec d = spec.unit_gains
                      ? Vec::Ones(spec.config.N)
                      : large_scale_gains(layout, gains_seed(spec.seed, l));

    // realization-independent methods solve once per layout
    LargeAdmissionOutcome large_outcome;
    if (spec.method == Method::kLarge || spec.method == Method::kMaxminCheck) {
      large_outcome = admit_saps_large(d, spec.config, spec.solver, spec.x_tol);
    }

    auto run_method = [&](ResultRow& row, int l_idx, int t_idx) {
      switch (spec.method) {
        case Method::kFinite: {
          Channel ch = gen_channel(d, spec.config.M, trial_seed(spec.seed, l_idx, t_idx));
          auto outcome = admit_saps(ch, spec.config, spec.solver, spec.x_tol);
          fill_row_finite(row, outcome, ch, spec.config);
          break;
        }
        case Method::kExhaustive: {
          Channel ch = gen_channel(d, spec.config.M, trial_seed(spec.seed, l_idx, t_idx));
          auto outcome =
              exhaustive_search(ch, spec.config, spec.solver, spec.x_tol);
          fill_row_finite(row, outcome, ch, spec.config);
          break;
        }
        case Method::kLarge: {
          fill_row_large(row, large_outcome, spec.config);
          break;
        }
        case Method::kMaxminCheck: {
          // per-realization max-min power control on the set selected from
          // the large-scale coefficients only
          row.admitted = static_cast<int>(large_outcome.admitted.size());
          if (large_outcome.admitted.empty()) break;
          Channel ch = gen_channel(d, spec.config.M, trial_seed(spec.seed, l_idx, t_idx));
          const Channel sub = ch.restrict_to(large_outcome.admitted);
          const ScenarioConfig cfg =
              spec.config.restrict_to(large_outcome.admitted);
          MaxminSolution mm = maxmin_solve(sub, cfg, spec.solver);
          double sum_w = 0;
          for (int k = 0; k < cfg.N; ++k) {
            int orig = large_outcome.admitted[k];
            double p_watts = mm.p[k] / cfg.M;
            sum_w += p_watts;
            row.p_dbm[orig] = watts_to_dbm(p_watts);
            row.sinr_db[orig] = linear_to_db(mm.sinr[k]);
          }
          row.sum_power_dbm = watts_to_dbm(sum_w);
          row.min_ratio = mm.ratio;
          row.iterations = mm.iterations;
          row.solver_ok = mm.converged;
          break;
        }
        case Method::kUserAdmit: {
          UserAdmissionProblem prob = synthesize_user_problem(
              layout, spec.config, spec.sap_power_dbm,
              trial_seed(spec.seed, l_idx, t_idx));
          auto outcome = admit_users(prob, spec.solver, {}, spec.x_tol);
          row.admitted = static_cast<int>(outcome.admitted.size());
          for (const auto& rec : outcome.removal_order) {
            row.x[rec.index] = rec.gap;
          }
          if (!outcome.admitted.empty()) {
            const UserAdmissionProblem sub =
                prob.restrict_to(outcome.admitted);
            const Vec& p = outcome.final_state.p;
            double sum_w = 0;
            double ratio = std::numeric_limits<double>::infinity();
            for (int k = 0; k < static_cast<int>(outcome.admitted.size());
                 ++k) {
              int orig = outcome.admitted[k];
              row.x[orig] = outcome.final_state.x[k];
              sum_w += p[k];
              row.p_dbm[orig] = watts_to_dbm(p[k]);
              double interference = sub.n[k];
              for (int j = 0; j < static_cast<int>(outcome.admitted.size());
                   ++j) {
                if (j != k) interference += sub.g(k, j) * p[j];
              }
              double sinr = sub.g(k, k) * p[k] / interference;
              row.sinr_db[orig] = linear_to_db(sinr);
              ratio = std::min(ratio, sinr / sub.gamma[k]);
            }
            row.sum_power_dbm = watts_to_dbm(sum_w);
            row.min_ratio = ratio;
            row.solver_ok = outcome.subgradient_converged;
          }
          break;
        }
      }
    };

    for (int t = 0; t < spec.trials; ++t) {
      ResultRow row;
      row.layout = l;
      row.trial = t;
      row.method = spec.method;
      row.x = Vec::Constant(spec.config.N, kNaN);
      row.p_dbm = Vec::Constant(spec.config.N, kNaN);
      row.sinr_db = Vec::Constant(spec.config.N, kNaN);
      row.sum_power_dbm = kNaN;
      row.min_ratio = kNaN;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        run_method(row, l, t);
      } catch (const std::runtime_error&) {
        // solver abort (divergence guard, dual underflow): keep the row
        row.solver_ok = false;
      }
      const auto t1 = std::chrono::steady_clock::now();
      row.wall_ms =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
      if (!row.solver_ok) ++failures;
      result.rows.push_back(std::move(row));
    }
  }

  // aggregate in row order so the summary is exactly reproducible from the
  // raw rows
  std::vector<double> admitted, sum_power, iters, wall;
  for (const auto& r : result.rows) {
    admitted.push_back(r.admitted);
    sum_power.push_back(r.sum_power_dbm);
    iters.push_back(r.iterations);
    wall.push_back(r.wall_ms);
  }
  ExperimentSummary& s = result.summary;
  s.method = spec.method;
  s.layouts = spec.layouts;
  s.trials = spec.trials;
  s.mean_admitted = mean_of(admitted);
  s.std_admitted = std_of(admitted, s.mean_admitted);
  s.mean_sum_power_dbm = mean_of(sum_power);
  s.std_sum_power_dbm = std_of(sum_power, s.mean_sum_power_dbm);
  s.mean_iterations = mean_of(iters);
  s.mean_wall_ms = mean_of(wall);
  s.failures = failures;

  if (!spec.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir);
    {
      std::ofstream os(fs::path(spec.out_dir) / "results.csv");
      write_results_csv(result, spec.config.N, os, /*with_timing=*/false);
    }
    {
      std::ofstream os(fs::path(spec.out_dir) / "timings.csv");
      write_results_csv(result, spec.config.N, os, /*with_timing=*/true);
    }
    {
      std::ofstream os(fs::path(spec.out_dir) / "summary.json");
      os << summary_to_json(result.summary) << "\n";
    }
  }
  if (failures > spec.max_failures) {
    throw std::runtime_error("experiment: " + std::to_string(failures) +
                             " solver runs failed to converge");
  }
  return result;
}

void write_results_csv(const ExperimentResult& result, int n_aps,
                       std::ostream& os, bool with_timing) {
  os << "layout,trial,method,admitted,sum_power_dbm,min_ratio,iterations,"
        "solver_ok";
  for (int i = 0; i < n_aps; ++i) os << ",x_" << i;
  for (int i = 0; i < n_aps; ++i) os << ",p_dbm_" << i;
  for (int i = 0; i < n_aps; ++i) os << ",sinr_db_" << i;
  if (with_timing) os << ",wall_ms";
  os << "\n";
  for (const auto& r : result.rows) {
    os << r.layout << "," << r.trial << "," << method_name(r.method) << ","
       << r.admitted << "," << fmt(r.sum_power_dbm) << "," << fmt(r.min_ratio)
       << "," << r.iterations << "," << (r.solver_ok ? 1 : 0);
    for (int i = 0; i < n_aps; ++i) os << "," << fmt(r.x[i]);
    for (int i = 0; i < n_aps; ++i) os << "," << fmt(r.p_dbm[i]);
    for (int i = 0; i < n_aps; ++i) os << "," << fmt(r.sinr_db[i]);
    if (with_timing) os << "," << fmt(r.wall_ms);
    os << "\n";
  }
}

// Mirrors the deterministic CSV aggregates; wall-clock stats stay out so a
// rerun with the same seed reproduces the file byte for byte.
std::string summary_to_json(const ExperimentSummary& summary) {
  nlohmann::json j;
  j["method"] = method_name(summary.method);
  j["layouts"] = summary.layouts;
  j["trials"] = summary.trials;
  j["mean_admitted"] = summary.mean_admitted;
  j["std_admitted"] = summary.std_admitted;
  j["mean_sum_power_dbm"] = summary.mean_sum_power_dbm;
  j["std_sum_power_dbm"] = summary.std_sum_power_dbm;
  j["mean_iterations"] = summary.mean_iterations;
  j["failures"] = summary.failures;
  return j.dump(2);
}

LargeVsMcResult compare_large_vs_mc(const Vec& d, const ScenarioConfig& config,
                                    int trials, std::uint64_t seed,
                                    const SolverOptions& opts) {
  if (trials < 1) throw std::invalid_argument("compare: trials must be >= 1");
  const LargeSystemSolution large = solve_l1_large(d, config, opts);

  const int N = config.N;
  Vec p_sum = Vec::Zero(N), p_sq = Vec::Zero(N);
  Vec nu_sum = Vec::Zero(N), nu_sq = Vec::Zero(N);
  for (int t = 0; t < trials; ++t) {
    Channel ch = gen_channel(d, config.M, derive_seed(seed, 0, t));
    SolverState st = solve_l1(ch, config, opts);
    for (int i = 0; i < N; ++i) {
      double p_phys = st.p[i] / config.M;
      p_sum[i] += p_phys;
      p_sq[i] += p_phys * p_phys;
      nu_sum[i] += st.nu[i];
      nu_sq[i] += st.nu[i] * st.nu[i];
    }
  }

  LargeVsMcResult out;
  for (int i = 0; i < N; ++i) {
    LargeVsMcRow row;
    row.sap = i;
    row.d = d[i];
    row.p_large = large.p[i] / config.M;
    row.p_mc_mean = p_sum[i] / trials;
    row.p_mc_std =
        std::sqrt(std::max(0.0, p_sq[i] / trials - row.p_mc_mean * row.p_mc_mean));
    row.p_rel_err = std::abs(row.p_large - row.p_mc_mean) / row.p_mc_mean;
    row.nu_large = large.nu[i];
    row.nu_mc_mean = nu_sum[i] / trials;
    row.nu_mc_std = std::sqrt(
        std::max(0.0, nu_sq[i] / trials - row.nu_mc_mean * row.nu_mc_mean));
    row.nu_rel_err = std::abs(row.nu_large - row.nu_mc_mean) / row.nu_mc_mean;
    out.max_p_rel_err = std::max(out.max_p_rel_err, row.p_rel_err);
    out.max_nu_rel_err = std::max(out.max_nu_rel_err, row.nu_rel_err);
    out.rows.push_back(row);
  }
  return out;
}

void write_large_vs_mc_csv(const LargeVsMcResult& result, std::ostream& os) {
  os << "sap,d,p_large,p_mc_mean,p_mc_std,p_rel_err,"
        "nu_large,nu_mc_mean,nu_mc_std,nu_rel_err\n";
  for (const auto& r : result.rows) {
    os << r.sap << "," << fmt(r.d) << "," << fmt(r.p_large) << ","
       << fmt(r.p_mc_mean) << "," << fmt(r.p_mc_std) << ","
       << fmt(r.p_rel_err) << "," << fmt(r.nu_large) << ","
       << fmt(r.nu_mc_mean) << "," << fmt(r.nu_mc_std) << ","
       << fmt(r.nu_rel_err) << "\n";
  }
}

void emit_trace(const std::vector<TraceRow>& trace, std::ostream& os) {
  if (trace.empty()) return;
  const int N = static_cast<int>(trace.front().q.size());
  os << "iteration";
  for (int i = 0; i < N; ++i) os << ",q_" << i;
  for (int i = 0; i < N; ++i) os << ",nu_" << i;
  os << ",mu,max_dq\n";
  for (const auto& row : trace) {
    os << row.iteration;
    for (int i = 0; i < N; ++i) os << "," << fmt(row.q[i]);
    for (int i = 0; i < N; ++i) os << "," << fmt(row.nu[i]);
    os << "," << fmt(row.mu) << ","
       << fmt(row.max_dq < 0 ? kNaN : row.max_dq) << "\n";
  }
}

}  // namespace wbh
