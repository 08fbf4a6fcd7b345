// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace wbh {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Problem instance: an M-antenna hub serving N single-antenna access points
// under a weighted sum power budget and per-AP SINR targets.
struct ScenarioConfig {
  int M = 0;     // hub antennas
  int N = 0;     // access points
  double P = 0;  // power budget, watts
  Vec w;         // per-AP power weights, > 0
  Vec n;         // per-AP noise variances, watts
  Vec gamma;     // per-AP SINR targets, linear

  void validate() const;

  // Sub-instance on a subset of APs (same M and P).
  ScenarioConfig restrict_to(const std::vector<int>& idx) const;
};

// Row i of H is h_i^H (conjugated channel of AP i); d_i is the large-scale
// power gain so that E|H(i,j)|^2 = d_i.
struct Channel {
  CMat H;  // N x M
  Vec d;   // length N

  int n_aps() const { return static_cast<int>(H.rows()); }
  int n_antennas() const { return static_cast<int>(H.cols()); }

  // h_i as a column vector
  CVec h(int i) const { return H.row(i).adjoint(); }

  Channel restrict_to(const std::vector<int>& idx) const;
};

struct CellLayout {
  double cell_radius_m = 1000.0;
  double min_distance_m = 10.0;  // hub-AP exclusion radius
  double small_cell_radius_m = 30.0;
  Mat sap_positions;  // N x 2, meters, hub at origin
  double pathloss_intercept_db = 128.0;
  double pathloss_slope_db = 37.6;  // per decade of km
  double shadowing_std_db = 10.0;
  double tx_antenna_gain_db = 5.0;
  double bandwidth_hz = 10e6;

  int n_aps() const { return static_cast<int>(sap_positions.rows()); }
  double distance_m(int i) const { return sap_positions.row(i).norm(); }
};

// Cell layout parameters without positions; used by config files.
struct CellParams {
  double cell_radius_m = 1000.0;
  double min_distance_m = 10.0;
  double small_cell_radius_m = 30.0;
  double shadowing_std_db = 10.0;
  double tx_antenna_gain_db = 5.0;
  double bandwidth_hz = 10e6;
};

// N positions uniform over the disk (outside the exclusion radius),
// deterministic given the seed.
CellLayout gen_layout(const ScenarioConfig& config, const CellParams& cell,
                      std::uint64_t seed);

// Large-scale power gain for AP i: antenna gain minus distance pathloss
// (128 + 37.6 log10 D[km]) minus one lognormal shadowing draw, all in dB.
double large_scale_gain(const CellLayout& layout, int i, std::uint64_t seed);

// All N gains; shadowing drawn once per AP, in AP order.
Vec large_scale_gains(const CellLayout& layout, std::uint64_t seed);

// h_i = sqrt(d_i) * h_tilde_i with i.i.d. unit-variance complex normal
// entries; deterministic given the seed.
Channel gen_channel(const Vec& d, int M, std::uint64_t seed);

// Scenario file: JSON with keys M, N, P_dBm|P_watts, weights,
// noise_dBm|noise_watts, gamma_dB, cell_radius_m, shadowing_dB,
// antenna_gain_dB, seed (scalars broadcast to per-AP lists). The optional
// channel_model key selects "cellular" gains (pathloss + shadowing,
// default) or "unit" gains (d_i = 1, the normalized convergence setup).
struct ScenarioFile {
  ScenarioConfig config;
  CellParams cell;
  std::uint64_t seed = 1;
  bool unit_gains = false;
};

ScenarioFile load_scenario_file(const std::string& path);
ScenarioFile parse_scenario_json(const std::string& text);

}  // namespace wbh
