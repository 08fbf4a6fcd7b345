// SPDX-License-Identifier: Apache-2.0

#include "wbh/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "wbh/rng.hpp"
#include "wbh/units.hpp"

namespace wbh {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Vec slice(const Vec& v, const std::vector<int>& idx) {
  Vec out(static_cast<int>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<int>(k)] = v[idx[k]];
  return out;
}

}  // namespace

void ScenarioConfig::validate() const {
  require(M >= 1, "config: M must be a positive integer");
  require(N >= 1, "config: N must be a positive integer");
  require(std::isfinite(P) && P > 0.0, "config: P must be > 0");
  require(w.size() == N && n.size() == N && gamma.size() == N,
          "config: w, n, gamma must have length N");
  for (int i = 0; i < N; ++i) {
    require(std::isfinite(w[i]) && w[i] > 0.0, "config: weights must be > 0");
    require(std::isfinite(n[i]) && n[i] > 0.0, "config: noise must be > 0");
    require(std::isfinite(gamma[i]) && gamma[i] > 0.0,
            "config: SINR targets must be > 0");
  }
}

ScenarioConfig ScenarioConfig::restrict_to(const std::vector<int>& idx) const {
  ScenarioConfig out;
  out.M = M;
  out.N = static_cast<int>(idx.size());
  out.P = P;
  out.w = slice(w, idx);
  out.n = slice(n, idx);
  out.gamma = slice(gamma, idx);
  return out;
}

Channel Channel::restrict_to(const std::vector<int>& idx) const {
  Channel out;
  out.H.resize(static_cast<int>(idx.size()), H.cols());
  out.d.resize(static_cast<int>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.H.row(static_cast<int>(k)) = H.row(idx[k]);
    out.d[static_cast<int>(k)] = d[idx[k]];
  }
  return out;
}

CellLayout gen_layout(const ScenarioConfig& config, const CellParams& cell,
                      std::uint64_t seed) {
  config.validate();
  require(cell.cell_radius_m > cell.min_distance_m,
          "layout: cell radius must exceed the exclusion radius");
  CellLayout layout;
  layout.cell_radius_m = cell.cell_radius_m;
  layout.min_distance_m = cell.min_distance_m;
  layout.small_cell_radius_m = cell.small_cell_radius_m;
  layout.shadowing_std_db = cell.shadowing_std_db;
  layout.tx_antenna_gain_db = cell.tx_antenna_gain_db;
  layout.bandwidth_hz = cell.bandwidth_hz;
  layout.sap_positions.resize(config.N, 2);

  Rng rng(seed);
  for (int i = 0; i < config.N; ++i) {
    // uniform on the disk; redraw inside the exclusion radius
    double r = 0.0;
    do {
      r = layout.cell_radius_m * std::sqrt(rng.uniform());
    } while (r < layout.min_distance_m);
    double theta = 2.0 * M_PI * rng.uniform();
    layout.sap_positions(i, 0) = r * std::cos(theta);
    layout.sap_positions(i, 1) = r * std::sin(theta);
  }
  return layout;
}

double large_scale_gain(const CellLayout& layout, int i, std::uint64_t seed) {
  require(i >= 0 && i < layout.n_aps(), "large_scale_gain: no such AP");
  // one shadowing draw per AP, consumed in AP order so that gains for a
  // layout come from a single stream
  Rng rng(seed);
  double shadow_db = 0.0;
  for (int k = 0; k <= i; ++k) {
    shadow_db = rng.normal() * layout.shadowing_std_db;
  }
  double d_km = layout.distance_m(i) / 1000.0;
  require(d_km > 0.0, "large_scale_gain: zero hub-AP distance");
  double pathloss_db = layout.pathloss_intercept_db +
                       layout.pathloss_slope_db * std::log10(d_km);
  return db_to_linear(layout.tx_antenna_gain_db - pathloss_db - shadow_db);
}

Vec large_scale_gains(const CellLayout& layout, std::uint64_t seed) {
  Rng rng(seed);
  Vec d(layout.n_aps());
  for (int i = 0; i < layout.n_aps(); ++i) {
    double shadow_db = rng.normal() * layout.shadowing_std_db;
    double d_km = layout.distance_m(i) / 1000.0;
    require(d_km > 0.0, "large_scale_gains: zero hub-AP distance");
    double pathloss_db = layout.pathloss_intercept_db +
                         layout.pathloss_slope_db * std::log10(d_km);
    d[i] = db_to_linear(layout.tx_antenna_gain_db - pathloss_db - shadow_db);
  }
  return d;
}

Channel gen_channel(const Vec& d, int M, std::uint64_t seed) {
  require(M >= 1, "gen_channel: M must be positive");
  const int N = static_cast<int>(d.size());
  require(N >= 1, "gen_channel: empty d");
  for (int i = 0; i < N; ++i) {
    require(std::isfinite(d[i]) && d[i] > 0.0, "gen_channel: d must be > 0");
  }
  Rng rng(seed);
  Channel ch;
  ch.d = d;
  ch.H.resize(N, M);
  for (int i = 0; i < N; ++i) {
    double scale = std::sqrt(d[i]);
    for (int j = 0; j < M; ++j) {
      ch.H(i, j) = scale * rng.cnormal();
    }
  }
  return ch;
}

namespace {

using nlohmann::json;

Vec vec_from_key(const json& j, const std::string& key, int N,
                 double convert(double)) {
  const auto& v = j.at(key);
  Vec out(N);
  if (v.is_number()) {
    out.setConstant(convert(v.get<double>()));
  } else if (v.is_array()) {
    require(static_cast<int>(v.size()) == N,
            "config: list for '" + key + "' must have N entries");
    for (int i = 0; i < N; ++i) out[i] = convert(v[i].get<double>());
  } else {
    throw std::invalid_argument("config: '" + key +
                                "' must be a number or list");
  }
  return out;
}

double identity(double x) { return x; }

}  // namespace

ScenarioFile parse_scenario_json(const std::string& text) {
  json j = json::parse(text);
  ScenarioFile f;
  f.config.M = j.at("M").get<int>();
  f.config.N = j.at("N").get<int>();

  if (j.contains("P_dBm")) {
    f.config.P = dbm_to_watts(j.at("P_dBm").get<double>());
  } else if (j.contains("P_watts")) {
    f.config.P = j.at("P_watts").get<double>();
  } else {
    throw std::invalid_argument("config: need P_dBm or P_watts");
  }

  f.config.w = j.contains("weights")
                   ? vec_from_key(j, "weights", f.config.N, identity)
                   : Vec::Ones(f.config.N);
  if (j.contains("noise_dBm")) {
    f.config.n = vec_from_key(j, "noise_dBm", f.config.N, dbm_to_watts);
  } else if (j.contains("noise_watts")) {
    f.config.n = vec_from_key(j, "noise_watts", f.config.N, identity);
  } else {
    throw std::invalid_argument("config: need noise_dBm or noise_watts");
  }
  f.config.gamma = vec_from_key(j, "gamma_dB", f.config.N, db_to_linear);
  f.config.validate();

  if (j.contains("cell_radius_m")) f.cell.cell_radius_m = j["cell_radius_m"];
  if (j.contains("min_distance_m")) f.cell.min_distance_m = j["min_distance_m"];
  if (j.contains("small_cell_radius_m"))
    f.cell.small_cell_radius_m = j["small_cell_radius_m"];
  if (j.contains("shadowing_dB")) f.cell.shadowing_std_db = j["shadowing_dB"];
  if (j.contains("antenna_gain_dB"))
    f.cell.tx_antenna_gain_db = j["antenna_gain_dB"];
  if (j.contains("bandwidth_Hz")) f.cell.bandwidth_hz = j["bandwidth_Hz"];
  if (j.contains("seed")) f.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("channel_model")) {
    std::string model = j.at("channel_model").get<std::string>();
    if (model == "unit") {
      f.unit_gains = true;
    } else if (model != "cellular") {
      throw std::invalid_argument("config: channel_model must be 'cellular' "
                                  "or 'unit'");
    }
  }
  return f;
}

ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_json(ss.str());
}

}  // namespace wbh
