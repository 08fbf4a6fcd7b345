// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "wbh/scenario.hpp"
#include "wbh/units.hpp"

using namespace wbh;

namespace {

ScenarioConfig basic_config(int M, int N) {
  ScenarioConfig c;
  c.M = M;
  c.N = N;
  c.P = 1.0;
  c.w = Vec::Ones(N);
  c.n = Vec::Ones(N);
  c.gamma = Vec::Constant(N, 2.0);
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  ScenarioConfig c = basic_config(4, 3);
  CHECK_NOTHROW(c.validate());
  c.gamma[1] = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = basic_config(4, 3);
  c.P = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = basic_config(4, 3);
  c.w.resize(2);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("gen_layout stays in the cell and is reproducible") {
  ScenarioConfig c = basic_config(4, 12);
  CellParams cell;  // 1 km cell
  CellLayout a = gen_layout(c, cell, 5);
  CellLayout b = gen_layout(c, cell, 5);
  CHECK(a.n_aps() == 12);
  for (int i = 0; i < 12; ++i) {
    CHECK(a.distance_m(i) <= 1000.0);
    CHECK(a.distance_m(i) >= 10.0);  // exclusion radius
    CHECK(a.sap_positions(i, 0) == b.sap_positions(i, 0));
    CHECK(a.sap_positions(i, 1) == b.sap_positions(i, 1));
  }

  ScenarioConfig c1 = basic_config(4, 1);
  CellLayout single = gen_layout(c1, cell, 99);
  CHECK(single.n_aps() == 1);
  CHECK(single.distance_m(0) <= 1000.0);
}

TEST_CASE("layout points are uniform over the disk") {
  ScenarioConfig c = basic_config(2, 200);
  CellParams cell;
  double acc = 0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    CellLayout l = gen_layout(c, cell, seed);
    for (int i = 0; i < l.n_aps(); ++i) {
      double r = l.distance_m(i);
      acc += r * r;
      ++count;
    }
  }
  CHECK(count >= 10000);
  // E r^2 = R^2/2 for the uniform disk
  CHECK(acc / count == doctest::Approx(1000.0 * 1000.0 / 2.0).epsilon(0.02));
}

TEST_CASE("large_scale_gain matches the pathloss law") {
  ScenarioConfig c = basic_config(4, 2);
  CellParams cell;
  cell.shadowing_std_db = 0.0;  // X = 0
  CellLayout l = gen_layout(c, cell, 3);
  l.sap_positions(0, 0) = 1000.0;  // exactly 1 km
  l.sap_positions(0, 1) = 0.0;
  l.sap_positions(1, 0) = 100.0;  // 0.1 km
  l.sap_positions(1, 1) = 0.0;

  // G_tx = 5 dB, L(1 km) = 128 dB
  CHECK(large_scale_gain(l, 0, 17) ==
        doctest::Approx(std::pow(10.0, -12.3)).epsilon(1e-6));

  // G_tx = 0, L(0.1 km) = 128 - 37.6
  l.tx_antenna_gain_db = 0.0;
  CHECK(large_scale_gain(l, 1, 17) ==
        doctest::Approx(std::pow(10.0, (-128.0 + 37.6) / 10.0)).epsilon(1e-6));

  // doubling the distance scales the gain by 10^(-3.76 log10 2)
  CellLayout l2 = l;
  l2.sap_positions(1, 0) = 200.0;
  double ratio = large_scale_gain(l2, 1, 17) / large_scale_gain(l, 1, 17);
  CHECK(ratio ==
        doctest::Approx(std::pow(10.0, -3.76 * std::log10(2.0))).epsilon(1e-9));

  // the gain agrees with the whole-layout draw at the same seed
  cell.shadowing_std_db = 10.0;
  CellLayout shadowed = gen_layout(c, cell, 3);
  Vec d = large_scale_gains(shadowed, 17);
  CHECK(large_scale_gain(shadowed, 0, 17) == d[0]);
  CHECK(large_scale_gain(shadowed, 1, 17) == d[1]);

  CellLayout zero = l;
  zero.sap_positions(0, 0) = 0.0;
  CHECK_THROWS_AS(large_scale_gain(zero, 0, 17), std::invalid_argument);
}

TEST_CASE("gen_channel second moment and determinism") {
  Vec d(2);
  d << 0.5, 2.0;

  // E||h_i||^2 / M -> d_i
  const int M = 256;
  Vec acc = Vec::Zero(2);
  for (std::uint64_t s = 0; s < 100; ++s) {
    Channel ch = gen_channel(d, M, s);
    for (int i = 0; i < 2; ++i) acc[i] += ch.H.row(i).squaredNorm() / M;
  }
  for (int i = 0; i < 2; ++i) {
    CHECK(acc[i] / 100.0 == doctest::Approx(d[i]).epsilon(0.10));
  }

  Channel a = gen_channel(d, 8, 123);
  Channel b = gen_channel(d, 8, 123);
  CHECK((a.H - b.H).cwiseAbs().maxCoeff() == 0.0);

  Vec bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(gen_channel(bad, 8, 1), std::invalid_argument);
}

TEST_CASE("gen_channel per-entry second moment") {
  Vec d(4);
  d << 0.25, 1.0, 3.0, 0.8;
  const int M = 128;
  Vec acc = Vec::Zero(4);
  const int draws = 200;
  for (std::uint64_t s = 0; s < draws; ++s) {
    Channel ch = gen_channel(d, M, 1000 + s);
    for (int i = 0; i < 4; ++i) {
      acc[i] += ch.H.row(i).cwiseAbs2().mean();
    }
  }
  for (int i = 0; i < 4; ++i) {
    CHECK(acc[i] / draws == doctest::Approx(d[i]).epsilon(0.05));
  }
}

TEST_CASE("scenario json parsing") {
  const char* text = R"({
    "M": 4, "N": 3, "P_dBm": 30.0,
    "noise_dBm": -93.98,
    "gamma_dB": [3.01, 6.02, 3.01],
    "cell_radius_m": 500.0,
    "antenna_gain_dB": 5.0,
    "shadowing_dB": 10.0,
    "seed": 77
  })";
  ScenarioFile f = parse_scenario_json(text);
  CHECK(f.config.M == 4);
  CHECK(f.config.N == 3);
  CHECK(f.config.P == doctest::Approx(1.0));
  CHECK(f.config.n[0] == doctest::Approx(4.0e-13).epsilon(1e-4));
  CHECK(f.config.gamma[1] == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(f.config.w[2] == 1.0);
  CHECK(f.cell.cell_radius_m == 500.0);
  CHECK(f.seed == 77);

  CHECK_THROWS(parse_scenario_json(R"({"M": 2, "N": 1})"));
  CHECK_THROWS(parse_scenario_json(R"({
    "M": 2, "N": 2, "P_watts": 1.0, "noise_watts": 1.0,
    "gamma_dB": [1.0, 2.0, 3.0]
  })"));
}
