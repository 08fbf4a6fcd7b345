// SPDX-License-Identifier: Apache-2.0
//
// dB / linear unit conversions. All internal computation in the library is
// done in linear units (watts, power ratios); callers convert at the edges.

#pragma once

#include <cmath>
#include <stdexcept>

namespace wbh {

inline double db_to_linear(double x_db) {
  if (!std::isfinite(x_db)) {
    throw std::invalid_argument("db_to_linear: non-finite input");
  }
  return std::pow(10.0, x_db / 10.0);
}

inline double linear_to_db(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::invalid_argument("linear_to_db: input must be finite and > 0");
  }
  return 10.0 * std::log10(x);
}

inline double dbm_to_watts(double x_dbm) { return db_to_linear(x_dbm - 30.0); }

inline double watts_to_dbm(double x_w) { return linear_to_db(x_w) + 30.0; }

}  // namespace wbh
