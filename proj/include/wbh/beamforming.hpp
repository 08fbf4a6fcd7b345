// SPDX-License-Identifier: Apache-2.0
//
// Downlink/uplink SINR evaluation, MMSE receive beamformers and the
// equivalent channel matrix. Transmit power for AP i is p_i/M (p is the
// scaled power vector), dual uplink power is q_i/M.

#pragma once

#include "wbh/scenario.hpp"

namespace wbh {

// Columns are unit-norm beamformers, column i for AP i.
struct BeamformerSet {
  CMat U;  // M x N

  int n_beams() const { return static_cast<int>(U.cols()); }
  CVec u(int i) const { return U.col(i); }
};

// G(i, j) = |h_i^H u_j|^2
struct EquivalentChannel {
  Mat G;
};

// SINR_i = (p_i/M)|h_i^H u_i|^2 / (sum_{j!=i} (p_j/M)|h_i^H u_j|^2 + n_i)
Vec downlink_sinr(const Channel& channel, const BeamformerSet& bf,
                  const Vec& p, const Vec& noise);

// Dual uplink: SINR_i = (q_i/M)|u_i^H h_i|^2 /
//                       (sum_{j!=i} (q_j/M)|u_i^H h_j|^2 + w_i)
Vec uplink_sinr(const Channel& channel, const BeamformerSet& bf, const Vec& q,
                const Vec& w);

// u_i proportional to (sum_{j!=i} (q_j/M) h_j h_j^H + w_i I)^{-1} h_i,
// normalized to unit norm with the leading entry's phase removed.
BeamformerSet mmse_beamformers(const Channel& channel, const Vec& q,
                               const Vec& w);

// (q_i/M) h_i^H (sum_{j!=i} (q_j/M) h_j h_j^H + w_i I)^{-1} h_i
Vec mmse_uplink_sinr(const Channel& channel, const Vec& q, const Vec& w);

EquivalentChannel equivalent_channel(const Channel& channel,
                                     const BeamformerSet& bf);

// MMSE beamformers together with the per-AP quadratic forms
// h_i^H (.)^{-1} h_i; the solver needs both at the same q. When all weights
// are equal the shared matrix sum_j (q_j/M) h_j h_j^H + w I is factorized
// once and each AP's own term is removed with the rank-1 inversion identity;
// otherwise the per-AP matrix is assembled and factorized directly.
struct MmseResult {
  BeamformerSet bf;
  Vec quad;  // quad_i = h_i^H (sum_{j!=i} (q_j/M) h_j h_j^H + w_i I)^{-1} h_i
};

MmseResult mmse_with_quadratic_forms(const Channel& channel, const Vec& q,
                                     const Vec& w);

}  // namespace wbh
