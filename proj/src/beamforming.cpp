// SPDX-License-Identifier: Apache-2.0

#include "wbh/beamforming.hpp"

#include <stdexcept>

namespace wbh {

namespace {

void check_dims(const Channel& channel, const BeamformerSet& bf) {
  if (bf.U.rows() != channel.H.cols() || bf.U.cols() != channel.H.rows()) {
    throw std::invalid_argument("beamformer/channel dimension mismatch");
  }
}

// Rotate to make the first non-negligible entry real nonnegative; SINRs are
// phase-invariant, this just makes outputs deterministic.
void fix_phase(Eigen::Ref<CVec> u) {
  double norm = u.norm();
  for (int k = 0; k < u.size(); ++k) {
    if (std::abs(u[k]) > 1e-12 * norm) {
      std::complex<double> phase = std::conj(u[k]) / std::abs(u[k]);
      u *= phase;
      return;
    }
  }
}

}  // namespace

Vec downlink_sinr(const Channel& channel, const BeamformerSet& bf,
                  const Vec& p, const Vec& noise) {
  check_dims(channel, bf);
  const int N = channel.n_aps();
  const double M = static_cast<double>(channel.n_antennas());
  if (p.size() != N || noise.size() != N) {
    throw std::invalid_argument("downlink_sinr: vector length mismatch");
  }
  Vec sinr(N);
  for (int i = 0; i < N; ++i) {
    // row i of H is h_i^H, so (H * U)(i, j) = h_i^H u_j
    CVec gains = (channel.H.row(i) * bf.U).transpose();
    double signal = (p[i] / M) * std::norm(gains[i]);
    double interference = 0.0;
    for (int j = 0; j < N; ++j) {
      if (j != i) interference += (p[j] / M) * std::norm(gains[j]);
    }
    sinr[i] = signal / (interference + noise[i]);
  }
  return sinr;
}

Vec uplink_sinr(const Channel& channel, const BeamformerSet& bf, const Vec& q,
                const Vec& w) {
  check_dims(channel, bf);
  const int N = channel.n_aps();
  const double M = static_cast<double>(channel.n_antennas());
  if (q.size() != N || w.size() != N) {
    throw std::invalid_argument("uplink_sinr: vector length mismatch");
  }
  Vec sinr(N);
  for (int i = 0; i < N; ++i) {
    // |u_i^H h_j|^2 = |h_j^H u_i|^2
    CVec gains = channel.H * bf.U.col(i);
    double signal = (q[i] / M) * std::norm(gains[i]);
    double interference = 0.0;
    for (int j = 0; j < N; ++j) {
      if (j != i) interference += (q[j] / M) * std::norm(gains[j]);
    }
    sinr[i] = signal / (interference + w[i]);
  }
  return sinr;
}

MmseResult mmse_with_quadratic_forms(const Channel& channel, const Vec& q,
                                     const Vec& w) {
  const int N = channel.n_aps();
  const int M = channel.n_antennas();
  if (q.size() != N || w.size() != N) {
    throw std::invalid_argument("mmse: vector length mismatch");
  }
  for (int i = 0; i < N; ++i) {
    if (q[i] < 0.0) throw std::invalid_argument("mmse: q must be >= 0");
    if (w[i] <= 0.0) throw std::invalid_argument("mmse: w must be > 0");
  }

  MmseResult res;
  res.bf.U.resize(M, N);
  res.quad.resize(N);

  const bool equal_w = (w.maxCoeff() - w.minCoeff()) <= 1e-12 * w.maxCoeff();
  if (equal_w) {
    // Shared covariance B = sum_j (q_j/M) h_j h_j^H + w I, factorized once;
    // each AP's own rank-1 term is removed via
    //   (B - c h h^H)^{-1} h = B^{-1} h / (1 - c h^H B^{-1} h).
    CMat B = CMat::Zero(M, M);
    for (int j = 0; j < N; ++j) {
      CVec hj = channel.h(j);
      B.selfadjointView<Eigen::Lower>().rankUpdate(hj, q[j] / M);
    }
    CMat Bfull = B.selfadjointView<Eigen::Lower>();
    Bfull.diagonal().array() += w[0];
    Eigen::LLT<CMat> llt(Bfull);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("mmse: covariance factorization failed");
    }
    for (int i = 0; i < N; ++i) {
      CVec hi = channel.h(i);
      CVec zi = llt.solve(hi);
      double hBh = std::real(hi.dot(zi));  // h_i^H B^{-1} h_i
      double denom = 1.0 - (q[i] / M) * hBh;
      // denom = 1/(1+SINR_i) in exact arithmetic, always positive
      res.quad[i] = hBh / denom;
      res.bf.U.col(i) = zi / zi.norm();
    }
  } else {
    for (int i = 0; i < N; ++i) {
      CMat A = CMat::Zero(M, M);
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        CVec hj = channel.h(j);
        A.selfadjointView<Eigen::Lower>().rankUpdate(hj, q[j] / M);
      }
      CMat Afull = A.selfadjointView<Eigen::Lower>();
      Afull.diagonal().array() += w[i];
      Eigen::LLT<CMat> llt(Afull);
      if (llt.info() != Eigen::Success) {
        throw std::runtime_error("mmse: covariance factorization failed");
      }
      CVec hi = channel.h(i);
      CVec zi = llt.solve(hi);
      res.quad[i] = std::real(hi.dot(zi));
      res.bf.U.col(i) = zi / zi.norm();
    }
  }
  for (int i = 0; i < N; ++i) fix_phase(res.bf.U.col(i));
  return res;
}

BeamformerSet mmse_beamformers(const Channel& channel, const Vec& q,
                               const Vec& w) {
  return mmse_with_quadratic_forms(channel, q, w).bf;
}

Vec mmse_uplink_sinr(const Channel& channel, const Vec& q, const Vec& w) {
  MmseResult res = mmse_with_quadratic_forms(channel, q, w);
  const double M = static_cast<double>(channel.n_antennas());
  Vec sinr(q.size());
  for (int i = 0; i < q.size(); ++i) sinr[i] = (q[i] / M) * res.quad[i];
  return sinr;
}

EquivalentChannel equivalent_channel(const Channel& channel,
                                     const BeamformerSet& bf) {
  check_dims(channel, bf);
  EquivalentChannel eq;
  eq.G = (channel.H * bf.U).cwiseAbs2();
  return eq;
}

}  // namespace wbh
