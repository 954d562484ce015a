// swvae/nmf.hpp

// Copyright 2026 the swvae authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABILITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SWVAE_NMF_HPP_
#define SWVAE_NMF_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "swvae/errors.hpp"
#include "swvae/matrix.hpp"
#include "swvae/rng.hpp"

namespace swvae {

constexpr double kNmfFloor = 1e-10;

/// Low-rank noise variance model: per-bin noise power (WH)_ft.
struct NmfState {
  RealMatrix w;  // F x K
  RealMatrix h;  // K x T

  std::size_t bins() const { return w.rows(); }
  std::size_t rank() const { return w.cols(); }
  std::size_t frames() const { return h.cols(); }
};

/// Seeded uniform(0.5, 1.5) entries scaled so the initial product sits near
/// the mixture's mean power.
inline NmfState nmf_init(const ComplexMatrix& x, std::size_t rank, Rng& rng) {
  if (rank == 0) throw std::invalid_argument("nmf_init: rank must be >= 1");
  if (x.rows() == 0 || x.cols() == 0) {
    throw DataError("nmf_init: empty spectrogram");
  }
  const std::size_t frames = x.rows(), bins = x.cols();
  double mp = 0.0;
  for (const auto& v : x.flat()) mp += std::norm(v);
  mp /= static_cast<double>(x.size());
  const double scale = std::sqrt(std::max(mp, kNmfFloor) / static_cast<double>(rank));

  NmfState s;
  s.w = RealMatrix(bins, rank);
  s.h = RealMatrix(rank, frames);
  for (double& v : s.w.flat()) v = std::max(scale * rng.uniform(0.5, 1.5), kNmfFloor);
  for (double& v : s.h.flat()) v = std::max(scale * rng.uniform(0.5, 1.5), kNmfFloor);
  return s;
}

/// WH, floored away from zero so it is safe as a divisor.
inline RealMatrix nmf_product(const NmfState& s) {
  RealMatrix p = matmul(s.w, s.h);
  for (double& v : p.flat()) v = std::max(v, kNmfFloor);
  return p;
}

/// V_ft = sum_m r(t,m) (|x_ft - eta^m_ft|^2 + nu^m_ft), the posterior noise
/// power that the multiplicative updates fit.
inline RealMatrix posterior_power(const ComplexMatrix& x, const RealMatrix& r,
                                  const std::vector<ComplexMatrix>& eta,
                                  const std::vector<RealMatrix>& nu) {
  const std::size_t frames = x.rows(), bins = x.cols();
  const std::size_t models = r.cols();
  if (r.rows() != frames || eta.size() != models || nu.size() != models) {
    throw std::invalid_argument("posterior_power: shape mismatch");
  }
  for (std::size_t m = 0; m < models; ++m) {
    if (eta[m].rows() != frames || eta[m].cols() != bins ||
        nu[m].rows() != frames || nu[m].cols() != bins) {
      throw std::invalid_argument("posterior_power: per-model shape mismatch");
    }
  }
  RealMatrix v(bins, frames, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t m = 0; m < models; ++m) {
      const double rm = r(t, m);
      if (rm == 0.0) continue;
      const auto* xrow = x.row(t);
      const auto* erow = eta[m].row(t);
      const auto* nrow = nu[m].row(t);
      for (std::size_t f = 0; f < bins; ++f) {
        v(f, t) += rm * (std::norm(xrow[f] - erow[f]) + nrow[f]);
      }
    }
  }
  return v;
}

/// H <- H .* [W^T (V .* (WH)^-2)] ./ [W^T (WH)^-1], floored. W unchanged.
inline NmfState update_h(const NmfState& s, const RealMatrix& v) {
  if (v.rows() != s.bins() || v.cols() != s.frames()) {
    throw std::invalid_argument("update_h: V shape mismatch");
  }
  const RealMatrix wh = nmf_product(s);
  const std::size_t bins = s.bins(), rank = s.rank(), frames = s.frames();
  NmfState out = s;
  for (std::size_t k = 0; k < rank; ++k) {
    for (std::size_t t = 0; t < frames; ++t) {
      double num = 0.0, den = 0.0;
      for (std::size_t f = 0; f < bins; ++f) {
        const double inv = 1.0 / wh(f, t);
        num += s.w(f, k) * v(f, t) * inv * inv;
        den += s.w(f, k) * inv;
      }
      out.h(k, t) = std::max(s.h(k, t) * num / den, kNmfFloor);
    }
  }
  return out;
}

/// W <- W .* [(V .* (WH)^-2) H^T] ./ [(WH)^-1 H^T], floored. H unchanged.
inline NmfState update_w(const NmfState& s, const RealMatrix& v) {
  if (v.rows() != s.bins() || v.cols() != s.frames()) {
    throw std::invalid_argument("update_w: V shape mismatch");
  }
  const RealMatrix wh = nmf_product(s);
  const std::size_t bins = s.bins(), rank = s.rank(), frames = s.frames();
  NmfState out = s;
  for (std::size_t f = 0; f < bins; ++f) {
    for (std::size_t k = 0; k < rank; ++k) {
      double num = 0.0, den = 0.0;
      for (std::size_t t = 0; t < frames; ++t) {
        const double inv = 1.0 / wh(f, t);
        num += v(f, t) * inv * inv * s.h(k, t);
        den += inv * s.h(k, t);
      }
      out.w(f, k) = std::max(s.w(f, k) * num / den, kNmfFloor);
    }
  }
  return out;
}

/// Itakura-Saito divergence sum_ft [V/P - log(V/P) - 1].
inline double is_divergence(const RealMatrix& v, const RealMatrix& p) {
  require_same_shape(v, p, "is_divergence");
  double d = 0.0;
  for (std::size_t i = 0; i < v.flat().size(); ++i) {
    const double a = v.flat()[i], b = p.flat()[i];
    if (a <= 0.0 || b <= 0.0) {
      throw std::invalid_argument("is_divergence: nonpositive entry");
    }
    const double ratio = a / b;
    d += ratio - std::log(ratio) - 1.0;
  }
  return d;
}

}  // namespace swvae

#endif  // SWVAE_NMF_HPP_
