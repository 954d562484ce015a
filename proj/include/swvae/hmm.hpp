// swvae/hmm.hpp

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

#ifndef SWVAE_HMM_HPP_
#define SWVAE_HMM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "swvae/errors.hpp"
#include "swvae/matrix.hpp"
#include "swvae/rng.hpp"

namespace swvae {

constexpr double kProbFloor = 1e-12;

/// Markov chain over the switching variable: initial distribution lambda and
/// row-stochastic transition matrix tau.
struct HmmParams {
  RealVector lambda;  // M
  RealMatrix tau;     // M x M

  std::size_t states() const { return lambda.size(); }
};

inline void validate(const HmmParams& p) {
  const std::size_t m = p.states();
  if (m == 0 || p.tau.rows() != m || p.tau.cols() != m) {
    throw std::invalid_argument("HmmParams: shape mismatch");
  }
  double s = 0.0;
  for (double v : p.lambda) {
    if (!(v >= 0.0)) throw std::invalid_argument("HmmParams: negative lambda");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-8) {
    throw std::invalid_argument("HmmParams: lambda does not sum to 1");
  }
  for (std::size_t i = 0; i < m; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!(p.tau(i, j) >= 0.0)) {
        throw std::invalid_argument("HmmParams: negative tau entry");
      }
      rs += p.tau(i, j);
    }
    if (std::abs(rs - 1.0) > 1e-8) {
      throw std::invalid_argument("HmmParams: tau row does not sum to 1");
    }
  }
}

inline HmmParams uniform_hmm(std::size_t states) {
  HmmParams p;
  p.lambda.assign(states, 1.0 / static_cast<double>(states));
  p.tau = RealMatrix(states, states, 1.0 / static_cast<double>(states));
  return p;
}

inline HmmParams random_hmm(std::size_t states, Rng& rng) {
  HmmParams p;
  p.lambda.resize(states);
  p.tau = RealMatrix(states, states);
  double s = 0.0;
  for (double& v : p.lambda) {
    v = rng.uniform(0.1, 1.0);
    s += v;
  }
  for (double& v : p.lambda) v /= s;
  for (std::size_t i = 0; i < states; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
      p.tau(i, j) = rng.uniform(0.1, 1.0);
      rs += p.tau(i, j);
    }
    for (std::size_t j = 0; j < states; ++j) p.tau(i, j) /= rs;
  }
  return p;
}

/// Smoothed switch posterior: marginals r(t,m), per-transition joints
/// zeta[t](i,j) for the step t -> t+1, and the log-normalizer
/// log sum over paths of lambda * prod tau * prod exp(logit).
struct SwitchPosterior {
  RealMatrix r;                  // T x M
  std::vector<RealMatrix> zeta;  // T-1 slabs, each M x M, each summing to 1
  double log_normalizer = 0.0;

  std::size_t frames() const { return r.rows(); }
  std::size_t states() const { return r.cols(); }
};

/// Scaled forward-backward over unnormalized log-emissions. Each frame's
/// logits are shifted by their max before exponentiation, so the result is
/// invariant to per-frame constants; the shifts are added back into the
/// log-normalizer.
inline SwitchPosterior forward_backward(const HmmParams& params,
                                        const RealMatrix& logits) {
  validate(params);
  const std::size_t T = logits.rows();
  const std::size_t M = params.states();
  if (T == 0 || logits.cols() != M) {
    throw std::invalid_argument("forward_backward: logits shape mismatch");
  }
  if (!all_finite(logits)) {
    throw NumericalError("forward_backward: non-finite logits");
  }

  RealMatrix b(T, M);  // shifted emissions, max of each row is 1
  double shift_total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double mx = logits(t, 0);
    for (std::size_t m = 1; m < M; ++m) mx = std::max(mx, logits(t, m));
    shift_total += mx;
    for (std::size_t m = 0; m < M; ++m) b(t, m) = std::exp(logits(t, m) - mx);
  }

  RealMatrix alpha(T, M);
  RealVector c(T, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    alpha(0, m) = params.lambda[m] * b(0, m);
    c[0] += alpha(0, m);
  }
  if (c[0] <= 0.0) throw NumericalError("forward_backward: zero probability");
  for (std::size_t m = 0; m < M; ++m) alpha(0, m) /= c[0];
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < M; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < M; ++i) acc += alpha(t - 1, i) * params.tau(i, j);
      alpha(t, j) = acc * b(t, j);
      c[t] += alpha(t, j);
    }
    if (c[t] <= 0.0) throw NumericalError("forward_backward: zero probability");
    for (std::size_t j = 0; j < M; ++j) alpha(t, j) /= c[t];
  }

  RealMatrix beta(T, M, 1.0);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < M; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        acc += params.tau(i, j) * b(t + 1, j) * beta(t + 1, j);
      }
      beta(t, i) = acc / c[t + 1];
    }
  }

  SwitchPosterior post;
  post.r = RealMatrix(T, M);
  for (std::size_t t = 0; t < T; ++t) {
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      post.r(t, m) = alpha(t, m) * beta(t, m);
      s += post.r(t, m);
    }
    for (std::size_t m = 0; m < M; ++m) post.r(t, m) /= s;
  }
  post.zeta.reserve(T > 0 ? T - 1 : 0);
  for (std::size_t t = 1; t < T; ++t) {
    RealMatrix slab(M, M);
    double s = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < M; ++j) {
        slab(i, j) =
            alpha(t - 1, i) * params.tau(i, j) * b(t, j) * beta(t, j) / c[t];
        s += slab(i, j);
      }
    }
    for (double& v : slab.flat()) v /= s;
    post.zeta.push_back(std::move(slab));
  }
  post.log_normalizer = shift_total;
  for (std::size_t t = 0; t < T; ++t) post.log_normalizer += std::log(c[t]);
  return post;
}

/// Baum-Welch M step: lambda from the first marginal, tau from pooled joints
/// over pooled predecessor marginals. Entries are floored and rows
/// renormalized so no state is ever absorbed at zero.
inline HmmParams update_hmm(const SwitchPosterior& post) {
  const std::size_t T = post.frames();
  const std::size_t M = post.states();
  if (T == 0 || M == 0) throw std::invalid_argument("update_hmm: empty posterior");
  HmmParams out;
  out.lambda.resize(M);
  double ls = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    out.lambda[m] = std::max(post.r(0, m), kProbFloor);
    ls += out.lambda[m];
  }
  for (double& v : out.lambda) v /= ls;

  out.tau = RealMatrix(M, M);
  for (std::size_t i = 0; i < M; ++i) {
    double den = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t) den += post.r(t, i);
    double rs = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      double num = 0.0;
      for (const auto& slab : post.zeta) num += slab(i, j);
      const double raw = den > 0.0 ? num / den : 1.0 / static_cast<double>(M);
      out.tau(i, j) = std::max(raw, kProbFloor);
      rs += out.tau(i, j);
    }
    for (std::size_t j = 0; j < M; ++j) out.tau(i, j) /= rs;
  }
  return out;
}

}  // namespace swvae

#endif  // SWVAE_HMM_HPP_
