// tests/test_nmf.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "swvae/nmf.hpp"
#include "swvae/rng.hpp"

using namespace swvae;

namespace {

ComplexMatrix random_spectrogram(std::size_t frames, std::size_t bins, Rng& rng) {
  ComplexMatrix x(frames, bins);
  for (auto& v : x.flat()) v = {rng.normal(), rng.normal()};
  return x;
}

RealMatrix random_positive(std::size_t rows, std::size_t cols, Rng& rng) {
  RealMatrix v(rows, cols);
  for (double& x : v.flat()) x = rng.uniform(0.1, 3.0);
  return v;
}

}  // namespace

TEST_CASE("posterior power vanishes under a perfect single-model fit") {
  Rng rng(41);
  const ComplexMatrix x = random_spectrogram(4, 5, rng);
  RealMatrix r(4, 1, 1.0);
  const RealMatrix v = posterior_power(x, r, {x}, {RealMatrix(4, 5, 0.0)});
  for (double e : v.flat()) REQUIRE(e == 0.0);
}

TEST_CASE("posterior power with a zero filter is power plus variance") {
  Rng rng(42);
  const ComplexMatrix x = random_spectrogram(3, 4, rng);
  RealMatrix r(3, 1, 1.0);
  const RealMatrix nu = random_positive(3, 4, rng);
  const RealMatrix v =
      posterior_power(x, r, {ComplexMatrix(3, 4, {0.0, 0.0})}, {nu});
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t f = 0; f < 4; ++f) {
      REQUIRE(v(f, t) ==
              Catch::Approx(std::norm(x(t, f)) + nu(t, f)).epsilon(1e-12));
    }
  }
}

TEST_CASE("posterior power matches a naive two-model oracle") {
  Rng rng(43);
  const std::size_t T = 6, F = 7;
  const ComplexMatrix x = random_spectrogram(T, F, rng);
  RealMatrix r(T, 2);
  for (std::size_t t = 0; t < T; ++t) {
    const double a = rng.uniform(0.05, 0.95);
    r(t, 0) = a;
    r(t, 1) = 1.0 - a;
  }
  std::vector<ComplexMatrix> eta = {random_spectrogram(T, F, rng),
                                    random_spectrogram(T, F, rng)};
  std::vector<RealMatrix> nu = {random_positive(T, F, rng),
                                random_positive(T, F, rng)};
  const RealMatrix v = posterior_power(x, r, eta, nu);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      double want = 0.0;
      for (std::size_t m = 0; m < 2; ++m) {
        want += r(t, m) * (std::norm(x(t, f) - eta[m](t, f)) + nu[m](t, f));
      }
      REQUIRE(v(f, t) == Catch::Approx(want).margin(1e-12));
    }
  }
}

TEST_CASE("posterior power rejects inconsistent shapes") {
  Rng rng(44);
  const ComplexMatrix x = random_spectrogram(3, 4, rng);
  RealMatrix r(3, 1, 1.0);
  REQUIRE_THROWS_AS(
      posterior_power(x, r, {random_spectrogram(3, 5, rng)},
                      {RealMatrix(3, 4, 0.0)}),
      std::invalid_argument);
  RealMatrix bad_r(2, 1, 1.0);
  REQUIRE_THROWS_AS(posterior_power(x, bad_r, {x}, {RealMatrix(3, 4, 0.0)}),
                    std::invalid_argument);
}

TEST_CASE("updates are the identity at an exact factorization") {
  Rng rng(45);
  NmfState s;
  s.w = random_positive(6, 3, rng);
  s.h = random_positive(3, 5, rng);
  const RealMatrix v = matmul(s.w, s.h);

  const NmfState hs = update_h(s, v);
  REQUIRE(hs.w.flat() == s.w.flat());
  for (std::size_t i = 0; i < s.h.flat().size(); ++i) {
    REQUIRE(hs.h.flat()[i] == Catch::Approx(s.h.flat()[i]).epsilon(1e-12));
  }
  const NmfState ws = update_w(s, v);
  REQUIRE(ws.h.flat() == s.h.flat());
  for (std::size_t i = 0; i < s.w.flat().size(); ++i) {
    REQUIRE(ws.w.flat()[i] == Catch::Approx(s.w.flat()[i]).epsilon(1e-12));
  }
}

TEST_CASE("rank-1 structure is recovered to tiny divergence") {
  Rng rng(46);
  const std::size_t F = 12, T = 9;
  RealVector wcol(F), hrow(T);
  for (double& x : wcol) x = rng.uniform(0.2, 2.0);
  for (double& x : hrow) x = rng.uniform(0.2, 2.0);
  RealMatrix v(F, T);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t) v(f, t) = wcol[f] * hrow[t];
  }
  ComplexMatrix fake(T, F);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) fake(t, f) = std::sqrt(v(f, t));
  }
  NmfState s = nmf_init(fake, 1, rng);
  for (int it = 0; it < 500; ++it) {
    s = update_h(s, v);
    s = update_w(s, v);
  }
  REQUIRE(is_divergence(v, nmf_product(s)) < 1e-8);
}

TEST_CASE("divergence never increases across updates") {
  Rng rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t F = 8, T = 6, K = 2;
    const RealMatrix v = random_positive(F, T, rng);
    ComplexMatrix fake(T, F);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) fake(t, f) = std::sqrt(v(f, t));
    }
    NmfState s = nmf_init(fake, K, rng);
    double d = is_divergence(v, nmf_product(s));
    for (int it = 0; it < 30; ++it) {
      s = update_h(s, v);
      const double dh = is_divergence(v, nmf_product(s));
      REQUIRE(dh <= d + 1e-10);
      s = update_w(s, v);
      const double dw = is_divergence(v, nmf_product(s));
      REQUIRE(dw <= dh + 1e-10);
      d = dw;
    }
  }
}

TEST_CASE("the fitted product tracks the scale of the target") {
  Rng rng(48);
  const std::size_t F = 6, T = 4, K = 4;
  const RealMatrix v = random_positive(F, T, rng);
  for (double c : {1.0, 7.3}) {
    RealMatrix scaled = v;
    for (double& x : scaled.flat()) x *= c;
    ComplexMatrix fake(T, F);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) fake(t, f) = std::sqrt(scaled(f, t));
    }
    NmfState s = nmf_init(fake, K, rng);
    for (int it = 0; it < 800; ++it) {
      s = update_h(s, scaled);
      s = update_w(s, scaled);
    }
    const RealMatrix p = nmf_product(s);
    REQUIRE(mean(p.flat()) == Catch::Approx(mean(scaled.flat())).epsilon(0.02));
  }
}

TEST_CASE("flooring keeps every entry positive even on degenerate targets") {
  Rng rng(49);
  RealMatrix v(5, 4, 0.0);  // all-zero target drives H and W to the floor
  NmfState s;
  s.w = random_positive(5, 2, rng);
  s.h = random_positive(2, 4, rng);
  for (int it = 0; it < 10; ++it) {
    s = update_h(s, v);
    s = update_w(s, v);
  }
  for (double x : s.w.flat()) REQUIRE(x >= kNmfFloor);
  for (double x : s.h.flat()) REQUIRE(x >= kNmfFloor);
}

TEST_CASE("itakura-saito divergence basics") {
  Rng rng(50);
  const RealMatrix p = random_positive(3, 4, rng);
  REQUIRE(is_divergence(p, p) == Catch::Approx(0.0).margin(1e-12));

  RealMatrix ep = p;
  for (double& x : ep.flat()) x *= std::exp(1.0);
  REQUIRE(is_divergence(ep, p) ==
          Catch::Approx(12.0 * (std::exp(1.0) - 2.0)).epsilon(1e-12));

  const RealMatrix q = random_positive(3, 4, rng);
  REQUIRE(is_divergence(p, q) != is_divergence(q, p));

  RealMatrix zero(3, 4, 0.0);
  REQUIRE_THROWS_AS(is_divergence(zero, p), std::invalid_argument);
}

TEST_CASE("initialization is seeded and scaled to the mixture power") {
  Rng a(51), b(51);
  const ComplexMatrix x = random_spectrogram(20, 16, a);
  Rng a2(52), b2(52);
  const NmfState s1 = nmf_init(x, 8, a2);
  ComplexMatrix x2 = x;
  const NmfState s2 = nmf_init(x2, 8, b2);
  REQUIRE(s1.w.flat() == s2.w.flat());
  REQUIRE(s1.h.flat() == s2.h.flat());
  (void)b;

  double mp = 0.0;
  for (const auto& v : x.flat()) mp += std::norm(v);
  mp /= static_cast<double>(x.size());
  const double ratio = mean(nmf_product(s1).flat()) / mp;
  REQUIRE(ratio > 0.5);
  REQUIRE(ratio < 2.0);
}
