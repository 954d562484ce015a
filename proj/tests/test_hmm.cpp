// tests/test_hmm.cpp

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
#include <vector>

#include "oracles.hpp"
#include "swvae/errors.hpp"
#include "swvae/hmm.hpp"
#include "swvae/rng.hpp"

using namespace swvae;

TEST_CASE("single frame reduces to Bayes rule") {
  HmmParams p = uniform_hmm(2);
  RealMatrix logits(1, 2);
  logits(0, 0) = std::log(2.0);
  logits(0, 1) = 0.0;
  const SwitchPosterior post = forward_backward(p, logits);
  REQUIRE(post.r(0, 0) == Catch::Approx(2.0 / 3.0).margin(1e-12));
  REQUIRE(post.r(0, 1) == Catch::Approx(1.0 / 3.0).margin(1e-12));
  REQUIRE(post.zeta.empty());
  REQUIRE(post.log_normalizer == Catch::Approx(std::log(1.5)).margin(1e-12));
}

TEST_CASE("uniform logits with a uniform chain give uniform marginals") {
  HmmParams p = uniform_hmm(3);
  RealMatrix logits(7, 3, 0.4);  // constant rows, shift-invariant anyway
  const SwitchPosterior post = forward_backward(p, logits);
  for (std::size_t t = 0; t < 7; ++t) {
    for (std::size_t m = 0; m < 3; ++m) {
      REQUIRE(post.r(t, m) == Catch::Approx(1.0 / 3.0).margin(1e-12));
    }
  }
}

TEST_CASE("uniform logits recover the chain's prior marginals") {
  HmmParams p;
  p.lambda = {0.9, 0.1};
  p.tau = RealMatrix(2, 2);
  p.tau(0, 0) = 0.8;
  p.tau(0, 1) = 0.2;
  p.tau(1, 0) = 0.3;
  p.tau(1, 1) = 0.7;
  RealMatrix logits(3, 2, 0.0);
  const SwitchPosterior post = forward_backward(p, logits);
  // lambda, lambda*tau, lambda*tau^2 computed by hand.
  REQUIRE(post.r(0, 0) == Catch::Approx(0.9).margin(1e-12));
  REQUIRE(post.r(1, 0) == Catch::Approx(0.75).margin(1e-12));
  REQUIRE(post.r(2, 0) == Catch::Approx(0.675).margin(1e-12));
}

TEST_CASE("forward-backward matches exhaustive enumeration") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t M = 1 + rng.uniform_index(3);
    const std::size_t T = 1 + rng.uniform_index(5);
    const HmmParams p = random_hmm(M, rng);
    RealMatrix logits(T, M);
    for (double& v : logits.flat()) v = rng.uniform(-3.0, 3.0);

    const SwitchPosterior fast = forward_backward(p, logits);
    const oracle::EnumPosterior slow = oracle::enumerate_posterior(p, logits);

    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t m = 0; m < M; ++m) {
        REQUIRE(fast.r(t, m) == Catch::Approx(slow.r(t, m)).margin(1e-12));
      }
    }
    for (std::size_t k = 0; k + 1 < T; ++k) {
      for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
          REQUIRE(fast.zeta[k](i, j) ==
                  Catch::Approx(slow.zeta[k](i, j)).margin(1e-12));
        }
      }
    }
    REQUIRE(fast.log_normalizer ==
            Catch::Approx(slow.log_normalizer).margin(1e-10));
  }
}

TEST_CASE("per-frame logit shifts change only the log-normalizer") {
  Rng rng(32);
  const HmmParams p = random_hmm(3, rng);
  RealMatrix logits(20, 3);
  for (double& v : logits.flat()) v = rng.uniform(-4.0, 4.0);
  const SwitchPosterior base = forward_backward(p, logits);

  RealMatrix shifted = logits;
  double shift_sum = 0.0;
  for (std::size_t t = 0; t < 20; ++t) {
    const double c = rng.uniform(-5.0, 5.0);
    shift_sum += c;
    for (std::size_t m = 0; m < 3; ++m) shifted(t, m) += c;
  }
  const SwitchPosterior moved = forward_backward(p, shifted);
  for (std::size_t t = 0; t < 20; ++t) {
    for (std::size_t m = 0; m < 3; ++m) {
      REQUIRE(moved.r(t, m) == Catch::Approx(base.r(t, m)).margin(1e-12));
    }
  }
  for (std::size_t k = 0; k < base.zeta.size(); ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        REQUIRE(moved.zeta[k](i, j) ==
                Catch::Approx(base.zeta[k](i, j)).margin(1e-12));
      }
    }
  }
  REQUIRE(moved.log_normalizer ==
          Catch::Approx(base.log_normalizer + shift_sum).margin(1e-9));
}

TEST_CASE("posterior marginals and joints are mutually consistent") {
  Rng rng(33);
  const HmmParams p = random_hmm(3, rng);
  RealMatrix logits(50, 3);
  for (double& v : logits.flat()) v = rng.uniform(-6.0, 6.0);
  const SwitchPosterior post = forward_backward(p, logits);

  for (std::size_t t = 0; t < 50; ++t) {
    double s = 0.0;
    for (std::size_t m = 0; m < 3; ++m) s += post.r(t, m);
    REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
  }
  for (std::size_t k = 0; k + 1 < 50; ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      double row = 0.0, col = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        row += post.zeta[k](i, j);
        col += post.zeta[k](j, i);
        total += post.zeta[k](i, j);
      }
      REQUIRE(row == Catch::Approx(post.r(k, i)).margin(1e-10));
      REQUIRE(col == Catch::Approx(post.r(k + 1, i)).margin(1e-10));
    }
    REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("single-state chains are certain everywhere") {
  HmmParams p = uniform_hmm(1);
  RealMatrix logits(6, 1);
  double want = 0.0;
  for (std::size_t t = 0; t < 6; ++t) {
    logits(t, 0) = -1.0 + 0.2 * static_cast<double>(t);
    want += logits(t, 0);
  }
  const SwitchPosterior post = forward_backward(p, logits);
  for (std::size_t t = 0; t < 6; ++t) REQUIRE(post.r(t, 0) == 1.0);
  for (const auto& slab : post.zeta) REQUIRE(slab(0, 0) == 1.0);
  REQUIRE(post.log_normalizer == Catch::Approx(want).margin(1e-12));
}

TEST_CASE("baum-welch on a degenerate constant-path posterior") {
  const std::size_t T = 5, M = 3, k = 1;
  SwitchPosterior post;
  post.r = RealMatrix(T, M, 0.0);
  for (std::size_t t = 0; t < T; ++t) post.r(t, k) = 1.0;
  post.zeta.assign(T - 1, RealMatrix(M, M, 0.0));
  for (auto& slab : post.zeta) slab(k, k) = 1.0;

  const HmmParams p = update_hmm(post);
  REQUIRE(p.lambda[k] == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(p.tau(k, k) == Catch::Approx(1.0).margin(1e-9));
  double ls = 0.0;
  for (double v : p.lambda) {
    REQUIRE(v > 0.0);
    ls += v;
  }
  REQUIRE(ls == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("baum-welch on a uniform posterior returns uniform parameters") {
  const std::size_t T = 4, M = 2;
  SwitchPosterior post;
  post.r = RealMatrix(T, M, 0.5);
  post.zeta.assign(T - 1, RealMatrix(M, M, 0.25));
  const HmmParams p = update_hmm(post);
  for (double v : p.lambda) REQUIRE(v == Catch::Approx(0.5).margin(1e-12));
  for (double v : p.tau.flat()) REQUIRE(v == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("baum-welch output is row-stochastic on random posteriors") {
  Rng rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const HmmParams chain = random_hmm(3, rng);
    RealMatrix logits(12, 3);
    for (double& v : logits.flat()) v = rng.uniform(-2.0, 2.0);
    const HmmParams p = update_hmm(forward_backward(chain, logits));
    double ls = 0.0;
    for (double v : p.lambda) ls += v;
    REQUIRE(ls == Catch::Approx(1.0).margin(1e-12));
    for (std::size_t i = 0; i < 3; ++i) {
      double rs = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        REQUIRE(p.tau(i, j) > 0.0);
        rs += p.tau(i, j);
      }
      REQUIRE(rs == Catch::Approx(1.0).margin(1e-12));
    }
    validate(p);
  }
}

TEST_CASE("forward-backward rejects malformed inputs") {
  HmmParams p = uniform_hmm(2);
  RealMatrix logits(3, 2, 0.0);
  HmmParams bad = p;
  bad.lambda = {0.7, 0.7};
  REQUIRE_THROWS_AS(forward_backward(bad, logits), std::invalid_argument);
  bad = p;
  bad.tau(0, 0) = 0.9;  // row no longer sums to 1
  REQUIRE_THROWS_AS(forward_backward(bad, logits), std::invalid_argument);
  RealMatrix wrong(3, 3, 0.0);
  REQUIRE_THROWS_AS(forward_backward(p, wrong), std::invalid_argument);
  logits(1, 1) = std::nan("");
  REQUIRE_THROWS_AS(forward_backward(p, logits), NumericalError);
}
