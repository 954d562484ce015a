// swvae/adam.hpp

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

#ifndef SWVAE_ADAM_HPP_
#define SWVAE_ADAM_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "swvae/errors.hpp"

namespace swvae {

/// Adam optimizer state for one flat parameter vector.
struct AdamState {
  std::size_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr)
      : first_moment(n, 0.0), second_moment(n, 0.0), learning_rate(lr) {
    if (lr <= 0.0) throw std::invalid_argument("AdamState: learning rate must be > 0");
  }
};

/// One Adam update with bias correction, in place. Zero gradient leaves
/// params unchanged (the step counter still advances).
inline void adam_step(std::vector<double>& params,
                      const std::vector<double>& grads, AdamState& state) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.first_moment.size() != n ||
      state.second_moment.size() != n) {
    throw std::invalid_argument(
        "adam_step: length mismatch (params " + std::to_string(n) + ", grads " +
        std::to_string(grads.size()) + ", moments " +
        std::to_string(state.first_moment.size()) + ")");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      throw NumericalError("adam_step: non-finite gradient at step " +
                           std::to_string(state.step + 1));
    }
  }
  state.step += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
    state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
    const double mhat = state.first_moment[i] / bc1;
    const double vhat = state.second_moment[i] / bc2;
    params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

}  // namespace swvae

#endif  // SWVAE_ADAM_HPP_
