// swvae/mlp.hpp

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

#ifndef SWVAE_MLP_HPP_
#define SWVAE_MLP_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "swvae/errors.hpp"
#include "swvae/matrix.hpp"
#include "swvae/rng.hpp"

namespace swvae {

/// Fully connected net: tanh hidden layers, linear output layer.
class Mlp {
 public:
  Mlp() = default;

  /// sizes = {input, hidden..., output}; all parameters zero (checkpoint
  /// loading fills them in).
  explicit Mlp(const std::vector<std::size_t>& sizes) {
    if (sizes.size() < 2) {
      throw std::invalid_argument("Mlp: need at least input and output sizes");
    }
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      if (sizes[i] == 0 || sizes[i + 1] == 0) {
        throw std::invalid_argument("Mlp: zero layer size");
      }
      weights.emplace_back(sizes[i + 1], sizes[i], 0.0);
      biases.emplace_back(sizes[i + 1], 0.0);
    }
  }

  /// sizes = {input, hidden..., output}; weights U(+-1/sqrt(fan_in)), zero bias.
  Mlp(const std::vector<std::size_t>& sizes, Rng& rng) {
    if (sizes.size() < 2) {
      throw std::invalid_argument("Mlp: need at least input and output sizes");
    }
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      if (sizes[i] == 0 || sizes[i + 1] == 0) {
        throw std::invalid_argument("Mlp: zero layer size");
      }
      RealMatrix w(sizes[i + 1], sizes[i]);
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[i]));
      for (double& v : w.flat()) v = rng.uniform(-bound, bound);
      weights.push_back(std::move(w));
      biases.emplace_back(sizes[i + 1], 0.0);
    }
  }

  std::size_t layers() const { return weights.size(); }
  std::size_t input_dim() const { return weights.front().cols(); }
  std::size_t output_dim() const { return weights.back().rows(); }

  /// Activations per layer: acts[0] is the input, acts[i>0] the post-tanh
  /// hidden outputs, acts.back() the linear output.
  struct Trace {
    std::vector<RealVector> acts;
  };

  void forward(const RealVector& in, Trace& tr) const {
    if (in.size() != input_dim()) {
      throw std::invalid_argument("Mlp::forward: input length mismatch");
    }
    tr.acts.assign(layers() + 1, {});
    tr.acts[0] = in;
    for (std::size_t i = 0; i < layers(); ++i) {
      RealVector& out = tr.acts[i + 1];
      matvec(weights[i], tr.acts[i], out);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += biases[i][j];
      if (i + 1 < layers()) {
        for (double& v : out) v = std::tanh(v);
      }
    }
  }

  RealVector forward(const RealVector& in) const {
    Trace tr;
    forward(in, tr);
    return tr.acts.back();
  }

  /// dL/d(input) from dL/d(output); parameter gradients optionally added into
  /// grad_w/grad_b (same shapes as weights/biases).
  void backward(const Trace& tr, const RealVector& dout, RealVector& din,
                std::vector<RealMatrix>* grad_w = nullptr,
                std::vector<RealVector>* grad_b = nullptr) const {
    if (dout.size() != output_dim()) {
      throw std::invalid_argument("Mlp::backward: output grad length mismatch");
    }
    RealVector g = dout;
    for (std::size_t i = layers(); i-- > 0;) {
      const RealVector& a = tr.acts[i];
      if (grad_w) {
        RealMatrix& dw = (*grad_w)[i];
        RealVector& db = (*grad_b)[i];
        for (std::size_t r = 0; r < dw.rows(); ++r) {
          double* drow = dw.row(r);
          const double gr = g[r];
          for (std::size_t c = 0; c < dw.cols(); ++c) drow[c] += gr * a[c];
          db[r] += gr;
        }
      }
      RealVector gprev;
      matvec_transposed(weights[i], g, gprev);
      if (i > 0) {
        // tanh'(x) in terms of the stored activation.
        for (std::size_t j = 0; j < gprev.size(); ++j) {
          gprev[j] *= 1.0 - a[j] * a[j];
        }
      }
      g = std::move(gprev);
    }
    din = std::move(g);
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < layers(); ++i) {
      n += weights[i].size() + biases[i].size();
    }
    return n;
  }

  /// Layout: per layer, row-major weights then bias.
  void flatten(double* out) const {
    for (std::size_t i = 0; i < layers(); ++i) {
      for (double v : weights[i].flat()) *out++ = v;
      for (double v : biases[i]) *out++ = v;
    }
  }

  void unflatten(const double* in) {
    for (std::size_t i = 0; i < layers(); ++i) {
      for (double& v : weights[i].flat()) v = *in++;
      for (double& v : biases[i]) v = *in++;
    }
  }

  std::vector<RealMatrix> zero_like_weights() const {
    std::vector<RealMatrix> out;
    for (const auto& w : weights) out.emplace_back(w.rows(), w.cols(), 0.0);
    return out;
  }

  std::vector<RealVector> zero_like_biases() const {
    std::vector<RealVector> out;
    for (const auto& b : biases) out.emplace_back(b.size(), 0.0);
    return out;
  }

  std::vector<RealMatrix> weights;
  std::vector<RealVector> biases;
};

}  // namespace swvae

#endif  // SWVAE_MLP_HPP_
