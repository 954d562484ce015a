// swvae/vae.hpp

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

#ifndef SWVAE_VAE_HPP_
#define SWVAE_VAE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "swvae/adam.hpp"
#include "swvae/errors.hpp"
#include "swvae/featio.hpp"
#include "swvae/matrix.hpp"
#include "swvae/mlp.hpp"
#include "swvae/rng.hpp"

namespace swvae {

enum class VaeKind : std::uint32_t { kAudioOnly = 0, kAudioVisual = 1 };

/// One generative speech model: encoder q(z|s[,v]), decoder giving the
/// per-bin variance of the zero-mean complex speech Gaussian, and for the
/// audio-visual kind a prior net giving N(xi(v), Lambda(v)) over z. The
/// audio-only prior is the standard normal.
struct VaeModel {
  VaeKind kind = VaeKind::kAudioOnly;
  int model_id = 0;
  std::size_t latent_dim = 16;
  std::size_t bins = 513;
  std::size_t visual_dim = 0;

  Mlp encoder;    // F (+V) -> 2L, (mean, log-variance) of q(z|.)
  Mlp decoder;    // L (+V) -> F, per-bin log-variance of s
  Mlp prior_net;  // V -> 2L, audio-visual kind only

  // Per-bin standardization of the encoder's log-power input, estimated on
  // the training set.
  RealVector feat_mean, feat_std;

  bool audio_visual() const { return kind == VaeKind::kAudioVisual; }

  std::size_t param_count() const {
    std::size_t n = encoder.param_count() + decoder.param_count();
    if (audio_visual()) n += prior_net.param_count();
    return n;
  }

  void flatten(RealVector& out) const {
    out.resize(param_count());
    double* p = out.data();
    encoder.flatten(p);
    p += encoder.param_count();
    decoder.flatten(p);
    p += decoder.param_count();
    if (audio_visual()) prior_net.flatten(p);
  }

  void unflatten(const RealVector& in) {
    if (in.size() != param_count()) {
      throw std::invalid_argument("VaeModel::unflatten: length mismatch");
    }
    const double* p = in.data();
    encoder.unflatten(p);
    p += encoder.param_count();
    decoder.unflatten(p);
    p += decoder.param_count();
    if (audio_visual()) prior_net.unflatten(p);
  }
};

inline VaeModel make_vae(VaeKind kind, std::size_t bins, std::size_t latent_dim,
                         std::size_t visual_dim, std::size_t hidden, Rng& rng,
                         int model_id = 0) {
  if (kind == VaeKind::kAudioVisual && visual_dim == 0) {
    throw std::invalid_argument("make_vae: audio-visual kind needs visual_dim");
  }
  VaeModel m;
  m.kind = kind;
  m.model_id = model_id;
  m.latent_dim = latent_dim;
  m.bins = bins;
  m.visual_dim = kind == VaeKind::kAudioVisual ? visual_dim : 0;
  const std::size_t enc_in = bins + m.visual_dim;
  const std::size_t dec_in = latent_dim + m.visual_dim;
  m.encoder = Mlp({enc_in, hidden, 2 * latent_dim}, rng);
  m.decoder = Mlp({dec_in, hidden, bins}, rng);
  if (m.audio_visual()) m.prior_net = Mlp({m.visual_dim, hidden, 2 * latent_dim}, rng);
  m.feat_mean.assign(bins, 0.0);
  m.feat_std.assign(bins, 1.0);
  return m;
}

namespace detail {

inline void require_visual_match(const VaeModel& m, const RealVector* v,
                                 const char* op) {
  if (m.audio_visual()) {
    if (v == nullptr || v->size() != m.visual_dim) {
      throw std::invalid_argument(std::string(op) +
                                  ": audio-visual model needs a visual vector");
    }
  } else if (v != nullptr) {
    throw std::invalid_argument(std::string(op) +
                                ": audio-only model takes no visual vector");
  }
}

inline RealVector encoder_input(const VaeModel& m, const RealVector& power,
                                const RealVector* v) {
  if (power.size() != m.bins) {
    throw std::invalid_argument("encode: power spectrum length mismatch");
  }
  RealVector u(m.bins + m.visual_dim);
  for (std::size_t f = 0; f < m.bins; ++f) {
    const double logp = std::log(power[f] + 1e-10);
    u[f] = (logp - m.feat_mean[f]) / m.feat_std[f];
  }
  if (m.audio_visual()) {
    std::copy(v->begin(), v->end(), u.begin() + static_cast<std::ptrdiff_t>(m.bins));
  }
  return u;
}

inline RealVector decoder_input(const VaeModel& m, const RealVector& z,
                                const RealVector* v) {
  if (z.size() != m.latent_dim) {
    throw std::invalid_argument("decode: latent length mismatch");
  }
  RealVector in(m.latent_dim + m.visual_dim);
  std::copy(z.begin(), z.end(), in.begin());
  if (m.audio_visual()) {
    std::copy(v->begin(), v->end(),
              in.begin() + static_cast<std::ptrdiff_t>(m.latent_dim));
  }
  return in;
}

}  // namespace detail

/// Gaussian posterior parameters of q(z | s [, v]).
inline void encode(const VaeModel& m, const RealVector& power,
                   const RealVector* v, RealVector& mean, RealVector& log_var) {
  detail::require_visual_match(m, v, "encode");
  const RealVector u = detail::encoder_input(m, power, v);
  const RealVector out = m.encoder.forward(u);
  mean.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m.latent_dim));
  log_var.assign(out.begin() + static_cast<std::ptrdiff_t>(m.latent_dim), out.end());
  if (!all_finite(mean) || !all_finite(log_var)) {
    throw NumericalError("encode: non-finite posterior parameters");
  }
}

/// Prior N(xi, Lambda) over z; standard normal for the audio-only kind.
inline void prior(const VaeModel& m, const RealVector* v, RealVector& xi,
                  RealVector& log_lambda) {
  detail::require_visual_match(m, v, "prior");
  if (!m.audio_visual()) {
    xi.assign(m.latent_dim, 0.0);
    log_lambda.assign(m.latent_dim, 0.0);
    return;
  }
  const RealVector out = m.prior_net.forward(*v);
  xi.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m.latent_dim));
  log_lambda.assign(out.begin() + static_cast<std::ptrdiff_t>(m.latent_dim),
                    out.end());
  if (!all_finite(xi) || !all_finite(log_lambda)) {
    throw NumericalError("prior: non-finite prior parameters");
  }
}

/// Per-bin speech variance sigma^2(z [, v]); the trace enables the pullback.
inline RealVector decode_variance(const VaeModel& m, const RealVector& z,
                                  const RealVector* v,
                                  Mlp::Trace* trace = nullptr) {
  detail::require_visual_match(m, v, "decode_variance");
  const RealVector in = detail::decoder_input(m, z, v);
  Mlp::Trace local;
  Mlp::Trace& tr = trace ? *trace : local;
  m.decoder.forward(in, tr);
  RealVector var(m.bins);
  for (std::size_t f = 0; f < m.bins; ++f) {
    var[f] = std::exp(tr.acts.back()[f]);
    if (!std::isfinite(var[f]) || var[f] <= 0.0) {
      throw NumericalError("decode_variance: non-finite or non-positive output");
    }
  }
  return var;
}

/// dL/dz for upstream gradient dL/d(log sigma^2), using a decode trace.
inline RealVector decoder_grad_z(const VaeModel& m, const Mlp::Trace& trace,
                                 const RealVector& dlogvar) {
  RealVector din;
  m.decoder.backward(trace, dlogvar, din);
  din.resize(m.latent_dim);  // drop the visual block, it is not optimized
  return din;
}

/// Parameter-gradient accumulators matching VaeModel's flatten layout.
struct VaeGradients {
  std::vector<RealMatrix> enc_w, dec_w, pri_w;
  std::vector<RealVector> enc_b, dec_b, pri_b;

  explicit VaeGradients(const VaeModel& m)
      : enc_w(m.encoder.zero_like_weights()),
        dec_w(m.decoder.zero_like_weights()),
        pri_w(m.audio_visual() ? m.prior_net.zero_like_weights()
                               : std::vector<RealMatrix>{}),
        enc_b(m.encoder.zero_like_biases()),
        dec_b(m.decoder.zero_like_biases()),
        pri_b(m.audio_visual() ? m.prior_net.zero_like_biases()
                               : std::vector<RealVector>{}) {}

  void zero() {
    for (auto& w : enc_w) w.fill(0.0);
    for (auto& w : dec_w) w.fill(0.0);
    for (auto& w : pri_w) w.fill(0.0);
    for (auto& b : enc_b) b.assign(b.size(), 0.0);
    for (auto& b : dec_b) b.assign(b.size(), 0.0);
    for (auto& b : pri_b) b.assign(b.size(), 0.0);
  }

  void flatten(RealVector& out) const {
    out.clear();
    auto push = [&out](const std::vector<RealMatrix>& ws,
                       const std::vector<RealVector>& bs) {
      for (std::size_t i = 0; i < ws.size(); ++i) {
        out.insert(out.end(), ws[i].flat().begin(), ws[i].flat().end());
        out.insert(out.end(), bs[i].begin(), bs[i].end());
      }
    };
    push(enc_w, enc_b);
    push(dec_w, dec_b);
    push(pri_w, pri_b);
  }
};

struct VaeFrameStats {
  double loss = 0.0;   // recon + kl
  double recon = 0.0;  // sum_f log sigma^2 + p/sigma^2 (constants dropped)
  double kl = 0.0;     // KL(q(z|.) || p(z|.))
};

/// Single-sample reparameterized negative ELBO of one frame and, optionally,
/// its gradient with respect to every model parameter (added into grads).
/// eps is the frozen standard-normal draw for the reparameterization.
inline VaeFrameStats vae_frame_backward(const VaeModel& m,
                                        const RealVector& power,
                                        const RealVector* v,
                                        const RealVector& eps,
                                        VaeGradients* grads = nullptr) {
  detail::require_visual_match(m, v, "vae_frame_backward");
  if (eps.size() != m.latent_dim) {
    throw std::invalid_argument("vae_frame_backward: eps length mismatch");
  }
  const std::size_t L = m.latent_dim;

  const RealVector u = detail::encoder_input(m, power, v);
  Mlp::Trace enc_tr;
  m.encoder.forward(u, enc_tr);
  const RealVector& enc_out = enc_tr.acts.back();

  RealVector mu(enc_out.begin(), enc_out.begin() + static_cast<std::ptrdiff_t>(L));
  RealVector lv(enc_out.begin() + static_cast<std::ptrdiff_t>(L), enc_out.end());

  RealVector z(L);
  for (std::size_t l = 0; l < L; ++l) z[l] = mu[l] + std::exp(0.5 * lv[l]) * eps[l];

  Mlp::Trace pri_tr;
  RealVector xi(L, 0.0), log_lambda(L, 0.0);
  if (m.audio_visual()) {
    m.prior_net.forward(*v, pri_tr);
    const RealVector& pout = pri_tr.acts.back();
    xi.assign(pout.begin(), pout.begin() + static_cast<std::ptrdiff_t>(L));
    log_lambda.assign(pout.begin() + static_cast<std::ptrdiff_t>(L), pout.end());
  }

  const RealVector dec_in = detail::decoder_input(m, z, v);
  Mlp::Trace dec_tr;
  m.decoder.forward(dec_in, dec_tr);
  const RealVector& logvar_s = dec_tr.acts.back();

  VaeFrameStats stats;
  RealVector dlogvar_s(m.bins);
  for (std::size_t f = 0; f < m.bins; ++f) {
    const double inv = std::exp(-logvar_s[f]);
    stats.recon += logvar_s[f] + power[f] * inv;
    dlogvar_s[f] = 1.0 - power[f] * inv;
  }
  for (std::size_t l = 0; l < L; ++l) {
    const double dm = mu[l] - xi[l];
    const double inv_lambda = std::exp(-log_lambda[l]);
    stats.kl += 0.5 * (log_lambda[l] - lv[l] +
                       (std::exp(lv[l]) + dm * dm) * inv_lambda - 1.0);
  }
  stats.loss = stats.recon + stats.kl;
  if (!std::isfinite(stats.loss)) {
    throw NumericalError("vae_frame_backward: non-finite loss");
  }
  if (!grads) return stats;

  RealVector d_dec_in;
  m.decoder.backward(dec_tr, dlogvar_s, d_dec_in, &grads->dec_w, &grads->dec_b);

  RealVector denc(2 * L);
  for (std::size_t l = 0; l < L; ++l) {
    const double dz = d_dec_in[l];
    const double dm = mu[l] - xi[l];
    const double inv_lambda = std::exp(-log_lambda[l]);
    denc[l] = dz + dm * inv_lambda;
    denc[L + l] = dz * 0.5 * std::exp(0.5 * lv[l]) * eps[l] +
                  0.5 * (std::exp(lv[l]) * inv_lambda - 1.0);
  }
  RealVector d_enc_in;
  m.encoder.backward(enc_tr, denc, d_enc_in, &grads->enc_w, &grads->enc_b);

  if (m.audio_visual()) {
    RealVector dpri(2 * L);
    for (std::size_t l = 0; l < L; ++l) {
      const double dm = mu[l] - xi[l];
      const double inv_lambda = std::exp(-log_lambda[l]);
      dpri[l] = -dm * inv_lambda;
      dpri[L + l] =
          0.5 * (1.0 - (std::exp(lv[l]) + dm * dm) * inv_lambda);
    }
    RealVector d_pri_in;
    m.prior_net.backward(pri_tr, dpri, d_pri_in, &grads->pri_w, &grads->pri_b);
  }
  return stats;
}

struct VaeTrainConfig {
  int epochs = 30;
  std::size_t batch = 64;
  double learning_rate = 1e-3;
};

/// Minibatch Adam on the single-sample ELBO. The reparameterization draw for
/// each frame is fixed across epochs (common random numbers), so a zero
/// learning rate yields an exactly constant loss sequence and reruns are
/// bit-identical. Returns the mean per-frame loss of each epoch.
inline std::vector<double> train_vae(VaeModel& m,
                                     const std::vector<RealVector>& powers,
                                     const RealMatrix* visual,
                                     const VaeTrainConfig& cfg, Rng& rng) {
  if (powers.empty()) throw DataError("train_vae: empty dataset");
  if (m.audio_visual()) {
    if (visual == nullptr || visual->rows() != powers.size() ||
        visual->cols() != m.visual_dim) {
      throw DataError("train_vae: visual data missing or misshapen");
    }
  } else if (visual != nullptr) {
    throw DataError("train_vae: audio-only model takes no visual data");
  }
  for (const auto& p : powers) {
    if (p.size() != m.bins) throw DataError("train_vae: bin count mismatch");
  }
  if (cfg.epochs < 0 || cfg.batch == 0) {
    throw std::invalid_argument("train_vae: bad epochs or batch");
  }

  const std::size_t n = powers.size();
  // Standardization statistics of the encoder's log-power input.
  m.feat_mean.assign(m.bins, 0.0);
  m.feat_std.assign(m.bins, 0.0);
  for (const auto& p : powers) {
    for (std::size_t f = 0; f < m.bins; ++f) {
      m.feat_mean[f] += std::log(p[f] + 1e-10);
    }
  }
  for (std::size_t f = 0; f < m.bins; ++f) m.feat_mean[f] /= static_cast<double>(n);
  for (const auto& p : powers) {
    for (std::size_t f = 0; f < m.bins; ++f) {
      const double d = std::log(p[f] + 1e-10) - m.feat_mean[f];
      m.feat_std[f] += d * d;
    }
  }
  for (std::size_t f = 0; f < m.bins; ++f) {
    m.feat_std[f] = std::max(std::sqrt(m.feat_std[f] / static_cast<double>(n)), 1e-3);
  }

  // One frozen reparameterization draw per frame.
  std::vector<RealVector> eps(n);
  {
    Rng eps_rng = rng.fork(0x9e3779b1u);
    for (std::size_t i = 0; i < n; ++i) eps[i] = eps_rng.normal_vec(m.latent_dim);
  }

  RealVector params;
  m.flatten(params);
  AdamState opt(params.size(), cfg.learning_rate > 0.0 ? cfg.learning_rate : 1.0);
  VaeGradients grads(m);
  RealVector flat_grad;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> epoch_losses;
  Rng shuffle_rng = rng.fork(0x51f15e11u);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    }
    RealVector frame_loss(n, 0.0);
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t stop = std::min(start + cfg.batch, n);
      grads.zero();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        RealVector vrow;
        const RealVector* v = nullptr;
        if (m.audio_visual()) {
          vrow.assign(visual->row(i), visual->row(i) + m.visual_dim);
          v = &vrow;
        }
        frame_loss[i] = vae_frame_backward(m, powers[i], v, eps[i], &grads).loss;
      }
      if (cfg.learning_rate <= 0.0) continue;
      grads.flatten(flat_grad);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (double& g : flat_grad) g *= scale;
      adam_step(params, flat_grad, opt);
      m.unflatten(params);
    }
    // Frame-order summation keeps the logged loss independent of the shuffle.
    const double mean_loss = sum(frame_loss) / static_cast<double>(n);
    if (!std::isfinite(mean_loss)) {
      throw NumericalError("train_vae: loss diverged at epoch " +
                           std::to_string(epoch));
    }
    epoch_losses.push_back(mean_loss);
  }
  return epoch_losses;
}

/// Checkpoint: "SWVM", version, kind, model id, dims, feature stats, then
/// each net as layer sizes plus flattened parameters. 64-bit little-endian.
inline void save_vae(const VaeModel& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  os.write("SWVM", 4);
  detail::write_u32(os, 1);
  detail::write_u32(os, static_cast<std::uint32_t>(m.kind));
  detail::write_u32(os, static_cast<std::uint32_t>(m.model_id));
  detail::write_u32(os, static_cast<std::uint32_t>(m.latent_dim));
  detail::write_u32(os, static_cast<std::uint32_t>(m.bins));
  detail::write_u32(os, static_cast<std::uint32_t>(m.visual_dim));
  for (double v : m.feat_mean) detail::write_f64(os, v);
  for (double v : m.feat_std) detail::write_f64(os, v);
  auto write_mlp = [&os](const Mlp& net, bool present) {
    if (!present) {
      detail::write_u32(os, 0);
      return;
    }
    detail::write_u32(os, static_cast<std::uint32_t>(net.layers() + 1));
    detail::write_u32(os, static_cast<std::uint32_t>(net.input_dim()));
    for (std::size_t i = 0; i < net.layers(); ++i) {
      detail::write_u32(os, static_cast<std::uint32_t>(net.weights[i].rows()));
    }
    RealVector flat(net.param_count());
    net.flatten(flat.data());
    for (double v : flat) detail::write_f64(os, v);
  };
  write_mlp(m.encoder, true);
  write_mlp(m.decoder, true);
  write_mlp(m.prior_net, m.audio_visual());
  if (!os) throw DataError("write failed: " + path);
}

inline VaeModel load_vae(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  detail::expect_magic(is, "SWVM", path);
  if (detail::read_u32(is, path) != 1) {
    throw DataError(path + ": unsupported version");
  }
  VaeModel m;
  const std::uint32_t kind = detail::read_u32(is, path);
  if (kind > 1) throw DataError(path + ": bad model kind");
  m.kind = static_cast<VaeKind>(kind);
  m.model_id = static_cast<int>(detail::read_u32(is, path));
  m.latent_dim = detail::read_u32(is, path);
  m.bins = detail::read_u32(is, path);
  m.visual_dim = detail::read_u32(is, path);
  m.feat_mean.resize(m.bins);
  m.feat_std.resize(m.bins);
  for (double& v : m.feat_mean) v = detail::read_f64(is, path);
  for (double& v : m.feat_std) v = detail::read_f64(is, path);
  auto read_mlp = [&is, &path](Mlp& net) {
    const std::uint32_t n_sizes = detail::read_u32(is, path);
    if (n_sizes == 0) return false;
    if (n_sizes < 2) throw DataError(path + ": bad layer count");
    std::vector<std::size_t> sizes(n_sizes);
    for (auto& s : sizes) s = detail::read_u32(is, path);
    net = Mlp(sizes);
    RealVector flat(net.param_count());
    for (double& v : flat) v = detail::read_f64(is, path);
    net.unflatten(flat.data());
    return true;
  };
  if (!read_mlp(m.encoder)) throw DataError(path + ": missing encoder");
  if (!read_mlp(m.decoder)) throw DataError(path + ": missing decoder");
  const bool has_prior = read_mlp(m.prior_net);
  if (m.audio_visual() && !has_prior) {
    throw DataError(path + ": audio-visual checkpoint lacks a prior net");
  }
  if (m.decoder.output_dim() != m.bins || m.encoder.output_dim() != 2 * m.latent_dim) {
    throw DataError(path + ": inconsistent dimensions");
  }
  return m;
}

}  // namespace swvae

#endif  // SWVAE_VAE_HPP_
