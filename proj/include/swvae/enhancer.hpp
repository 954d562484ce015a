// swvae/enhancer.hpp

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

// Variational EM speech enhancer over a bank of switching VAE speech models,
// an NMF noise model, and a Markov chain on the model index. Per iteration:
// refine the per-frame latent posteriors by gradient ascent, rebuild the
// model-averaged speech variance from Monte-Carlo samples, refresh the
// per-model Wiener posteriors of clean speech, rescore the switching chain,
// and update the noise factorization and chain parameters in closed form.

#ifndef SWVAE_ENHANCER_HPP_
#define SWVAE_ENHANCER_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swvae/adam.hpp"
#include "swvae/errors.hpp"
#include "swvae/hmm.hpp"
#include "swvae/matrix.hpp"
#include "swvae/nmf.hpp"
#include "swvae/rng.hpp"
#include "swvae/signal.hpp"
#include "swvae/vae.hpp"

namespace swvae {

constexpr double kVarianceFloor = 1e-10;

struct EnhancerConfig {
  std::size_t mc_samples = 20;        // latent draws behind the variance stats
  std::size_t em_iterations = 200;
  std::size_t inner_iterations = 10;  // gradient steps per latent posterior
  double inner_learning_rate = 0.05;
  double skip_threshold = 1e-6;       // model weight below which latents rest
  double variance_floor = kVarianceFloor;
  std::size_t nmf_rank = 8;
  std::uint64_t seed = 0;
  bool early_stop = false;            // on: stop when the bound plateaus
  double early_stop_rel_tol = 1e-6;
  std::size_t early_stop_window = 10;

  void validate() const {
    if (mc_samples < 1 || em_iterations < 1) {
      throw ConfigError("EnhancerConfig: sample and iteration counts must be >= 1");
    }
    if (inner_learning_rate <= 0.0 || variance_floor <= 0.0 ||
        skip_threshold < 0.0) {
      throw ConfigError("EnhancerConfig: rates and floors must be positive");
    }
    if (nmf_rank < 1) throw ConfigError("EnhancerConfig: nmf rank must be >= 1");
  }
};

/// gamma_f = [ (1/D) sum_d 1/sigma^2_f(z_d, v) ]^-1, the harmonic mean of the
/// decoder variances over the latent samples.
inline RealVector harmonic_mean_variance(const VaeModel& model,
                                         const std::vector<RealVector>& samples,
                                         const RealVector* v,
                                         double floor = kVarianceFloor) {
  if (samples.empty()) {
    throw std::invalid_argument("harmonic_mean_variance: no samples");
  }
  RealVector sum_inv(model.bins, 0.0);
  for (const RealVector& z : samples) {
    const RealVector var = decode_variance(model, z, v);
    for (std::size_t f = 0; f < model.bins; ++f) {
      sum_inv[f] += 1.0 / std::max(var[f], floor);
    }
  }
  const double d = static_cast<double>(samples.size());
  RealVector gamma(model.bins);
  for (std::size_t f = 0; f < model.bins; ++f) {
    gamma[f] = std::max(d / sum_inv[f], floor);
  }
  return gamma;
}

/// Per-bin Wiener posterior of clean speech given speech variance gamma and
/// noise variance wh: mean eta = gamma/(gamma+wh) x, variance
/// nu = gamma wh/(gamma+wh).
inline void wiener_update(std::span<const std::complex<double>> x,
                          std::span<const double> gamma,
                          std::span<const double> wh,
                          std::span<std::complex<double>> eta,
                          std::span<double> nu) {
  const std::size_t n = x.size();
  if (gamma.size() != n || wh.size() != n || eta.size() != n || nu.size() != n) {
    throw std::invalid_argument("wiener_update: length mismatch");
  }
  for (std::size_t f = 0; f < n; ++f) {
    const double den = gamma[f] + wh[f];
    const double gain = gamma[f] / den;
    eta[f] = gain * x[f];
    nu[f] = gain * wh[f];
  }
}

/// Weighted single-sample bound on one frame's latent posterior N(c, Omega):
///   weight * [ sum_f(-log sigma^2_f(z,v) - kappa_f / sigma^2_f(z,v))
///              - KL(N(c, Omega) || N(xi, Lambda)) ],  z = c + Omega^(1/2) eps,
/// with exact gradients in c and log Omega through the reparameterization.
/// kappa is the posterior second moment |eta|^2 + nu of clean speech.
struct LatentObjective {
  double value = 0.0;
  RealVector grad_mean;
  RealVector grad_log_var;
};

inline LatentObjective latent_objective(const VaeModel& model,
                                        const RealVector* v, const RealVector& c,
                                        const RealVector& log_omega,
                                        const RealVector& eps,
                                        const RealVector& kappa, double weight,
                                        const RealVector& xi,
                                        const RealVector& log_lambda,
                                        double floor = kVarianceFloor) {
  const std::size_t latent = model.latent_dim;
  if (c.size() != latent || log_omega.size() != latent || eps.size() != latent ||
      xi.size() != latent || log_lambda.size() != latent ||
      kappa.size() != model.bins) {
    throw std::invalid_argument("latent_objective: length mismatch");
  }
  LatentObjective out;
  out.grad_mean.assign(latent, 0.0);
  out.grad_log_var.assign(latent, 0.0);
  if (weight == 0.0) return out;

  RealVector z(latent);
  for (std::size_t l = 0; l < latent; ++l) {
    z[l] = c[l] + std::exp(0.5 * log_omega[l]) * eps[l];
  }
  Mlp::Trace tr;
  const RealVector var = decode_variance(model, z, v, &tr);

  double recon = 0.0;
  RealVector dlogvar(model.bins);
  for (std::size_t f = 0; f < model.bins; ++f) {
    const double s2 = std::max(var[f], floor);
    recon += -std::log(s2) - kappa[f] / s2;
    // d/dlog sigma^2 of (-log sigma^2 - kappa/sigma^2), scaled by weight.
    dlogvar[f] = weight * (-1.0 + kappa[f] / s2);
  }

  double kl = 0.0;
  for (std::size_t l = 0; l < latent; ++l) {
    const double dm = c[l] - xi[l];
    const double inv_lambda = std::exp(-log_lambda[l]);
    kl += 0.5 * (log_lambda[l] - log_omega[l] +
                 (std::exp(log_omega[l]) + dm * dm) * inv_lambda - 1.0);
  }
  out.value = weight * (recon - kl);
  if (!std::isfinite(out.value)) {
    throw NumericalError("latent_objective: non-finite value");
  }

  const RealVector dz = decoder_grad_z(model, tr, dlogvar);
  for (std::size_t l = 0; l < latent; ++l) {
    const double dm = c[l] - xi[l];
    const double inv_lambda = std::exp(-log_lambda[l]);
    out.grad_mean[l] = dz[l] - weight * dm * inv_lambda;
    out.grad_log_var[l] =
        dz[l] * 0.5 * std::exp(0.5 * log_omega[l]) * eps[l] -
        weight * 0.5 * (std::exp(log_omega[l]) * inv_lambda - 1.0);
  }
  return out;
}

/// Convenience form computing the prior and kappa from the model and the
/// frame's Wiener posterior.
inline LatentObjective latent_objective(const VaeModel& model,
                                        const RealVector* v, const RealVector& c,
                                        const RealVector& log_omega,
                                        const RealVector& eps,
                                        const ComplexVector& eta,
                                        const RealVector& nu, double weight,
                                        double floor = kVarianceFloor) {
  RealVector xi, log_lambda;
  prior(model, v, xi, log_lambda);
  RealVector kappa(eta.size());
  for (std::size_t f = 0; f < eta.size(); ++f) {
    kappa[f] = std::norm(eta[f]) + nu[f];
  }
  return latent_objective(model, v, c, log_omega, eps, kappa, weight, xi,
                          log_lambda, floor);
}

/// Per-frame cost of explaining the frame with one model (lower is better):
///   E_z[KL(r^s || p(s|z))] - E_{r^s}[log p(x|s)] + KL(r^z || p(z)),
/// with the z-expectation replaced by the cached Monte-Carlo sums of
/// log sigma^2 and 1/sigma^2 over the D latent draws.
inline double model_cost(std::span<const std::complex<double>> x,
                         std::span<const std::complex<double>> eta,
                         std::span<const double> nu, std::span<const double> wh,
                         std::span<const double> sum_inv_sigma2,
                         std::span<const double> sum_log_sigma2,
                         std::size_t mc_samples, std::span<const double> c,
                         std::span<const double> log_omega,
                         std::span<const double> xi,
                         std::span<const double> log_lambda,
                         double floor = kVarianceFloor) {
  const std::size_t bins = x.size();
  if (eta.size() != bins || nu.size() != bins || wh.size() != bins ||
      sum_inv_sigma2.size() != bins || sum_log_sigma2.size() != bins) {
    throw std::invalid_argument("model_cost: bin count mismatch");
  }
  const std::size_t latent = c.size();
  if (log_omega.size() != latent || xi.size() != latent ||
      log_lambda.size() != latent || mc_samples == 0) {
    throw std::invalid_argument("model_cost: latent length mismatch");
  }
  constexpr double kPi = 3.14159265358979323846;
  const double inv_d = 1.0 / static_cast<double>(mc_samples);
  double cost = 0.0;
  for (std::size_t f = 0; f < bins; ++f) {
    const double nuf = std::max(nu[f], floor);
    const double whf = std::max(wh[f], floor);
    const double second_moment = std::norm(eta[f]) + nuf;
    // KL between the Wiener posterior and the speech model, z-averaged.
    cost += sum_log_sigma2[f] * inv_d - std::log(nuf) +
            second_moment * (sum_inv_sigma2[f] * inv_d) - 1.0;
    // Expected negative log-likelihood of the mixture under the noise model.
    cost += std::log(kPi * whf) + (std::norm(x[f] - eta[f]) + nuf) / whf;
  }
  for (std::size_t l = 0; l < latent; ++l) {
    const double dm = c[l] - xi[l];
    const double inv_lambda = std::exp(-log_lambda[l]);
    cost += 0.5 * (log_lambda[l] - log_omega[l] +
                   (std::exp(log_omega[l]) + dm * dm) * inv_lambda - 1.0);
  }
  return cost;
}

/// Everything the EM loop tracks per frame and model, plus the smoothed
/// switch posterior.
struct PosteriorState {
  // Indexed [model], each matrix frames x latent or frames x bins.
  std::vector<RealMatrix> c, log_omega;    // latent posterior parameters
  std::vector<RealMatrix> xi, log_lambda;  // latent prior parameters (fixed)
  std::vector<ComplexMatrix> eta;          // Wiener mean of clean speech
  std::vector<RealMatrix> nu;              // Wiener variance
  std::vector<RealMatrix> gamma;           // harmonic-mean speech variance
  std::vector<RealMatrix> sum_inv_sigma2, sum_log_sigma2;  // MC statistics
  SwitchPosterior sw;
};

struct EmIterationDiag {
  std::size_t iteration = 0;
  double bound = 0.0;           // switching-chain log-normalizer
  RealVector mean_r;            // per-model posterior mass, averaged over frames
  double nmf_divergence = 0.0;  // IS divergence of the noise fit after M step
};

class Enhancer {
 public:
  Enhancer(const ComplexSpectrogram& x, const VisualSequence* vis,
           std::vector<VaeModel> models, const EnhancerConfig& cfg)
      : Enhancer(x, vis, std::move(models), cfg, {}, {}, false) {}

  /// Injectable noise/chain initialization (tests and warm starts).
  Enhancer(const ComplexSpectrogram& x, const VisualSequence* vis,
           std::vector<VaeModel> models, const EnhancerConfig& cfg,
           NmfState nmf, HmmParams hmm)
      : Enhancer(x, vis, std::move(models), cfg, std::move(nmf),
                 std::move(hmm), true) {}

  std::size_t frames() const { return x_.frames(); }
  std::size_t bins() const { return x_.bins(); }
  std::size_t model_count() const { return models_.size(); }
  std::size_t iteration() const { return iter_; }
  const PosteriorState& state() const { return state_; }
  const NmfState& nmf() const { return nmf_; }
  const HmmParams& hmm() const { return hmm_; }
  const std::vector<EmIterationDiag>& diagnostics() const { return diags_; }
  const EnhancerConfig& config() const { return cfg_; }

  /// One full EM iteration. Returns false once the early-stop rule (if
  /// enabled) has fired; the state is still valid.
  bool run_iteration() {
    ++iter_;
    optimize_latents();
    refresh_variance_stats();
    refresh_wiener();
    update_switching();
    update_noise_and_chain();
    const EmIterationDiag& d = diags_.back();
    if (!std::isfinite(d.bound)) {
      throw NumericalError("enhancer: non-finite bound at iteration " +
                           std::to_string(iter_));
    }
    return !should_stop();
  }

  void run() {
    for (std::size_t i = 0; i < cfg_.em_iterations; ++i) {
      if (!run_iteration()) break;
    }
  }

  /// Model-averaged clean-speech estimate: s_t = sum_m r(t,m) eta_m(t).
  ComplexSpectrogram enhanced() const {
    ComplexSpectrogram out;
    out.config = x_.config;
    out.sample_rate = x_.sample_rate;
    out.values = ComplexMatrix(frames(), bins(), {0.0, 0.0});
    for (std::size_t t = 0; t < frames(); ++t) {
      for (std::size_t m = 0; m < model_count(); ++m) {
        const double rm = state_.sw.r(t, m);
        const auto* erow = state_.eta[m].row(t);
        auto* orow = out.values.row(t);
        for (std::size_t f = 0; f < bins(); ++f) orow[f] += rm * erow[f];
      }
    }
    return out;
  }

 private:
  Enhancer(const ComplexSpectrogram& x, const VisualSequence* vis,
           std::vector<VaeModel> models, const EnhancerConfig& cfg,
           NmfState nmf, HmmParams hmm, bool injected)
      : x_(x), cfg_(cfg), models_(std::move(models)), root_(cfg.seed) {
    cfg_.validate();
    if (models_.empty()) throw ConfigError("enhancer: no speech models");
    if (x_.frames() == 0) throw DataError("enhancer: empty spectrogram");
    bool needs_visual = false;
    for (const VaeModel& m : models_) {
      if (m.bins != x_.bins()) {
        throw DataError("enhancer: model bin count does not match input");
      }
      needs_visual |= m.audio_visual();
    }
    if (needs_visual) {
      if (vis == nullptr || vis->frames() != x_.frames()) {
        throw DataError("enhancer: visual sequence missing or misaligned");
      }
      vis_ = *vis;
    }

    if (injected) {
      nmf_ = std::move(nmf);
      hmm_ = std::move(hmm);
      if (nmf_.bins() != x_.bins() || nmf_.frames() != x_.frames()) {
        throw DataError("enhancer: injected noise model shape mismatch");
      }
      validate(hmm_);
      if (hmm_.states() != models_.size()) {
        throw DataError("enhancer: chain size does not match model count");
      }
    } else {
      Rng init_rng = root_.fork(0).fork(0);
      nmf_ = nmf_init(x_.values, cfg_.nmf_rank, init_rng);
      hmm_ = random_hmm(models_.size(), init_rng);
    }
    wh_ = nmf_product(nmf_);
    init_posterior();
  }

  const RealVector* visual_row(const VaeModel& model, std::size_t t,
                               RealVector& buf) const {
    if (!model.audio_visual()) return nullptr;
    if (vis_.dim() != model.visual_dim) {
      throw DataError("enhancer: visual dimension does not match model");
    }
    buf.assign(vis_.values.row(t), vis_.values.row(t) + vis_.dim());
    return &buf;
  }

  void init_posterior() {
    const std::size_t T = frames(), M = model_count();
    state_.c.clear();
    state_.log_omega.clear();
    state_.xi.clear();
    state_.log_lambda.clear();
    state_.eta.assign(M, ComplexMatrix(T, bins(), {0.0, 0.0}));
    state_.nu.assign(M, RealMatrix(T, bins(), 0.0));
    state_.gamma.assign(M, RealMatrix(T, bins(), 0.0));
    state_.sum_inv_sigma2.assign(M, RealMatrix(T, bins(), 0.0));
    state_.sum_log_sigma2.assign(M, RealMatrix(T, bins(), 0.0));

    RealVector vbuf, power(bins()), mean, log_var, xi, log_lambda;
    for (std::size_t m = 0; m < M; ++m) {
      const VaeModel& model = models_[m];
      const std::size_t L = model.latent_dim;
      state_.c.emplace_back(T, L);
      state_.log_omega.emplace_back(T, L);
      state_.xi.emplace_back(T, L);
      state_.log_lambda.emplace_back(T, L);
      for (std::size_t t = 0; t < T; ++t) {
        const RealVector* v = visual_row(model, t, vbuf);
        for (std::size_t f = 0; f < bins(); ++f) {
          power[f] = std::norm(x_.values(t, f));
        }
        encode(model, power, v, mean, log_var);
        std::copy(mean.begin(), mean.end(), state_.c[m].row(t));
        std::copy(log_var.begin(), log_var.end(), state_.log_omega[m].row(t));
        prior(model, v, xi, log_lambda);
        std::copy(xi.begin(), xi.end(), state_.xi[m].row(t));
        std::copy(log_lambda.begin(), log_lambda.end(),
                  state_.log_lambda[m].row(t));
      }
    }

    // Uniform switch posterior; joints uniform as a harmless placeholder.
    state_.sw.r = RealMatrix(T, M, 1.0 / static_cast<double>(M));
    state_.sw.zeta.assign(
        T > 0 ? T - 1 : 0,
        RealMatrix(M, M, 1.0 / static_cast<double>(M * M)));
    state_.sw.log_normalizer = 0.0;

    refresh_variance_stats();
    refresh_wiener();
  }

  Rng stream(std::size_t t, std::size_t m, std::size_t phase) {
    return root_.fork(iter_ + 1).fork(t * model_count() + m).fork(phase);
  }

  // Gradient ascent on each frame's latent posterior, models with negligible
  // posterior mass skipped.
  void optimize_latents() {
    if (cfg_.inner_iterations == 0) return;
    const std::size_t T = frames(), M = model_count();
    RealVector vbuf, kappa(bins()), theta, grad;
    for (std::size_t m = 0; m < M; ++m) {
      const VaeModel& model = models_[m];
      const std::size_t L = model.latent_dim;
      RealVector c(L), lo(L), xi(L), llam(L);
      for (std::size_t t = 0; t < T; ++t) {
        if (state_.sw.r(t, m) < cfg_.skip_threshold) continue;
        const RealVector* v = visual_row(model, t, vbuf);
        const auto* erow = state_.eta[m].row(t);
        const auto* nrow = state_.nu[m].row(t);
        for (std::size_t f = 0; f < bins(); ++f) {
          kappa[f] = std::norm(erow[f]) + nrow[f];
        }
        std::copy(state_.c[m].row(t), state_.c[m].row(t) + L, c.begin());
        std::copy(state_.log_omega[m].row(t), state_.log_omega[m].row(t) + L,
                  lo.begin());
        std::copy(state_.xi[m].row(t), state_.xi[m].row(t) + L, xi.begin());
        std::copy(state_.log_lambda[m].row(t), state_.log_lambda[m].row(t) + L,
                  llam.begin());

        Rng eps_rng = stream(t, m, 0);
        AdamState opt(2 * L, cfg_.inner_learning_rate);
        theta.resize(2 * L);
        std::copy(c.begin(), c.end(), theta.begin());
        std::copy(lo.begin(), lo.end(), theta.begin() + static_cast<std::ptrdiff_t>(L));
        grad.assign(2 * L, 0.0);
        for (std::size_t it = 0; it < cfg_.inner_iterations; ++it) {
          const RealVector eps = eps_rng.normal_vec(L);
          std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(L),
                    c.begin());
          std::copy(theta.begin() + static_cast<std::ptrdiff_t>(L), theta.end(),
                    lo.begin());
          const LatentObjective obj =
              latent_objective(model, v, c, lo, eps, kappa,
                               state_.sw.r(t, m), xi, llam, cfg_.variance_floor);
          for (std::size_t l = 0; l < L; ++l) {
            grad[l] = -obj.grad_mean[l];  // ascent via the minimizer
            grad[L + l] = -obj.grad_log_var[l];
          }
          adam_step(theta, grad, opt);
        }
        std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(L),
                  state_.c[m].row(t));
        std::copy(theta.begin() + static_cast<std::ptrdiff_t>(L), theta.end(),
                  state_.log_omega[m].row(t));
      }
    }
  }

  // Redraws the Monte-Carlo variance statistics (and gamma) for every frame
  // and model from the current latent posteriors.
  void refresh_variance_stats() {
    const std::size_t T = frames(), M = model_count();
    const double d = static_cast<double>(cfg_.mc_samples);
    RealVector vbuf, z;
    for (std::size_t m = 0; m < M; ++m) {
      const VaeModel& model = models_[m];
      const std::size_t L = model.latent_dim;
      z.resize(L);
      for (std::size_t t = 0; t < T; ++t) {
        const RealVector* v = visual_row(model, t, vbuf);
        Rng draw_rng = stream(t, m, 1);
        double* si = state_.sum_inv_sigma2[m].row(t);
        double* sl = state_.sum_log_sigma2[m].row(t);
        std::fill(si, si + bins(), 0.0);
        std::fill(sl, sl + bins(), 0.0);
        const double* c = state_.c[m].row(t);
        const double* lo = state_.log_omega[m].row(t);
        for (std::size_t k = 0; k < cfg_.mc_samples; ++k) {
          for (std::size_t l = 0; l < L; ++l) {
            z[l] = c[l] + std::exp(0.5 * lo[l]) * draw_rng.normal();
          }
          const RealVector var = decode_variance(model, z, v);
          for (std::size_t f = 0; f < bins(); ++f) {
            const double s2 = std::max(var[f], cfg_.variance_floor);
            si[f] += 1.0 / s2;
            sl[f] += std::log(s2);
          }
        }
        double* grow = state_.gamma[m].row(t);
        for (std::size_t f = 0; f < bins(); ++f) {
          grow[f] = std::max(d / si[f], cfg_.variance_floor);
        }
      }
    }
  }

  // Wiener posterior of clean speech per frame and model from the current
  // gamma and noise product.
  void refresh_wiener() {
    const std::size_t T = frames(), M = model_count();
    RealVector wh_col(bins());
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < bins(); ++f) wh_col[f] = wh_(f, t);
      std::span<const std::complex<double>> xrow{x_.values.row(t), bins()};
      for (std::size_t m = 0; m < M; ++m) {
        wiener_update(xrow, {state_.gamma[m].row(t), bins()},
                      {wh_col.data(), bins()}, {state_.eta[m].row(t), bins()},
                      {state_.nu[m].row(t), bins()});
      }
    }
  }

  // Rescores the switching chain from the per-frame, per-model costs.
  void update_switching() {
    const std::size_t T = frames(), M = model_count();
    RealMatrix logits(T, M);
    RealVector wh_col(bins());
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < bins(); ++f) wh_col[f] = wh_(f, t);
      for (std::size_t m = 0; m < M; ++m) {
        const VaeModel& model = models_[m];
        const std::size_t L = model.latent_dim;
        logits(t, m) = -model_cost(
            {x_.values.row(t), bins()}, {state_.eta[m].row(t), bins()},
            {state_.nu[m].row(t), bins()}, {wh_col.data(), bins()},
            {state_.sum_inv_sigma2[m].row(t), bins()},
            {state_.sum_log_sigma2[m].row(t), bins()}, cfg_.mc_samples,
            {state_.c[m].row(t), L}, {state_.log_omega[m].row(t), L},
            {state_.xi[m].row(t), L}, {state_.log_lambda[m].row(t), L},
            cfg_.variance_floor);
      }
    }
    state_.sw = forward_backward(hmm_, logits);
  }

  // Multiplicative noise updates against the posterior residual power, then
  // the closed-form chain update.
  void update_noise_and_chain() {
    RealMatrix v = posterior_power(x_.values, state_.sw.r, state_.eta, state_.nu);
    nmf_ = update_h(nmf_, v);
    nmf_ = update_w(nmf_, v);
    wh_ = nmf_product(nmf_);
    hmm_ = update_hmm(state_.sw);

    EmIterationDiag diag;
    diag.iteration = iter_;
    diag.bound = state_.sw.log_normalizer;
    diag.mean_r.assign(model_count(), 0.0);
    for (std::size_t t = 0; t < frames(); ++t) {
      for (std::size_t m = 0; m < model_count(); ++m) {
        diag.mean_r[m] += state_.sw.r(t, m);
      }
    }
    for (double& x : diag.mean_r) x /= static_cast<double>(frames());
    for (double& e : v.flat()) e = std::max(e, cfg_.variance_floor);
    diag.nmf_divergence = is_divergence(v, wh_);
    diags_.push_back(std::move(diag));
  }

  bool should_stop() const {
    if (!cfg_.early_stop || diags_.size() < cfg_.early_stop_window + 1) {
      return false;
    }
    const double now = diags_.back().bound;
    const double then =
        diags_[diags_.size() - 1 - cfg_.early_stop_window].bound;
    const double denom = std::max({std::abs(now), std::abs(then), 1.0});
    return std::abs(now - then) / denom < cfg_.early_stop_rel_tol;
  }

  ComplexSpectrogram x_;
  VisualSequence vis_;
  EnhancerConfig cfg_;
  std::vector<VaeModel> models_;
  NmfState nmf_;
  HmmParams hmm_;
  RealMatrix wh_;  // bins x frames noise product
  PosteriorState state_;
  std::vector<EmIterationDiag> diags_;
  std::size_t iter_ = 0;
  Rng root_;
};

struct EnhanceResult {
  ComplexSpectrogram enhanced;
  RealMatrix responsibilities;  // final switch marginals, frames x models
  HmmParams hmm;
  std::vector<EmIterationDiag> iterations;
};

inline EnhanceResult enhance(const ComplexSpectrogram& x,
                             const VisualSequence* vis,
                             const std::vector<VaeModel>& models,
                             const EnhancerConfig& cfg) {
  Enhancer eng(x, vis, models, cfg);
  eng.run();
  EnhanceResult out;
  out.enhanced = eng.enhanced();
  out.responsibilities = eng.state().sw.r;
  out.hmm = eng.hmm();
  out.iterations = eng.diagnostics();
  return out;
}

}  // namespace swvae

#endif  // SWVAE_ENHANCER_HPP_
