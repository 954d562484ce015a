// swvae/signal.hpp

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

#ifndef SWVAE_SIGNAL_HPP_
#define SWVAE_SIGNAL_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <vector>

#include "swvae/errors.hpp"
#include "swvae/fft.hpp"
#include "swvae/matrix.hpp"
#include "swvae/rng.hpp"
#include "swvae/wav.hpp"

namespace swvae {

struct StftConfig {
  std::size_t window = 1024;  // periodic Hann
  std::size_t hop = 256;

  std::size_t bins() const { return window / 2 + 1; }
};

struct ComplexSpectrogram {
  ComplexMatrix values;  // frames x bins
  StftConfig config;
  double sample_rate = 16000.0;

  std::size_t frames() const { return values.rows(); }
  std::size_t bins() const { return values.cols(); }
};

/// One embedding vector per STFT frame, with a per-frame occlusion flag.
struct VisualSequence {
  RealMatrix values;                  // frames x dim
  std::vector<std::uint8_t> occluded;  // frames, 0/1

  std::size_t frames() const { return values.rows(); }
  std::size_t dim() const { return values.cols(); }
};

inline std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * fft::kPi * static_cast<double>(i) /
                                 static_cast<double>(n)));
  }
  return w;
}

inline ComplexSpectrogram stft(const Waveform& wave, const StftConfig& cfg) {
  if (!fft::is_power_of_two(cfg.window)) {
    throw ConfigError("stft: window length must be a power of two");
  }
  if (cfg.hop == 0) throw ConfigError("stft: hop must be >= 1");
  if (wave.samples.size() < cfg.window) {
    throw DataError("stft: signal shorter than one window (" +
                    std::to_string(wave.samples.size()) + " < " +
                    std::to_string(cfg.window) + ")");
  }
  const std::size_t frames = (wave.samples.size() - cfg.window) / cfg.hop + 1;
  const std::vector<double> win = hann_periodic(cfg.window);
  ComplexSpectrogram spec;
  spec.config = cfg;
  spec.sample_rate = wave.sample_rate;
  spec.values = ComplexMatrix(frames, cfg.bins());
  std::vector<double> buf(cfg.window);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* x = wave.samples.data() + t * cfg.hop;
    for (std::size_t n = 0; n < cfg.window; ++n) buf[n] = x[n] * win[n];
    const auto bins = fft::rfft(buf.data(), cfg.window);
    std::copy(bins.begin(), bins.end(), spec.values.row(t));
  }
  return spec;
}

/// Weighted overlap-add inverse. Per-sample normalization by the accumulated
/// squared window makes interior samples exact; the window/hop pair must give
/// steady-state coverage (rejects e.g. hop == window for Hann).
inline Waveform istft(const ComplexSpectrogram& spec) {
  const StftConfig& cfg = spec.config;
  if (cfg.hop > cfg.window) {
    throw ConfigError("istft: hop larger than window breaks overlap-add");
  }
  const std::size_t frames = spec.frames();
  if (frames == 0) return Waveform{{}, spec.sample_rate};
  if (spec.bins() != cfg.bins()) {
    throw DataError("istft: bins inconsistent with window length");
  }
  const std::vector<double> win = hann_periodic(cfg.window);
  const std::size_t out_len = (frames - 1) * cfg.hop + cfg.window;
  std::vector<double> acc(out_len, 0.0), den(out_len, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto frame = fft::irfft(spec.values.row(t), cfg.window);
    const std::size_t off = t * cfg.hop;
    for (std::size_t n = 0; n < cfg.window; ++n) {
      acc[off + n] += win[n] * frame[n];
      den[off + n] += win[n] * win[n];
    }
  }
  // Steady-state coverage check on the fully overlapped interior.
  if (out_len > 2 * cfg.window) {
    double dmin = 1e300, dmax = 0.0;
    for (std::size_t n = cfg.window; n + cfg.window < out_len; ++n) {
      dmin = std::min(dmin, den[n]);
      dmax = std::max(dmax, den[n]);
    }
    if (dmax <= 0.0 || dmin < 1e-3 * dmax) {
      throw ConfigError("istft: window/hop pair fails overlap-add coverage");
    }
  }
  Waveform out;
  out.sample_rate = spec.sample_rate;
  out.samples.resize(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    out.samples[n] = den[n] > 1e-12 ? acc[n] / den[n] : 0.0;
  }
  return out;
}

/// |x_t|^2 for one frame.
inline RealVector frame_power(const ComplexSpectrogram& spec, std::size_t t) {
  RealVector p(spec.bins());
  const auto* row = spec.values.row(t);
  for (std::size_t f = 0; f < spec.bins(); ++f) p[f] = std::norm(row[f]);
  return p;
}

struct SynthOutput {
  Waveform wave;
  VisualSequence visual;
  std::vector<int> labels;  // regime per STFT frame
};

namespace detail {

// Two-pole resonator filtering of white noise, in place.
inline void resonate(std::vector<double>& x, double center_hz, double radius,
                     double sample_rate) {
  const double theta = 2.0 * fft::kPi * center_hz / sample_rate;
  const double a1 = 2.0 * radius * std::cos(theta);
  const double a2 = -radius * radius;
  double y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = a1 * y1 + a2 * y2 + v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

inline void normalize_rms(std::vector<double>& x, double target) {
  double p = 0.0;
  for (double v : x) p += v * v;
  p = std::sqrt(p / std::max<std::size_t>(x.size(), 1));
  if (p > 1e-12) {
    const double s = target / p;
    for (double& v : x) v *= s;
  }
}

struct RegimeParams {
  bool harmonic = true;
  double f0 = 140.0;       // harmonic regimes
  double center = 3000.0;  // resonant-noise regimes
};

inline void render_segment(const RegimeParams& rp, std::vector<double>& seg,
                           double sample_rate, Rng& rng) {
  if (rp.harmonic) {
    const int kmax = std::max(1, std::min(12, static_cast<int>(1500.0 / rp.f0)));
    std::vector<double> phase(kmax);
    for (double& ph : phase) ph = rng.uniform(0.0, 2.0 * fft::kPi);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      double v = 0.0;
      for (int k = 1; k <= kmax; ++k) {
        v += std::sin(2.0 * fft::kPi * rp.f0 * k * static_cast<double>(i) /
                          sample_rate +
                      phase[k - 1]) /
             static_cast<double>(k);
      }
      seg[i] = v;
    }
  } else {
    for (double& v : seg) v = rng.normal();
    resonate(seg, rp.center, 0.975, sample_rate);
  }
  normalize_rms(seg, 0.1);
}

}  // namespace detail

/// Piecewise-stationary clean signal alternating between spectrally distinct
/// regimes (odd-harmonic voiced-like vs resonant noise), with a per-frame
/// visual embedding derived from each regime's spectral envelope and regime
/// labels aligned to the STFT frames of the returned waveform.
inline SynthOutput synth_clean(int regimes, double seconds, Rng& rng,
                               const StftConfig& cfg = StftConfig{},
                               std::size_t visual_dim = 8,
                               double sample_rate = 16000.0) {
  if (regimes < 1) throw std::invalid_argument("synth_clean: regimes must be >= 1");
  const std::size_t total = static_cast<std::size_t>(seconds * sample_rate);
  if (total < cfg.window) {
    throw DataError("synth_clean: duration shorter than one STFT window");
  }

  std::vector<detail::RegimeParams> params(regimes);
  for (int r = 0; r < regimes; ++r) {
    params[r].harmonic = (r % 2 == 0);
    // Spread parameters so multiple regimes of the same type stay distinct.
    params[r].f0 = rng.uniform(110.0, 180.0) + 40.0 * (r / 2);
    params[r].center = rng.uniform(2800.0, 3600.0) + 500.0 * (r / 2);
  }

  std::vector<double> samples;
  samples.reserve(total);
  std::vector<int> regime_at_sample;
  regime_at_sample.reserve(total);
  int seg_index = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(regimes)));
  while (samples.size() < total) {
    const int regime = seg_index % regimes;
    std::size_t seg_len =
        static_cast<std::size_t>(rng.uniform(0.35, 0.65) * sample_rate);
    seg_len = std::min(seg_len, total - samples.size());
    if (seg_len == 0) break;
    std::vector<double> seg(seg_len);
    detail::render_segment(params[regime], seg, sample_rate, rng);
    samples.insert(samples.end(), seg.begin(), seg.end());
    regime_at_sample.insert(regime_at_sample.end(), seg_len, regime);
    ++seg_index;
  }

  // Common scale: peak at 0.5 for mixing headroom.
  double peak = 0.0;
  for (double v : samples) peak = std::max(peak, std::abs(v));
  if (peak > 1e-12) {
    const double s = 0.5 / peak;
    for (double& v : samples) v *= s;
  }

  SynthOutput out;
  out.wave = Waveform{std::move(samples), sample_rate};

  const ComplexSpectrogram spec = stft(out.wave, cfg);
  const std::size_t frames = spec.frames();
  out.labels.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    out.labels[t] = regime_at_sample[t * cfg.hop + cfg.window / 2];
  }

  // Mean log-power of each regime sampled at log-spaced anchor frequencies,
  // standardized across dims, is the per-regime embedding base.
  std::vector<std::size_t> anchor_bins(visual_dim);
  const double f_lo = 150.0, f_hi = 6000.0;
  for (std::size_t i = 0; i < visual_dim; ++i) {
    const double frac = visual_dim == 1
                            ? 0.0
                            : static_cast<double>(i) /
                                  static_cast<double>(visual_dim - 1);
    const double freq = f_lo * std::pow(f_hi / f_lo, frac);
    anchor_bins[i] = std::min<std::size_t>(
        cfg.bins() - 1,
        static_cast<std::size_t>(freq / sample_rate * cfg.window + 0.5));
  }
  RealMatrix base(static_cast<std::size_t>(regimes), visual_dim, 0.0);
  for (int r = 0; r < regimes; ++r) {
    RealVector acc(cfg.bins(), 0.0);
    std::size_t count = 0;
    for (std::size_t t = 0; t < frames; ++t) {
      if (out.labels[t] != r) continue;
      const auto* row = spec.values.row(t);
      for (std::size_t f = 0; f < cfg.bins(); ++f) acc[f] += std::norm(row[f]);
      ++count;
    }
    if (count == 0) continue;
    RealVector v(visual_dim);
    for (std::size_t i = 0; i < visual_dim; ++i) {
      v[i] = std::log10(acc[anchor_bins[i]] / static_cast<double>(count) + 1e-12);
    }
    const double m = mean(v);
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var /= std::max<std::size_t>(visual_dim, 1);
    const double sd = std::sqrt(std::max(var, 1e-12));
    for (std::size_t i = 0; i < visual_dim; ++i) {
      base(static_cast<std::size_t>(r), i) = (v[i] - m) / sd;
    }
  }
  out.visual.values = RealMatrix(frames, visual_dim);
  out.visual.occluded.assign(frames, 0);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto r = static_cast<std::size_t>(out.labels[t]);
    for (std::size_t i = 0; i < visual_dim; ++i) {
      out.visual.values(t, i) = base(r, i) + 0.05 * rng.normal();
    }
  }
  return out;
}

/// Stationary colored noise: AR(1)-shaped Gaussian plus a small white floor.
inline Waveform synth_noise(double seconds, Rng& rng,
                            double sample_rate = 16000.0) {
  const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
  std::vector<double> x(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = rng.normal();
    prev = 0.9 * prev + e;
    x[i] = prev + 0.3 * rng.normal();
  }
  detail::normalize_rms(x, 0.1);
  return Waveform{std::move(x), sample_rate};
}

/// clean + alpha * noise with alpha chosen so the clean-to-scaled-noise power
/// ratio equals snr_db exactly.
inline Waveform mix_at_snr(const Waveform& clean, const Waveform& noise,
                           double snr_db) {
  if (clean.samples.size() != noise.samples.size()) {
    throw DataError("mix_at_snr: length mismatch");
  }
  if (clean.sample_rate != noise.sample_rate) {
    throw DataError("mix_at_snr: sample-rate mismatch");
  }
  double pc = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    pc += clean.samples[i] * clean.samples[i];
    pn += noise.samples[i] * noise.samples[i];
  }
  if (pc < 1e-15 || pn < 1e-15) {
    throw DataError("mix_at_snr: silent clean or noise signal");
  }
  const double alpha = std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
  Waveform out;
  out.sample_rate = clean.sample_rate;
  out.samples.resize(clean.samples.size());
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    out.samples[i] = clean.samples[i] + alpha * noise.samples[i];
  }
  return out;
}

/// Replaces randomly selected bursts of `burst` consecutive frames with
/// standard-normal noise until about `fraction` of all frames are occluded.
/// Burst placement is block-aligned, so the covered fraction is exact up to
/// one clipped final block. Unmasked frames are untouched.
inline VisualSequence occlude(const VisualSequence& vis, double fraction,
                              std::size_t burst, Rng& rng) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw std::invalid_argument("occlude: fraction must be in [0, 1]");
  }
  if (burst < 1) throw std::invalid_argument("occlude: burst must be >= 1");
  VisualSequence out = vis;
  out.occluded.assign(vis.frames(), 0);
  const std::size_t frames = vis.frames();
  if (frames == 0 || fraction == 0.0) return out;

  const std::size_t blocks = (frames + burst - 1) / burst;
  std::size_t pick = static_cast<std::size_t>(
      fraction * static_cast<double>(frames) / static_cast<double>(burst) + 0.5);
  pick = std::min(pick, blocks);
  if (fraction > 0.0 && pick == 0) pick = 1;

  std::vector<std::size_t> order(blocks);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < pick; ++i) {
    const std::size_t j = i + rng.uniform_index(blocks - i);
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < pick; ++i) {
    const std::size_t b = order[i];
    const std::size_t lo = b * burst;
    const std::size_t hi = std::min(lo + burst, frames);
    for (std::size_t t = lo; t < hi; ++t) {
      out.occluded[t] = 1;
      for (std::size_t d = 0; d < vis.dim(); ++d) out.values(t, d) = rng.normal();
    }
  }
  return out;
}

}  // namespace swvae

#endif  // SWVAE_SIGNAL_HPP_
