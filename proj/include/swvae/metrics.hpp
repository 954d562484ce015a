// swvae/metrics.hpp

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

// Objective evaluation: projection-based SDR, segmental SNR, and
// permutation-corrected switching-recovery accuracy.

#ifndef SWVAE_METRICS_HPP_
#define SWVAE_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "swvae/errors.hpp"
#include "swvae/hmm.hpp"
#include "swvae/matrix.hpp"
#include "swvae/wav.hpp"

namespace swvae {

constexpr double kSdrCapDb = 100.0;

/// Scale-invariant signal-to-distortion ratio in dB: the estimate is first
/// projected onto the reference, then SDR = 10 log10(||target||^2 /
/// ||estimate - target||^2), capped to [-kSdrCapDb, kSdrCapDb].
inline double sdr(const Waveform& reference, const Waveform& estimate) {
  const std::size_t n = reference.samples.size();
  if (estimate.samples.size() != n || n == 0) {
    throw DataError("sdr: signals must share a nonzero length");
  }
  double ss = 0.0, se = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = reference.samples[i], e = estimate.samples[i];
    ss += s * s;
    se += s * e;
    ee += e * e;
  }
  if (ss <= 0.0) throw DataError("sdr: reference signal is identically zero");
  const double alpha = se / ss;                 // projection coefficient
  const double target = alpha * alpha * ss;     // ||alpha s||^2
  const double distortion = ee - target;        // ||e - alpha s||^2 >= 0
  if (distortion <= target * 1e-10) return kSdrCapDb;
  if (target <= 0.0) return -kSdrCapDb;
  return std::clamp(10.0 * std::log10(target / distortion), -kSdrCapDb,
                    kSdrCapDb);
}

/// Mean of per-frame SNRs over non-overlapping frames, each clamped to
/// [-10, 35] dB; frames with negligible reference energy are skipped.
inline double seg_snr(const Waveform& reference, const Waveform& estimate,
                      std::size_t frame = 512) {
  const std::size_t n = reference.samples.size();
  if (estimate.samples.size() != n || n == 0) {
    throw DataError("seg_snr: signals must share a nonzero length");
  }
  if (frame == 0) throw ConfigError("seg_snr: frame length must be >= 1");
  constexpr double kLoDb = -10.0, kHiDb = 35.0, kSilence = 1e-12;
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t start = 0; start + frame <= n; start += frame) {
    double es = 0.0, ed = 0.0;
    for (std::size_t i = start; i < start + frame; ++i) {
      const double s = reference.samples[i];
      const double d = s - estimate.samples[i];
      es += s * s;
      ed += d * d;
    }
    if (es <= kSilence) continue;
    double snr_db = kHiDb;
    if (ed > es * 1e-10) {
      snr_db = std::clamp(10.0 * std::log10(es / ed), kLoDb, kHiDb);
    }
    total += snr_db;
    ++counted;
  }
  if (counted == 0) {
    throw DataError("seg_snr: no frames with reference energy");
  }
  return total / static_cast<double>(counted);
}

/// Fraction of frames whose most probable model matches the true regime,
/// maximized over all relabelings of the model index (which is only
/// identifiable up to permutation).
inline double switch_accuracy(const std::vector<int>& labels,
                              const RealMatrix& r) {
  const std::size_t frames = r.rows(), states = r.cols();
  if (labels.size() != frames || frames == 0 || states == 0) {
    throw DataError("switch_accuracy: label/posterior misalignment");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= states) {
      throw DataError("switch_accuracy: label outside the model range");
    }
  }
  std::vector<std::size_t> argmax(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* row = r.row(t);
    argmax[t] = static_cast<std::size_t>(
        std::max_element(row, row + states) - row);
  }
  std::vector<std::size_t> perm(states);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = 0.0;
  do {
    std::size_t hits = 0;
    for (std::size_t t = 0; t < frames; ++t) {
      if (perm[argmax[t]] == static_cast<std::size_t>(labels[t])) ++hits;
    }
    best = std::max(best,
                    static_cast<double>(hits) / static_cast<double>(frames));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double switch_accuracy(const std::vector<int>& labels,
                              const SwitchPosterior& posterior) {
  return switch_accuracy(labels, posterior.r);
}

struct EvalCondition {
  std::string noise = "ar1";
  double snr_db = 0.0;
  bool occluded = false;
};

struct EvalReport {
  double sdr_db = 0.0;            // enhanced against clean
  double seg_snr_db = 0.0;
  double switch_accuracy = 0.0;   // in [0, 1]
  double input_sdr_db = 0.0;      // mixture against clean
  double input_seg_snr_db = 0.0;
  EvalCondition condition;
};

/// Scores one utterance: the enhanced and unprocessed mixtures against the
/// clean reference, plus regime recovery from the switch posterior.
inline EvalReport evaluate_run(const Waveform& clean, const Waveform& mixture,
                               const Waveform& enhanced,
                               const std::vector<int>& labels,
                               const RealMatrix& responsibilities,
                               const EvalCondition& condition = {}) {
  EvalReport rep;
  rep.sdr_db = sdr(clean, enhanced);
  rep.seg_snr_db = seg_snr(clean, enhanced);
  rep.input_sdr_db = sdr(clean, mixture);
  rep.input_seg_snr_db = seg_snr(clean, mixture);
  rep.switch_accuracy = switch_accuracy(labels, responsibilities);
  rep.condition = condition;
  if (!std::isfinite(rep.sdr_db) || !std::isfinite(rep.seg_snr_db) ||
      !std::isfinite(rep.switch_accuracy)) {
    throw NumericalError("evaluate_run: non-finite metric");
  }
  return rep;
}

/// Field-wise arithmetic mean in input order; the condition is taken from the
/// first report (callers group by condition before averaging).
inline EvalReport mean_report(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw DataError("mean_report: no reports");
  EvalReport mean;
  mean.condition = reports.front().condition;
  for (const EvalReport& r : reports) {
    mean.sdr_db += r.sdr_db;
    mean.seg_snr_db += r.seg_snr_db;
    mean.switch_accuracy += r.switch_accuracy;
    mean.input_sdr_db += r.input_sdr_db;
    mean.input_seg_snr_db += r.input_seg_snr_db;
  }
  const double n = static_cast<double>(reports.size());
  mean.sdr_db /= n;
  mean.seg_snr_db /= n;
  mean.switch_accuracy /= n;
  mean.input_sdr_db /= n;
  mean.input_seg_snr_db /= n;
  return mean;
}

}  // namespace swvae

#endif  // SWVAE_METRICS_HPP_
