// tests/test_signal.cpp

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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "swvae/errors.hpp"
#include "swvae/featio.hpp"
#include "swvae/fft.hpp"
#include "swvae/rng.hpp"
#include "swvae/signal.hpp"
#include "swvae/wav.hpp"

using namespace swvae;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Waveform white_noise(std::size_t n, Rng& rng, double scale = 0.1) {
  Waveform w;
  w.samples.resize(n);
  for (double& v : w.samples) v = scale * rng.normal();
  return w;
}

}  // namespace

TEST_CASE("fft of an impulse is flat") {
  std::vector<std::complex<double>> x(8, 0.0);
  x[0] = 1.0;
  fft::transform(x, false);
  for (const auto& v : x) {
    REQUIRE(v.real() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(v.imag() == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("fft matches the analytic four-point DFT") {
  std::vector<std::complex<double>> x = {1.0, 2.0, 3.0, 4.0};
  fft::transform(x, false);
  REQUIRE(std::abs(x[0] - std::complex<double>(10.0, 0.0)) < 1e-12);
  REQUIRE(std::abs(x[1] - std::complex<double>(-2.0, 2.0)) < 1e-12);
  REQUIRE(std::abs(x[2] - std::complex<double>(-2.0, 0.0)) < 1e-12);
  REQUIRE(std::abs(x[3] - std::complex<double>(-2.0, -2.0)) < 1e-12);
}

TEST_CASE("fft round trip and Parseval on random data") {
  Rng rng(5);
  const std::size_t n = 1024;
  std::vector<std::complex<double>> x(n);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  const auto orig = x;
  fft::transform(x, false);
  double spec_energy = 0.0;
  for (const auto& v : x) spec_energy += std::norm(v);
  fft::transform(x, true);
  double sig_energy = 0.0, err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sig_energy += std::norm(orig[i]);
    err = std::max(err, std::abs(x[i] - orig[i]));
  }
  REQUIRE(err < 1e-12);
  REQUIRE(spec_energy / static_cast<double>(n) ==
          Catch::Approx(sig_energy).epsilon(1e-12));
}

TEST_CASE("fft rejects non-power-of-two lengths") {
  std::vector<std::complex<double>> x(6, 0.0);
  REQUIRE_THROWS_AS(fft::transform(x, false), std::invalid_argument);
}

TEST_CASE("rfft agrees with the full transform and inverts exactly") {
  Rng rng(6);
  const std::size_t n = 256;
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  const auto half = fft::rfft(x.data(), n);
  REQUIRE(half.size() == n / 2 + 1);

  std::vector<std::complex<double>> full(n);
  for (std::size_t i = 0; i < n; ++i) full[i] = x[i];
  fft::transform(full, false);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    REQUIRE(std::abs(half[k] - full[k]) < 1e-10);
  }

  const auto back = fft::irfft(half.data(), n);
  for (std::size_t i = 0; i < n; ++i) {
    REQUIRE(back[i] == Catch::Approx(x[i]).margin(1e-12));
  }
}

TEST_CASE("wav float32 round trip is sample-exact at float precision") {
  Rng rng(7);
  Waveform w = white_noise(5000, rng);
  const std::string path = temp_path("swvae_t_f32.wav");
  wav_write(path, w, WavFormat::kFloat32);
  const Waveform r = wav_read(path);
  REQUIRE(r.sample_rate == w.sample_rate);
  REQUIRE(r.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    REQUIRE(r.samples[i] ==
            Catch::Approx(static_cast<float>(w.samples[i])).margin(0.0));
  }
  std::remove(path.c_str());
}

TEST_CASE("wav pcm16 round trip is within one quantization step") {
  Rng rng(8);
  Waveform w = white_noise(3000, rng, 0.2);
  const std::string path = temp_path("swvae_t_p16.wav");
  wav_write(path, w, WavFormat::kPcm16);
  const Waveform r = wav_read(path);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    REQUIRE(std::abs(r.samples[i] - w.samples[i]) <= 1.0 / 32767.0);
  }
  std::remove(path.c_str());
}

TEST_CASE("wav pcm16 write clips out-of-range samples") {
  Waveform w{{2.0, -2.0, 0.0}, 16000.0};
  const std::string path = temp_path("swvae_t_clip.wav");
  wav_write(path, w, WavFormat::kPcm16);
  const Waveform r = wav_read(path);
  REQUIRE(r.samples[0] == Catch::Approx(1.0).margin(1e-4));
  REQUIRE(r.samples[1] == Catch::Approx(-1.0).margin(1e-4));
  std::remove(path.c_str());
}

TEST_CASE("wav reader rejects malformed files") {
  const std::string path = temp_path("swvae_t_bad.wav");
  std::ofstream os(path, std::ios::binary);
  os << "this is not a wav file at all";
  os.close();
  REQUIRE_THROWS_AS(wav_read(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("stft frame count and bin count follow the config") {
  StftConfig cfg;
  cfg.window = 1024;
  cfg.hop = 256;
  Rng rng(9);
  Waveform w = white_noise(1024 + 3 * 256, rng);
  const ComplexSpectrogram spec = stft(w, cfg);
  REQUIRE(spec.frames() == 4);
  REQUIRE(spec.bins() == 513);
}

TEST_CASE("stft rejects signals shorter than one window") {
  StftConfig cfg;
  Rng rng(10);
  Waveform w = white_noise(cfg.window - 1, rng);
  REQUIRE_THROWS_AS(stft(w, cfg), DataError);
}

TEST_CASE("stft of silence is silent") {
  StftConfig cfg;
  Waveform w{std::vector<double>(4096, 0.0), 16000.0};
  const ComplexSpectrogram spec = stft(w, cfg);
  for (const auto& v : spec.values.flat()) REQUIRE(std::abs(v) == 0.0);
}

TEST_CASE("bin-centered sinusoid concentrates energy at its bin") {
  StftConfig cfg;
  const double fs = 16000.0;
  const std::size_t k = 80;  // exact bin center: k * fs / window
  const double freq = static_cast<double>(k) * fs / static_cast<double>(cfg.window);
  Waveform w;
  w.sample_rate = fs;
  w.samples.resize(4 * cfg.window);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = 0.3 * std::sin(2.0 * fft::kPi * freq * static_cast<double>(i) / fs);
  }
  const ComplexSpectrogram spec = stft(w, cfg);
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    double total = 0.0, peak_bin = 0.0, neighborhood = 0.0;
    std::size_t argmax = 0;
    double best = -1.0;
    for (std::size_t f = 0; f < spec.bins(); ++f) {
      const double e = std::norm(spec.values(t, f));
      total += e;
      if (e > best) {
        best = e;
        argmax = f;
      }
      if (f == k) peak_bin = e;
      if (f + 1 >= k && f <= k + 1) neighborhood += e;
    }
    REQUIRE(argmax == k);
    REQUIRE(peak_bin > 0.5 * total);
    // The periodic Hann window has a three-line spectrum, so an exact-bin
    // sinusoid lands entirely on bins k-1, k, k+1.
    REQUIRE(neighborhood > 0.99 * total);
  }
}

TEST_CASE("stft satisfies Parseval against direct windowed summation") {
  StftConfig cfg;
  Rng rng(11);
  Waveform w = white_noise(8192, rng);
  const ComplexSpectrogram spec = stft(w, cfg);
  const auto win = hann_periodic(cfg.window);

  double direct = 0.0;
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    for (std::size_t n = 0; n < cfg.window; ++n) {
      const double v = w.samples[t * cfg.hop + n] * win[n];
      direct += v * v;
    }
  }
  double from_spec = 0.0;
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    for (std::size_t f = 0; f < spec.bins(); ++f) {
      const double e = std::norm(spec.values(t, f));
      const bool shared = (f == 0 || f == spec.bins() - 1);
      from_spec += (shared ? 1.0 : 2.0) * e;
    }
  }
  from_spec /= static_cast<double>(cfg.window);
  REQUIRE(from_spec == Catch::Approx(direct).epsilon(1e-6));
}

TEST_CASE("istft round trip reconstructs interior samples") {
  StftConfig cfg;
  Rng rng(12);
  Waveform w = white_noise(8000, rng);
  const Waveform back = istft(stft(w, cfg));
  double max_err = 0.0, l2 = 0.0, ref = 0.0;
  for (std::size_t i = cfg.window; i + cfg.window < back.samples.size(); ++i) {
    const double e = back.samples[i] - w.samples[i];
    max_err = std::max(max_err, std::abs(e));
    l2 += e * e;
    ref += w.samples[i] * w.samples[i];
  }
  REQUIRE(max_err < 1e-10);
  REQUIRE(std::sqrt(l2 / ref) < 1e-8);
}

TEST_CASE("istft round trip holds on a speech-like synthetic signal") {
  StftConfig cfg;
  Rng rng(13);
  const SynthOutput s = synth_clean(2, 1.0, rng, cfg);
  const Waveform back = istft(stft(s.wave, cfg));
  double l2 = 0.0, ref = 0.0;
  for (std::size_t i = cfg.window; i + cfg.window < back.samples.size(); ++i) {
    const double e = back.samples[i] - s.wave.samples[i];
    l2 += e * e;
    ref += s.wave.samples[i] * s.wave.samples[i];
  }
  REQUIRE(std::sqrt(l2 / ref) < 1e-8);
}

TEST_CASE("istft of a zero spectrogram is silence") {
  ComplexSpectrogram spec;
  spec.config = StftConfig{};
  spec.values = ComplexMatrix(10, spec.config.bins(), {0.0, 0.0});
  const Waveform w = istft(spec);
  for (double v : w.samples) REQUIRE(v == 0.0);
}

TEST_CASE("istft rejects window/hop pairs without overlap coverage") {
  StftConfig cfg;
  cfg.window = 256;
  cfg.hop = 256;  // Hann tapers to zero at the frame edge: gaps in coverage
  Rng rng(14);
  Waveform w = white_noise(4096, rng);
  const ComplexSpectrogram spec = stft(w, cfg);
  REQUIRE_THROWS_AS(istft(spec), ConfigError);
}

TEST_CASE("synth_clean with one regime yields constant labels") {
  Rng rng(15);
  const SynthOutput s = synth_clean(1, 1.0, rng);
  REQUIRE(!s.labels.empty());
  for (int l : s.labels) REQUIRE(l == 0);
}

TEST_CASE("synth_clean is deterministic given the seed") {
  Rng a(16), b(16);
  const SynthOutput sa = synth_clean(2, 1.5, a);
  const SynthOutput sb = synth_clean(2, 1.5, b);
  REQUIRE(sa.wave.samples == sb.wave.samples);
  REQUIRE(sa.labels == sb.labels);
  REQUIRE(sa.visual.values.flat() == sb.visual.values.flat());
}

TEST_CASE("synth_clean regimes are spectrally separated") {
  StftConfig cfg;
  Rng rng(17);
  const SynthOutput s = synth_clean(2, 3.0, rng, cfg);
  const ComplexSpectrogram spec = stft(s.wave, cfg);
  REQUIRE(spec.frames() == s.labels.size());

  // Spectral centroid per frame, then mean/std per regime.
  std::vector<double> centroid(spec.frames());
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    double num = 0.0, den = 0.0;
    for (std::size_t f = 0; f < spec.bins(); ++f) {
      const double e = std::norm(spec.values(t, f));
      num += static_cast<double>(f) * e;
      den += e;
    }
    centroid[t] = den > 0.0 ? num / den : 0.0;
  }
  double m[2] = {0.0, 0.0};
  std::size_t cnt[2] = {0, 0};
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    m[s.labels[t]] += centroid[t];
    ++cnt[s.labels[t]];
  }
  REQUIRE(cnt[0] > 10);
  REQUIRE(cnt[1] > 10);
  m[0] /= static_cast<double>(cnt[0]);
  m[1] /= static_cast<double>(cnt[1]);
  double var[2] = {0.0, 0.0};
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    const double d = centroid[t] - m[s.labels[t]];
    var[s.labels[t]] += d * d;
  }
  const double pooled = std::sqrt((var[0] + var[1]) /
                                  static_cast<double>(cnt[0] + cnt[1]));
  REQUIRE(std::abs(m[0] - m[1]) > 3.0 * pooled);
}

TEST_CASE("synth_clean visual embeddings track the regime") {
  Rng rng(18);
  const SynthOutput s = synth_clean(2, 3.0, rng);
  const std::size_t dim = s.visual.dim();
  REQUIRE(dim == 8);
  REQUIRE(s.visual.frames() == s.labels.size());
  for (std::uint8_t o : s.visual.occluded) REQUIRE(o == 0);

  RealVector mean0(dim, 0.0), mean1(dim, 0.0);
  std::size_t c0 = 0, c1 = 0;
  for (std::size_t t = 0; t < s.visual.frames(); ++t) {
    for (std::size_t d = 0; d < dim; ++d) {
      if (s.labels[t] == 0) mean0[d] += s.visual.values(t, d);
      else mean1[d] += s.visual.values(t, d);
    }
    (s.labels[t] == 0 ? c0 : c1)++;
  }
  double dist = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double diff = mean0[d] / static_cast<double>(c0) -
                        mean1[d] / static_cast<double>(c1);
    dist += diff * diff;
  }
  REQUIRE(std::sqrt(dist) > 1.0);

  // Per-frame deviation from the regime mean is the small additive noise.
  double dev = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < s.visual.frames(); ++t) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double mu = (s.labels[t] == 0 ? mean0[d] / static_cast<double>(c0)
                                          : mean1[d] / static_cast<double>(c1));
      const double e = s.visual.values(t, d) - mu;
      dev += e * e;
      ++n;
    }
  }
  REQUIRE(std::sqrt(dev / static_cast<double>(n)) < 0.1);
}

TEST_CASE("mix_at_snr hits the requested ratio exactly") {
  Rng rng(19);
  const SynthOutput s = synth_clean(2, 1.0, rng);
  Rng nrng(20);
  Waveform n2 = synth_noise(s.wave.samples.size() / 16000.0 + 0.1, nrng);
  n2.samples.resize(s.wave.samples.size());

  for (double snr : {-5.0, 0.0, 15.0}) {
    const Waveform mixed = mix_at_snr(s.wave, n2, snr);
    double pn = 0.0, pc = 0.0;
    for (std::size_t i = 0; i < mixed.samples.size(); ++i) {
      const double d = mixed.samples[i] - s.wave.samples[i];
      pn += d * d;
      pc += s.wave.samples[i] * s.wave.samples[i];
    }
    const double measured = 10.0 * std::log10(pc / pn);
    REQUIRE(measured == Catch::Approx(snr).margin(1e-9));
    if (snr == -5.0) {
      REQUIRE(pn / pc == Catch::Approx(std::pow(10.0, 0.5)).epsilon(1e-9));
    }
  }
}

TEST_CASE("mix_at_snr at +60 dB returns nearly the clean signal") {
  Rng rng(21);
  const SynthOutput s = synth_clean(2, 1.0, rng);
  Waveform n = synth_noise(1.2, rng);
  n.samples.resize(s.wave.samples.size());
  const Waveform mixed = mix_at_snr(s.wave, n, 60.0);
  double l2 = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < mixed.samples.size(); ++i) {
    const double e = mixed.samples[i] - s.wave.samples[i];
    l2 += e * e;
    ref += s.wave.samples[i] * s.wave.samples[i];
  }
  // A 60 dB SNR puts the residual at exactly 1e-3 relative L2 by
  // construction; allow the rounding floor above it.
  REQUIRE(std::sqrt(l2 / ref) < 1e-3 + 1e-9);
}

TEST_CASE("mix_at_snr rejects degenerate inputs") {
  Waveform a{std::vector<double>(100, 0.1), 16000.0};
  Waveform b{std::vector<double>(99, 0.1), 16000.0};
  REQUIRE_THROWS_AS(mix_at_snr(a, b, 0.0), DataError);
  Waveform silent{std::vector<double>(100, 0.0), 16000.0};
  REQUIRE_THROWS_AS(mix_at_snr(silent, a, 0.0), DataError);
  REQUIRE_THROWS_AS(mix_at_snr(a, silent, 0.0), DataError);
  Waveform c{std::vector<double>(100, 0.1), 8000.0};
  REQUIRE_THROWS_AS(mix_at_snr(a, c, 0.0), DataError);
}

TEST_CASE("occlude with zero fraction is the identity") {
  Rng rng(22);
  const SynthOutput s = synth_clean(2, 1.0, rng);
  const VisualSequence out = occlude(s.visual, 0.0, 20, rng);
  REQUIRE(out.values.flat() == s.visual.values.flat());
  for (std::uint8_t o : out.occluded) REQUIRE(o == 0);
}

TEST_CASE("occlude covers about the requested fraction in aligned bursts") {
  VisualSequence vis;
  vis.values = RealMatrix(600, 8, 0.5);
  vis.occluded.assign(600, 0);
  Rng rng(23);
  const VisualSequence out = occlude(vis, 1.0 / 3.0, 20, rng);

  std::size_t count = 0;
  for (std::uint8_t o : out.occluded) count += o;
  REQUIRE(count >= 160);
  REQUIRE(count <= 200);

  // Occlusion is a union of whole burst-aligned blocks.
  for (std::size_t b = 0; b < 600 / 20; ++b) {
    std::size_t in_block = 0;
    for (std::size_t t = b * 20; t < (b + 1) * 20; ++t) in_block += out.occluded[t];
    REQUIRE((in_block == 0 || in_block == 20));
  }

  // Unmasked frames untouched, masked frames standard normal.
  double var_sum = 0.0;
  std::size_t occ_frames = 0;
  for (std::size_t t = 0; t < 600; ++t) {
    if (!out.occluded[t]) {
      for (std::size_t d = 0; d < 8; ++d) REQUIRE(out.values(t, d) == 0.5);
      continue;
    }
    ++occ_frames;
    double m = 0.0;
    for (std::size_t d = 0; d < 8; ++d) m += out.values(t, d);
    m /= 8.0;
    double v = 0.0;
    for (std::size_t d = 0; d < 8; ++d) {
      v += (out.values(t, d) - m) * (out.values(t, d) - m);
    }
    var_sum += v / 7.0;
  }
  const double mean_var = var_sum / static_cast<double>(occ_frames);
  // Sample variance of 8 normals has sd sqrt(2/7); averaged over all occluded
  // frames the 3-sigma band is comfortably inside [0.8, 1.2].
  REQUIRE(mean_var > 0.8);
  REQUIRE(mean_var < 1.2);
}

TEST_CASE("occlude with full fraction masks everything") {
  VisualSequence vis;
  vis.values = RealMatrix(100, 4, 1.0);
  vis.occluded.assign(100, 0);
  Rng rng(24);
  const VisualSequence out = occlude(vis, 1.0, 20, rng);
  for (std::uint8_t o : out.occluded) REQUIRE(o == 1);
}

TEST_CASE("occlude validates its arguments") {
  VisualSequence vis;
  vis.values = RealMatrix(10, 2, 0.0);
  vis.occluded.assign(10, 0);
  Rng rng(25);
  REQUIRE_THROWS_AS(occlude(vis, -0.1, 20, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(occlude(vis, 1.1, 20, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(occlude(vis, 0.5, 0, rng), std::invalid_argument);
}

TEST_CASE("visual sequences survive a save/load round trip") {
  Rng rng(26);
  SynthOutput s = synth_clean(2, 1.0, rng);
  s.visual = occlude(s.visual, 0.3, 20, rng);
  const std::string vpath = temp_path("swvae_t_vis.bin");
  const std::string lpath = temp_path("swvae_t_lab.bin");
  save_visual(s.visual, vpath);
  save_labels(s.labels, lpath);

  const VisualSequence v = load_visual(vpath);
  REQUIRE(v.frames() == s.visual.frames());
  REQUIRE(v.dim() == s.visual.dim());
  REQUIRE(v.occluded == s.visual.occluded);
  for (std::size_t t = 0; t < v.frames(); ++t) {
    for (std::size_t d = 0; d < v.dim(); ++d) {
      REQUIRE(v.values(t, d) ==
              Catch::Approx(static_cast<float>(s.visual.values(t, d))).margin(0.0));
    }
  }
  REQUIRE(load_labels(lpath) == s.labels);
  std::remove(vpath.c_str());
  std::remove(lpath.c_str());
}

TEST_CASE("feature readers reject malformed files") {
  const std::string path = temp_path("swvae_t_badvis.bin");
  std::ofstream os(path, std::ios::binary);
  os << "XXXX junk";
  os.close();
  REQUIRE_THROWS_AS(load_visual(path), DataError);
  REQUIRE_THROWS_AS(load_labels(path), DataError);
  std::remove(path.c_str());
}
