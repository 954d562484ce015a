// swvae/fft.hpp

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

#ifndef SWVAE_FFT_HPP_
#define SWVAE_FFT_HPP_

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace swvae {
namespace fft {

constexpr double kPi = 3.14159265358979323846;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 transform. inverse=true applies the 1/N scale.
inline void transform(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("fft: length must be a power of two");
  }
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

/// Real-input DFT; returns the nfft/2+1 non-redundant bins.
inline std::vector<std::complex<double>> rfft(const double* x, std::size_t nfft) {
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t i = 0; i < nfft; ++i) buf[i] = std::complex<double>(x[i], 0.0);
  transform(buf, false);
  buf.resize(nfft / 2 + 1);
  return buf;
}

/// Inverse of rfft: reconstructs the full spectrum by conjugate symmetry and
/// returns the nfft real samples.
inline std::vector<double> irfft(const std::complex<double>* bins, std::size_t nfft) {
  std::vector<std::complex<double>> buf(nfft);
  const std::size_t half = nfft / 2;
  for (std::size_t k = 0; k <= half; ++k) buf[k] = bins[k];
  for (std::size_t k = half + 1; k < nfft; ++k) buf[k] = std::conj(bins[nfft - k]);
  transform(buf, true);
  std::vector<double> out(nfft);
  for (std::size_t i = 0; i < nfft; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace fft
}  // namespace swvae

#endif  // SWVAE_FFT_HPP_
