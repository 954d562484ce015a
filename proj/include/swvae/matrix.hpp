// swvae/matrix.hpp

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

#ifndef SWVAE_MATRIX_HPP_
#define SWVAE_MATRIX_HPP_

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace swvae {

using RealVector = std::vector<double>;
using ComplexVector = std::vector<std::complex<double>>;

/// Dense row-major matrix. Shape-checked operations only, no broadcasting.
template <typename T>
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, T value = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  T* row(std::size_t r) { return data_.data() + r * cols_; }
  const T* row(std::size_t r) const { return data_.data() + r * cols_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  std::vector<T>& flat() { return data_; }
  const std::vector<T>& flat() const { return data_; }

  bool same_shape(const Mat& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(T value) { data_.assign(data_.size(), value); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Mat<double>;
using ComplexMatrix = Mat<std::complex<double>>;

inline void require_same_shape(const RealMatrix& a, const RealMatrix& b,
                               const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

/// C = A * B with dimension check.
inline RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + ")");
  }
  RealMatrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

/// y = W * x with dimension check (y resized).
inline void matvec(const RealMatrix& w, const RealVector& x, RealVector& y) {
  if (w.cols() != x.size()) {
    throw std::invalid_argument("matvec: " + std::to_string(w.cols()) +
                                " cols vs vector of " +
                                std::to_string(x.size()));
  }
  y.assign(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* wrow = w.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols(); ++c) acc += wrow[c] * x[c];
    y[r] = acc;
  }
}

/// y = W^T * x with dimension check (y resized).
inline void matvec_transposed(const RealMatrix& w, const RealVector& x,
                              RealVector& y) {
  if (w.rows() != x.size()) {
    throw std::invalid_argument("matvec_transposed: " +
                                std::to_string(w.rows()) + " rows vs vector of " +
                                std::to_string(x.size()));
  }
  y.assign(w.cols(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* wrow = w.row(r);
    const double xr = x[r];
    for (std::size_t c = 0; c < w.cols(); ++c) y[c] += wrow[c] * xr;
  }
}

template <typename T>
bool all_finite(const std::vector<T>& v) {
  for (const T& x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline bool all_finite(const ComplexVector& v) {
  for (const auto& x : v) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  }
  return true;
}

inline bool all_finite(const RealMatrix& m) { return all_finite(m.flat()); }
inline bool all_finite(const ComplexMatrix& m) { return all_finite(m.flat()); }

inline double dot(const RealVector& a, const RealVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sum(const RealVector& a) {
  double s = 0.0;
  for (double x : a) s += x;
  return s;
}

inline double mean(const RealVector& a) {
  return a.empty() ? 0.0 : sum(a) / static_cast<double>(a.size());
}

}  // namespace swvae

#endif  // SWVAE_MATRIX_HPP_
