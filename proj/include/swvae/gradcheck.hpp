// swvae/gradcheck.hpp

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

#ifndef SWVAE_GRADCHECK_HPP_
#define SWVAE_GRADCHECK_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "swvae/errors.hpp"

namespace swvae {

/// Max relative error between central finite differences of f at x and the
/// supplied analytic gradient. Denominator floored at 1e-12, so a zero
/// analytic gradient on a flat function scores 0 and a wrongly scaled
/// gradient scores O(1).
inline double finite_diff_check(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, const std::vector<double>& analytic_grad,
    double h = 1e-4) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_check: h must be > 0");
  if (analytic_grad.size() != x.size()) {
    throw std::invalid_argument("finite_diff_check: gradient length mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalError("finite_diff_check: non-finite f at perturbation");
    }
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max(std::abs(fd), 1e-12);
    const double rel = std::abs(analytic_grad[i] - fd) / denom;
    if (rel > worst) worst = rel;
  }
  return worst;
}

}  // namespace swvae

#endif  // SWVAE_GRADCHECK_HPP_
