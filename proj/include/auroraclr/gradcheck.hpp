// Copyright 2026 The auroraclr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Central finite-difference verification of tape gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "auroraclr/errors.hpp"
#include "auroraclr/tensor.hpp"

namespace auroraclr {

struct CheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t refined = 0;  // elements re-estimated with a smaller step
  bool passed = false;
};

struct GradientCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double denominator_floor = 1e-3;
  // A disagreeing element is re-estimated at step/10, step/100, ... for as
  // long as the estimate changes between scales (a kink inside the stencil).
  // An estimate that agrees with the next finer one is kept.
  std::size_t refinements = 2;
};

// Compares the tape gradient of a scalar function of `param` against central
// differences, perturbing `param` in place (restored afterwards). `loss_fn`
// must rebuild its graph from the current contents of `param` on every call.
inline CheckReport gradient_check_parameter(const std::function<Tensor()>& loss_fn, Tensor param,
                                            const GradientCheckOptions& opts = {}) {
  std::vector<double> analytic;
  {
    TapeScope scope;
    const bool had = param.requires_grad();
    param.set_requires_grad(true);
    param.zero_grad();
    Tensor loss = loss_fn();
    if (loss.numel() != 1) throw ContractError("gradient_check: function is not scalar-valued");
    if (!std::isfinite(loss.item())) throw NumericError("gradient_check: non-finite loss");
    backward(loss);
    if (param.has_grad()) {
      analytic.assign(param.grad().begin(), param.grad().end());
    } else {
      analytic.assign(param.numel(), 0.0);
    }
    param.zero_grad();
    param.set_requires_grad(had);
  }

  CheckReport report;
  auto values = param.mutable_data();
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double original = values[i];
    values[i] = original + opts.step;
    const double plus = loss_fn().item();
    values[i] = original - opts.step;
    const double minus = loss_fn().item();
    values[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("gradient_check: non-finite value at element " + std::to_string(i));
    }
    auto relative = [&](double a, double b) {
      return std::abs(a - b) / std::max({std::abs(a), std::abs(b), opts.denominator_floor});
    };
    double numeric = (plus - minus) / (2.0 * opts.step);
    if (relative(analytic[i], numeric) > opts.tolerance) {
      double step = opts.step;
      for (std::size_t r = 0; r < opts.refinements; ++r) {
        step /= 10.0;
        values[i] = original + step;
        const double p = loss_fn().item();
        values[i] = original - step;
        const double m = loss_fn().item();
        values[i] = original;
        const double finer = (p - m) / (2.0 * step);
        if (relative(numeric, finer) <= opts.tolerance) break;
        numeric = finer;
        if (r == 0) ++report.refined;
      }
    }
    const double abs_err = std::abs(analytic[i] - numeric);
    const double rel_err = relative(analytic[i], numeric);
    report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
    if (rel_err > report.max_relative_error) {
      report.max_relative_error = rel_err;
      report.worst_index = i;
    }
    ++report.checked;
  }
  report.passed = report.max_relative_error <= opts.tolerance;
  return report;
}

// Gradient check of f at x. x is copied; the caller's tensor is not touched.
inline CheckReport gradient_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                                  double step, double tol) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw NumericError("gradient_check: non-finite input");
  }
  Tensor var = x.detach(true);
  GradientCheckOptions opts;
  opts.step = step;
  opts.tolerance = tol;
  return gradient_check_parameter([&] { return f(var); }, var, opts);
}

}  // namespace auroraclr
