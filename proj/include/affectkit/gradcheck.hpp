// diffcore/gradcheck.hpp

// Copyright 2026 The affectkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFECTKIT_GRADCHECK_HPP
#define AFFECTKIT_GRADCHECK_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "affectkit/rng.hpp"
#include "affectkit/tensor.hpp"

namespace affectkit {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

// Central finite differences against the closure's analytic gradients.
//
// `loss_fn` must deterministically compute the scalar loss at the current
// parameter values and leave d loss/d theta in each Parameter::grad.  Per
// parameter at most `max_coords` coordinates are probed (random subsample,
// seeded).  The relative error is |analytic - numeric| / max(|numeric|, eps)
// so a gradient scaled by 2 reports an error near 1; coordinates where both
// sides are below eps count as exact.  Parameter gradients are left invalid
// afterwards.
inline GradCheckReport grad_check(const std::function<double()>& loss_fn,
                                  const std::vector<Parameter*>& params,
                                  double step = 1e-4,
                                  std::size_t max_coords = 200,
                                  std::uint64_t seed = 0) {
  constexpr double kNegligible = 1e-7;
  loss_fn();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  Rng rng(seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    std::vector<std::size_t> coords;
    if (p.value.size() <= max_coords) {
      coords.resize(p.value.size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      std::vector<std::size_t> all(p.value.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      rng.shuffle(all);
      coords.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(max_coords));
    }
    for (std::size_t idx : coords) {
      const double saved = p.value[idx];
      p.value[idx] = saved + step;
      const double f_plus = loss_fn();
      p.value[idx] = saved - step;
      const double f_minus = loss_fn();
      p.value[idx] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * step);
      const double an = analytic[pi][idx];
      ++report.coords_checked;
      double err = 0.0;
      if (std::fabs(an) >= kNegligible || std::fabs(numeric) >= kNegligible)
        err = std::fabs(an - numeric) / std::max(std::fabs(numeric), kNegligible);
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_param = p.name;
        report.worst_index = idx;
        report.worst_analytic = an;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace affectkit

#endif  // AFFECTKIT_GRADCHECK_HPP
