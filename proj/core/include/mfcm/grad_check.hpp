#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mfcm/tensor.hpp"

namespace mfcm {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t entries_checked = 0;
  // Parameter index and flat offset of the worst entry.
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double a, double b);

// Compares tape gradients of the scalar `loss_fn` with central differences
// (f(p + eps) - f(p - eps)) / (2 eps) for every entry of every tensor in
// `params`. loss_fn must rebuild the computation on the tape it is given.
GradCheckResult grad_check(const std::function<Tensor(Tape&)>& loss_fn, std::vector<Tensor> params,
                           double eps = 1e-5);

}  // namespace mfcm
