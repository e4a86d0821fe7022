#include "mfcm/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "mfcm/error.hpp"

namespace mfcm {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradCheckResult grad_check(const std::function<Tensor(Tape&)>& loss_fn, std::vector<Tensor> params,
                           double eps) {
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.grad();
    p.zero_grad();
  }
  {
    Tape tape;
    Tensor loss = loss_fn(tape);
    tape.backward(loss);
  }

  const auto evaluate = [&]() {
    Tape tape(false);
    return loss_fn(tape).item();
  };

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].data();
    const std::vector<double> analytic(params[pi].grad().begin(), params[pi].grad().end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double plus = evaluate();
      values[i] = saved - eps;
      const double minus = evaluate();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double err = relative_error(analytic[i], numeric);
      ++result.entries_checked;
      if (err > result.max_rel_error || result.entries_checked == 1) {
        result.max_rel_error = err;
        result.worst_param = pi;
        result.worst_index = i;
        result.worst_analytic = analytic[i];
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace mfcm
