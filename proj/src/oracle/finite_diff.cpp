#include "vdfd/oracle/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "vdfd/common.hpp"

namespace vdfd::oracle {

std::vector<double> finite_difference_gradient(const ScalarFn& f, std::vector<double> params, double step) {
  check(step > 0.0, "finite_difference_gradient: step must be positive");
  std::vector<double> grad(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + step;
    const double up = f(params);
    params[i] = orig - step;
    const double down = f(params);
    params[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                          double abs_floor) {
  check(analytic.size() == numeric.size(), "max_relative_error: size mismatch");
  double worst = 0.0;
  for (size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), abs_floor});
    worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace vdfd::oracle
