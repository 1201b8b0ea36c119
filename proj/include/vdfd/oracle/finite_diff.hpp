#pragma once

#include <functional>
#include <vector>

namespace vdfd::oracle {

using ScalarFn = std::function<double(const std::vector<double>&)>;

// Central-difference gradient estimate of a deterministic scalar function.
std::vector<double> finite_difference_gradient(const ScalarFn& f, std::vector<double> params, double step = 1e-4);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, abs_floor)
double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                          double abs_floor = 1e-6);

}  // namespace vdfd::oracle
