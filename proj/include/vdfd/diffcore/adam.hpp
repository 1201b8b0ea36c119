#pragma once

#include <iosfwd>
#include <vector>

#include "vdfd/diffcore/params.hpp"
#include "vdfd/diffcore/tensor.hpp"

namespace vdfd::diff {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected adaptive-moment optimizer over a ParamStore. Parameters
// absent from a step's gradient map are skipped (their moments and step
// count stay untouched).
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(ParamStore& params, const GradMap& grads);

  const AdamConfig& config() const { return config_; }

  struct State {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::int64_t step_count = 0;
  };
  const State* state_for(int param_index) const;

  void save(std::ostream& os) const;
  void load(std::istream& is, const ParamStore& params);

 private:
  AdamConfig config_;
  std::vector<State> states_;  // indexed like the ParamStore
};

}  // namespace vdfd::diff
