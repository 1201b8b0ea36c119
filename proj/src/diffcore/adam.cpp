#include "vdfd/diffcore/adam.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "vdfd/common.hpp"

namespace vdfd::diff {

void Adam::step(ParamStore& params, const GradMap& grads) {
  check(params.trainable(), "Adam: store is not trainable");
  if (states_.size() < static_cast<size_t>(params.count())) states_.resize(params.count());

  for (int i = 0; i < params.count(); ++i) {
    ParamRef ref{i};
    auto it = grads.find(params.id_of(ref));
    if (it == grads.end()) continue;

    const Tensor param = params.get(ref);
    const Tensor& grad = it->second;
    check(grad.shape() == param.shape(),
          cat("Adam: gradient shape ", shape_str(grad.shape()), " != parameter '", params.name(i), "' shape ",
              shape_str(param.shape())));
    const auto& g = grad.data();
    for (double x : g)
      check(std::isfinite(x), cat("Adam: non-finite gradient for parameter '", params.name(i), "'"));

    State& st = states_[i];
    if (st.first_moment.empty()) {
      st.first_moment.assign(g.size(), 0.0);
      st.second_moment.assign(g.size(), 0.0);
    }
    st.step_count += 1;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step_count));

    std::vector<double> next = param.data();
    for (size_t k = 0; k < g.size(); ++k) {
      st.first_moment[k] = b1 * st.first_moment[k] + (1.0 - b1) * g[k];
      st.second_moment[k] = b2 * st.second_moment[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = st.first_moment[k] / bc1;
      const double v_hat = st.second_moment[k] / bc2;
      next[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    params.set_data(ref, std::move(next));
  }
}

const Adam::State* Adam::state_for(int param_index) const {
  if (param_index < 0 || param_index >= static_cast<int>(states_.size())) return nullptr;
  return &states_[param_index];
}

void Adam::save(std::ostream& os) const {
  const std::uint64_t n = states_.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (const auto& st : states_) {
    const std::uint64_t m = st.first_moment.size();
    os.write(reinterpret_cast<const char*>(&m), sizeof(m));
    os.write(reinterpret_cast<const char*>(&st.step_count), sizeof(st.step_count));
    if (m) {
      os.write(reinterpret_cast<const char*>(st.first_moment.data()), static_cast<std::streamsize>(m * sizeof(double)));
      os.write(reinterpret_cast<const char*>(st.second_moment.data()),
               static_cast<std::streamsize>(m * sizeof(double)));
    }
  }
}

void Adam::load(std::istream& is, const ParamStore& params) {
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  check(is.good() && n <= static_cast<std::uint64_t>(params.count()), "Adam: corrupt optimizer state");
  states_.assign(params.count(), State{});
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint64_t m = 0;
    is.read(reinterpret_cast<char*>(&m), sizeof(m));
    is.read(reinterpret_cast<char*>(&states_[i].step_count), sizeof(states_[i].step_count));
    states_[i].first_moment.resize(m);
    states_[i].second_moment.resize(m);
    if (m) {
      is.read(reinterpret_cast<char*>(states_[i].first_moment.data()), static_cast<std::streamsize>(m * sizeof(double)));
      is.read(reinterpret_cast<char*>(states_[i].second_moment.data()),
              static_cast<std::streamsize>(m * sizeof(double)));
    }
    check(is.good(), "Adam: corrupt optimizer state");
  }
}

}  // namespace vdfd::diff
