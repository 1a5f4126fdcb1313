#include "freqrec/adam.hpp"

#include <cmath>

#include "freqrec/errors.hpp"

namespace freqrec {

AdamState AdamState::for_parameters(std::span<const Tensor> params, AdamOptions options) {
  AdamState s;
  s.options = options;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.size(), 0.0);
    s.second_moment.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but state holds " +
                         std::to_string(state.first_moment.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].size() ||
        state.second_moment[i].size() != params[i].size()) {
      throw DimensionError("adam_step: moment size mismatch for parameter " + std::to_string(i) +
                           " of shape " + shape_str(params[i].shape()));
    }
  }
  const auto& o = state.options;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const bool has_grad = p.has_grad();
    auto g = p.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    auto w = p.mutable_data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = has_grad ? g[j] : 0.0;
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
      w[j] -= o.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + o.epsilon);
    }
  }
}

}  // namespace freqrec
