#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "freqrec/tensor.hpp"

namespace freqrec {

struct AdamOptions {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;
  AdamOptions options;

  // Zero moments shaped like `params`.
  static AdamState for_parameters(std::span<const Tensor> params, AdamOptions options = {});
};

// One bias-corrected Adam update using each parameter's gradient slot (a
// missing gradient counts as zero). Throws DimensionError when the
// moments do not match the parameters.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace freqrec
