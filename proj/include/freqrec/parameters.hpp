#pragma once

#include <string>
#include <vector>

#include "freqrec/ops.hpp"
#include "freqrec/tensor.hpp"

namespace freqrec {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<NamedParameter>;

// N(0, stddev^2) entries, marked trainable.
Tensor normal_parameter(Shape shape, double stddev, Rng& rng);
Tensor zeros_parameter(Shape shape);
Tensor ones_parameter(Shape shape);

inline void append_parameters(ParameterList& out, const std::string& prefix, const ParameterList& more) {
  for (const auto& p : more) out.push_back({prefix + p.name, p.tensor});
}

}  // namespace freqrec
