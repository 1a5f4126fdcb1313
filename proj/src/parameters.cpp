#include "freqrec/parameters.hpp"

namespace freqrec {

Tensor normal_parameter(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor(std::move(shape), std::move(values), true);
}

Tensor zeros_parameter(Shape shape) { return Tensor::zeros(std::move(shape), true); }

Tensor ones_parameter(Shape shape) { return Tensor::full(std::move(shape), 1.0, true); }

}  // namespace freqrec
