#pragma once

#include <functional>
#include <vector>

#include "freqrec/tensor.hpp"

namespace freqrec {

using ScalarFn = std::function<double(const Tensor&)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every element
// of x. x is perturbed in place and restored; f runs with graph recording
// disabled.
Tensor finite_diff_grad(const ScalarFn& f, Tensor x, double h = 1e-5);

// Largest elementwise |a - b| / max(|a|, |b|, floor). The floor keeps
// finite-difference round-off on near-zero entries from dominating.
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  std::size_t worst_element = 0;
};

// Compares analytic gradients of `loss_fn` (which must rebuild the graph on
// every call) against central differences for every tensor in `params`.
GradCheckReport check_gradients(const std::function<Tensor()>& loss_fn,
                                std::vector<Tensor> params, double h = 1e-5,
                                double floor = 1e-6);

}  // namespace freqrec
