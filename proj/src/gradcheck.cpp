#include "freqrec/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "freqrec/errors.hpp"

namespace freqrec {

Tensor finite_diff_grad(const ScalarFn& f, Tensor x, double h) {
  if (!(h > 0.0)) throw UsageError("finite_diff_grad needs h > 0");
  NoGradGuard guard;
  std::vector<double> grad(x.size());
  auto data = x.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double saved = data[i];
    data[i] = saved + h;
    const double up = f(x);
    data[i] = saved - h;
    const double down = f(x);
    data[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return Tensor(x.shape(), std::move(grad));
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw DimensionError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

GradCheckReport check_gradients(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                                double h, double floor) {
  for (auto& p : params) p.zero_grad();
  backward(loss_fn());

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    std::vector<double> analytic(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    auto numeric = finite_diff_grad([&](const Tensor&) { return loss_fn().item(); }, p, h);
    auto nd = numeric.data();
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double denom = std::max({std::abs(analytic[i]), std::abs(nd[i]), floor});
      const double err = std::abs(analytic[i] - nd[i]) / denom;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = pi;
        report.worst_element = i;
      }
    }
  }
  return report;
}

}  // namespace freqrec
