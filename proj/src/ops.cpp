#include "freqrec/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "freqrec/errors.hpp"

namespace freqrec {

using detail::make_result;
using detail::TensorImpl;

namespace {

std::size_t normalize_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " invalid for rank " + std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

// Output shape plus, for every output element, the flat offset into each
// operand.
struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> a_index;
  std::vector<std::size_t> b_index;
};

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t ea = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t eb = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (ea != eb && ea != 1 && eb != 1) {
      throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(a) + " with " +
                           shape_str(b));
    }
    out[i] = std::max(ea, eb);
  }
  return out;
}

// Offsets of `in` (right-aligned into `out`) for every element of `out`.
std::vector<std::size_t> broadcast_offsets(const Shape& in, const Shape& out) {
  const std::size_t r = out.size();
  const std::size_t pad = r - in.size();
  auto in_strides = strides_of(in);
  std::vector<std::size_t> stride(r, 0);
  for (std::size_t i = pad; i < r; ++i) {
    stride[i] = in[i - pad] == 1 ? 0 : in_strides[i - pad];
  }
  const std::size_t n = shape_numel(out);
  std::vector<std::size_t> offsets(n);
  std::vector<std::size_t> counter(r, 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    offsets[flat] = off;
    for (std::size_t ax = r; ax-- > 0;) {
      if (++counter[ax] < out[ax]) {
        off += stride[ax];
        break;
      }
      off -= stride[ax] * (out[ax] - 1);
      counter[ax] = 0;
    }
  }
  return offsets;
}

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  BroadcastPlan p;
  p.out = broadcast_shape(a, b, op);
  p.a_index = broadcast_offsets(a, p.out);
  p.b_index = broadcast_offsets(b, p.out);
  return p;
}

template <typename Fwd, typename Da, typename Db>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, Da da, Db db) {
  if (a.shape() == b.shape()) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(x[i], y[i]);
    auto ai = a.impl();
    auto bi = b.impl();
    return make_result(name, a.shape(), std::move(out), {a, b},
                       [ai, bi, da, db](std::span<const double> g) {
                         const std::size_t m = g.size();
                         if (ai->requires_grad) {
                           auto& ga = ai->ensure_grad();
                           for (std::size_t i = 0; i < m; ++i) ga[i] += da(ai->data[i], bi->data[i], g[i]);
                         }
                         if (bi->requires_grad) {
                           auto& gb = bi->ensure_grad();
                           for (std::size_t i = 0; i < m; ++i) gb[i] += db(ai->data[i], bi->data[i], g[i]);
                         }
                       });
  }
  auto plan = std::make_shared<BroadcastPlan>(plan_broadcast(a.shape(), b.shape(), name));
  const std::size_t n = shape_numel(plan->out);
  std::vector<double> out(n);
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(x[plan->a_index[i]], y[plan->b_index[i]]);
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(name, plan->out, std::move(out), {a, b},
                     [ai, bi, plan, da, db](std::span<const double> g) {
                       const std::size_t m = g.size();
                       if (ai->requires_grad) {
                         auto& ga = ai->ensure_grad();
                         for (std::size_t i = 0; i < m; ++i) {
                           const auto ia = plan->a_index[i];
                           ga[ia] += da(ai->data[ia], bi->data[plan->b_index[i]], g[i]);
                         }
                       }
                       if (bi->requires_grad) {
                         auto& gb = bi->ensure_grad();
                         for (std::size_t i = 0; i < m; ++i) {
                           const auto ib = plan->b_index[i];
                           gb[ib] += db(ai->data[plan->a_index[i]], bi->data[ib], g[i]);
                         }
                       }
                     });
}

template <typename Fwd, typename Deriv>
Tensor unary_op(const char* name, const Tensor& x, Fwd fwd, Deriv deriv) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  auto in = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(in[i]);
  auto xi = x.impl();
  return make_result(name, x.shape(), std::move(out), {x}, [xi, deriv](std::span<const double> g) {
    auto& gx = xi->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xi->data[i]);
  });
}

// out[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

// out[m x k] += g[m x n] * b[k x n]^T
void gemm_nt(const double* g, const double* b, double* out, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      out[i * k + p] += acc;
    }
  }
}

// out[k x n] += a[m x k]^T * g[m x n]
void gemm_tn(const double* a, const double* g, double* out, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* orow = out + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * grow[j];
    }
  }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double g) { return g; }, [](double, double, double g) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double g) { return g; }, [](double, double, double g) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double g) { return g * y; },
      [](double x, double, double g) { return g * x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary_op(
      "scale", a, [factor](double x) { return factor * x; }, [factor](double) { return factor; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw DimensionError("matmul needs rank >= 2 operands, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.extent(-2), k = a.extent(-1);
  const std::size_t k2 = b.extent(-2), n = b.extent(-1);
  if (k != k2) {
    throw DimensionError("matmul: inner extents differ for " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  Shape a_batch(a.shape().begin(), a.shape().end() - 2);
  Shape b_batch(b.shape().begin(), b.shape().end() - 2);
  Shape batch;
  try {
    batch = broadcast_shape(a_batch, b_batch, "matmul");
  } catch (const DimensionError&) {
    throw DimensionError("matmul: batch axes of " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " do not broadcast");
  }
  const std::size_t batches = shape_numel(batch);
  // Batch offsets measured in matrices.
  auto a_off = std::make_shared<std::vector<std::size_t>>(
      a_batch.empty() ? std::vector<std::size_t>(batches, 0) : broadcast_offsets(a_batch, batch));
  auto b_off = std::make_shared<std::vector<std::size_t>>(
      b_batch.empty() ? std::vector<std::size_t>(batches, 0) : broadcast_offsets(b_batch, batch));

  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<double> out(batches * m * n, 0.0);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t t = 0; t < batches; ++t) {
    gemm_nn(ad + (*a_off)[t] * m * k, bd + (*b_off)[t] * k * n, out.data() + t * m * n, m, k, n);
  }
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result("matmul", std::move(out_shape), std::move(out), {a, b},
                     [ai, bi, a_off, b_off, batches, m, k, n](std::span<const double> g) {
                       if (ai->requires_grad) {
                         auto& ga = ai->ensure_grad();
                         for (std::size_t t = 0; t < batches; ++t) {
                           gemm_nt(g.data() + t * m * n, bi->data.data() + (*b_off)[t] * k * n,
                                   ga.data() + (*a_off)[t] * m * k, m, k, n);
                         }
                       }
                       if (bi->requires_grad) {
                         auto& gb = bi->ensure_grad();
                         for (std::size_t t = 0; t < batches; ++t) {
                           gemm_tn(ai->data.data() + (*a_off)[t] * m * k, g.data() + t * m * n,
                                   gb.data() + (*b_off)[t] * k * n, m, k, n);
                         }
                       }
                     });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const std::size_t r = x.rank();
  if (axes.size() != r) throw DimensionError("permute: axis list length differs from rank");
  std::vector<bool> seen(r, false);
  for (auto ax : axes) {
    if (ax >= r || seen[ax]) throw DimensionError("permute: invalid axis permutation");
    seen[ax] = true;
  }
  const auto in_strides = strides_of(x.shape());
  Shape out_shape(r);
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = x.shape()[axes[i]];
    stride[i] = in_strides[axes[i]];
  }
  const std::size_t n = x.size();
  // source[i] is the input offset of output element i
  auto source = std::make_shared<std::vector<std::size_t>>(n);
  {
    std::vector<std::size_t> counter(r, 0);
    std::size_t off = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
      (*source)[flat] = off;
      for (std::size_t ax = r; ax-- > 0;) {
        if (++counter[ax] < out_shape[ax]) {
          off += stride[ax];
          break;
        }
        off -= stride[ax] * (out_shape[ax] - 1);
        counter[ax] = 0;
      }
    }
  }
  std::vector<double> out(n);
  auto in = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = in[(*source)[i]];
  auto xi = x.impl();
  return make_result("permute", std::move(out_shape), std::move(out), {x},
                     [xi, source](std::span<const double> g) {
                       auto& gx = xi->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) gx[(*source)[i]] += g[i];
                     });
}

Tensor transpose(const Tensor& x, int axis0, int axis1) {
  std::vector<std::size_t> axes(x.rank());
  std::iota(axes.begin(), axes.end(), 0);
  std::swap(axes[normalize_axis(axis0, x.rank())], axes[normalize_axis(axis1, x.rank())]);
  return permute(x, axes);
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  auto xi = x.impl();
  return make_result("reshape", std::move(shape), x.impl()->data, {x},
                     [xi](std::span<const double> g) {
                       auto& gx = xi->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     });
}

Tensor select(const Tensor& x, int axis, std::size_t index) {
  const std::size_t ax = normalize_axis(axis, x.rank());
  const std::size_t extent = x.shape()[ax];
  if (index >= extent) {
    throw IndexError("select: index " + std::to_string(index) + " out of range for axis extent " +
                     std::to_string(extent));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < ax; ++i) outer *= x.shape()[i];
  for (std::size_t i = ax + 1; i < x.rank(); ++i) inner *= x.shape()[i];
  Shape out_shape;
  for (std::size_t i = 0; i < x.rank(); ++i) {
    if (i != ax) out_shape.push_back(x.shape()[i]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  std::vector<double> out(outer * inner);
  auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) out[o * inner + j] = in[(o * extent + index) * inner + j];
  }
  auto xi = x.impl();
  return make_result("select", std::move(out_shape), std::move(out), {x},
                     [xi, outer, inner, extent, index](std::span<const double> g) {
                       auto& gx = xi->ensure_grad();
                       for (std::size_t o = 0; o < outer; ++o) {
                         for (std::size_t j = 0; j < inner; ++j) {
                           gx[(o * extent + index) * inner + j] += g[o * inner + j];
                         }
                       }
                     });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  auto xi = x.impl();
  return make_result("sum", {1}, {acc}, {x}, [xi](std::span<const double> g) {
    auto& gx = xi->ensure_grad();
    for (auto& v : gx) v += g[0];
  });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  auto xi = x.impl();
  return make_result("mean", {1}, {acc / n}, {x}, [xi, n](std::span<const double> g) {
    auto& gx = xi->ensure_grad();
    for (auto& v : gx) v += g[0] / n;
  });
}

Tensor absolute(const Tensor& x) {
  return unary_op(
      "abs", x, [](double v) { return std::abs(v); },
      [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
  return unary_op(
      "square", x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Tensor softmax(const Tensor& x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.rank());
  const std::size_t extent = x.shape()[ax];
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < ax; ++i) outer *= x.shape()[i];
  for (std::size_t i = ax + 1; i < x.rank(); ++i) inner *= x.shape()[i];
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t base = o * extent * inner + j;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < extent; ++t) mx = std::max(mx, in[base + t * inner]);
      double z = 0.0;
      for (std::size_t t = 0; t < extent; ++t) {
        const double e = std::exp(in[base + t * inner] - mx);
        out[base + t * inner] = e;
        z += e;
      }
      for (std::size_t t = 0; t < extent; ++t) out[base + t * inner] /= z;
    }
  }
  auto y = std::make_shared<std::vector<double>>(out);
  auto xi = x.impl();
  return make_result("softmax", x.shape(), std::move(out), {x},
                     [xi, y, outer, inner, extent](std::span<const double> g) {
                       auto& gx = xi->ensure_grad();
                       for (std::size_t o = 0; o < outer; ++o) {
                         for (std::size_t j = 0; j < inner; ++j) {
                           const std::size_t base = o * extent * inner + j;
                           double dot = 0.0;
                           for (std::size_t t = 0; t < extent; ++t) {
                             dot += g[base + t * inner] * (*y)[base + t * inner];
                           }
                           for (std::size_t t = 0; t < extent; ++t) {
                             const auto i = base + t * inner;
                             gx[i] += (*y)[i] * (g[i] - dot);
                           }
                         }
                       }
                     });
}

Tensor masked_softmax(const Tensor& x, const std::vector<std::uint8_t>& allowed) {
  if (allowed.size() != x.size()) throw DimensionError("masked_softmax: mask size differs from input");
  const std::size_t extent = x.extent(-1);
  const std::size_t rows = x.size() / extent;
  std::vector<double> out(x.size(), 0.0);
  auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * extent;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < extent; ++t) {
      if (allowed[base + t]) mx = std::max(mx, in[base + t]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t t = 0; t < extent; ++t) {
      if (!allowed[base + t]) continue;
      const double e = std::exp(in[base + t] - mx);
      out[base + t] = e;
      z += e;
    }
    for (std::size_t t = 0; t < extent; ++t) out[base + t] /= z;
  }
  auto y = std::make_shared<std::vector<double>>(out);
  auto xi = x.impl();
  return make_result("masked_softmax", x.shape(), std::move(out), {x},
                     [xi, y, rows, extent](std::span<const double> g) {
                       auto& gx = xi->ensure_grad();
                       for (std::size_t r = 0; r < rows; ++r) {
                         const std::size_t base = r * extent;
                         double dot = 0.0;
                         for (std::size_t t = 0; t < extent; ++t) dot += g[base + t] * (*y)[base + t];
                         for (std::size_t t = 0; t < extent; ++t) {
                           gx[base + t] += (*y)[base + t] * (g[base + t] - dot);
                         }
                       }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t d = x.extent(-1);
  if (gain.size() != d || bias.size() != d) {
    throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " do not match last axis of " +
                         shape_str(x.shape()));
  }
  const std::size_t rows = x.size() / d;
  auto xhat = std::make_shared<std::vector<double>>(x.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(x.size());
  auto in = x.data();
  auto gd = gain.data();
  auto bd = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = gd[j] * h + bd[j];
    }
  }
  auto xi = x.impl();
  auto gi = gain.impl();
  auto bi = bias.impl();
  return make_result("layer_norm", x.shape(), std::move(out), {x, gain, bias},
                     [xi, gi, bi, xhat, inv_std, rows, d](std::span<const double> g) {
                       if (gi->requires_grad) {
                         auto& gg = gi->ensure_grad();
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * (*xhat)[r * d + j];
                         }
                       }
                       if (bi->requires_grad) {
                         auto& gb = bi->ensure_grad();
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
                         }
                       }
                       if (xi->requires_grad) {
                         auto& gx = xi->ensure_grad();
                         const double inv_d = 1.0 / static_cast<double>(d);
                         for (std::size_t r = 0; r < rows; ++r) {
                           double m1 = 0.0, m2 = 0.0;
                           for (std::size_t j = 0; j < d; ++j) {
                             const double dh = g[r * d + j] * gi->data[j];
                             m1 += dh;
                             m2 += dh * (*xhat)[r * d + j];
                           }
                           m1 *= inv_d;
                           m2 *= inv_d;
                           for (std::size_t j = 0; j < d; ++j) {
                             const double dh = g[r * d + j] * gi->data[j];
                             gx[r * d + j] += (*inv_std)[r] * (dh - m1 - (*xhat)[r * d + j] * m2);
                           }
                         }
                       }
                     });
}

Tensor gelu(const Tensor& x) {
  return unary_op(
      "gelu", x, [](double v) { return v * normal_cdf(v); },
      [](double v) { return normal_cdf(v) + v * normal_pdf(v); });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary_op(
      "leaky_relu", x, [slope](double v) { return v >= 0.0 ? v : slope * v; },
      [slope](double v) { return v >= 0.0 ? 1.0 : slope; });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0) || rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double factor = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.size());
  for (auto& m : *mask) m = keep(rng) ? factor : 0.0;
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * (*mask)[i];
  auto xi = x.impl();
  return make_result("dropout", x.shape(), std::move(out), {x}, [xi, mask](std::span<const double> g) {
    auto& gx = xi->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
  });
}

Tensor embedding_lookup(const Tensor& table, const IndexTensor& ids) {
  if (table.rank() != 2) throw DimensionError("embedding table must be V x D, got " + shape_str(table.shape()));
  if (shape_numel(ids.shape) != ids.values.size()) throw DimensionError("embedding ids: shape/value mismatch");
  const std::size_t v = table.extent(0), d = table.extent(1);
  for (std::size_t i = 0; i < ids.values.size(); ++i) {
    const auto id = ids.values[i];
    if (id < 0 || static_cast<std::size_t>(id) >= v) {
      throw IndexError("embedding id " + std::to_string(id) + " at flat position " + std::to_string(i) +
                       " outside [0, " + std::to_string(v) + ")");
    }
  }
  Shape out_shape = ids.shape;
  out_shape.push_back(d);
  std::vector<double> out(ids.values.size() * d);
  auto td = table.data();
  for (std::size_t i = 0; i < ids.values.size(); ++i) {
    std::copy_n(td.data() + static_cast<std::size_t>(ids.values[i]) * d, d, out.data() + i * d);
  }
  auto ti = table.impl();
  auto idv = std::make_shared<std::vector<std::int64_t>>(ids.values);
  return make_result("embedding_lookup", std::move(out_shape), std::move(out), {table},
                     [ti, idv, d](std::span<const double> g) {
                       auto& gt = ti->ensure_grad();
                       for (std::size_t i = 0; i < idv->size(); ++i) {
                         double* row = gt.data() + static_cast<std::size_t>((*idv)[i]) * d;
                         for (std::size_t j = 0; j < d; ++j) row[j] += g[i * d + j];
                       }
                     });
}

Tensor cross_entropy_with_logits(const Tensor& logits, const std::vector<std::int64_t>& targets,
                                 const std::vector<std::uint8_t>& mask, bool skip_first_class) {
  if (logits.rank() != 2) throw DimensionError("cross_entropy: logits must be N x C, got " + shape_str(logits.shape()));
  const std::size_t rows = logits.extent(0), classes = logits.extent(1);
  if (targets.size() != rows || mask.size() != rows) {
    throw DimensionError("cross_entropy: targets/mask length differs from logits rows");
  }
  const std::size_t first = skip_first_class ? 1 : 0;
  if (classes <= first) throw DimensionError("cross_entropy: no candidate classes");
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    ++count;
    const auto t = targets[r];
    if (t < static_cast<std::int64_t>(first) || static_cast<std::size_t>(t) >= classes) {
      throw IndexError("cross_entropy: target " + std::to_string(t) + " at row " + std::to_string(r) +
                       " outside candidate range");
    }
  }
  if (count == 0) throw ValidationError("cross_entropy: no valid positions in batch");

  auto in = logits.data();
  auto probs = std::make_shared<std::vector<double>>(rows * classes, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    const double* row = in.data() + r * classes;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = first; c < classes; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = first; c < classes; ++c) {
      const double e = std::exp(row[c] - mx);
      (*probs)[r * classes + c] = e;
      z += e;
    }
    for (std::size_t c = first; c < classes; ++c) (*probs)[r * classes + c] /= z;
    total += (mx + std::log(z)) - row[static_cast<std::size_t>(targets[r])];
  }
  const double inv = 1.0 / static_cast<double>(count);
  auto li = logits.impl();
  auto tg = std::make_shared<std::vector<std::int64_t>>(targets);
  auto mk = std::make_shared<std::vector<std::uint8_t>>(mask);
  return make_result("cross_entropy", {1}, {total * inv}, {logits},
                     [li, probs, tg, mk, rows, classes, first, inv](std::span<const double> g) {
                       auto& gl = li->ensure_grad();
                       const double s = g[0] * inv;
                       for (std::size_t r = 0; r < rows; ++r) {
                         if (!(*mk)[r]) continue;
                         for (std::size_t c = first; c < classes; ++c) {
                           gl[r * classes + c] += s * (*probs)[r * classes + c];
                         }
                         gl[r * classes + static_cast<std::size_t>((*tg)[r])] -= s;
                       }
                     });
}

}  // namespace freqrec
