#include "freqrec/spectral.hpp"

#include <cmath>
#include <memory>

#include "freqrec/errors.hpp"

namespace freqrec {

using detail::make_result;

namespace {

struct AxisLayout {
  std::size_t axis = 0;
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisLayout layout_for(const Shape& shape, int axis) {
  const int r = static_cast<int>(shape.size());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("spectral: axis " + std::to_string(axis) + " invalid for shape " + shape_str(shape));
  }
  AxisLayout l;
  l.axis = static_cast<std::size_t>(a);
  for (std::size_t i = 0; i < l.axis; ++i) l.outer *= shape[i];
  l.length = shape[l.axis];
  for (std::size_t i = l.axis + 1; i < shape.size(); ++i) l.inner *= shape[i];
  return l;
}

// cos/sin of 2 pi k n / L for k < K, n < L. The angle is reduced with
// (k n) mod L first so large products keep full precision.
struct TwiddleTable {
  std::size_t length;
  std::size_t bins;
  std::vector<double> cos_kn;
  std::vector<double> sin_kn;

  explicit TwiddleTable(std::size_t l) : length(l), bins(one_sided_length(l)) {
    cos_kn.resize(bins * length);
    sin_kn.resize(bins * length);
    for (std::size_t k = 0; k < bins; ++k) {
      for (std::size_t n = 0; n < length; ++n) {
        const double angle = 2.0 * M_PI * static_cast<double>((k * n) % length) / static_cast<double>(length);
        cos_kn[k * length + n] = std::cos(angle);
        sin_kn[k * length + n] = std::sin(angle);
      }
    }
  }
};

// Contribution weight of one-sided bin k to the two-sided sum.
double bin_weight(std::size_t k, std::size_t length) {
  if (k == 0) return 1.0;
  if (length % 2 == 0 && k == length / 2) return 1.0;
  return 2.0;
}

bool use_radix2(DftAlgorithm algorithm, std::size_t length) {
  switch (algorithm) {
    case DftAlgorithm::kDirect:
      return false;
    case DftAlgorithm::kRadix2:
      if (!is_power_of_two(length)) {
        throw DimensionError("radix-2 DFT needs a power-of-two extent, got " + std::to_string(length));
      }
      return true;
    case DftAlgorithm::kAuto:
      return length >= 2 && is_power_of_two(length);
  }
  return false;
}

}  // namespace

std::size_t one_sided_length(std::size_t length) { return length / 2 + 1; }

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<std::complex<double>>& values, bool inverse) {
  const std::size_t n = values.size();
  if (!is_power_of_two(n)) throw DimensionError("fft_radix2: size " + std::to_string(n) + " is not a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(values[i], values[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    std::vector<std::complex<double>> twiddle(half);
    for (std::size_t j = 0; j < half; ++j) {
      const double angle = sign * 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(len);
      twiddle[j] = {std::cos(angle), std::sin(angle)};
    }
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const auto u = values[start + j];
        const auto v = values[start + j + half] * twiddle[j];
        values[start + j] = u + v;
        values[start + j + half] = u - v;
      }
    }
  }
}

ComplexSpectrum rdft(const Tensor& x, int axis, DftAlgorithm algorithm) {
  const auto lay = layout_for(x.shape(), axis);
  const std::size_t L = lay.length;
  const std::size_t K = one_sided_length(L);
  auto table = std::make_shared<TwiddleTable>(L);

  std::vector<double> re(lay.outer * K * lay.inner, 0.0);
  std::vector<double> im(lay.outer * K * lay.inner, 0.0);
  auto in = x.data();
  if (use_radix2(algorithm, L)) {
    std::vector<std::complex<double>> buf(L);
    for (std::size_t o = 0; o < lay.outer; ++o) {
      for (std::size_t i = 0; i < lay.inner; ++i) {
        for (std::size_t n = 0; n < L; ++n) buf[n] = {in[(o * L + n) * lay.inner + i], 0.0};
        fft_radix2(buf, false);
        for (std::size_t k = 0; k < K; ++k) {
          re[(o * K + k) * lay.inner + i] = buf[k].real();
          im[(o * K + k) * lay.inner + i] = buf[k].imag();
        }
      }
    }
  } else {
    for (std::size_t o = 0; o < lay.outer; ++o) {
      for (std::size_t k = 0; k < K; ++k) {
        double* rrow = re.data() + (o * K + k) * lay.inner;
        double* irow = im.data() + (o * K + k) * lay.inner;
        for (std::size_t n = 0; n < L; ++n) {
          const double c = table->cos_kn[k * L + n];
          const double s = table->sin_kn[k * L + n];
          const double* xrow = in.data() + (o * L + n) * lay.inner;
          for (std::size_t i = 0; i < lay.inner; ++i) {
            rrow[i] += xrow[i] * c;
            irow[i] -= xrow[i] * s;
          }
        }
      }
    }
  }

  Shape out_shape = x.shape();
  out_shape[lay.axis] = K;
  auto xi = x.impl();
  // Adjoint of x -> Re C: gx_n += sum_k g_k cos_kn; of x -> Im C: gx_n -= sum_k g_k sin_kn.
  auto adjoint = [xi, table, lay, L, K](std::span<const double> g, bool imag_part) {
    auto& gx = xi->ensure_grad();
    const auto& t = imag_part ? table->sin_kn : table->cos_kn;
    const double sign = imag_part ? -1.0 : 1.0;
    for (std::size_t o = 0; o < lay.outer; ++o) {
      for (std::size_t k = 0; k < K; ++k) {
        const double* grow = g.data() + (o * K + k) * lay.inner;
        for (std::size_t n = 0; n < L; ++n) {
          const double w = sign * t[k * L + n];
          if (w == 0.0) continue;
          double* gxrow = gx.data() + (o * L + n) * lay.inner;
          for (std::size_t i = 0; i < lay.inner; ++i) gxrow[i] += w * grow[i];
        }
      }
    }
  };
  ComplexSpectrum s;
  s.real = make_result("rdft_real", out_shape, std::move(re), {x},
                       [adjoint](std::span<const double> g) { adjoint(g, false); });
  s.imag = make_result("rdft_imag", out_shape, std::move(im), {x},
                       [adjoint](std::span<const double> g) { adjoint(g, true); });
  s.axis = lay.axis;
  s.original_length = L;
  return s;
}

Tensor irdft(const ComplexSpectrum& s, RealityPolicy policy, DftAlgorithm algorithm, double tolerance) {
  if (!s.real.defined() || !s.imag.defined()) throw UsageError("irdft: spectrum is empty");
  if (s.real.shape() != s.imag.shape()) {
    throw DimensionError("irdft: real " + shape_str(s.real.shape()) + " and imag " + shape_str(s.imag.shape()) +
                         " differ");
  }
  const std::size_t L = s.original_length;
  const std::size_t K = one_sided_length(L);
  if (L == 0) throw DimensionError("irdft: original_length must be positive");
  const auto lay = layout_for(s.real.shape(), static_cast<int>(s.axis));
  if (lay.length != K) {
    throw DimensionError("irdft: axis extent " + std::to_string(lay.length) + " does not match " +
                         std::to_string(K) + " bins for length " + std::to_string(L));
  }
  auto re = s.real.data();
  auto im = s.imag.data();
  if (policy == RealityPolicy::kStrict) {
    for (std::size_t o = 0; o < lay.outer; ++o) {
      for (std::size_t i = 0; i < lay.inner; ++i) {
        const double dc = im[(o * K) * lay.inner + i];
        const double ny = L % 2 == 0 ? im[(o * K + K - 1) * lay.inner + i] : 0.0;
        if (std::abs(dc) > tolerance || std::abs(ny) > tolerance) {
          throw ValidationError("irdft: imaginary part at DC or Nyquist bin violates the reality constraint");
        }
      }
    }
  }

  auto table = std::make_shared<TwiddleTable>(L);
  std::vector<double> out(lay.outer * L * lay.inner, 0.0);
  const double inv_l = 1.0 / static_cast<double>(L);
  if (use_radix2(algorithm, L)) {
    std::vector<std::complex<double>> buf(L);
    for (std::size_t o = 0; o < lay.outer; ++o) {
      for (std::size_t i = 0; i < lay.inner; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
          const double r = re[(o * K + k) * lay.inner + i];
          const bool real_only = k == 0 || (L % 2 == 0 && k == L / 2);
          const double m = real_only ? 0.0 : im[(o * K + k) * lay.inner + i];
          buf[k] = {r, m};
          if (k != 0 && k != L - k) buf[L - k] = {r, -m};
        }
        fft_radix2(buf, true);
        for (std::size_t n = 0; n < L; ++n) out[(o * L + n) * lay.inner + i] = buf[n].real() * inv_l;
      }
    }
  } else {
    for (std::size_t o = 0; o < lay.outer; ++o) {
      for (std::size_t k = 0; k < K; ++k) {
        const double w = bin_weight(k, L) * inv_l;
        const double* rrow = re.data() + (o * K + k) * lay.inner;
        const double* irow = im.data() + (o * K + k) * lay.inner;
        for (std::size_t n = 0; n < L; ++n) {
          const double c = w * table->cos_kn[k * L + n];
          const double sn = w * table->sin_kn[k * L + n];
          double* orow = out.data() + (o * L + n) * lay.inner;
          for (std::size_t i = 0; i < lay.inner; ++i) orow[i] += c * rrow[i] - sn * irow[i];
        }
      }
    }
  }

  Shape out_shape = s.real.shape();
  out_shape[lay.axis] = L;
  auto ri = s.real.impl();
  auto ii = s.imag.impl();
  return make_result("irdft", std::move(out_shape), std::move(out), {s.real, s.imag},
                     [ri, ii, table, lay, L, K, inv_l](std::span<const double> g) {
                       const bool want_re = ri->requires_grad;
                       const bool want_im = ii->requires_grad;
                       auto* gr = want_re ? &ri->ensure_grad() : nullptr;
                       auto* gi = want_im ? &ii->ensure_grad() : nullptr;
                       for (std::size_t o = 0; o < lay.outer; ++o) {
                         for (std::size_t k = 0; k < K; ++k) {
                           const double w = bin_weight(k, L) * inv_l;
                           for (std::size_t n = 0; n < L; ++n) {
                             const double c = w * table->cos_kn[k * L + n];
                             const double sn = w * table->sin_kn[k * L + n];
                             const double* grow = g.data() + (o * L + n) * lay.inner;
                             if (gr) {
                               double* dst = gr->data() + (o * K + k) * lay.inner;
                               for (std::size_t i = 0; i < lay.inner; ++i) dst[i] += c * grow[i];
                             }
                             if (gi && sn != 0.0) {
                               double* dst = gi->data() + (o * K + k) * lay.inner;
                               for (std::size_t i = 0; i < lay.inner; ++i) dst[i] -= sn * grow[i];
                             }
                           }
                         }
                       }
                     });
}

double spectral_energy(const ComplexSpectrum& s) {
  const std::size_t L = s.original_length;
  const std::size_t K = one_sided_length(L);
  const auto lay = layout_for(s.real.shape(), static_cast<int>(s.axis));
  if (lay.length != K) throw DimensionError("spectral_energy: axis extent does not match original length");
  auto re = s.real.data();
  auto im = s.imag.data();
  double energy = 0.0;
  for (std::size_t o = 0; o < lay.outer; ++o) {
    for (std::size_t k = 0; k < K; ++k) {
      const double w = bin_weight(k, L);
      for (std::size_t i = 0; i < lay.inner; ++i) {
        const auto idx = (o * K + k) * lay.inner + i;
        energy += w * (re[idx] * re[idx] + im[idx] * im[idx]);
      }
    }
  }
  return energy;
}

}  // namespace freqrec
