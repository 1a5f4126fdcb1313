#pragma once

// Reference implementations written as plain loops over std::vector, kept
// independent of the library's tensor code so tests compare two separate
// derivations of the same quantity.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Vec = std::vector<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Full two-sided DFT, C_k = sum_n x_n e^{-j 2 pi k n / L}.
inline std::vector<cd> dft(const std::vector<cd>& x) {
  const std::size_t n = x.size();
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -kTwoPi * static_cast<double>(k * t) / static_cast<double>(n);
      acc += x[t] * cd(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

inline std::vector<cd> dft(const Vec& x) { return dft(std::vector<cd>(x.begin(), x.end())); }

// x_n = (1/L) sum_k C_k e^{+j 2 pi k n / L}.
inline std::vector<cd> idft(const std::vector<cd>& c) {
  const std::size_t n = c.size();
  std::vector<cd> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    cd acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double ang = kTwoPi * static_cast<double>(k * t) / static_cast<double>(n);
      acc += c[k] * cd(std::cos(ang), std::sin(ang));
    }
    out[t] = acc / static_cast<double>(n);
  }
  return out;
}

// Expands the first floor(L/2)+1 coefficients by conjugate symmetry, with
// the imaginary parts of DC and (even L) Nyquist dropped, and returns the
// real part of the inverse.
inline Vec real_from_half(const std::vector<cd>& half, std::size_t n) {
  std::vector<cd> full(n);
  for (std::size_t k = 0; k < half.size(); ++k) full[k] = half[k];
  full[0] = cd(full[0].real(), 0.0);
  if (n % 2 == 0) full[n / 2] = cd(full[n / 2].real(), 0.0);
  for (std::size_t k = half.size(); k < n; ++k) full[k] = std::conj(full[n - k]);
  auto x = idft(full);
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i].real();
  return out;
}

// Strided view helpers for row-major arrays.
inline std::vector<std::size_t> strides(const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

struct HalfSpectrum {
  std::vector<std::size_t> shape;  // input shape with axis extent floor(L/2)+1
  Vec real, imag;
};

// One-sided coefficients along `axis` from the two-sided DFT of every line.
inline HalfSpectrum rdft(const Vec& x, const std::vector<std::size_t>& shape, std::size_t axis) {
  const std::size_t n = shape[axis];
  const std::size_t m = n / 2 + 1;
  HalfSpectrum h;
  h.shape = shape;
  h.shape[axis] = m;
  const auto in_st = strides(shape);
  const auto out_st = strides(h.shape);
  std::size_t total = 1;
  for (auto e : h.shape) total *= e;
  h.real.assign(total, 0.0);
  h.imag.assign(total, 0.0);
  std::size_t lines = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) if (i != axis) lines *= shape[i];
  for (std::size_t line = 0; line < lines; ++line) {
    // decode the line's multi-index (axis coordinate = 0)
    std::size_t rem = line, in_base = 0, out_base = 0;
    for (std::size_t i = shape.size(); i-- > 0;) {
      if (i == axis) continue;
      const std::size_t c = rem % shape[i];
      rem /= shape[i];
      in_base += c * in_st[i];
      out_base += c * out_st[i];
    }
    Vec seq(n);
    for (std::size_t t = 0; t < n; ++t) seq[t] = x[in_base + t * in_st[axis]];
    const auto c = dft(seq);
    for (std::size_t k = 0; k < m; ++k) {
      h.real[out_base + k * out_st[axis]] = c[k].real();
      h.imag[out_base + k * out_st[axis]] = c[k].imag();
    }
  }
  return h;
}

inline double leaky(double v, double slope) { return v >= 0.0 ? v : slope * v; }
inline double gelu(double v) { return 0.5 * v * std::erfc(-v / std::numbers::sqrt2); }

enum class Act { kIdentity, kLeaky, kGelu };

inline double activate(double v, Act a) {
  switch (a) {
    case Act::kIdentity: return v;
    case Act::kLeaky: return leaky(v, 0.2);
    case Act::kGelu: return gelu(v);
  }
  return v;
}

// Complex filter weights, D x D row-major, biases of length D.
struct Filter {
  std::size_t dim = 0;
  Vec wr, wi, br, bi;
  Act act = Act::kIdentity;
};

// Row vector of coefficients times (W_r + j W_i) plus (B_r + j B_i), in
// complex arithmetic, then the activation on each part.
inline std::vector<cd> apply_filter(const std::vector<cd>& row, const Filter& f) {
  std::vector<cd> out(f.dim);
  for (std::size_t e = 0; e < f.dim; ++e) {
    cd acc(f.br[e], f.bi[e]);
    for (std::size_t d = 0; d < f.dim; ++d) acc += row[d] * cd(f.wr[d * f.dim + e], f.wi[d * f.dim + e]);
    out[e] = cd(activate(acc.real(), f.act), activate(acc.imag(), f.act));
  }
  return out;
}

// Filters a B x L x D array along `axis` (0 = batch, 1 = time): DFT over the
// axis, complex filter on the feature axis for every bin, inverse.
inline Vec spectral_filter(const Vec& x, std::size_t b, std::size_t l, std::size_t d, std::size_t axis,
                           const Filter& f) {
  const std::size_t n = axis == 0 ? b : l;
  const std::size_t other = axis == 0 ? l : b;
  const std::size_t m = n / 2 + 1;
  auto at = [&](std::size_t along, std::size_t o, std::size_t k) -> std::size_t {
    return axis == 0 ? (along * l + o) * d + k : (o * l + along) * d + k;
  };
  Vec out(x.size(), 0.0);
  for (std::size_t o = 0; o < other; ++o) {
    // half[k][feature]
    std::vector<std::vector<cd>> half(m, std::vector<cd>(d));
    for (std::size_t feat = 0; feat < d; ++feat) {
      Vec seq(n);
      for (std::size_t t = 0; t < n; ++t) seq[t] = x[at(t, o, feat)];
      const auto c = dft(seq);
      for (std::size_t k = 0; k < m; ++k) half[k][feat] = c[k];
    }
    for (std::size_t k = 0; k < m; ++k) half[k] = apply_filter(half[k], f);
    for (std::size_t feat = 0; feat < d; ++feat) {
      std::vector<cd> line(m);
      for (std::size_t k = 0; k < m; ++k) line[k] = half[k][feat];
      const auto y = real_from_half(line, n);
      for (std::size_t t = 0; t < n; ++t) out[at(t, o, feat)] = y[t];
    }
  }
  return out;
}

// Layer norm over the last axis of a rows x d array.
inline Vec layer_norm(const Vec& x, std::size_t d, const Vec& gain, const Vec& bias, double eps = 1e-12) {
  Vec out(x.size());
  for (std::size_t r = 0; r < x.size() / d; ++r) {
    double mu = 0.0;
    for (std::size_t i = 0; i < d; ++i) mu += x[r * d + i];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (x[r * d + i] - mu) * (x[r * d + i] - mu);
    var /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) {
      out[r * d + i] = gain[i] * (x[r * d + i] - mu) / std::sqrt(var + eps) + bias[i];
    }
  }
  return out;
}

struct Ffn {
  std::size_t dim = 0, hidden = 0;
  Vec w1, b1, w2, b2, gain, bias;
};

// layer_norm(W2 gelu(W1 x + b1) + b2 + x + e), row by row; e may be empty.
inline Vec ffn(const Vec& x, const Vec& e, const Ffn& f) {
  const std::size_t rows = x.size() / f.dim;
  Vec pre(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    Vec h(f.hidden);
    for (std::size_t j = 0; j < f.hidden; ++j) {
      double acc = f.b1[j];
      for (std::size_t i = 0; i < f.dim; ++i) acc += x[r * f.dim + i] * f.w1[i * f.hidden + j];
      h[j] = gelu(acc);
    }
    for (std::size_t i = 0; i < f.dim; ++i) {
      double acc = f.b2[i];
      for (std::size_t j = 0; j < f.hidden; ++j) acc += h[j] * f.w2[j * f.dim + i];
      pre[r * f.dim + i] = acc + x[r * f.dim + i] + (e.empty() ? 0.0 : e[r * f.dim + i]);
    }
  }
  return layer_norm(pre, f.dim, f.gain, f.bias);
}

// Parallel: FFN((1-g) GSA(E) + g LSR(E), E); serial: FFN(LSR(E + GSA(E)), E).
inline Vec freqnet(const Vec& e, std::size_t b, std::size_t l, std::size_t d, const Filter& gsa, const Filter& lsr,
                   bool parallel, double gamma, const Ffn& f) {
  const auto inter = spectral_filter(e, b, l, d, 0, gsa);
  Vec mixed(e.size());
  if (parallel) {
    const auto intra = spectral_filter(e, b, l, d, 1, lsr);
    for (std::size_t i = 0; i < e.size(); ++i) mixed[i] = (1.0 - gamma) * inter[i] + gamma * intra[i];
  } else {
    Vec in(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) in[i] = e[i] + inter[i];
    mixed = spectral_filter(in, b, l, d, 1, lsr);
  }
  return ffn(mixed, e, f);
}

// Mean over valid rows of -log softmax over classes 1..C-1 at the target.
inline double cross_entropy(const Vec& x, std::size_t rows, std::size_t d, const Vec& table, std::size_t classes,
                            const std::vector<std::int64_t>& targets, const std::vector<std::uint8_t>& mask) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    Vec logits(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) acc += x[r * d + i] * table[c * d + i];
      logits[c] = acc;
    }
    double denom = 0.0;
    for (std::size_t c = 1; c < classes; ++c) denom += std::exp(logits[c]);
    total += -(logits[static_cast<std::size_t>(targets[r])] - std::log(denom));
    ++count;
  }
  return total / static_cast<double>(count);
}

enum class Dist { kL1, kL2, kMix };

inline double distance(const Vec& p, const Vec& t, Dist kind) {
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    l1 += std::abs(p[i] - t[i]);
    l2 += (p[i] - t[i]) * (p[i] - t[i]);
  }
  l1 /= static_cast<double>(p.size());
  l2 /= static_cast<double>(p.size());
  switch (kind) {
    case Dist::kL1: return l1;
    case Dist::kL2: return l2;
    case Dist::kMix: return 0.5 * (l1 + l2);
  }
  return 0.0;
}

// Distance of real parts plus distance of imaginary parts of the
// one-sided time-axis spectra of two B x L x D arrays.
inline double frequency_loss(const Vec& p, const Vec& t, std::size_t b, std::size_t l, std::size_t d, Dist kind) {
  const auto sp = rdft(p, {b, l, d}, 1);
  const auto st = rdft(t, {b, l, d}, 1);
  return distance(sp.real, st.real, kind) + distance(sp.imag, st.imag, kind);
}

// Rank via a full sort: items 1..V ordered by (score desc, id asc).
inline std::size_t sort_rank(const Vec& scores, std::int64_t target) {
  std::vector<std::size_t> ids(scores.size() - 1);
  std::iota(ids.begin(), ids.end(), 1);
  std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), static_cast<std::size_t>(target)) - ids.begin()) +
         1;
}

inline Vec random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
