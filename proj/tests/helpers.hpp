#pragma once

#include <random>
#include <vector>

#include "freqrec/encoder.hpp"
#include "freqrec/freqnet.hpp"
#include "freqrec/tensor.hpp"
#include "oracles.hpp"

namespace testing_util {

inline freqrec::Tensor random_tensor(freqrec::Shape shape, std::mt19937_64& rng, bool requires_grad = false,
                                     double lo = -1.0, double hi = 1.0) {
  const auto n = freqrec::shape_numel(shape);
  return freqrec::Tensor(std::move(shape), oracle::random_vec(n, rng, lo, hi), requires_grad);
}

inline oracle::Vec values(const freqrec::Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline oracle::Act to_oracle(freqrec::Activation a) {
  switch (a) {
    case freqrec::Activation::kIdentity: return oracle::Act::kIdentity;
    case freqrec::Activation::kLeakyRelu: return oracle::Act::kLeaky;
    case freqrec::Activation::kGelu: return oracle::Act::kGelu;
  }
  return oracle::Act::kIdentity;
}

inline oracle::Filter to_oracle(const freqrec::FreqMLP& f) {
  return {f.dim(), values(f.w_real), values(f.w_imag), values(f.b_real), values(f.b_imag), to_oracle(f.activation)};
}

inline oracle::Ffn to_oracle(const freqrec::FeedForward& f) {
  return {f.w1.extent(0), f.w1.extent(1), values(f.w1), values(f.b1), values(f.w2), values(f.b2),
          values(f.ln_gain), values(f.ln_bias)};
}

// Overwrites every entry with uniform noise so tests are not sitting at the
// near-identity initialization.
inline void randomize(freqrec::Tensor& t, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : t.mutable_data()) v = u(rng);
}

inline void randomize(freqrec::FreqMLP& f, std::mt19937_64& rng) {
  randomize(f.w_real, rng);
  randomize(f.w_imag, rng);
  randomize(f.b_real, rng, 0.2);
  randomize(f.b_imag, rng, 0.2);
}

inline void randomize(freqrec::FeedForward& f, std::mt19937_64& rng) {
  randomize(f.w1, rng);
  randomize(f.b1, rng, 0.2);
  randomize(f.w2, rng);
  randomize(f.b2, rng, 0.2);
  for (auto& v : f.ln_gain.mutable_data()) v = 1.0 + std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
  randomize(f.ln_bias, rng, 0.2);
}

}  // namespace testing_util
