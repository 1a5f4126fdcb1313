#pragma once

#include <string>

#include "freqrec/encoder.hpp"
#include "freqrec/spectral.hpp"

namespace freqrec {

enum class Activation { kIdentity, kLeakyRelu, kGelu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

inline constexpr double kLeakySlope = 0.2;

// Complex linear map on spectral coefficients along the feature axis,
//   C'_r = phi(Re W_r - Im W_i + B_r)
//   C'_i = phi(Re W_i + Im W_r + B_i)
// with coefficient rows multiplied from the left (row-vector convention),
// i.e. C' = phi(C (W_r + j W_i) + (B_r + j B_i)) per part.
struct FreqMLP {
  Tensor w_real;  // D x D
  Tensor w_imag;  // D x D
  Tensor b_real;  // D
  Tensor b_imag;  // D
  Activation activation = Activation::kLeakyRelu;

  // W_r = I + 0.02 noise, W_i = 0.02 noise, zero biases.
  static FreqMLP create(std::size_t dim, Activation activation, Rng& rng);
  // W_r = I, W_i = 0, zero biases, identity activation: the transparent filter.
  static FreqMLP identity(std::size_t dim, bool trainable = false);

  std::size_t dim() const { return w_real.extent(0); }
  ParameterList parameters() const;
};

ComplexSpectrum freq_mlp_apply(const ComplexSpectrum& s, const FreqMLP& f);

Tensor apply_activation(const Tensor& x, Activation a);

// Cohort-level path: the B x L x D input is viewed as L x B x D and
// filtered along the batch axis.
Tensor global_spectral_aggregator(const Tensor& embedded, const FreqMLP& f);

// User-level path: filtering along the temporal axis.
Tensor local_spectral_refiner(const Tensor& embedded, const FreqMLP& f);

enum class FusionMode { kParallel, kSerial };

FusionMode parse_fusion(const std::string& name);
std::string to_string(FusionMode m);

struct FreqNetBlock {
  FreqMLP gsa_filter;
  FreqMLP lsr_filter;
  FusionMode fusion = FusionMode::kParallel;
  double gamma = 0.7;
  FeedForward fusion_ffn;
  double dropout_rate = 0.0;
  // Ablation switches: a disabled path passes its input through unchanged.
  bool gsa_enabled = true;
  bool lsr_enabled = true;

  static FreqNetBlock create(std::size_t dim, std::size_t ffn_hidden, Activation activation, Rng& rng);
  ParameterList parameters() const;
};

// Intermediate tensors of one FreqNet pass, for inspection in tests.
struct FreqNetTrace {
  Tensor inter;       // X_Inter
  Tensor intra_input; // E_Intra
  Tensor intra;       // X_Intra
  Tensor mixed;       // input of the fusion FFN
};

// parallel: X_F = FFN((1 - gamma) X_Inter + gamma X_Intra(E), E)
// serial:   X_F = FFN(X_Intra(E + X_Inter), E)
Tensor freqnet_forward(const Tensor& embedded, const FreqNetBlock& block, bool training, Rng& rng,
                       FreqNetTrace* trace = nullptr);

// X = (1 - alpha) X_SA + alpha X_F; out = layer_norm(dropout(gelu(X)) + X).
// Either branch may be undefined (ablated), in which case X is the other.
Tensor gated_residual_merge(const Tensor& attention_out, const Tensor& freq_out, double alpha,
                            const Tensor& ln_gain, const Tensor& ln_bias, double dropout_rate,
                            bool training, Rng& rng);

}  // namespace freqrec
