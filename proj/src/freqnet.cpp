#include "freqrec/freqnet.hpp"

#include "freqrec/errors.hpp"

namespace freqrec {

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  if (name == "gelu") return Activation::kGelu;
  throw ConfigError("unknown activation '" + name + "' (expected identity, leaky_relu, gelu)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kLeakyRelu:
      return "leaky_relu";
    case Activation::kGelu:
      return "gelu";
  }
  return "identity";
}

FusionMode parse_fusion(const std::string& name) {
  if (name == "parallel") return FusionMode::kParallel;
  if (name == "serial") return FusionMode::kSerial;
  throw ConfigError("unknown fusion mode '" + name + "' (expected parallel or serial)");
}

std::string to_string(FusionMode m) { return m == FusionMode::kParallel ? "parallel" : "serial"; }

FreqMLP FreqMLP::create(std::size_t dim, Activation activation, Rng& rng) {
  FreqMLP f;
  f.w_real = normal_parameter({dim, dim}, kInitStddev, rng);
  auto wr = f.w_real.mutable_data();
  for (std::size_t i = 0; i < dim; ++i) wr[i * dim + i] += 1.0;
  f.w_imag = normal_parameter({dim, dim}, kInitStddev, rng);
  f.b_real = zeros_parameter({dim});
  f.b_imag = zeros_parameter({dim});
  f.activation = activation;
  return f;
}

FreqMLP FreqMLP::identity(std::size_t dim, bool trainable) {
  FreqMLP f;
  std::vector<double> eye(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) eye[i * dim + i] = 1.0;
  f.w_real = Tensor({dim, dim}, std::move(eye), trainable);
  f.w_imag = Tensor::zeros({dim, dim}, trainable);
  f.b_real = Tensor::zeros({dim}, trainable);
  f.b_imag = Tensor::zeros({dim}, trainable);
  f.activation = Activation::kIdentity;
  return f;
}

ParameterList FreqMLP::parameters() const {
  return {{"w_real", w_real}, {"w_imag", w_imag}, {"b_real", b_real}, {"b_imag", b_imag}};
}

Tensor apply_activation(const Tensor& x, Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return x;
    case Activation::kLeakyRelu:
      return leaky_relu(x, kLeakySlope);
    case Activation::kGelu:
      return gelu(x);
  }
  return x;
}

ComplexSpectrum freq_mlp_apply(const ComplexSpectrum& s, const FreqMLP& f) {
  const std::size_t d = f.dim();
  if (s.real.extent(-1) != d) {
    throw DimensionError("freq_mlp_apply: feature extent " + std::to_string(s.real.extent(-1)) +
                         " does not match filter dimension " + std::to_string(d));
  }
  if (static_cast<std::size_t>(s.axis) + 1 == s.real.rank()) {
    throw DimensionError("freq_mlp_apply: the transformed axis cannot be the feature axis");
  }
  auto re = add(sub(matmul(s.real, f.w_real), matmul(s.imag, f.w_imag)), f.b_real);
  auto im = add(add(matmul(s.real, f.w_imag), matmul(s.imag, f.w_real)), f.b_imag);
  ComplexSpectrum out;
  out.real = apply_activation(re, f.activation);
  out.imag = apply_activation(im, f.activation);
  out.axis = s.axis;
  out.original_length = s.original_length;
  return out;
}

namespace {

Tensor filter_along(const Tensor& x, int axis, const FreqMLP& f) {
  auto spectrum = rdft(x, axis);
  return irdft(freq_mlp_apply(spectrum, f), RealityPolicy::kDiscard);
}

void require_bld(const Tensor& x, const char* who) {
  if (x.rank() != 3) throw DimensionError(std::string(who) + ": expected B x L x D, got " + shape_str(x.shape()));
}

}  // namespace

Tensor global_spectral_aggregator(const Tensor& embedded, const FreqMLP& f) {
  require_bld(embedded, "global_spectral_aggregator");
  auto by_position = permute(embedded, {1, 0, 2});
  return permute(filter_along(by_position, 1, f), {1, 0, 2});
}

Tensor local_spectral_refiner(const Tensor& embedded, const FreqMLP& f) {
  require_bld(embedded, "local_spectral_refiner");
  return filter_along(embedded, 1, f);
}

FreqNetBlock FreqNetBlock::create(std::size_t dim, std::size_t ffn_hidden, Activation activation, Rng& rng) {
  FreqNetBlock b;
  b.gsa_filter = FreqMLP::create(dim, activation, rng);
  b.lsr_filter = FreqMLP::create(dim, activation, rng);
  b.fusion_ffn = FeedForward::create(dim, ffn_hidden, rng);
  return b;
}

ParameterList FreqNetBlock::parameters() const {
  ParameterList out;
  append_parameters(out, "gsa.", gsa_filter.parameters());
  append_parameters(out, "lsr.", lsr_filter.parameters());
  append_parameters(out, "fusion_ffn.", fusion_ffn.parameters());
  return out;
}

Tensor freqnet_forward(const Tensor& embedded, const FreqNetBlock& block, bool training, Rng& rng,
                       FreqNetTrace* trace) {
  require_bld(embedded, "freqnet_forward");
  if (!(block.gamma >= 0.0 && block.gamma <= 1.0)) {
    throw ConfigError("gamma must lie in [0, 1], got " + std::to_string(block.gamma));
  }
  auto inter = block.gsa_enabled ? global_spectral_aggregator(embedded, block.gsa_filter) : embedded;
  Tensor intra_input;
  Tensor mixed;
  Tensor intra;
  if (block.fusion == FusionMode::kParallel) {
    intra_input = embedded;
    intra = block.lsr_enabled ? local_spectral_refiner(intra_input, block.lsr_filter) : intra_input;
    mixed = add(scale(inter, 1.0 - block.gamma), scale(intra, block.gamma));
  } else {
    intra_input = block.gsa_enabled ? add(embedded, inter) : embedded;
    intra = block.lsr_enabled ? local_spectral_refiner(intra_input, block.lsr_filter) : intra_input;
    mixed = intra;
  }
  if (trace) *trace = {inter, intra_input, intra, mixed};
  return feed_forward(mixed, embedded, block.fusion_ffn, block.dropout_rate, training, rng);
}

Tensor gated_residual_merge(const Tensor& attention_out, const Tensor& freq_out, double alpha,
                            const Tensor& ln_gain, const Tensor& ln_bias, double dropout_rate,
                            bool training, Rng& rng) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  Tensor blended;
  if (attention_out.defined() && freq_out.defined()) {
    if (attention_out.shape() != freq_out.shape()) {
      throw DimensionError("gated_residual_merge: branch shapes " + shape_str(attention_out.shape()) + " and " +
                           shape_str(freq_out.shape()) + " differ");
    }
    blended = add(scale(attention_out, 1.0 - alpha), scale(freq_out, alpha));
  } else if (attention_out.defined()) {
    blended = attention_out;
  } else if (freq_out.defined()) {
    blended = freq_out;
  } else {
    throw UsageError("gated_residual_merge: both branches are absent");
  }
  auto activated = dropout(gelu(blended), dropout_rate, training, rng);
  return layer_norm(add(activated, blended), ln_gain, ln_bias, kLayerNormEps);
}

}  // namespace freqrec
