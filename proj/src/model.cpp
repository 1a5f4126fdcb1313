#include "freqrec/model.hpp"

#include "freqrec/errors.hpp"
#include "freqrec/loss.hpp"

namespace freqrec {

FreqRecModel::FreqRecModel(const ModelConfig& config, std::size_t item_count, const Ablation& ablation)
    : config_(config), ablation_(ablation), item_count_(item_count) {
  config_.validate();
  ablation_.validate();
  if (item_count == 0) throw ConfigError("model needs at least one item");
  Rng rng(config_.seed);
  const std::size_t hidden = config_.dim * config_.ffn_multiplier;
  embedding_ = EmbeddingBlock::create(item_count + 1, config_.max_len, config_.dim, config_.dropout_rate, rng);
  for (std::size_t i = 0; i < config_.num_layers; ++i) {
    attention_.push_back(AttentionBlock::create(config_.dim, config_.num_heads, hidden, rng));
  }
  freqnet_ = FreqNetBlock::create(config_.dim, hidden, config_.activation, rng);
  freqnet_.fusion = config_.fusion;
  freqnet_.gamma = config_.gamma;
  freqnet_.dropout_rate = config_.dropout_rate;
  freqnet_.gsa_enabled = !ablation_.disable_gsa;
  freqnet_.lsr_enabled = !ablation_.disable_lsr;
  out_ln_gain_ = ones_parameter({config_.dim});
  out_ln_bias_ = zeros_parameter({config_.dim});
}

void FreqRecModel::set_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  config_.alpha = alpha;
}

void FreqRecModel::set_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  config_.gamma = gamma;
  freqnet_.gamma = gamma;
}

ParameterList FreqRecModel::parameters() const {
  ParameterList out;
  append_parameters(out, "embedding.", embedding_.parameters());
  for (std::size_t i = 0; i < attention_.size(); ++i) {
    append_parameters(out, "attention" + std::to_string(i) + ".", attention_[i].parameters());
  }
  append_parameters(out, "freqnet.", freqnet_.parameters());
  out.push_back({"output.ln_gain", out_ln_gain_});
  out.push_back({"output.ln_bias", out_ln_bias_});
  return out;
}

std::vector<Tensor> FreqRecModel::parameter_tensors() const {
  std::vector<Tensor> out;
  for (const auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

Tensor FreqRecModel::run(const IndexTensor& ids, bool training, Rng& rng, bool with_freq) const {
  if (ids.shape.size() != 2 || ids.shape[1] != config_.max_len) {
    throw DimensionError("model input must be B x " + std::to_string(config_.max_len) + ", got " +
                         shape_str(ids.shape));
  }
  Rng embed_rng(rng());
  Rng sa_rng(rng());
  Rng freq_rng(rng());
  Rng merge_rng(rng());

  auto e = embed_sequence(ids, embedding_, training, embed_rng);

  Tensor x_sa;
  if (!ablation_.disable_sa) {
    std::vector<std::uint8_t> pad_mask(ids.values.size());
    for (std::size_t i = 0; i < pad_mask.size(); ++i) pad_mask[i] = ids.values[i] != kPaddingItem ? 1 : 0;
    x_sa = e;
    for (const auto& block : attention_) {
      x_sa = self_attention_branch(x_sa, block, pad_mask, config_.dropout_rate, training, sa_rng);
    }
  }
  Tensor x_f;
  if (with_freq) x_f = freqnet_forward(e, freqnet_, training, freq_rng);
  if (!x_sa.defined() && !x_f.defined()) throw UsageError("both branches are disabled");
  double alpha = config_.alpha;
  if (!x_sa.defined()) alpha = 1.0;
  if (!x_f.defined()) alpha = 0.0;
  return gated_residual_merge(x_sa, x_f, alpha, out_ln_gain_, out_ln_bias_, config_.dropout_rate, training,
                              merge_rng);
}

Tensor FreqRecModel::forward(const IndexTensor& ids, bool training, Rng& rng) const {
  return run(ids, training, rng, true);
}

Tensor FreqRecModel::forward_attention_only(const IndexTensor& ids, bool training, Rng& rng) const {
  return run(ids, training, rng, false);
}

LossParts FreqRecModel::loss(const Batch& batch, bool training, Rng& rng) const {
  auto x_out = forward(batch.input_ids, training, rng);
  LossParts parts;
  if (!ablation_.disable_ce_loss) {
    parts.ce = cross_entropy(x_out, embedding_.item_table, batch.target_ids, batch.valid_mask);
  }
  if (!ablation_.disable_freq_loss) {
    IndexTensor targets{batch.input_ids.shape, batch.target_ids};
    auto t = embedding_lookup(embedding_.item_table, targets);
    if (config_.detach_target) t = t.detach();
    parts.lf = frequency_loss(x_out, t, config_.distance);
  }
  if (parts.ce.defined() && parts.lf.defined()) {
    parts.effective_beta = config_.beta;
    parts.total = total_loss(parts.ce, parts.lf, config_.beta);
  } else if (parts.ce.defined()) {
    parts.effective_beta = 1.0;
    parts.total = parts.ce;
  } else {
    parts.effective_beta = 0.0;
    parts.total = parts.lf;
  }
  return parts;
}

std::vector<double> FreqRecModel::score_last(const IndexTensor& ids) const {
  NoGradGuard no_grad;
  Rng unused(0);
  auto x_out = forward(ids, false, unused);
  auto last = select(x_out, 1, x_out.extent(1) - 1);
  auto scores = matmul(last, transpose(embedding_.item_table, 0, 1));
  return {scores.data().begin(), scores.data().end()};
}

std::vector<std::vector<double>> FreqRecModel::snapshot() const {
  std::vector<std::vector<double>> out;
  for (const auto& p : parameters()) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void FreqRecModel::restore(const std::vector<std::vector<double>>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw DimensionError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.mutable_data();
    if (dst.size() != values[i].size()) {
      throw DimensionError("restore: size mismatch for " + params[i].name);
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

}  // namespace freqrec
