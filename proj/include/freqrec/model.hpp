#pragma once

#include <cstdint>
#include <vector>

#include "freqrec/config.hpp"
#include "freqrec/data.hpp"
#include "freqrec/encoder.hpp"
#include "freqrec/freqnet.hpp"

namespace freqrec {

struct LossParts {
  Tensor total;
  Tensor ce;  // undefined when the CE term is switched off
  Tensor lf;  // undefined when the frequency term is switched off
  double effective_beta = 0.0;
};

class FreqRecModel {
 public:
  // item_count excludes padding; the item table has item_count + 1 rows.
  FreqRecModel(const ModelConfig& config, std::size_t item_count, const Ablation& ablation = {});

  const ModelConfig& config() const { return config_; }
  const Ablation& ablation() const { return ablation_; }
  std::size_t item_count() const { return item_count_; }

  ParameterList parameters() const;
  std::vector<Tensor> parameter_tensors() const;

  const EmbeddingBlock& embedding() const { return embedding_; }
  EmbeddingBlock& embedding() { return embedding_; }
  const std::vector<AttentionBlock>& attention() const { return attention_; }
  const FreqNetBlock& freqnet() const { return freqnet_; }
  FreqNetBlock& freqnet() { return freqnet_; }
  void set_alpha(double alpha);
  void set_gamma(double gamma);

  // X_out, B x L x D. The rng is split into one stream per stage so that
  // skipping a branch does not shift the dropout draws of the others.
  Tensor forward(const IndexTensor& ids, bool training, Rng& rng) const;
  // The same pipeline with the frequency branch left out of the merge.
  Tensor forward_attention_only(const IndexTensor& ids, bool training, Rng& rng) const;

  LossParts loss(const Batch& batch, bool training, Rng& rng) const;

  // Scores of every table row (padding included, at column 0) from the
  // final position: rows x (item_count + 1). Runs without recording.
  std::vector<double> score_last(const IndexTensor& ids) const;

  // Called after each optimizer step.
  void zero_padding_row() { embedding_.zero_padding_row(); }

  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  Tensor run(const IndexTensor& ids, bool training, Rng& rng, bool with_freq) const;

  ModelConfig config_;
  Ablation ablation_;
  std::size_t item_count_ = 0;
  EmbeddingBlock embedding_;
  std::vector<AttentionBlock> attention_;
  FreqNetBlock freqnet_;
  Tensor out_ln_gain_;
  Tensor out_ln_bias_;
};

}  // namespace freqrec
