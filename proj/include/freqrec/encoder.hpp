#pragma once

#include <cstdint>
#include <vector>

#include "freqrec/ops.hpp"
#include "freqrec/parameters.hpp"

namespace freqrec {

inline constexpr double kInitStddev = 0.02;
inline constexpr double kLayerNormEps = 1e-12;

// Item and position tables plus the embedding layer norm. Row 0 of the item
// table is the padding item and is kept at zero.
struct EmbeddingBlock {
  Tensor item_table;      // (V + 1) x D
  Tensor position_table;  // L x D
  Tensor ln_gain;
  Tensor ln_bias;
  double dropout_rate = 0.0;

  static EmbeddingBlock create(std::size_t item_rows, std::size_t max_len, std::size_t dim,
                               double dropout_rate, Rng& rng);
  ParameterList parameters() const;
  void zero_padding_row();
};

// Position-wise two-layer network with GELU, followed by a residual layer
// norm: layer_norm(dropout(W2 gelu(W1 x + b1) + b2) + x + extra).
struct FeedForward {
  Tensor w1, b1, w2, b2;
  Tensor ln_gain, ln_bias;

  static FeedForward create(std::size_t dim, std::size_t hidden, Rng& rng);
  ParameterList parameters() const;
};

// `extra` joins the residual stream when defined.
Tensor feed_forward(const Tensor& x, const Tensor& extra, const FeedForward& ffn, double dropout_rate,
                    bool training, Rng& rng);

struct AttentionBlock {
  Tensor w_query, w_key, w_value, w_output;  // D x D each
  std::size_t head_count = 1;
  FeedForward ffn;

  static AttentionBlock create(std::size_t dim, std::size_t head_count, std::size_t ffn_hidden, Rng& rng);
  ParameterList parameters() const;
};

// Item lookup + positions, layer norm, dropout. ids are B x L with L equal
// to the position table's extent.
Tensor embed_sequence(const IndexTensor& ids, const EmbeddingBlock& block, bool training, Rng& rng);

// Causal multi-head self-attention followed by the residual feed-forward:
// a = MHA(E); X_SA = FFN(a + E). pad_mask is B x L, nonzero at real items.
// When `attention_probs` is non-null it receives the B x H x L x L weights.
Tensor self_attention_branch(const Tensor& embedded, const AttentionBlock& block,
                             const std::vector<std::uint8_t>& pad_mask, double dropout_rate,
                             bool training, Rng& rng, Tensor* attention_probs = nullptr);

}  // namespace freqrec
