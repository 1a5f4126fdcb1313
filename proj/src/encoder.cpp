#include "freqrec/encoder.hpp"

#include <cmath>

#include "freqrec/errors.hpp"

namespace freqrec {

EmbeddingBlock EmbeddingBlock::create(std::size_t item_rows, std::size_t max_len, std::size_t dim,
                                      double dropout_rate, Rng& rng) {
  EmbeddingBlock b;
  b.item_table = normal_parameter({item_rows, dim}, kInitStddev, rng);
  b.position_table = normal_parameter({max_len, dim}, kInitStddev, rng);
  b.ln_gain = ones_parameter({dim});
  b.ln_bias = zeros_parameter({dim});
  b.dropout_rate = dropout_rate;
  b.zero_padding_row();
  return b;
}

ParameterList EmbeddingBlock::parameters() const {
  return {{"item_table", item_table},
          {"position_table", position_table},
          {"ln_gain", ln_gain},
          {"ln_bias", ln_bias}};
}

void EmbeddingBlock::zero_padding_row() {
  auto data = item_table.mutable_data();
  const std::size_t d = item_table.extent(1);
  std::fill(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(d), 0.0);
}

FeedForward FeedForward::create(std::size_t dim, std::size_t hidden, Rng& rng) {
  FeedForward f;
  f.w1 = normal_parameter({dim, hidden}, kInitStddev, rng);
  f.b1 = zeros_parameter({hidden});
  f.w2 = normal_parameter({hidden, dim}, kInitStddev, rng);
  f.b2 = zeros_parameter({dim});
  f.ln_gain = ones_parameter({dim});
  f.ln_bias = zeros_parameter({dim});
  return f;
}

ParameterList FeedForward::parameters() const {
  return {{"w1", w1}, {"b1", b1}, {"w2", w2}, {"b2", b2}, {"ln_gain", ln_gain}, {"ln_bias", ln_bias}};
}

Tensor feed_forward(const Tensor& x, const Tensor& extra, const FeedForward& ffn, double dropout_rate,
                    bool training, Rng& rng) {
  auto h = gelu(add(matmul(x, ffn.w1), ffn.b1));
  h = add(matmul(h, ffn.w2), ffn.b2);
  h = dropout(h, dropout_rate, training, rng);
  auto residual = add(h, x);
  if (extra.defined()) residual = add(residual, extra);
  return layer_norm(residual, ffn.ln_gain, ffn.ln_bias, kLayerNormEps);
}

AttentionBlock AttentionBlock::create(std::size_t dim, std::size_t head_count, std::size_t ffn_hidden,
                                      Rng& rng) {
  if (head_count == 0 || dim % head_count != 0) {
    throw ConfigError("head count " + std::to_string(head_count) + " must divide dimension " +
                      std::to_string(dim));
  }
  AttentionBlock a;
  a.w_query = normal_parameter({dim, dim}, kInitStddev, rng);
  a.w_key = normal_parameter({dim, dim}, kInitStddev, rng);
  a.w_value = normal_parameter({dim, dim}, kInitStddev, rng);
  a.w_output = normal_parameter({dim, dim}, kInitStddev, rng);
  a.head_count = head_count;
  a.ffn = FeedForward::create(dim, ffn_hidden, rng);
  return a;
}

ParameterList AttentionBlock::parameters() const {
  ParameterList out{{"w_query", w_query}, {"w_key", w_key}, {"w_value", w_value}, {"w_output", w_output}};
  append_parameters(out, "ffn.", ffn.parameters());
  return out;
}

Tensor embed_sequence(const IndexTensor& ids, const EmbeddingBlock& block, bool training, Rng& rng) {
  if (ids.shape.size() != 2) throw DimensionError("embed_sequence: ids must be B x L, got " + shape_str(ids.shape));
  if (ids.shape[1] != block.position_table.extent(0)) {
    throw DimensionError("embed_sequence: sequence length " + std::to_string(ids.shape[1]) +
                         " differs from position table length " +
                         std::to_string(block.position_table.extent(0)));
  }
  auto items = embedding_lookup(block.item_table, ids);
  auto summed = add(items, block.position_table);
  auto normed = layer_norm(summed, block.ln_gain, block.ln_bias, kLayerNormEps);
  return dropout(normed, block.dropout_rate, training, rng);
}

Tensor self_attention_branch(const Tensor& embedded, const AttentionBlock& block,
                             const std::vector<std::uint8_t>& pad_mask, double dropout_rate,
                             bool training, Rng& rng, Tensor* attention_probs) {
  if (embedded.rank() != 3) throw DimensionError("self_attention_branch: expected B x L x D, got " + shape_str(embedded.shape()));
  const std::size_t b = embedded.extent(0), l = embedded.extent(1), d = embedded.extent(2);
  const std::size_t h = block.head_count;
  if (h == 0 || d % h != 0) throw ConfigError("head count must divide the embedding dimension");
  if (pad_mask.size() != b * l) throw DimensionError("self_attention_branch: pad mask must be B x L");
  const std::size_t dh = d / h;

  auto split_heads = [&](const Tensor& x) { return permute(reshape(x, {b, l, h, dh}), {0, 2, 1, 3}); };
  auto q = split_heads(matmul(embedded, block.w_query));
  auto k = permute(reshape(matmul(embedded, block.w_key), {b, l, h, dh}), {0, 2, 3, 1});
  auto v = split_heads(matmul(embedded, block.w_value));

  auto scores = scale(matmul(q, k), 1.0 / std::sqrt(static_cast<double>(dh)));
  // Query t may attend to key s iff s <= t and s holds a real item.
  std::vector<std::uint8_t> allowed(b * h * l * l, 0);
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t hi = 0; hi < h; ++hi) {
      for (std::size_t t = 0; t < l; ++t) {
        std::uint8_t* row = allowed.data() + ((bi * h + hi) * l + t) * l;
        for (std::size_t s = 0; s <= t; ++s) row[s] = pad_mask[bi * l + s] ? 1 : 0;
      }
    }
  }
  auto probs = masked_softmax(scores, allowed);
  if (attention_probs) *attention_probs = probs;
  auto context = matmul(probs, v);
  context = reshape(permute(context, {0, 2, 1, 3}), {b, l, d});
  auto attended = dropout(matmul(context, block.w_output), dropout_rate, training, rng);
  return feed_forward(add(attended, embedded), Tensor(), block.ffn, dropout_rate, training, rng);
}

}  // namespace freqrec
