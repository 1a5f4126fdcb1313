#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "freqrec/tensor.hpp"

namespace freqrec {

using Rng = std::mt19937_64;

// Integer ids laid out row-major, e.g. B x L item ids.
struct IndexTensor {
  Shape shape;
  std::vector<std::int64_t> values;
};

// Elementwise arithmetic with numpy-style broadcasting (aligned from the
// trailing axis; an extent of 1 stretches).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

// Batched matrix product over the trailing two axes; leading axes
// broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor transpose(const Tensor& x, int axis0, int axis1);
Tensor reshape(const Tensor& x, Shape shape);
// Picks `index` along `axis` and drops that axis.
Tensor select(const Tensor& x, int axis, std::size_t index);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor absolute(const Tensor& x);
Tensor square(const Tensor& x);

Tensor softmax(const Tensor& x, int axis);
// Softmax over the last axis restricted to entries where `allowed` is
// nonzero. `allowed` has x.size() entries. Rows with no allowed entry
// produce all zeros.
Tensor masked_softmax(const Tensor& x, const std::vector<std::uint8_t>& allowed);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-12);

// Exact form x * Phi(x) with the standard normal CDF.
Tensor gelu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);

// Inverted dropout. Identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

// Gathers rows of a V x D table; output shape is ids.shape + [D].
Tensor embedding_lookup(const Tensor& table, const IndexTensor& ids);

// Mean over rows with mask set of -log softmax(logits[row])[target[row]].
// With skip_first_class the softmax runs over classes 1..C-1 only, which is
// how the padding item is kept out of the candidate set.
Tensor cross_entropy_with_logits(const Tensor& logits, const std::vector<std::int64_t>& targets,
                                 const std::vector<std::uint8_t>& mask,
                                 bool skip_first_class = true);

}  // namespace freqrec
