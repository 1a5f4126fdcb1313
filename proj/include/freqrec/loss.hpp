#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqrec/tensor.hpp"

namespace freqrec {

enum class DistanceKind { kL1, kL2, kMix };

DistanceKind parse_distance(const std::string& name);
std::string to_string(DistanceKind kind);

struct LossConfig {
  double beta = 0.6;
  DistanceKind distance = DistanceKind::kMix;
};

// Logits = X_out M^T over every table row, then mean
// cross-entropy over positions with valid_mask set. The padding row (id 0)
// is scored but never a candidate. X_out is B x L x D, targets and mask
// are B x L.
Tensor cross_entropy(const Tensor& x_out, const Tensor& item_table, const std::vector<std::int64_t>& targets,
                     const std::vector<std::uint8_t>& valid_mask);

// L1: mean |P - T|; L2: mean (P - T)^2; mix: (L1 + L2) / 2.
Tensor distance(const Tensor& p, const Tensor& t, DistanceKind kind);

// One-sided DFT of both tensors along the temporal axis (axis 1), then
// distance(Re P, Re T) + distance(Im P, Im T).
Tensor frequency_loss(const Tensor& p, const Tensor& t, DistanceKind kind);

// (1 - beta) * lf + beta * ce.
Tensor total_loss(const Tensor& ce, const Tensor& lf, double beta);

}  // namespace freqrec
