#include "freqrec/loss.hpp"

#include "freqrec/errors.hpp"
#include "freqrec/ops.hpp"
#include "freqrec/spectral.hpp"

namespace freqrec {

DistanceKind parse_distance(const std::string& name) {
  if (name == "l1") return DistanceKind::kL1;
  if (name == "l2") return DistanceKind::kL2;
  if (name == "mix") return DistanceKind::kMix;
  throw ConfigError("unknown distance '" + name + "' (expected l1, l2, mix)");
}

std::string to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::kL1:
      return "l1";
    case DistanceKind::kL2:
      return "l2";
    case DistanceKind::kMix:
      return "mix";
  }
  return "mix";
}

Tensor cross_entropy(const Tensor& x_out, const Tensor& item_table, const std::vector<std::int64_t>& targets,
                     const std::vector<std::uint8_t>& valid_mask) {
  if (x_out.rank() != 3) throw DimensionError("cross_entropy: X_out must be B x L x D, got " + shape_str(x_out.shape()));
  if (item_table.rank() != 2 || item_table.extent(1) != x_out.extent(2)) {
    throw DimensionError("cross_entropy: item table " + shape_str(item_table.shape()) +
                         " does not match X_out " + shape_str(x_out.shape()));
  }
  const std::size_t rows = x_out.extent(0) * x_out.extent(1);
  if (targets.size() != rows || valid_mask.size() != rows) {
    throw DimensionError("cross_entropy: targets and mask must be B x L");
  }
  auto flat = reshape(x_out, {rows, x_out.extent(2)});
  auto logits = matmul(flat, transpose(item_table, 0, 1));
  return cross_entropy_with_logits(logits, targets, valid_mask, true);
}

Tensor distance(const Tensor& p, const Tensor& t, DistanceKind kind) {
  if (p.shape() != t.shape()) {
    throw DimensionError("distance: shapes " + shape_str(p.shape()) + " and " + shape_str(t.shape()) + " differ");
  }
  auto diff = sub(p, t);
  switch (kind) {
    case DistanceKind::kL1:
      return mean(absolute(diff));
    case DistanceKind::kL2:
      return mean(square(diff));
    case DistanceKind::kMix:
      return scale(add(mean(absolute(diff)), mean(square(diff))), 0.5);
  }
  throw ConfigError("distance: unknown kind");
}

Tensor frequency_loss(const Tensor& p, const Tensor& t, DistanceKind kind) {
  if (p.shape() != t.shape()) {
    throw DimensionError("frequency_loss: shapes " + shape_str(p.shape()) + " and " + shape_str(t.shape()) +
                         " differ");
  }
  if (p.rank() < 2) throw DimensionError("frequency_loss: need a temporal axis at position 1");
  auto sp = rdft(p, 1);
  auto st = rdft(t, 1);
  return add(distance(sp.real, st.real, kind), distance(sp.imag, st.imag, kind));
}

Tensor total_loss(const Tensor& ce, const Tensor& lf, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("beta must lie in [0, 1], got " + std::to_string(beta));
  }
  return add(scale(lf, 1.0 - beta), scale(ce, beta));
}

}  // namespace freqrec
