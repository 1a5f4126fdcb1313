#include "freqrec/evaluation.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "freqrec/config.hpp"
#include "freqrec/errors.hpp"

namespace freqrec {

std::size_t rank_of_target(std::span<const double> scores, ItemId target) {
  if (target == kPaddingItem) throw UsageError("rank_of_target: target is the padding item");
  if (target < 0 || static_cast<std::size_t>(target) >= scores.size()) {
    throw IndexError("rank_of_target: target " + std::to_string(target) + " outside " +
                     std::to_string(scores.size()) + " score columns");
  }
  const double s = scores[static_cast<std::size_t>(target)];
  std::size_t rank = 1;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > s || (scores[i] == s && i < static_cast<std::size_t>(target))) ++rank;
  }
  return rank;
}

double hr_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) return 0.0;
  std::size_t hits = 0;
  for (auto r : ranks) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double ndcg_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) return 0.0;
  double total = 0.0;
  for (auto r : ranks) {
    if (r <= k) total += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  }
  return total / static_cast<double>(ranks.size());
}

MetricsReport metrics_from_ranks(std::span<const std::size_t> ranks, std::span<const std::size_t> ks) {
  MetricsReport r;
  r.user_count = ranks.size();
  for (auto k : ks) {
    r.hr[k] = hr_at_k(ranks, k);
    r.ndcg[k] = ndcg_at_k(ranks, k);
  }
  return r;
}

std::string format_metrics(const MetricsReport& report, const std::string& prefix) {
  std::ostringstream os;
  os << prefix << "users = " << report.user_count << '\n';
  for (const auto& [k, v] : report.hr) os << prefix << "hr@" << k << " = " << format_double(v) << '\n';
  for (const auto& [k, v] : report.ndcg) os << prefix << "ndcg@" << k << " = " << format_double(v) << '\n';
  for (const auto& b : report.buckets) {
    const std::string p = prefix + "bucket" + b.range.label() + ".";
    os << p << "share = " << format_double(b.share) << '\n';
    os << format_metrics(b.report, p);
  }
  return os.str();
}

std::map<std::string, double> parse_metrics(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    try {
      out[line.substr(0, eq)] = std::stod(line.substr(eq + 3));
    } catch (const std::exception&) {
      throw ParseError("bad metric value in '" + line + "'", line_no);
    }
  }
  return out;
}

std::vector<std::size_t> target_ranks(const BatchScorer& scorer, std::size_t columns, const DatasetView& view,
                                      std::size_t batch_size, std::size_t max_len) {
  if (view.entries.empty()) throw ValidationError("evaluate: empty view");
  if (view.kind == SplitKind::kTrain) throw UsageError("evaluate: needs a validation or test view");
  Rng unused(0);
  const auto batches = make_batches(view, batch_size, max_len, false, unused);
  std::vector<std::size_t> ranks;
  ranks.reserve(view.entries.size());
  std::size_t entry = 0;
  for (const auto& batch : batches) {
    const auto scores = scorer(batch.input_ids);
    if (scores.size() != batch.size() * columns) throw DimensionError("evaluate: scorer returned wrong size");
    for (std::size_t r = 0; r < batch.size(); ++r, ++entry) {
      const std::span<const double> row(scores.data() + r * columns, columns);
      ranks.push_back(rank_of_target(row, view.entries[entry].target));
    }
  }
  return ranks;
}

std::vector<std::size_t> target_ranks(const FreqRecModel& model, const DatasetView& view, std::size_t batch_size) {
  return target_ranks([&model](const IndexTensor& ids) { return model.score_last(ids); }, model.item_count() + 1,
                      view, batch_size, model.config().max_len);
}

MetricsReport evaluate(const FreqRecModel& model, const DatasetView& view, std::span<const std::size_t> ks,
                       std::size_t batch_size, const std::vector<LengthRange>& buckets) {
  const auto ranks = target_ranks(model, view, batch_size);
  auto report = metrics_from_ranks(ranks, ks);
  if (buckets.empty()) return report;

  const auto grouped = sparsity_buckets(*view.dataset, buckets);
  std::unordered_map<UserId, std::size_t> rank_of_user;
  for (std::size_t i = 0; i < view.entries.size(); ++i) rank_of_user[view.entries[i].user] = ranks[i];
  for (const auto& b : grouped.buckets) {
    std::vector<std::size_t> sub;
    for (auto u : b.users) {
      auto it = rank_of_user.find(u);
      if (it != rank_of_user.end()) sub.push_back(it->second);
    }
    report.buckets.push_back({b.range, b.share, metrics_from_ranks(sub, ks)});
  }
  return report;
}

}  // namespace freqrec
