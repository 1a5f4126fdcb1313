#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqrec/data.hpp"
#include "freqrec/model.hpp"

namespace freqrec {

// 1 + number of non-padding items scoring strictly higher than the target,
// plus the number of tied items with a smaller id. scores[0] is the padding
// column and is ignored. A padding target is a UsageError.
std::size_t rank_of_target(std::span<const double> scores, ItemId target);

double hr_at_k(std::span<const std::size_t> ranks, std::size_t k);
double ndcg_at_k(std::span<const std::size_t> ranks, std::size_t k);

struct BucketReport;

struct MetricsReport {
  std::map<std::size_t, double> hr;
  std::map<std::size_t, double> ndcg;
  std::size_t user_count = 0;
  std::vector<BucketReport> buckets;
};

struct BucketReport {
  LengthRange range;
  double share = 0.0;
  MetricsReport report;
};

MetricsReport metrics_from_ranks(std::span<const std::size_t> ranks, std::span<const std::size_t> ks);

// One "key = value" line per metric, e.g. "hr@10 = 0.5". Bucket entries are
// prefixed with "bucket[5,6].".
std::string format_metrics(const MetricsReport& report, const std::string& prefix = "");
std::map<std::string, double> parse_metrics(const std::string& text);

// Maps a B x L id batch to B x columns scores (column 0 = padding).
using BatchScorer = std::function<std::vector<double>(const IndexTensor&)>;

// Final-position scores against the whole catalogue, users in ascending id
// order. Returns one rank per entry of `view`.
std::vector<std::size_t> target_ranks(const BatchScorer& scorer, std::size_t columns, const DatasetView& view,
                                      std::size_t batch_size, std::size_t max_len);
std::vector<std::size_t> target_ranks(const FreqRecModel& model, const DatasetView& view, std::size_t batch_size);

// HR/NDCG per K; with `buckets`, also per raw-length bucket.
MetricsReport evaluate(const FreqRecModel& model, const DatasetView& view, std::span<const std::size_t> ks,
                       std::size_t batch_size, const std::vector<LengthRange>& buckets = {});

}  // namespace freqrec
