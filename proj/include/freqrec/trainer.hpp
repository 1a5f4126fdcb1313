#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freqrec/config.hpp"
#include "freqrec/data.hpp"
#include "freqrec/evaluation.hpp"
#include "freqrec/model.hpp"

namespace freqrec {

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double ce = 0.0;        // batch means; NaN when the term is switched off
  double lf = 0.0;
  double total = 0.0;
  double valid_hr10 = 0.0;
  double valid_ndcg10 = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::optional<std::size_t> best_epoch;  // index into epochs
  bool stopped_early = false;

  double best_valid_ndcg10() const;
};

struct TrainOptions {
  std::function<void(const EpochLog&)> on_epoch;
  // Skip validation and early stopping; every epoch runs and the final
  // parameters are kept.
  bool validate = true;
};

struct TrainResult {
  FreqRecModel model;
  TrainLog log;
};

// Adam on the combined objective with shuffled batches; early stopping on
// validation NDCG@10 with `patience`, then the best epoch is restored.
// A non-finite loss throws DivergenceError naming the epoch and batch.
TrainResult train(const ModelConfig& config, std::shared_ptr<const InteractionDataset> ds,
                  const Ablation& ablation = {}, const TrainOptions& options = {});

std::string format_train_log(const TrainLog& log);

// Trains under the given switches and reports test metrics.
MetricsReport run_ablation(const ModelConfig& config, const Ablation& ablation,
                           std::shared_ptr<const InteractionDataset> ds);

using ParameterGrid = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct GridRow {
  std::vector<std::pair<std::string, std::string>> settings;
  MetricsReport valid;
  MetricsReport test;
  std::size_t epochs_run = 0;
};

struct GridResult {
  std::vector<GridRow> rows;  // Cartesian order, last parameter fastest
  std::size_t best_index = 0; // highest validation NDCG@10, first wins ties
  ModelConfig best_config;
};

// Unknown parameter names or bad values fail before any training. Runs are
// sequential unless there are more than 4 and `max_threads` allows more.
GridResult grid_search(const ModelConfig& base, const ParameterGrid& grid,
                       std::shared_ptr<const InteractionDataset> ds, const Ablation& ablation = {},
                       std::size_t max_threads = 1);

// "gamma=0.1,0.3;alpha=0.5"
ParameterGrid parse_grid(const std::string& text);
std::string format_grid(const GridResult& result);

struct GraftReport {
  double beta = 1.0;
  MetricsReport without_lf;  // beta = 1
  MetricsReport with_lf;     // beta = config.beta
  std::map<std::string, double> improvement_pct;
};

// Self-attention-only baseline (GSA and LSR off) trained twice from the same
// seed, with and without the frequency loss.
GraftReport graft_freq_loss(const ModelConfig& config, std::shared_ptr<const InteractionDataset> ds);
std::string format_graft(const GraftReport& report);

}  // namespace freqrec
