#include "freqrec/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

#include "freqrec/adam.hpp"
#include "freqrec/errors.hpp"

namespace freqrec {

namespace {

constexpr std::uint64_t kTrainStreamSalt = 0x9E3779B97F4A7C15ULL;
constexpr std::size_t kMonitorK = 10;

std::vector<std::size_t> eval_ks_with_monitor(const ModelConfig& config) {
  std::vector<std::size_t> ks = config.eval_k;
  if (std::find(ks.begin(), ks.end(), kMonitorK) == ks.end()) ks.push_back(kMonitorK);
  std::sort(ks.begin(), ks.end());
  return ks;
}

}  // namespace

double TrainLog::best_valid_ndcg10() const {
  if (!best_epoch) return std::numeric_limits<double>::quiet_NaN();
  return epochs.at(*best_epoch).valid_ndcg10;
}

TrainResult train(const ModelConfig& config, std::shared_ptr<const InteractionDataset> ds, const Ablation& ablation,
                  const TrainOptions& options) {
  config.validate();
  ablation.validate();
  if (!ds) throw UsageError("train: no dataset");
  TrainResult result{FreqRecModel(config, ds->item_count, ablation), {}};
  if (config.max_epochs == 0) return result;

  auto& model = result.model;
  auto& log = result.log;
  const auto views = leave_one_out_split(ds);
  auto params = model.parameter_tensors();
  AdamOptions adam_options;
  adam_options.learning_rate = config.learning_rate;
  auto adam = AdamState::for_parameters(params, adam_options);
  Rng rng(config.seed ^ kTrainStreamSalt);
  const std::size_t monitor[] = {kMonitorK};

  std::vector<std::vector<double>> best_params;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t streak = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches = make_batches(views.train, config.batch_size, config.max_len, true, rng);
    EpochLog entry;
    entry.epoch = epoch;
    double ce_sum = 0.0, lf_sum = 0.0, total_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      if (batch.valid_count() == 0) continue;
      for (auto& p : params) p.zero_grad();
      auto parts = model.loss(batch, true, rng);
      const double total = parts.total.item();
      if (!std::isfinite(total)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(bi + 1) + " (loss " + format_double(total) + ")");
      }
      backward(parts.total);
      adam_step(params, adam);
      model.zero_padding_row();
      ce_sum += parts.ce.defined() ? parts.ce.item() : 0.0;
      lf_sum += parts.lf.defined() ? parts.lf.item() : 0.0;
      total_sum += total;
      ++used;
    }
    if (used == 0) throw ValidationError("train: no training pairs in the dataset");
    const double n = static_cast<double>(used);
    entry.ce = ablation.disable_ce_loss ? std::numeric_limits<double>::quiet_NaN() : ce_sum / n;
    entry.lf = ablation.disable_freq_loss ? std::numeric_limits<double>::quiet_NaN() : lf_sum / n;
    entry.total = total_sum / n;

    bool stop = false;
    if (options.validate) {
      const auto valid = evaluate(model, views.valid, monitor, config.batch_size);
      entry.valid_hr10 = valid.hr.at(kMonitorK);
      entry.valid_ndcg10 = valid.ndcg.at(kMonitorK);
      if (entry.valid_ndcg10 > best_metric) {
        best_metric = entry.valid_ndcg10;
        best_params = model.snapshot();
        log.best_epoch = log.epochs.size();
        streak = 0;
      } else {
        ++streak;
        stop = streak >= config.patience;
      }
    }
    log.epochs.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
    if (stop) {
      log.stopped_early = true;
      break;
    }
  }
  if (options.validate && !best_params.empty()) model.restore(best_params);
  return result;
}

std::string format_train_log(const TrainLog& log) {
  std::ostringstream os;
  for (const auto& e : log.epochs) {
    os << "epoch = " << e.epoch << " ce = " << format_double(e.ce) << " lf = " << format_double(e.lf)
       << " total = " << format_double(e.total) << " valid_hr@10 = " << format_double(e.valid_hr10)
       << " valid_ndcg@10 = " << format_double(e.valid_ndcg10) << '\n';
  }
  if (log.best_epoch) os << "best_epoch = " << log.epochs[*log.best_epoch].epoch << '\n';
  os << "stopped_early = " << (log.stopped_early ? "true" : "false") << '\n';
  return os.str();
}

MetricsReport run_ablation(const ModelConfig& config, const Ablation& ablation,
                           std::shared_ptr<const InteractionDataset> ds) {
  auto trained = train(config, ds, ablation);
  const auto views = leave_one_out_split(ds);
  return evaluate(trained.model, views.test, config.eval_k, config.batch_size);
}

ParameterGrid parse_grid(const std::string& text) {
  ParameterGrid grid;
  std::istringstream in(text);
  std::string clause;
  while (std::getline(in, clause, ';')) {
    if (clause.find_first_not_of(" \t") == std::string::npos) continue;
    const auto eq = clause.find('=');
    if (eq == std::string::npos) throw ConfigError("grid clause '" + clause + "' needs name=v1,v2");
    std::string name = clause.substr(0, eq);
    name.erase(0, name.find_first_not_of(" \t"));
    name.erase(name.find_last_not_of(" \t") + 1);
    std::vector<std::string> values;
    std::istringstream vs(clause.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      v.erase(0, v.find_first_not_of(" \t"));
      v.erase(v.find_last_not_of(" \t") + 1);
      if (!v.empty()) values.push_back(v);
    }
    if (values.empty()) throw ConfigError("grid parameter '" + name + "' has no values");
    grid.emplace_back(name, values);
  }
  return grid;
}

GridResult grid_search(const ModelConfig& base, const ParameterGrid& grid,
                       std::shared_ptr<const InteractionDataset> ds, const Ablation& ablation,
                       std::size_t max_threads) {
  // Expand the Cartesian product and validate every point up front.
  std::vector<std::vector<std::pair<std::string, std::string>>> points(1);
  for (const auto& [name, values] : grid) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& p : points) {
      for (const auto& v : values) {
        auto q = p;
        q.emplace_back(name, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  std::vector<ModelConfig> configs;
  for (const auto& p : points) {
    ModelConfig c = base;
    for (const auto& [k, v] : p) apply_setting(c, k, v);
    c.validate();
    configs.push_back(c);
  }

  const auto views = leave_one_out_split(ds);
  GridResult result;
  result.rows.resize(points.size());
  auto run_one = [&](std::size_t i) {
    auto trained = train(configs[i], ds, ablation);
    auto& row = result.rows[i];
    row.settings = points[i];
    auto ks = eval_ks_with_monitor(configs[i]);
    row.valid = evaluate(trained.model, views.valid, ks, configs[i].batch_size);
    row.test = evaluate(trained.model, views.test, ks, configs[i].batch_size);
    row.epochs_run = trained.log.epochs.size();
  };

  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t threads = std::min({max_threads == 0 ? hw : max_threads, hw, points.size()});
  if (points.size() > 4 && threads > 1) {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) run_one(i);
      }));
    }
    for (auto& w : workers) w.get();
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) run_one(i);
  }

  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    if (result.rows[i].valid.ndcg.at(kMonitorK) > result.rows[result.best_index].valid.ndcg.at(kMonitorK)) {
      result.best_index = i;
    }
  }
  result.best_config = configs[result.best_index];
  return result;
}

std::string format_grid(const GridResult& result) {
  std::ostringstream os;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& row = result.rows[i];
    os << "run = " << i;
    for (const auto& [k, v] : row.settings) os << ' ' << k << " = " << v;
    for (const auto& [k, v] : row.valid.ndcg) os << " valid_ndcg@" << k << " = " << format_double(v);
    for (const auto& [k, v] : row.valid.hr) os << " valid_hr@" << k << " = " << format_double(v);
    for (const auto& [k, v] : row.test.ndcg) os << " test_ndcg@" << k << " = " << format_double(v);
    for (const auto& [k, v] : row.test.hr) os << " test_hr@" << k << " = " << format_double(v);
    os << " epochs = " << row.epochs_run << '\n';
  }
  if (!result.rows.empty()) {
    os << "best_run = " << result.best_index << '\n';
    for (const auto& [k, v] : result.rows[result.best_index].settings) os << "best." << k << " = " << v << '\n';
  }
  return os.str();
}

GraftReport graft_freq_loss(const ModelConfig& config, std::shared_ptr<const InteractionDataset> ds) {
  Ablation sa_only;
  sa_only.disable_gsa = true;
  sa_only.disable_lsr = true;
  GraftReport report;
  report.beta = config.beta;
  ModelConfig plain = config;
  plain.beta = 1.0;
  report.without_lf = run_ablation(plain, sa_only, ds);
  report.with_lf = run_ablation(config, sa_only, ds);
  auto pct = [](double with, double without) {
    if (without == 0.0) return with == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return 100.0 * (with - without) / without;
  };
  for (const auto& [k, v] : report.with_lf.hr) {
    report.improvement_pct["hr@" + std::to_string(k)] = pct(v, report.without_lf.hr.at(k));
  }
  for (const auto& [k, v] : report.with_lf.ndcg) {
    report.improvement_pct["ndcg@" + std::to_string(k)] = pct(v, report.without_lf.ndcg.at(k));
  }
  return report;
}

std::string format_graft(const GraftReport& report) {
  std::ostringstream os;
  os << "beta = " << format_double(report.beta) << '\n';
  os << format_metrics(report.without_lf, "without_lf.");
  os << format_metrics(report.with_lf, "with_lf.");
  for (const auto& [k, v] : report.improvement_pct) os << "improvement_pct." << k << " = " << format_double(v) << '\n';
  return os.str();
}

}  // namespace freqrec
