#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "freqrec/checkpoint.hpp"
#include "freqrec/config.hpp"
#include "freqrec/data.hpp"
#include "freqrec/errors.hpp"
#include "freqrec/evaluation.hpp"
#include "freqrec/trainer.hpp"

namespace {

using namespace freqrec;

// Flags that mirror ModelConfig fields. Values stay as strings so that only
// flags actually given override the config file.
struct ConfigFlags {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string disable;
  std::string dataset;

  void attach(CLI::App* app) {
    app->add_option("--dataset", dataset, "interaction file (user_id item_id per line)")->required();
    app->add_option("--config", config_file, "key = value config file");
    add(app, "--dim", "dim");
    add(app, "--max-len", "max_len");
    add(app, "--layers", "num_layers");
    add(app, "--heads", "num_heads");
    add(app, "--dropout", "dropout");
    add(app, "--fusion", "fusion");
    add(app, "--alpha", "alpha");
    add(app, "--beta", "beta");
    add(app, "--gamma", "gamma");
    add(app, "--distance", "distance");
    add(app, "--activation", "activation");
    add(app, "--batch-size", "batch_size");
    add(app, "--lr", "lr");
    add(app, "--epochs", "epochs");
    add(app, "--patience", "patience");
    add(app, "--seed", "seed");
    add(app, "--eval-k", "eval_k");
    add(app, "--detach-target", "detach_target");
    app->add_option("--disable", disable, "comma list of sa,gsa,lsr,lf,ce");
  }

  ModelConfig config() const {
    ModelConfig c;
    if (!config_file.empty()) load_config_file(config_file, c);
    for (const auto& [k, v] : overrides) apply_setting(c, k, v);
    c.validate();
    return c;
  }

 private:
  void add(CLI::App* app, const std::string& flag, const std::string& key) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, "sets " + key);
  }
};

std::shared_ptr<const InteractionDataset> load(const std::string& path) {
  auto ds = std::make_shared<InteractionDataset>(load_interactions(path));
  std::cerr << "loaded " << ds->user_sequences.size() << " users, " << ds->item_count << " items, dropped "
            << ds->dropped_users << " short users\n";
  return ds;
}

void emit(const std::string& text, const std::string& path) {
  std::cout << text;
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FreqRec sequential recommender"};
  app.require_subcommand(1);

  ConfigFlags train_flags;
  std::string train_checkpoint, train_metrics;
  auto* train_cmd = app.add_subcommand("train", "train and report test metrics");
  train_flags.attach(train_cmd);
  train_cmd->add_option("--checkpoint", train_checkpoint, "write the trained model here");
  train_cmd->add_option("--metrics-out", train_metrics, "also write metrics to this file");

  std::string eval_dataset, eval_checkpoint, eval_split = "test", eval_buckets, eval_metrics, eval_k;
  std::size_t eval_batch = 0;
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint");
  eval_cmd->add_option("--dataset", eval_dataset)->required();
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
  eval_cmd->add_option("--split", eval_split)->check(CLI::IsMember({"valid", "test"}));
  eval_cmd->add_option("--buckets", eval_buckets, "length ranges, e.g. 5-6,7-8");
  eval_cmd->add_option("--eval-k", eval_k, "override the stored K list");
  eval_cmd->add_option("--batch-size", eval_batch);
  eval_cmd->add_option("--metrics-out", eval_metrics);

  ConfigFlags grid_flags;
  std::string grid_text, grid_out;
  std::size_t grid_threads = 1;
  auto* grid_cmd = app.add_subcommand("gridsearch", "Cartesian hyper-parameter search");
  grid_flags.attach(grid_cmd);
  grid_cmd->add_option("--grid", grid_text, "e.g. \"gamma=0.1,0.3,0.5;alpha=0.5,0.7\"")->required();
  grid_cmd->add_option("--threads", grid_threads, "concurrent trials when more than 4 runs (0 = all cores)");
  grid_cmd->add_option("--out", grid_out);

  ConfigFlags ablate_flags;
  std::string ablate_out;
  auto* ablate_cmd = app.add_subcommand("ablate", "train the full model and the --disable variant");
  ablate_flags.attach(ablate_cmd);
  ablate_cmd->add_option("--out", ablate_out);

  ConfigFlags graft_flags;
  std::string graft_out;
  auto* graft_cmd = app.add_subcommand("graft-lf", "self-attention baseline with and without the frequency loss");
  graft_flags.attach(graft_cmd);
  graft_cmd->add_option("--out", graft_out);

  SyntheticOptions synth;
  std::string synth_out;
  std::uint64_t synth_seed = 42;
  auto* synth_cmd = app.add_subcommand("gen-synth", "write a periodic synthetic dataset");
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->add_option("--users", synth.users);
  synth_cmd->add_option("--seq-len", synth.seq_len);
  synth_cmd->add_option("--periods", synth.period_count);
  synth_cmd->add_option("--items", synth.item_count, "catalogue size (0 = cycle items only)");
  synth_cmd->add_option("--noise", synth.noise_rate);
  synth_cmd->add_option("--seed", synth_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      const auto config = train_flags.config();
      const auto ablation = parse_ablation(train_flags.disable);
      auto ds = load(train_flags.dataset);
      TrainOptions options;
      options.on_epoch = [](const EpochLog& e) {
        std::cerr << "epoch " << e.epoch << " loss " << e.total << " valid hr@10 " << e.valid_hr10 << " ndcg@10 "
                  << e.valid_ndcg10 << '\n';
      };
      auto trained = train(config, ds, ablation, options);
      const auto views = leave_one_out_split(ds);
      const auto report = evaluate(trained.model, views.test, config.eval_k, config.batch_size);
      std::cout << format_train_log(trained.log);
      emit(format_metrics(report, "test."), train_metrics);
      if (!train_checkpoint.empty()) save_checkpoint(trained.model, train_checkpoint);
    } else if (*eval_cmd) {
      auto model = load_checkpoint(eval_checkpoint);
      auto ds = load(eval_dataset);
      if (ds->item_count != model.item_count()) {
        throw ValidationError("dataset has " + std::to_string(ds->item_count) + " items, checkpoint expects " +
                              std::to_string(model.item_count()));
      }
      auto ks = model.config().eval_k;
      if (!eval_k.empty()) {
        ModelConfig tmp;
        apply_setting(tmp, "eval_k", eval_k);
        ks = tmp.eval_k;
      }
      const auto views = leave_one_out_split(ds);
      const auto& view = eval_split == "valid" ? views.valid : views.test;
      const auto report = evaluate(model, view, ks, eval_batch ? eval_batch : model.config().batch_size,
                                   parse_length_ranges(eval_buckets));
      emit(format_metrics(report, eval_split + "."), eval_metrics);
    } else if (*grid_cmd) {
      const auto base = grid_flags.config();
      const auto grid = parse_grid(grid_text);
      auto ds = load(grid_flags.dataset);
      const auto result = grid_search(base, grid, ds, parse_ablation(grid_flags.disable), grid_threads);
      emit(format_grid(result), grid_out);
    } else if (*ablate_cmd) {
      const auto config = ablate_flags.config();
      const auto ablation = parse_ablation(ablate_flags.disable);
      auto ds = load(ablate_flags.dataset);
      std::string text = format_metrics(run_ablation(config, {}, ds), "full.");
      if (ablation.any()) text += format_metrics(run_ablation(config, ablation, ds), "ablated.");
      emit(text, ablate_out);
    } else if (*graft_cmd) {
      const auto config = graft_flags.config();
      auto ds = load(graft_flags.dataset);
      emit(format_graft(graft_freq_loss(config, ds)), graft_out);
    } else if (*synth_cmd) {
      Rng rng(synth_seed);
      write_interactions(generate_synthetic(synth, rng), synth_out);
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error (line " << e.line() << "): " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
