#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "freqrec/freqnet.hpp"
#include "freqrec/loss.hpp"

namespace freqrec {

// Architecture and training hyper-parameters. Defaults follow the reference
// setup (D = 64, L = 50, B = 64, alpha = gamma = 0.7, beta = 0.6, lr = 5e-4).
struct ModelConfig {
  std::size_t dim = 64;
  std::size_t max_len = 50;
  std::size_t num_layers = 1;
  std::size_t num_heads = 2;
  std::size_t ffn_multiplier = 4;
  double dropout_rate = 0.1;
  double alpha = 0.7;
  double gamma = 0.7;
  double beta = 0.6;
  FusionMode fusion = FusionMode::kParallel;
  DistanceKind distance = DistanceKind::kMix;
  Activation activation = Activation::kLeakyRelu;
  bool detach_target = false;
  std::size_t batch_size = 64;
  double learning_rate = 5e-4;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 42;
  std::vector<std::size_t> eval_k = {10, 20};

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

// Which branches and objectives are switched off.
struct Ablation {
  bool disable_sa = false;
  bool disable_gsa = false;
  bool disable_lsr = false;
  bool disable_freq_loss = false;
  bool disable_ce_loss = false;

  void validate() const;
  bool any() const { return disable_sa || disable_gsa || disable_lsr || disable_freq_loss || disable_ce_loss; }
  std::string label() const;
};

// "sa,gsa,lsr,lf,ce" -> switches. Empty text disables nothing.
Ablation parse_ablation(const std::string& text);

// Sets one field by name (the same names the config file and the grid
// search use). Unknown names and unparsable values are ConfigErrors.
void apply_setting(ModelConfig& config, const std::string& key, const std::string& value);

std::vector<std::string> config_keys();

std::vector<std::pair<std::string, std::string>> to_settings(const ModelConfig& config);

// "key = value" lines; '#' starts a comment.
void load_config_file(const std::filesystem::path& path, ModelConfig& config);
void parse_config_text(const std::string& text, ModelConfig& config);
std::string format_config(const ModelConfig& config);

std::string format_double(double value);

}  // namespace freqrec
