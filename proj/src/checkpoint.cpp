#include "freqrec/checkpoint.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "freqrec/errors.hpp"

namespace freqrec {

namespace {

constexpr const char* kFormat = "freqrec-checkpoint";
constexpr int kVersion = 1;

std::string ablation_list(const Ablation& a) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(a.disable_sa, "sa");
  add(a.disable_gsa, "gsa");
  add(a.disable_lsr, "lsr");
  add(a.disable_freq_loss, "lf");
  add(a.disable_ce_loss, "ce");
  return out;
}

}  // namespace

void save_checkpoint(const FreqRecModel& model, std::ostream& out) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["item_count"] = model.item_count();
  j["ablation"] = ablation_list(model.ablation());
  auto& cfg = j["config"] = nlohmann::json::object();
  for (const auto& [k, v] : to_settings(model.config())) cfg[k] = v;
  auto& params = j["parameters"] = nlohmann::json::array();
  for (const auto& p : model.parameters()) {
    params.push_back({{"name", p.name},
                      {"shape", p.tensor.shape()},
                      {"data", std::vector<double>(p.tensor.data().begin(), p.tensor.data().end())}});
  }
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

void save_checkpoint(const FreqRecModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  save_checkpoint(model, out);
}

FreqRecModel load_checkpoint(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ValidationError("not a freqrec checkpoint");
    if (j.at("version").get<int>() != kVersion) throw ValidationError("unsupported checkpoint version");
    ModelConfig config;
    for (const auto& [k, v] : j.at("config").items()) apply_setting(config, k, v.get<std::string>());
    const auto ablation = parse_ablation(j.at("ablation").get<std::string>());
    FreqRecModel model(config, j.at("item_count").get<std::size_t>(), ablation);

    std::map<std::string, const nlohmann::json*> stored;
    for (const auto& p : j.at("parameters")) stored[p.at("name").get<std::string>()] = &p;
    auto params = model.parameters();
    if (stored.size() != params.size()) {
      throw ValidationError("checkpoint holds " + std::to_string(stored.size()) + " tensors, model expects " +
                            std::to_string(params.size()));
    }
    for (auto& p : params) {
      auto it = stored.find(p.name);
      if (it == stored.end()) throw ValidationError("checkpoint is missing tensor " + p.name);
      const auto shape = it->second->at("shape").get<Shape>();
      if (shape != p.tensor.shape()) {
        throw ValidationError("tensor " + p.name + " has shape " + shape_str(shape) + ", model expects " +
                              shape_str(p.tensor.shape()));
      }
      const auto data = it->second->at("data").get<std::vector<double>>();
      if (data.size() != p.tensor.size()) throw ValidationError("tensor " + p.name + " has the wrong element count");
      std::copy(data.begin(), data.end(), p.tensor.mutable_data().begin());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

FreqRecModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace freqrec
