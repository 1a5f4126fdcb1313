#include "freqrec/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "freqrec/errors.hpp"

namespace freqrec {

namespace {

void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1], got " + format_double(v));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("setting '" + key + "' expects a number, got '" + value + "'");
  }
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("setting '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("setting '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<std::size_t> parse_k_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::istringstream in(value);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(parse_unsigned(key, tok));
  }
  if (out.empty()) throw ConfigError("setting '" + key + "' needs at least one K");
  return out;
}

}  // namespace

std::string format_double(double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

void ModelConfig::validate() const {
  if (dim == 0) throw ConfigError("dim must be positive");
  if (max_len == 0) throw ConfigError("max_len must be positive");
  if (num_heads == 0 || dim % num_heads != 0) {
    throw ConfigError("num_heads " + std::to_string(num_heads) + " must divide dim " + std::to_string(dim));
  }
  if (num_layers == 0) throw ConfigError("num_layers must be positive");
  if (ffn_multiplier == 0) throw ConfigError("ffn_multiplier must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  require_unit_interval(alpha, "alpha");
  require_unit_interval(gamma, "gamma");
  require_unit_interval(beta, "beta");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  for (auto k : eval_k) {
    if (k == 0) throw ConfigError("eval_k entries must be positive");
  }
}

void Ablation::validate() const {
  if (disable_freq_loss && disable_ce_loss) {
    throw ConfigError("cannot disable both the frequency loss and the cross-entropy loss");
  }
}

std::string Ablation::label() const {
  if (!any()) return "full";
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(disable_sa, "sa");
  add(disable_gsa, "gsa");
  add(disable_lsr, "lsr");
  add(disable_freq_loss, "lf");
  add(disable_ce_loss, "ce");
  return "w/o " + out;
}

Ablation parse_ablation(const std::string& text) {
  Ablation ab;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    if (tok == "sa") ab.disable_sa = true;
    else if (tok == "gsa") ab.disable_gsa = true;
    else if (tok == "lsr") ab.disable_lsr = true;
    else if (tok == "lf") ab.disable_freq_loss = true;
    else if (tok == "ce") ab.disable_ce_loss = true;
    else throw ConfigError("unknown ablation switch '" + tok + "' (expected sa, gsa, lsr, lf, ce)");
  }
  ab.validate();
  return ab;
}

std::vector<std::string> config_keys() {
  return {"dim",      "max_len",    "num_layers",    "num_heads",  "ffn_multiplier", "dropout",
          "alpha",    "gamma",      "beta",          "fusion",     "distance",       "activation",
          "detach_target", "batch_size", "lr",       "epochs",     "patience",       "seed",
          "eval_k"};
}

void apply_setting(ModelConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "dim") c.dim = parse_unsigned(key, value);
  else if (key == "max_len") c.max_len = parse_unsigned(key, value);
  else if (key == "num_layers") c.num_layers = parse_unsigned(key, value);
  else if (key == "num_heads") c.num_heads = parse_unsigned(key, value);
  else if (key == "ffn_multiplier") c.ffn_multiplier = parse_unsigned(key, value);
  else if (key == "dropout") c.dropout_rate = parse_double(key, value);
  else if (key == "alpha") c.alpha = parse_double(key, value);
  else if (key == "gamma") c.gamma = parse_double(key, value);
  else if (key == "beta") c.beta = parse_double(key, value);
  else if (key == "fusion") c.fusion = parse_fusion(value);
  else if (key == "distance") c.distance = parse_distance(value);
  else if (key == "activation") c.activation = parse_activation(value);
  else if (key == "detach_target") c.detach_target = parse_bool(key, value);
  else if (key == "batch_size") c.batch_size = parse_unsigned(key, value);
  else if (key == "lr") c.learning_rate = parse_double(key, value);
  else if (key == "epochs") c.max_epochs = parse_unsigned(key, value);
  else if (key == "patience") c.patience = parse_unsigned(key, value);
  else if (key == "seed") c.seed = parse_unsigned(key, value);
  else if (key == "eval_k") c.eval_k = parse_k_list(key, value);
  else throw ConfigError("unknown configuration parameter '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> to_settings(const ModelConfig& c) {
  std::string ks;
  for (std::size_t i = 0; i < c.eval_k.size(); ++i) {
    if (i) ks += ',';
    ks += std::to_string(c.eval_k[i]);
  }
  return {{"dim", std::to_string(c.dim)},
          {"max_len", std::to_string(c.max_len)},
          {"num_layers", std::to_string(c.num_layers)},
          {"num_heads", std::to_string(c.num_heads)},
          {"ffn_multiplier", std::to_string(c.ffn_multiplier)},
          {"dropout", format_double(c.dropout_rate)},
          {"alpha", format_double(c.alpha)},
          {"gamma", format_double(c.gamma)},
          {"beta", format_double(c.beta)},
          {"fusion", to_string(c.fusion)},
          {"distance", to_string(c.distance)},
          {"activation", to_string(c.activation)},
          {"detach_target", c.detach_target ? "true" : "false"},
          {"batch_size", std::to_string(c.batch_size)},
          {"lr", format_double(c.learning_rate)},
          {"epochs", std::to_string(c.max_epochs)},
          {"patience", std::to_string(c.patience)},
          {"seed", std::to_string(c.seed)},
          {"eval_k", ks}};
}

void parse_config_text(const std::string& text, ModelConfig& config) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    try {
      apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

void load_config_file(const std::filesystem::path& path, ModelConfig& config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  parse_config_text(buf.str(), config);
}

std::string format_config(const ModelConfig& config) {
  std::string out;
  for (const auto& [k, v] : to_settings(config)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace freqrec
