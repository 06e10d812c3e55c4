#include "flowinfer/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "flowinfer/errors.hpp"

namespace flowinfer {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(value, &used, 0);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + value +
                      "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a number, got '" + value +
                      "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("key '" + key + "' expects true/false, got '" + value +
                    "'");
}

std::vector<std::size_t> parse_size_list(const std::string& key,
                                         const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(static_cast<std::size_t>(parse_u64(key, trim(item))));
  }
  if (out.empty()) throw ConfigError("key '" + key + "' needs a value list");
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_size_list(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": empty key or value");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("duplicate key '" + key + "'");
    }

    if (key == "model") cfg.model = value;
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "num_coupling_blocks") cfg.num_coupling_blocks = parse_u64(key, value);
    else if (key == "subnet_hidden_units") cfg.subnet_hidden_units = parse_u64(key, value);
    else if (key == "subnet_hidden_layers") cfg.subnet_hidden_layers = parse_u64(key, value);
    else if (key == "clamp") cfg.clamp = parse_double(key, value);
    else if (key == "summary_kind") cfg.summary_kind = value;
    else if (key == "summary_dim") cfg.summary_dim = parse_u64(key, value);
    else if (key == "summary_head_hidden") cfg.summary_head_hidden = parse_u64(key, value);
    else if (key == "invariant_equivariant_layers") cfg.invariant_equivariant_layers = parse_u64(key, value);
    else if (key == "invariant_hidden_units") cfg.invariant_hidden_units = parse_u64(key, value);
    else if (key == "temporal_channels") cfg.temporal_channels = parse_size_list(key, value);
    else if (key == "temporal_min_length") cfg.temporal_min_length = parse_u64(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_u64(key, value);
    else if (key == "epochs") cfg.epochs = parse_u64(key, value);
    else if (key == "iterations_per_epoch") cfg.iterations_per_epoch = parse_u64(key, value);
    else if (key == "n_min") cfg.n_min = parse_u64(key, value);
    else if (key == "n_max") cfg.n_max = parse_u64(key, value);
    else if (key == "learning_rate") cfg.learning_rate = parse_double(key, value);
    else if (key == "lr_decay") cfg.lr_decay = parse_double(key, value);
    else if (key == "grad_clip") cfg.grad_clip = parse_double(key, value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = parse_u64(key, value);
    else if (key == "threads") cfg.threads = parse_u64(key, value);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "mvn_dim") cfg.mvn_dim = parse_u64(key, value);
    else if (key == "mvn_cov") cfg.mvn_cov = value;
    else if (key == "gmm_center_radius") cfg.gmm_center_radius = parse_double(key, value);
    else if (key == "gmm_cluster_std") cfg.gmm_cluster_std = parse_double(key, value);
    else if (key == "ricker_dummy") cfg.ricker_dummy = parse_bool(key, value);
    else throw ConfigError("unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

RunConfig RunConfig::resolved() const {
  RunConfig cfg = *this;
  static const std::map<std::string,
                        std::tuple<std::string, std::size_t, std::size_t>>
      defaults = {
          {"mvn", {"identity", 1, 1}},
          {"gmm", {"identity", 1, 1}},
          {"ricker", {"temporal", 100, 500}},
          {"sir", {"temporal", 200, 500}},
          {"lv", {"temporal", 500, 500}},
          {"lv_handcrafted", {"handcrafted", 500, 500}},
      };
  auto it = defaults.find(cfg.model);
  if (it == defaults.end()) {
    throw ConfigError("unknown or missing model '" + cfg.model + "'");
  }
  const auto& [kind, n_min, n_max] = it->second;
  if (cfg.summary_kind == "auto") cfg.summary_kind = kind;
  if (cfg.n_min == 0) cfg.n_min = n_min;
  if (cfg.n_max == 0) cfg.n_max = n_max;

  if (cfg.summary_kind != "identity" && cfg.summary_kind != "invariant" &&
      cfg.summary_kind != "temporal" && cfg.summary_kind != "handcrafted") {
    throw ConfigError("unknown summary_kind '" + cfg.summary_kind + "'");
  }
  if (cfg.mvn_cov != "kms" && cfg.mvn_cov != "identity") {
    throw ConfigError("mvn_cov must be 'kms' or 'identity'");
  }
  if (cfg.n_min > cfg.n_max) throw ConfigError("n_min exceeds n_max");
  if (cfg.num_coupling_blocks == 0) {
    throw ConfigError("num_coupling_blocks must be >= 1");
  }
  if (!(cfg.clamp > 0.0)) throw ConfigError("clamp must be > 0");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(cfg.lr_decay > 0.0 && cfg.lr_decay <= 1.0)) {
    throw ConfigError("lr_decay must lie in (0, 1]");
  }
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (cfg.checkpoint_every == 0) cfg.checkpoint_every = 1;
  return cfg;
}

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  out << "model = " << model << "\n";
  out << "seed = " << seed << "\n";
  out << "num_coupling_blocks = " << num_coupling_blocks << "\n";
  out << "subnet_hidden_units = " << subnet_hidden_units << "\n";
  out << "subnet_hidden_layers = " << subnet_hidden_layers << "\n";
  out << "clamp = " << format_double(clamp) << "\n";
  out << "summary_kind = " << summary_kind << "\n";
  out << "summary_dim = " << summary_dim << "\n";
  out << "summary_head_hidden = " << summary_head_hidden << "\n";
  out << "invariant_equivariant_layers = " << invariant_equivariant_layers
      << "\n";
  out << "invariant_hidden_units = " << invariant_hidden_units << "\n";
  out << "temporal_channels = " << format_size_list(temporal_channels) << "\n";
  out << "temporal_min_length = " << temporal_min_length << "\n";
  out << "batch_size = " << batch_size << "\n";
  out << "epochs = " << epochs << "\n";
  out << "iterations_per_epoch = " << iterations_per_epoch << "\n";
  out << "n_min = " << n_min << "\n";
  out << "n_max = " << n_max << "\n";
  out << "learning_rate = " << format_double(learning_rate) << "\n";
  out << "lr_decay = " << format_double(lr_decay) << "\n";
  out << "grad_clip = " << format_double(grad_clip) << "\n";
  out << "checkpoint_every = " << checkpoint_every << "\n";
  // out_dir and threads are execution details, not part of the trained
  // artifact, so they stay out of the canonical form and the hash.
  out << "mvn_dim = " << mvn_dim << "\n";
  out << "mvn_cov = " << mvn_cov << "\n";
  out << "gmm_center_radius = " << format_double(gmm_center_radius) << "\n";
  out << "gmm_cluster_std = " << format_double(gmm_cluster_std) << "\n";
  out << "ricker_dummy = " << (ricker_dummy ? "true" : "false") << "\n";
  return out.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical_text()); }

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace flowinfer
