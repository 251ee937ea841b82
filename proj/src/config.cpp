#include "fednet/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "fednet/error.hpp"

namespace fednet {

using nlohmann::json;

namespace {

#define FEDNET_CONFIG_FIELDS(X)                                                              \
  X(data_dir) X(topology) X(output_dir) X(h_values) X(p_values) X(seeds) X(rounds)            \
  X(hidden_size) X(batch_size) X(learning_rate) X(dropout) X(clip_norm) X(jobs) X(beta) X(q) \
  X(topology_mode) X(link_aggregation) X(scaler_scope) X(weight_by) X(resample_window)       \
  X(iqr_q_low) X(iqr_q_high) X(iqr_k) X(ma_window) X(train_frac) X(val_frac_of_train)        \
  X(data_seed) X(data_scale)

json to_json_object(const RunConfig& c) {
  json j;
#define X(name) j[#name] = c.name;
  FEDNET_CONFIG_FIELDS(X)
#undef X
  return j;
}

void require_one_of(const std::string& key, const std::string& value,
                    std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string msg = key + ": '" + value + "' is not one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw ConfigError(msg);
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(rounds, "rounds");
  positive(hidden_size, "hidden_size");
  positive(batch_size, "batch_size");
  positive(jobs, "jobs");
  positive(q, "q");
  positive(resample_window, "resample_window");
  positive(ma_window, "ma_window");
  if (h_values.empty() || p_values.empty()) throw ConfigError("h_values and p_values must be non-empty");
  for (std::size_t v : h_values) positive(v, "h_values entries");
  for (std::size_t v : p_values) positive(v, "p_values entries");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(iqr_q_low >= 0.0 && iqr_q_low < iqr_q_high && iqr_q_high <= 1.0))
    throw ConfigError("iqr quantiles must satisfy 0 <= q_low < q_high <= 1");
  if (!(iqr_k >= 0.0)) throw ConfigError("iqr_k must be non-negative");
  if (!(data_scale > 0.0)) throw ConfigError("data_scale must be positive");
  split_spec(*this).validate();
  require_one_of("topology_mode", topology_mode, {"directed", "undirected"});
  require_one_of("link_aggregation", link_aggregation, {"arcs", "undirected"});
  require_one_of("scaler_scope", scaler_scope, {"train", "full"});
  require_one_of("weight_by", weight_by, {"windows", "raw_samples"});
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::set<std::string> known = [] {
    std::set<std::string> s;
#define X(name) s.insert(#name);
    FEDNET_CONFIG_FIELDS(X)
#undef X
    return s;
  }();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig c;
  try {
#define X(name) \
  if (j.contains(#name)) j.at(#name).get_to(c.name);
    FEDNET_CONFIG_FIELDS(X)
#undef X
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
  return to_json_object(config).dump(2) + "\n";
}

PreprocessConfig preprocess_config(const RunConfig& c) {
  PreprocessConfig p;
  p.resample_window = c.resample_window;
  p.q_low = c.iqr_q_low;
  p.q_high = c.iqr_q_high;
  p.iqr_k = c.iqr_k;
  p.ma_window = c.ma_window;
  p.scaler_scope = c.scaler_scope == "full" ? ScalerScope::Full : ScalerScope::Train;
  p.train_fraction = c.train_frac * (1.0 - c.val_frac_of_train);
  return p;
}

SplitSpec split_spec(const RunConfig& c) { return {c.train_frac, c.val_frac_of_train}; }

FederationConfig federation_config(const RunConfig& c, std::uint64_t seed) {
  FederationConfig f;
  f.rounds = c.rounds;
  f.hidden_size = c.hidden_size;
  f.dropout = c.dropout;
  f.train.batch_size = c.batch_size;
  f.train.learning_rate = c.learning_rate;
  f.train.clip_norm = c.clip_norm;
  f.seed = seed;
  f.weight_by = c.weight_by == "raw_samples" ? WeightBy::RawSamples : WeightBy::Windows;
  f.jobs = c.jobs;
  return f;
}

TopologyMode topology_mode(const RunConfig& c) { return parse_topology_mode(c.topology_mode); }

LinkAggregation link_aggregation(const RunConfig& c) {
  return parse_link_aggregation(c.link_aggregation);
}

}  // namespace fednet
