#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fednet/federation.hpp"
#include "fednet/linkrisk.hpp"
#include "fednet/topology.hpp"
#include "fednet/traffic_data.hpp"
#include "fednet/windowing.hpp"

namespace fednet {

/// Every knob of a run.  Defaults follow the reference setup: batch 256,
/// learning rate 0.001, 50 rounds, dropout 0.2, beta 0.5, top-6 links.
struct RunConfig {
  std::string data_dir = "data/synthetic";
  std::string topology = "data/brain.edges";
  std::string output_dir = "out";

  std::vector<std::size_t> h_values{12, 8, 4, 1};
  std::vector<std::size_t> p_values{12, 8, 4, 1};
  std::vector<std::uint64_t> seeds{42};

  std::size_t rounds = 50;
  std::size_t hidden_size = 64;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double dropout = 0.2;
  double clip_norm = 5.0;
  std::size_t jobs = 1;

  double beta = 0.5;
  std::size_t q = 6;
  std::string topology_mode = "undirected";  // directed | undirected
  std::string link_aggregation = "arcs";     // arcs | undirected
  std::string scaler_scope = "train";        // train | full
  std::string weight_by = "windows";         // windows | raw_samples

  std::size_t resample_window = 6;
  double iqr_q_low = 0.20;
  double iqr_q_high = 0.80;
  double iqr_k = 1.5;
  std::size_t ma_window = 28;
  double train_frac = 0.70;
  double val_frac_of_train = 0.20;

  std::uint64_t data_seed = 7;
  double data_scale = 1.0;

  /// Throws ConfigError on any out-of-range value or unknown enum text.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// JSON object with exactly the RunConfig field names; unknown keys are
/// rejected, missing keys keep their defaults.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);

PreprocessConfig preprocess_config(const RunConfig& config);
SplitSpec split_spec(const RunConfig& config);
FederationConfig federation_config(const RunConfig& config, std::uint64_t seed);
TopologyMode topology_mode(const RunConfig& config);
LinkAggregation link_aggregation(const RunConfig& config);

}  // namespace fednet
