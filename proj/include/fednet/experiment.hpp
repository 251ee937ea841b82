#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "fednet/federation.hpp"
#include "fednet/linkrisk.hpp"
#include "fednet/topology.hpp"
#include "fednet/traffic_data.hpp"
#include "fednet/windowing.hpp"

namespace fednet {

/// Preprocessed (6-hour) series lengths of the nine reference nodes.
inline constexpr std::array<std::size_t, 9> kReferenceNodeLengths{845, 945,  1445, 1047, 1445,
                                                                   645, 547, 667,  967};

struct CorpusOptions {
  std::uint64_t seed = 7;
  double scale = 1.0;
  // Smallest preprocessed length a scaled node may have.
  std::size_t min_length = 34;
  // Raw samples per preprocessed sample.
  std::size_t resample_window = 6;
};

/// Generator parameters for one synthetic node with `raw_length` hourly
/// samples.  Levels, slow periods and phases vary per node, drawn from
/// the ("synthetic-spec", node_id) stream.
SyntheticSpec synthetic_node_spec(int node_id, std::size_t raw_length, std::uint64_t seed);

/// Hourly series for nodes 1..9 whose preprocessed lengths are
/// max(floor(scale * reference), min_length).
std::vector<NodeSeries> generate_corpus(const CorpusOptions& options);

/// node_<k>.csv file name used on disk.
std::filesystem::path node_file_name(int node_id);

/// Reads every node_<k>.csv in `dir`, sorted by node id.
std::vector<NodeSeries> load_corpus(const std::filesystem::path& dir);

ClientData make_client(const NodeSeries& raw, const PreprocessConfig& preprocess,
                       const SplitSpec& split, std::size_t h, std::size_t p);

std::vector<ClientData> make_clients(std::span<const NodeSeries> raw,
                                     const PreprocessConfig& preprocess, const SplitSpec& split,
                                     std::size_t h, std::size_t p);

/// Per-node p x n matrices of either the forecasts or the ground truth.
std::map<int, Eigen::MatrixXd> forecasts_by_node(std::span<const ClientPredictions> predictions,
                                                 bool actual);

struct LinkRiskResult {
  LinkTrafficCube predicted;
  LinkTrafficCube actual;
  LinkScoreReport report;
  std::size_t clamped = 0;
};

/// Node forecasts -> aligned sequences -> link cubes -> scores and ranks,
/// for both predicted and actual traffic.
LinkRiskResult identify_high_load_links(const Topology& topology,
                                        std::span<const ClientPredictions> predictions,
                                        double beta, std::size_t q,
                                        LinkAggregation aggregation = LinkAggregation::Arcs);

}  // namespace fednet
