#include "fednet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <regex>

#include "fednet/error.hpp"
#include "fednet/rng.hpp"

namespace fednet {

SyntheticSpec synthetic_node_spec(int node_id, std::size_t raw_length, std::uint64_t seed) {
  Rng rng = make_rng(seed, "synthetic-spec", static_cast<std::uint64_t>(node_id));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SyntheticSpec spec;
  spec.length = raw_length;
  spec.base_level = 2.0e4 + 1.0e5 * u(rng);
  const double b = spec.base_level;
  spec.diurnal_amplitude = (0.25 + 0.2 * u(rng)) * b;
  spec.diurnal_period_samples = 24;
  spec.slow_amplitude = (0.2 + 0.15 * u(rng)) * b;
  spec.slow_period_samples = 400 + static_cast<std::size_t>(500.0 * u(rng));
  spec.slow_phase = 2.0 * std::numbers::pi * u(rng);
  spec.trend_per_sample = (u(rng) - 0.5) * 0.2 * b / static_cast<double>(raw_length);
  spec.drift_std = (0.1 + 0.1 * u(rng)) * b;
  spec.drift_correlation_samples = 120.0 + 120.0 * u(rng);
  spec.noise_std = 0.12 * b;
  spec.spike_probability = 0.003;
  spec.spike_magnitude = 2.5 * b;
  spec.seed = derive_seed(seed, "synthetic", static_cast<std::uint64_t>(node_id));
  return spec;
}

std::vector<NodeSeries> generate_corpus(const CorpusOptions& options) {
  if (!(options.scale > 0.0)) throw ConfigError("corpus scale must be positive");
  std::vector<NodeSeries> corpus;
  for (std::size_t k = 0; k < kReferenceNodeLengths.size(); ++k) {
    const int node = static_cast<int>(k + 1);
    const auto scaled = static_cast<std::size_t>(
        std::floor(options.scale * static_cast<double>(kReferenceNodeLengths[k]) + 1e-9));
    const std::size_t processed = std::max(scaled, options.min_length);
    corpus.push_back(generate_synthetic(
        synthetic_node_spec(node, processed * options.resample_window, options.seed), node));
  }
  return corpus;
}

std::filesystem::path node_file_name(int node_id) {
  return "node_" + std::to_string(node_id) + ".csv";
}

std::vector<NodeSeries> load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("data directory not found: " + dir.string());
  const std::regex pattern(R"(node_(\d+)\.csv)");
  std::vector<NodeSeries> corpus;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, pattern))
      corpus.push_back(ingest_series(entry.path(), std::stoi(m[1].str())));
  }
  if (corpus.empty()) throw DataError("no node_<k>.csv files in " + dir.string());
  std::sort(corpus.begin(), corpus.end(),
            [](const NodeSeries& a, const NodeSeries& b) { return a.node_id < b.node_id; });
  return corpus;
}

ClientData make_client(const NodeSeries& raw, const PreprocessConfig& preprocess,
                       const SplitSpec& split, std::size_t h, std::size_t p) {
  PreprocessResult pre = preprocess_pipeline(raw, preprocess);
  ClientData client;
  client.node_id = raw.node_id;
  client.scaler = pre.scaler;
  client.series_length = pre.scaled.size();
  client.split = split_chronological(make_windows(pre.scaled, h, p), split);
  return client;
}

std::vector<ClientData> make_clients(std::span<const NodeSeries> raw,
                                     const PreprocessConfig& preprocess, const SplitSpec& split,
                                     std::size_t h, std::size_t p) {
  std::vector<ClientData> clients;
  clients.reserve(raw.size());
  for (const auto& series : raw) clients.push_back(make_client(series, preprocess, split, h, p));
  return clients;
}

std::map<int, Eigen::MatrixXd> forecasts_by_node(std::span<const ClientPredictions> predictions,
                                                 bool actual) {
  std::map<int, Eigen::MatrixXd> out;
  for (const auto& cp : predictions) out[cp.node_id] = actual ? cp.actual : cp.predicted;
  return out;
}

LinkRiskResult identify_high_load_links(const Topology& topology,
                                        std::span<const ClientPredictions> predictions,
                                        double beta, std::size_t q,
                                        LinkAggregation aggregation) {
  const PathTable paths = all_pairs_paths(topology);
  const AlignedForecasts pred = align_truncate(forecasts_by_node(predictions, false));
  const AlignedForecasts act = align_truncate(forecasts_by_node(predictions, true));
  LinkRiskResult result;
  result.predicted = accumulate_link_traffic(pred, topology, paths, aggregation);
  result.actual = accumulate_link_traffic(act, topology, paths, aggregation);
  result.report = build_link_report(result.predicted, result.actual, beta, q);
  result.clamped = pred.clamped;
  return result;
}

}  // namespace fednet
