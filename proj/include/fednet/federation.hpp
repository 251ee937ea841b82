#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fednet/neuralnet.hpp"
#include "fednet/traffic_data.hpp"
#include "fednet/windowing.hpp"

namespace fednet {

/// Everything a simulated client holds locally.  Raw data never leaves
/// it; only weight vectors and sample counts cross to the server.
struct ClientData {
  int node_id = 0;
  DatasetSplit split;
  Scaler scaler;
  // Length of the preprocessed series the windows were cut from.
  std::size_t series_length = 0;
};

enum class WeightBy { Windows, RawSamples };

struct FederationConfig {
  std::size_t rounds = 50;
  std::size_t hidden_size = 64;
  double dropout = 0.2;
  TrainOptions train;
  std::uint64_t seed = 42;
  WeightBy weight_by = WeightBy::Windows;
  // Clients trained concurrently per round; results do not depend on it.
  std::size_t jobs = 1;
};

struct ClientUpdate {
  WeightVector weights;
  double sample_count = 0.0;
};

/// Sample-weighted average sum_k (n_k / N) w_k.
WeightVector fedavg_aggregate(std::span<const ClientUpdate> updates);

struct RoundRecord {
  std::size_t round = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

/// Test-set forecasts of one client in original units, p x n_test.
struct ClientPredictions {
  int node_id = 0;
  Eigen::MatrixXd predicted;
  Eigen::MatrixXd actual;
};

struct TrainingResult {
  Seq2SeqModel model;
  std::vector<RoundRecord> history;
  std::vector<ClientPredictions> predictions;
};

/// Shape shared by every participant for a given configuration.
ModelShape model_shape(const FederationConfig& config, std::size_t h, std::size_t p);

/// Weight of a client in the FedAvg average.
double client_weight(const ClientData& client, WeightBy weight_by);

/// FedAvg: broadcast, one local epoch per client, aggregate; repeated
/// `rounds` times.  Each client keeps its own Adam state and its own
/// ("train", node_id) random stream across rounds.
TrainingResult run_federated(std::span<const ClientData> clients, const FederationConfig& config);

/// One model trained for `rounds` epochs on the pooled training windows
/// (concatenated in node-id order), evaluated on every client's test set.
/// The pooled trainer uses the random stream of its lowest node id.
TrainingResult run_centralized(std::span<const ClientData> clients,
                               const FederationConfig& config);

/// Global-model forecasts on every client's test windows.
std::vector<ClientPredictions> predict_clients(const Seq2SeqModel& model,
                                               std::span<const ClientData> clients);

}  // namespace fednet
