#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fednet/federation.hpp"
#include "fednet/metrics.hpp"

namespace fednet {

/// On-disk layout of one training run below the output directory:
///   runs/<mode>_h<h>_p<p>_s<seed>/{weights.txt, history.csv, predictions/node_<k>.csv}
struct RunKey {
  TrainingMode mode = TrainingMode::Federated;
  std::size_t h = 1;
  std::size_t p = 1;
  std::uint64_t seed = 42;

  std::string name() const;
};

std::filesystem::path run_dir(const std::filesystem::path& output_dir, const RunKey& key);

/// round,train_loss,val_loss
void write_history_csv(const std::filesystem::path& path, std::span<const RoundRecord> history);
std::vector<RoundRecord> read_history_csv(const std::filesystem::path& path);

/// window,step,predicted,actual; one file per client.
void write_predictions_csv(const std::filesystem::path& path, const ClientPredictions& cp);
ClientPredictions read_predictions_csv(const std::filesystem::path& path, int node_id);

void write_run(const std::filesystem::path& dir, const TrainingResult& result);

/// Prediction dumps of every client in `dir`/predictions, sorted by node id.
std::vector<ClientPredictions> read_run_predictions(const std::filesystem::path& dir);

}  // namespace fednet
