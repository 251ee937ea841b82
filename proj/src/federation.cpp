#include "fednet/federation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "fednet/error.hpp"

namespace fednet {

namespace {

// Client indices sorted by node id; rejects duplicates.
std::vector<std::size_t> sorted_order(std::span<const ClientData> clients) {
  if (clients.empty()) throw DataError("at least one client is required");
  std::vector<std::size_t> order(clients.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return clients[a].node_id < clients[b].node_id;
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (clients[order[k]].node_id == clients[order[k - 1]].node_id)
      throw DataError("duplicate client node id " + std::to_string(clients[order[k]].node_id));
  }
  return order;
}

void check_clients(std::span<const ClientData> clients, std::size_t h, std::size_t p) {
  for (const auto& c : clients) {
    if (c.split.train.h != h || c.split.train.p != p)
      throw DataError("clients do not share the same (h, p)");
    if (c.split.train.empty() || c.split.val.empty() || c.split.test.empty())
      throw DataError("client " + std::to_string(c.node_id) + " has an empty partition");
  }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.  Each index is
// handled by exactly one thread; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> threads;
  for (std::size_t t = 0; t < std::min(jobs, n); ++t) threads.emplace_back(worker);
  threads.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

WeightVector fedavg_aggregate(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw DataError("fedavg_aggregate: no client updates");
  const std::size_t length = updates.front().weights.size();
  double total = 0.0;
  for (const auto& u : updates) {
    if (u.weights.size() != length)
      throw DataError("fedavg_aggregate: weight vectors differ in length");
    if (!(u.sample_count > 0.0))
      throw DataError("fedavg_aggregate: sample counts must be positive");
    total += u.sample_count;
  }
  WeightVector global(length);
  const double alpha0 = updates.front().sample_count / total;
  for (std::size_t j = 0; j < length; ++j) global[j] = alpha0 * updates.front().weights[j];
  for (std::size_t k = 1; k < updates.size(); ++k) {
    const double alpha = updates[k].sample_count / total;
    const auto& w = updates[k].weights;
    for (std::size_t j = 0; j < length; ++j) global[j] += alpha * w[j];
  }
  return global;
}

ModelShape model_shape(const FederationConfig& config, std::size_t h, std::size_t p) {
  ModelShape shape{config.hidden_size, h, p, config.dropout};
  shape.validate();
  return shape;
}

double client_weight(const ClientData& client, WeightBy weight_by) {
  return weight_by == WeightBy::Windows ? static_cast<double>(client.split.train.size())
                                        : static_cast<double>(client.series_length);
}

std::vector<ClientPredictions> predict_clients(const Seq2SeqModel& model,
                                               std::span<const ClientData> clients) {
  std::vector<ClientPredictions> out;
  out.reserve(clients.size());
  for (std::size_t k : sorted_order(clients)) {
    const ClientData& c = clients[k];
    ClientPredictions cp;
    cp.node_id = c.node_id;
    cp.predicted = predict(model, c.split.test.inputs)
                       .unaryExpr([&](double z) { return c.scaler.invert(z); });
    cp.actual = c.split.test.targets.unaryExpr([&](double z) { return c.scaler.invert(z); });
    out.push_back(std::move(cp));
  }
  return out;
}

TrainingResult run_federated(std::span<const ClientData> clients,
                             const FederationConfig& config) {
  const auto order = sorted_order(clients);
  const std::size_t h = clients.front().split.train.h;
  const std::size_t p = clients.front().split.train.p;
  check_clients(clients, h, p);
  const ModelShape shape = model_shape(config, h, p);

  Seq2SeqModel global = init_model(shape, derive_seed(config.seed, "init"));

  struct LocalState {
    AdamState adam;
    Rng rng;
    double weight = 0.0;
  };
  std::vector<LocalState> local;
  double total_weight = 0.0;
  for (std::size_t k : order) {
    const ClientData& c = clients[k];
    local.push_back({AdamState{}, make_rng(config.seed, "train", static_cast<std::uint64_t>(c.node_id)),
                     client_weight(c, config.weight_by)});
    total_weight += local.back().weight;
  }

  TrainingResult result{global, {}, {}};
  std::vector<ClientUpdate> updates(order.size());
  std::vector<double> losses(order.size());
  for (std::size_t round = 1; round <= config.rounds; ++round) {
    const WeightVector broadcast = get_weights(global);
    parallel_for(order.size(), config.jobs, [&](std::size_t i) {
      const ClientData& c = clients[order[i]];
      Seq2SeqModel model(shape);
      set_weights(model, broadcast);
      try {
        losses[i] = train_epoch(model, local[i].adam, c.split.train, config.train, local[i].rng);
      } catch (const DivergenceError& e) {
        throw DivergenceError("round " + std::to_string(round) + ", client " +
                              std::to_string(c.node_id) + ": " + e.what());
      }
      updates[i] = {get_weights(model), local[i].weight};
    });
    set_weights(global, fedavg_aggregate(updates));

    RoundRecord record{round, 0.0, 0.0};
    for (std::size_t i = 0; i < order.size(); ++i) {
      const ClientData& c = clients[order[i]];
      const double alpha = local[i].weight / total_weight;
      record.train_loss += alpha * losses[i];
      record.val_loss += alpha * mse_loss(predict(global, c.split.val.inputs), c.split.val.targets);
    }
    if (!std::isfinite(record.val_loss))
      throw DivergenceError("round " + std::to_string(round) + ": non-finite validation loss");
    result.history.push_back(record);
  }
  result.model = global;
  result.predictions = predict_clients(global, clients);
  return result;
}

TrainingResult run_centralized(std::span<const ClientData> clients,
                               const FederationConfig& config) {
  const auto order = sorted_order(clients);
  const std::size_t h = clients.front().split.train.h;
  const std::size_t p = clients.front().split.train.p;
  check_clients(clients, h, p);
  const ModelShape shape = model_shape(config, h, p);

  std::vector<const WindowedDataset*> train_parts;
  std::vector<const WindowedDataset*> val_parts;
  for (std::size_t k : order) {
    train_parts.push_back(&clients[k].split.train);
    val_parts.push_back(&clients[k].split.val);
  }
  const WindowedDataset pooled_train = concatenate(train_parts);
  const WindowedDataset pooled_val = concatenate(val_parts);

  Seq2SeqModel model = init_model(shape, derive_seed(config.seed, "init"));
  AdamState adam;
  Rng rng = make_rng(config.seed, "train",
                     static_cast<std::uint64_t>(clients[order.front()].node_id));

  TrainingResult result{model, {}, {}};
  for (std::size_t epoch = 1; epoch <= config.rounds; ++epoch) {
    RoundRecord record{epoch, 0.0, 0.0};
    try {
      record.train_loss = train_epoch(model, adam, pooled_train, config.train, rng);
    } catch (const DivergenceError& e) {
      throw DivergenceError("centralized epoch " + std::to_string(epoch) + ": " + e.what());
    }
    record.val_loss = mse_loss(predict(model, pooled_val.inputs), pooled_val.targets);
    if (!std::isfinite(record.val_loss))
      throw DivergenceError("centralized epoch " + std::to_string(epoch) +
                            ": non-finite validation loss");
    result.history.push_back(record);
  }
  result.model = model;
  result.predictions = predict_clients(model, clients);
  return result;
}

}  // namespace fednet
