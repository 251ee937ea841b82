#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fednet/error.hpp"
#include "fednet/experiment.hpp"
#include "fednet/federation.hpp"

namespace fednet {
namespace {

std::vector<ClientUpdate> random_updates(std::mt19937_64& rng, std::size_t k, std::size_t len) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 500);
  std::vector<ClientUpdate> out(k);
  for (auto& u : out) {
    u.weights.resize(len);
    for (double& w : u.weights) w = g(rng);
    u.sample_count = count(rng);
  }
  return out;
}

TEST(FedAvg, SingleClientUnchanged) {
  const std::vector<ClientUpdate> u{{{0.1, -7.25, 3e5}, 17}};
  EXPECT_EQ(fedavg_aggregate(u), u[0].weights);
}

TEST(FedAvg, WeightedMean) {
  const std::vector<ClientUpdate> u{{{1.0}, 1}, {{3.0}, 3}};
  EXPECT_EQ(fedavg_aggregate(u), (WeightVector{2.5}));
}

TEST(FedAvg, IdenticalClientsFixedPoint) {
  const WeightVector w{0.5, -1.5, 2.0};
  const std::vector<ClientUpdate> u{{w, 2}, {w, 5}, {w, 9}};
  const auto out = fedavg_aggregate(u);
  for (std::size_t j = 0; j < w.size(); ++j) EXPECT_NEAR(out[j], w[j], 1e-15);
}

TEST(FedAvg, Errors) {
  EXPECT_THROW(fedavg_aggregate({}), DataError);
  const std::vector<ClientUpdate> mismatch{{{1.0}, 1}, {{1.0, 2.0}, 1}};
  EXPECT_THROW(fedavg_aggregate(mismatch), DataError);
  const std::vector<ClientUpdate> zero{{{1.0}, 0}};
  EXPECT_THROW(fedavg_aggregate(zero), DataError);
}

TEST(FedAvg, PermutationInvarianceProperty) {
  std::mt19937_64 rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    auto u = random_updates(rng, 2 + trial % 8, 16);
    const auto base = fedavg_aggregate(u);
    std::shuffle(u.begin(), u.end(), rng);
    const auto shuffled = fedavg_aggregate(u);
    for (std::size_t j = 0; j < base.size(); ++j) EXPECT_NEAR(base[j], shuffled[j], 1e-12);
  }
}

TEST(FedAvg, HomogeneityAndCountScalingProperty) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    auto u = random_updates(rng, 4, 8);
    const auto base = fedavg_aggregate(u);
    auto scaled_w = u;
    auto scaled_n = u;
    for (auto& x : scaled_w)
      for (double& w : x.weights) w *= 3.0;
    for (auto& x : scaled_n) x.sample_count *= 7.0;
    const auto a = fedavg_aggregate(scaled_w);
    const auto b = fedavg_aggregate(scaled_n);
    for (std::size_t j = 0; j < base.size(); ++j) {
      EXPECT_NEAR(a[j], 3.0 * base[j], 1e-12);
      EXPECT_NEAR(b[j], base[j], 1e-12);
    }
  }
}

// Small clients over short synthetic series, kept cheap for unit runs.
std::vector<ClientData> small_clients(std::size_t count, std::size_t h, std::size_t p) {
  CorpusOptions opts;
  opts.scale = 0.25;
  auto raw = generate_corpus(opts);
  raw.resize(count);
  return make_clients(raw, PreprocessConfig{}, SplitSpec{}, h, p);
}

FederationConfig small_config(std::size_t rounds) {
  FederationConfig cfg;
  cfg.rounds = rounds;
  cfg.hidden_size = 6;
  cfg.train.batch_size = 32;
  return cfg;
}

TEST(RunFederated, OneClientMatchesCentralizedBitwise) {
  const auto clients = small_clients(1, 3, 2);
  const auto cfg = small_config(4);
  const auto fl = run_federated(clients, cfg);
  const auto cl = run_centralized(clients, cfg);
  EXPECT_EQ(get_weights(fl.model), get_weights(cl.model));
  ASSERT_EQ(fl.history.size(), cl.history.size());
  for (std::size_t r = 0; r < fl.history.size(); ++r) {
    EXPECT_EQ(fl.history[r].train_loss, cl.history[r].train_loss);
    EXPECT_EQ(fl.history[r].val_loss, cl.history[r].val_loss);
  }
}

TEST(RunFederated, IdenticalClientsAverageToEitherClient) {
  // Full-batch, dropout-free training makes both local updates equal up to
  // the summation order of the shuffled batch.
  auto clients = small_clients(1, 2, 1);
  auto twin = clients.front();
  twin.node_id = 2;
  clients.push_back(twin);
  auto cfg = small_config(3);
  cfg.dropout = 0.0;
  cfg.train.batch_size = 100000;
  const auto pair = run_federated(clients, cfg);
  const auto single = run_federated(std::span(clients).first(1), cfg);
  const auto a = get_weights(pair.model);
  const auto b = get_weights(single.model);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-10);
}

TEST(RunFederated, ParallelMatchesSequential) {
  const auto clients = small_clients(4, 2, 2);
  auto cfg = small_config(3);
  const auto seq = run_federated(clients, cfg);
  cfg.jobs = 4;
  const auto par = run_federated(clients, cfg);
  EXPECT_EQ(get_weights(seq.model), get_weights(par.model));
}

TEST(RunFederated, ClientOrderDoesNotMatter) {
  auto clients = small_clients(3, 2, 1);
  const auto cfg = small_config(2);
  const auto a = run_federated(clients, cfg);
  std::reverse(clients.begin(), clients.end());
  const auto b = run_federated(clients, cfg);
  EXPECT_EQ(get_weights(a.model), get_weights(b.model));
}

TEST(RunFederated, HistoryAndPredictions) {
  const auto clients = small_clients(3, 2, 3);
  const auto res = run_federated(clients, small_config(5));
  ASSERT_EQ(res.history.size(), 5u);
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_EQ(res.history[r].round, r + 1);
    EXPECT_TRUE(std::isfinite(res.history[r].train_loss));
  }
  EXPECT_LE(res.history.back().val_loss, res.history.front().val_loss);
  ASSERT_EQ(res.predictions.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(res.predictions[k].node_id, static_cast<int>(k + 1));
    EXPECT_EQ(res.predictions[k].predicted.rows(), 3);
    EXPECT_EQ(res.predictions[k].actual.cols(),
              static_cast<Eigen::Index>(clients[k].split.test.size()));
  }
}

TEST(RunFederated, ActualsAreInOriginalUnits) {
  const auto clients = small_clients(1, 2, 1);
  const auto res = run_federated(clients, small_config(1));
  const auto& c = clients.front();
  EXPECT_NEAR(res.predictions[0].actual(0, 0), c.scaler.invert(c.split.test.targets(0, 0)), 1e-9);
  EXPECT_GT(res.predictions[0].actual.mean(), 1000.0);
}

TEST(RunFederated, RejectsMismatchedWindowsAndDuplicates) {
  auto clients = small_clients(2, 2, 1);
  auto other = small_clients(1, 3, 1);
  clients[1] = other[0];
  clients[1].node_id = 2;
  EXPECT_THROW(run_federated(clients, small_config(1)), DataError);

  auto dup = small_clients(2, 2, 1);
  dup[1].node_id = dup[0].node_id;
  EXPECT_THROW(run_federated(dup, small_config(1)), DataError);
  EXPECT_THROW(run_federated({}, small_config(1)), DataError);
}

TEST(ClientWeight, WindowsOrRawSamples) {
  const auto c = small_clients(1, 2, 1).front();
  EXPECT_EQ(client_weight(c, WeightBy::Windows), static_cast<double>(c.split.train.size()));
  EXPECT_EQ(client_weight(c, WeightBy::RawSamples), static_cast<double>(c.series_length));
}

TEST(RunCentralized, PoolsEveryClient) {
  const auto clients = small_clients(3, 2, 1);
  const auto res = run_centralized(clients, small_config(2));
  EXPECT_EQ(res.history.size(), 2u);
  EXPECT_EQ(res.predictions.size(), 3u);

  std::vector<const WindowedDataset*> parts;
  std::size_t total = 0;
  for (const auto& c : clients) {
    parts.push_back(&c.split.train);
    total += c.split.train.size();
  }
  EXPECT_EQ(concatenate(parts).size(), total);
}

}  // namespace
}  // namespace fednet
