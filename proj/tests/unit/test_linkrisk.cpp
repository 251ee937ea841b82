#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fednet/error.hpp"
#include "fednet/linkrisk.hpp"
#include "support/oracles.hpp"

namespace fednet {
namespace {

using Eigen::MatrixXd;

Topology line3() {
  return Topology::from_edges({}, {{1, 2}, {2, 3}}, TopologyMode::Undirected);
}

AlignedForecasts constant_forecasts(const Topology& t, double value, std::size_t p,
                                    std::size_t m) {
  std::map<int, MatrixXd> per_node;
  for (int v : t.nodes())
    per_node[v] = MatrixXd::Constant(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m), value);
  return align_truncate(per_node);
}

LinkTrafficCube cube_of(std::vector<MatrixXd> traffic) {
  LinkTrafficCube c;
  for (std::size_t l = 0; l < traffic.size(); ++l) c.labels.push_back("L" + std::to_string(l));
  c.horizon = static_cast<std::size_t>(traffic.front().rows());
  c.sequences = static_cast<std::size_t>(traffic.front().cols());
  c.traffic = std::move(traffic);
  return c;
}

TEST(AlignTruncate, MinimumSequenceCount) {
  std::map<int, MatrixXd> per_node{{1, MatrixXd::Ones(2, 5)},
                                   {2, MatrixXd::Ones(2, 7)},
                                   {3, MatrixXd::Ones(2, 6)}};
  const auto a = align_truncate(per_node);
  EXPECT_EQ(a.sequences, 5u);
  for (const auto& v : a.values) EXPECT_EQ(v.cols(), 5);
}

TEST(AlignTruncate, SingleNodeUnchangedAndClamp) {
  MatrixXd x(1, 3);
  x << 1.5, -0.3, 2.0;
  const auto a = align_truncate({{4, x}});
  EXPECT_EQ(a.of(4)(0, 0), 1.5);
  EXPECT_EQ(a.of(4)(0, 1), 0.0);
  EXPECT_EQ(a.clamped, 1u);
}

TEST(AlignTruncate, Errors) {
  EXPECT_THROW(align_truncate({{1, MatrixXd(2, 0)}}), DataError);
  EXPECT_THROW(align_truncate({}), DataError);
}

TEST(SplitPairTraffic, Shares) {
  EXPECT_EQ(split_pair_traffic(8.0, 9), 1.0);
  EXPECT_EQ(split_pair_traffic(0.0, 9), 0.0);
  EXPECT_THROW(split_pair_traffic(1.0, 1), DataError);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1e6);
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng);
    const std::size_t k = 2 + static_cast<std::size_t>(i % 20);
    const double sum = split_pair_traffic(x, k) * static_cast<double>(k - 1);
    EXPECT_LE(std::abs(sum - x), 1e-12 * x);
  }
}

TEST(Accumulate, LineGraphHandComputed) {
  const auto t = line3();
  const auto cube = accumulate_link_traffic(constant_forecasts(t, 1.0, 1, 1), t, all_pairs_paths(t));
  ASSERT_EQ(cube.labels, (std::vector<std::string>{"L12", "L21", "L23", "L32"}));
  for (const auto& tau : cube.traffic) EXPECT_DOUBLE_EQ(tau(0, 0), 1.0);
}

TEST(Accumulate, ZeroNodeContributesNothing) {
  const auto t = line3();
  std::map<int, MatrixXd> per_node{{1, MatrixXd::Zero(1, 1)},
                                   {2, MatrixXd::Zero(1, 1)},
                                   {3, MatrixXd::Constant(1, 1, 4.0)}};
  const auto cube = accumulate_link_traffic(align_truncate(per_node), t, all_pairs_paths(t));
  EXPECT_EQ(cube.traffic[0](0, 0), 0.0);  // L12
  EXPECT_EQ(cube.traffic[2](0, 0), 0.0);  // L23
  EXPECT_EQ(cube.traffic[3](0, 0), 4.0);  // L32: 3->2 and 3->1
  EXPECT_EQ(cube.traffic[1](0, 0), 2.0);  // L21: 3->1 only
}

TEST(Accumulate, UndirectedAggregationMergesArcs) {
  const auto t = line3();
  const auto cube = accumulate_link_traffic(constant_forecasts(t, 1.0, 1, 1), t,
                                            all_pairs_paths(t), LinkAggregation::Undirected);
  ASSERT_EQ(cube.labels, (std::vector<std::string>{"L12", "L23"}));
  EXPECT_DOUBLE_EQ(cube.traffic[0](0, 0), 2.0);
}

TEST(Accumulate, NodeSetMismatchIsAnError) {
  const auto t = line3();
  const auto f = align_truncate({{1, MatrixXd::Ones(1, 1)}, {2, MatrixXd::Ones(1, 1)}});
  EXPECT_THROW(accumulate_link_traffic(f, t, all_pairs_paths(t)), DataError);
}

TEST(Accumulate, MonotoneInOneNodeProperty) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = oracle::random_connected_graph(5, 0.3, rng);
    const auto t = Topology::from_edges({1, 2, 3, 4, 5}, g.arcs, TopologyMode::Directed);
    std::map<int, MatrixXd> per_node;
    for (int v = 1; v <= 5; ++v) per_node[v] = MatrixXd::NullaryExpr(3, 2, [&] { return u(rng); });
    const auto paths = all_pairs_paths(t);
    const auto before = accumulate_link_traffic(align_truncate(per_node), t, paths);
    per_node[2].array() += 1.0;
    const auto after = accumulate_link_traffic(align_truncate(per_node), t, paths);
    for (std::size_t l = 0; l < before.traffic.size(); ++l)
      EXPECT_TRUE((after.traffic[l].array() >= before.traffic[l].array()).all());
  }
}

TEST(SequenceStats, Examples) {
  MatrixXd constant = MatrixXd::Constant(3, 1, 2.0);
  MatrixXd two(2, 1);
  two << 0, 2;
  const auto s1 = sequence_stats(cube_of({constant}));
  EXPECT_EQ(s1.mean(0, 0), 2.0);
  EXPECT_EQ(s1.std_dev(0, 0), 0.0);
  const auto s2 = sequence_stats(cube_of({two}));
  EXPECT_EQ(s2.mean(0, 0), 1.0);
  EXPECT_EQ(s2.std_dev(0, 0), 1.0);
  const auto s3 = sequence_stats(cube_of({MatrixXd::Random(1, 4)}));
  EXPECT_TRUE(s3.std_dev.isZero(0.0));
}

TEST(AggregateStats, MeansOverSequences) {
  MatrixXd tau(2, 3);
  tau << 0, 1, 5,
         2, 1, 5;
  const auto agg = aggregate_stats(sequence_stats(cube_of({tau})));
  EXPECT_DOUBLE_EQ(agg.mean_bar[0], (1.0 + 1.0 + 5.0) / 3);
  EXPECT_DOUBLE_EQ(agg.std_bar[0], (1.0 + 0.0 + 0.0) / 3);

  const auto single = aggregate_stats(sequence_stats(cube_of({tau.leftCols(1)})));
  EXPECT_DOUBLE_EQ(single.mean_bar[0], 1.0);
  EXPECT_DOUBLE_EQ(single.std_bar[0], 1.0);
}

TEST(Scores, Examples) {
  EXPECT_EQ(link_utilization_scores({4, 2}, {2, 1}, 0.5), (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(link_utilization_scores({3, 3, 3}, {1, 1, 1}), (std::vector<double>{1, 1, 1}));
  const auto by_mean = link_utilization_scores({1, 4}, {9, 2}, 1.0);
  EXPECT_GT(by_mean[1], by_mean[0]);
  const auto by_std = link_utilization_scores({1, 4}, {9, 2}, 0.0);
  EXPECT_GT(by_std[0], by_std[1]);
  // Degenerate std maximum: the term vanishes.
  EXPECT_EQ(link_utilization_scores({2, 1}, {0, 0}), (std::vector<double>{0.5, 0.25}));
  EXPECT_THROW(link_utilization_scores({1}, {1}, 1.5), ConfigError);
}

TEST(RankLinks, Examples) {
  const std::vector<std::string> two{"L12", "L23"};
  EXPECT_EQ(rank_links(two, {0.9, 0.5}, 1), (std::vector<std::size_t>{0}));
  const std::vector<std::string> labels{"L43", "L12", "L38", "L21"};
  EXPECT_EQ(rank_links(labels, {1, 1, 1, 1}, 3), (std::vector<std::size_t>{1, 3, 2}));
  auto full = rank_links(labels, {0.2, 0.9, 0.5, 0.9}, 4);
  EXPECT_EQ(full, (std::vector<std::size_t>{1, 3, 2, 0}));
  EXPECT_THROW(rank_links(labels, {1, 1, 1, 1}, 5), ConfigError);
  EXPECT_THROW(rank_links(labels, {1, 1, 1, 1}, 0), ConfigError);
}

TEST(ScoreLinks, MatchesBruteForceOracle) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0, 5);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 4;
    const auto g = oracle::random_connected_graph(n, 0.5, rng);
    std::vector<int> nodes;
    for (int v = 1; v <= n; ++v) nodes.push_back(v);
    const auto t = Topology::from_edges(nodes, g.arcs, TopologyMode::Directed);
    const std::size_t M = 1 + trial % 3, P = 1 + trial % 4;
    std::vector<std::vector<std::vector<double>>> raw(n, std::vector<std::vector<double>>(M, std::vector<double>(P)));
    std::map<int, MatrixXd> per_node;
    for (int v = 1; v <= n; ++v) {
      MatrixXd m(P, M);
      for (std::size_t s = 0; s < M; ++s)
        for (std::size_t k = 0; k < P; ++k) m(k, s) = raw[v - 1][s][k] = u(rng);
      per_node[v] = m;
    }
    const auto cube = accumulate_link_traffic(align_truncate(per_node), t, all_pairs_paths(t));
    const auto scores = score_links(cube, 0.5);
    std::vector<std::pair<int, int>> arcs;
    for (const auto& a : t.arcs()) arcs.emplace_back(a.from, a.to);
    const auto expected = oracle::brute_force_scores(g, raw, arcs, 0.5);
    for (std::size_t l = 0; l < arcs.size(); ++l) EXPECT_NEAR(scores.zeta[l], expected[l], 1e-9);
  }
}

TEST(ScoreLinks, RankIsPermutation) {
  MatrixXd a = MatrixXd::Constant(2, 2, 1.0), b(2, 2), c = MatrixXd::Zero(2, 2);
  b << 0, 1, 2, 3;
  const auto s = score_links(cube_of({a, b, c}));
  std::vector<std::size_t> ranks = s.rank;
  std::sort(ranks.begin(), ranks.end());
  EXPECT_EQ(ranks, (std::vector<std::size_t>{1, 2, 3}));
  for (double z : s.zeta) {
    EXPECT_GE(z, 0.0);
    EXPECT_LE(z, 1.0);
  }
  EXPECT_EQ(s.norm_mean[1], 1.0);
}

TEST(MostUtilized, SelectsDominantSequence) {
  MatrixXd tau(2, 3);
  tau << 1, 5, 2,
         1, 9, 2;
  const MatrixXd actual = tau * 2.0;
  const auto pick = most_utilized_sequence(cube_of({tau}), cube_of({actual}), 0);
  EXPECT_EQ(pick.sequence, 1u);
  EXPECT_EQ(pick.predicted(1), 9.0);
  EXPECT_EQ(pick.actual(1), 18.0);

  const auto single = most_utilized_sequence(cube_of({tau.leftCols(1)}), cube_of({tau.leftCols(1)}), 0);
  EXPECT_EQ(single.sequence, 0u);
}

TEST(MostUtilized, MatchesExhaustiveScan) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd tau = MatrixXd::NullaryExpr(4, 6, [&] { return u(rng); });
    std::size_t best = 0;
    double best_v = -1;
    for (int m = 0; m < 6; ++m) {
      double mean = 0, var = 0;
      for (int t = 0; t < 4; ++t) mean += tau(t, m) / 4;
      for (int t = 0; t < 4; ++t) var += (tau(t, m) - mean) * (tau(t, m) - mean) / 4;
      const double v = 0.5 * mean + 0.5 * std::sqrt(var);
      if (v > best_v) {
        best_v = v;
        best = static_cast<std::size_t>(m);
      }
    }
    EXPECT_EQ(most_utilized_sequence(cube_of({tau}), cube_of({tau}), 0).sequence, best);
  }
}

TEST(CompareRankings, IdenticalAndReversed) {
  MatrixXd a = MatrixXd::Constant(1, 1, 1.0), b = MatrixXd::Constant(1, 1, 2.0),
           c = MatrixXd::Constant(1, 1, 3.0);
  const auto forward = cube_of({a, b, c});
  const auto backward = cube_of({c, b, a});
  const auto same = compare_actual_predicted(build_link_report(forward, forward, 0.5, 2));
  EXPECT_EQ(same.top_overlap, 1.0);
  EXPECT_DOUBLE_EQ(same.spearman, 1.0);
  const auto rev = compare_actual_predicted(build_link_report(forward, backward, 0.5, 1));
  EXPECT_DOUBLE_EQ(rev.spearman, -1.0);
  EXPECT_EQ(rev.top_overlap, 0.0);
  EXPECT_THROW(build_link_report(forward, backward, 0.5, 4), ConfigError);
}

TEST(WriteLinkOutputs, FilesAndTopTable) {
  const auto t = line3();
  const auto f = constant_forecasts(t, 3.0, 4, 2);
  const auto cube = accumulate_link_traffic(f, t, all_pairs_paths(t));
  const auto report = build_link_report(cube, cube, 0.5, 2);
  const auto dir = std::filesystem::temp_directory_path() / "fednet_unit_links";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_link_outputs(dir, report, cube, cube, 1, 4);
  EXPECT_TRUE(std::filesystem::exists(dir / "link_scores_1_4.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "top_q.csv"));
  std::ifstream top(dir / "top_q.csv");
  std::size_t rows = 0;
  for (std::string line; std::getline(top, line);) ++rows;
  EXPECT_EQ(rows, 3u);  // header + q rows
  const auto label = report.labels[report.top_predicted().front()];
  std::ifstream seq(dir / ("link_" + label + "_sequence.csv"));
  std::size_t seq_rows = 0;
  for (std::string line; std::getline(seq, line);) ++seq_rows;
  EXPECT_EQ(seq_rows, 5u);
}

}  // namespace
}  // namespace fednet
