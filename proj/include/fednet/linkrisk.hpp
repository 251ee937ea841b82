#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fednet/topology.hpp"

namespace fednet {

/// Node forecasts cut to a common number of sequences.  values[k] is a
/// p x M matrix for node_ids[k]; column m is sequence m.
struct AlignedForecasts {
  std::vector<int> node_ids;
  std::size_t sequences = 0;
  std::size_t horizon = 0;
  std::vector<Eigen::MatrixXd> values;
  // Negative forecasts that were clamped to zero.
  std::size_t clamped = 0;

  const Eigen::MatrixXd& of(int node_id) const;
};

/// Keeps the first M = min_k M_k sequences of every node and clamps
/// negative values to zero.  Input matrices are p x M_k.
AlignedForecasts align_truncate(const std::map<int, Eigen::MatrixXd>& per_node);

/// Share of a node's traffic sent to each of the other num_nodes - 1 nodes.
double split_pair_traffic(double traffic, std::size_t num_nodes);

/// Per-arc statistics, or merged per undirected link.
enum class LinkAggregation { Arcs, Undirected };

LinkAggregation parse_link_aggregation(const std::string& text);

/// tau(link, t, m): predicted load per link, horizon step and sequence.
struct LinkTrafficCube {
  std::vector<std::string> labels;
  std::size_t sequences = 0;
  std::size_t horizon = 0;
  std::vector<Eigen::MatrixXd> traffic;  // per link, p x M
};

/// Routes every ordered pair's share along its path and sums per link.
LinkTrafficCube accumulate_link_traffic(const AlignedForecasts& forecasts,
                                        const Topology& topology, const PathTable& paths,
                                        LinkAggregation aggregation = LinkAggregation::Arcs);

/// Mean and population standard deviation over the horizon of every
/// (link, sequence); both are links x M.
struct SequenceStats {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std_dev;
};

SequenceStats sequence_stats(const LinkTrafficCube& cube);

struct AggregateStats {
  std::vector<double> mean_bar;
  std::vector<double> std_bar;
};

/// Averages of the per-sequence statistics over all sequences.
AggregateStats aggregate_stats(const SequenceStats& stats);

/// zeta = beta * mean/max(mean) + (1 - beta) * std/max(std).  A term
/// whose maximum is zero contributes zero.
std::vector<double> link_utilization_scores(const std::vector<double>& mean_bar,
                                            const std::vector<double>& std_bar,
                                            double beta = 0.5);

/// Indices of the top q links by descending score, ties by label.
std::vector<std::size_t> rank_links(const std::vector<std::string>& labels,
                                    const std::vector<double>& scores, std::size_t q);

struct LinkScores {
  std::vector<double> mean_bar;
  std::vector<double> std_bar;
  std::vector<double> norm_mean;
  std::vector<double> norm_std;
  std::vector<double> zeta;
  std::vector<std::size_t> order;  // full ranking, best first
  std::vector<std::size_t> rank;   // 1-based rank of each link
};

LinkScores score_links(const LinkTrafficCube& cube, double beta = 0.5);

struct LinkScoreReport {
  std::vector<std::string> labels;
  double beta = 0.5;
  std::size_t q = 6;
  LinkScores predicted;
  LinkScores actual;

  std::vector<std::size_t> top_predicted() const;
  std::vector<std::size_t> top_actual() const;
};

LinkScoreReport build_link_report(const LinkTrafficCube& predicted,
                                  const LinkTrafficCube& actual, double beta, std::size_t q);

struct RepresentativeSequence {
  std::size_t sequence = 0;
  Eigen::VectorXd predicted;
  Eigen::VectorXd actual;
};

/// Sequence of `link` maximizing beta * mean + (1 - beta) * std on the
/// predicted cube (first index on ties), with the matching actual trace.
RepresentativeSequence most_utilized_sequence(const LinkTrafficCube& predicted,
                                              const LinkTrafficCube& actual, std::size_t link,
                                              double beta = 0.5);

struct RankingComparison {
  double top_overlap = 0.0;  // |top_q(pred) & top_q(actual)| / q
  double spearman = 0.0;     // over the full rankings
  std::string table;
};

RankingComparison compare_actual_predicted(const LinkScoreReport& report);
RankingComparison compare_rankings(const std::vector<std::string>& labels,
                                   const LinkScores& predicted, const LinkScores& actual,
                                   std::size_t q);

/// link_scores_{h}_{p}.csv, top_q.csv and one link_{label}_sequence.csv
/// per top-q predicted link, written into `dir`.
void write_link_outputs(const std::filesystem::path& dir, const LinkScoreReport& report,
                        const LinkTrafficCube& predicted, const LinkTrafficCube& actual,
                        std::size_t h, std::size_t p);

}  // namespace fednet
