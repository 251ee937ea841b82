#include "fednet/linkrisk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "fednet/error.hpp"

namespace fednet {

using Eigen::Index;
using Eigen::MatrixXd;

const MatrixXd& AlignedForecasts::of(int node_id) const {
  const auto it = std::lower_bound(node_ids.begin(), node_ids.end(), node_id);
  if (it == node_ids.end() || *it != node_id)
    throw DataError("no forecasts for node " + std::to_string(node_id));
  return values[static_cast<std::size_t>(it - node_ids.begin())];
}

AlignedForecasts align_truncate(const std::map<int, MatrixXd>& per_node) {
  if (per_node.empty()) throw DataError("align_truncate: no nodes");
  AlignedForecasts out;
  out.horizon = static_cast<std::size_t>(per_node.begin()->second.rows());
  Index m = std::numeric_limits<Index>::max();
  for (const auto& [node, values] : per_node) {
    if (values.cols() == 0)
      throw DataError("align_truncate: node " + std::to_string(node) + " has no sequences");
    if (static_cast<std::size_t>(values.rows()) != out.horizon)
      throw DataError("align_truncate: nodes disagree on the horizon");
    m = std::min(m, values.cols());
  }
  out.sequences = static_cast<std::size_t>(m);
  for (const auto& [node, values] : per_node) {
    MatrixXd kept = values.leftCols(m);
    for (Index j = 0; j < kept.size(); ++j) {
      double& v = kept.data()[j];
      if (!std::isfinite(v)) throw DataError("align_truncate: non-finite forecast");
      if (v < 0.0) {
        v = 0.0;
        ++out.clamped;
      }
    }
    out.node_ids.push_back(node);
    out.values.push_back(std::move(kept));
  }
  return out;
}

double split_pair_traffic(double traffic, std::size_t num_nodes) {
  if (num_nodes < 2) throw DataError("traffic splitting needs at least two nodes");
  if (traffic < 0.0) throw DataError("traffic must be non-negative");
  return traffic / static_cast<double>(num_nodes - 1);
}

LinkAggregation parse_link_aggregation(const std::string& text) {
  if (text == "arcs" || text == "directed") return LinkAggregation::Arcs;
  if (text == "undirected" || text == "undirected-aggregate") return LinkAggregation::Undirected;
  throw ConfigError("unknown link aggregation '" + text + "' (expected arcs|undirected)");
}

LinkTrafficCube accumulate_link_traffic(const AlignedForecasts& forecasts,
                                        const Topology& topology, const PathTable& paths,
                                        LinkAggregation aggregation) {
  if (forecasts.node_ids != topology.nodes())
    throw DataError("forecast nodes do not match the topology's node set");
  const std::size_t K = topology.node_count();

  // Map arcs onto reported links.
  std::vector<std::size_t> link_of(topology.arc_count());
  LinkTrafficCube cube;
  cube.sequences = forecasts.sequences;
  cube.horizon = forecasts.horizon;
  if (aggregation == LinkAggregation::Arcs) {
    for (std::size_t a = 0; a < topology.arc_count(); ++a) {
      link_of[a] = a;
      cube.labels.push_back(topology.arcs()[a].label);
    }
  } else {
    std::map<std::pair<int, int>, std::size_t> merged;
    for (std::size_t a = 0; a < topology.arc_count(); ++a) {
      const Arc& arc = topology.arcs()[a];
      const std::pair<int, int> key{std::min(arc.from, arc.to), std::max(arc.from, arc.to)};
      auto [it, inserted] = merged.emplace(key, cube.labels.size());
      if (inserted) cube.labels.push_back(arc_label(key.first, key.second));
      link_of[a] = it->second;
    }
  }
  cube.traffic.assign(cube.labels.size(),
                      MatrixXd::Zero(static_cast<Index>(cube.horizon),
                                     static_cast<Index>(cube.sequences)));

  for (int s : topology.nodes()) {
    const MatrixXd share = forecasts.of(s) / static_cast<double>(K - 1);
    for (int d : topology.nodes()) {
      if (s == d) continue;
      const auto it = paths.find({s, d});
      if (it == paths.end())
        throw DataError("no path for pair " + std::to_string(s) + "->" + std::to_string(d));
      for (std::size_t a : it->second.arcs) cube.traffic[link_of[a]] += share;
    }
  }
  return cube;
}

SequenceStats sequence_stats(const LinkTrafficCube& cube) {
  const Index L = static_cast<Index>(cube.traffic.size());
  const Index M = static_cast<Index>(cube.sequences);
  const double p = static_cast<double>(cube.horizon);
  SequenceStats stats{MatrixXd(L, M), MatrixXd(L, M)};
  for (Index l = 0; l < L; ++l) {
    const MatrixXd& tau = cube.traffic[static_cast<std::size_t>(l)];
    for (Index m = 0; m < M; ++m) {
      const double mean = tau.col(m).sum() / p;
      const double var = (tau.col(m).array() - mean).square().sum() / p;
      stats.mean(l, m) = mean;
      stats.std_dev(l, m) = std::sqrt(var);
    }
  }
  return stats;
}

AggregateStats aggregate_stats(const SequenceStats& stats) {
  if (stats.mean.cols() == 0) throw DataError("aggregate_stats: no sequences");
  AggregateStats agg;
  const double M = static_cast<double>(stats.mean.cols());
  for (Index l = 0; l < stats.mean.rows(); ++l) {
    agg.mean_bar.push_back(stats.mean.row(l).sum() / M);
    agg.std_bar.push_back(stats.std_dev.row(l).sum() / M);
  }
  return agg;
}

std::vector<double> link_utilization_scores(const std::vector<double>& mean_bar,
                                            const std::vector<double>& std_bar, double beta) {
  if (mean_bar.size() != std_bar.size()) throw DataError("score inputs differ in length");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  const double mean_max =
      mean_bar.empty() ? 0.0 : *std::max_element(mean_bar.begin(), mean_bar.end());
  const double std_max =
      std_bar.empty() ? 0.0 : *std::max_element(std_bar.begin(), std_bar.end());
  std::vector<double> zeta(mean_bar.size());
  for (std::size_t l = 0; l < zeta.size(); ++l) {
    const double nm = mean_max > 0.0 ? mean_bar[l] / mean_max : 0.0;
    const double ns = std_max > 0.0 ? std_bar[l] / std_max : 0.0;
    zeta[l] = beta * nm + (1.0 - beta) * ns;
  }
  return zeta;
}

std::vector<std::size_t> rank_links(const std::vector<std::string>& labels,
                                    const std::vector<double>& scores, std::size_t q) {
  if (labels.size() != scores.size()) throw DataError("labels and scores differ in length");
  if (q == 0 || q > labels.size()) {
    throw ConfigError("q=" + std::to_string(q) + " is outside [1, " +
                      std::to_string(labels.size()) + "]");
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return labels[a] < labels[b];
  });
  order.resize(q);
  return order;
}

LinkScores score_links(const LinkTrafficCube& cube, double beta) {
  const AggregateStats agg = aggregate_stats(sequence_stats(cube));
  LinkScores s;
  s.mean_bar = agg.mean_bar;
  s.std_bar = agg.std_bar;
  s.zeta = link_utilization_scores(s.mean_bar, s.std_bar, beta);
  // Normalized components are reported alongside the score.
  s.norm_mean = link_utilization_scores(s.mean_bar, s.std_bar, 1.0);
  s.norm_std = link_utilization_scores(s.mean_bar, s.std_bar, 0.0);
  s.order = rank_links(cube.labels, s.zeta, cube.labels.size());
  s.rank.assign(s.order.size(), 0);
  for (std::size_t r = 0; r < s.order.size(); ++r) s.rank[s.order[r]] = r + 1;
  return s;
}

std::vector<std::size_t> LinkScoreReport::top_predicted() const {
  return {predicted.order.begin(), predicted.order.begin() + static_cast<std::ptrdiff_t>(q)};
}

std::vector<std::size_t> LinkScoreReport::top_actual() const {
  return {actual.order.begin(), actual.order.begin() + static_cast<std::ptrdiff_t>(q)};
}

LinkScoreReport build_link_report(const LinkTrafficCube& predicted,
                                  const LinkTrafficCube& actual, double beta, std::size_t q) {
  if (predicted.labels != actual.labels)
    throw DataError("predicted and actual cubes cover different links");
  if (q == 0 || q > predicted.labels.size()) {
    throw ConfigError("q=" + std::to_string(q) + " exceeds the " +
                      std::to_string(predicted.labels.size()) + " available links");
  }
  LinkScoreReport report;
  report.labels = predicted.labels;
  report.beta = beta;
  report.q = q;
  report.predicted = score_links(predicted, beta);
  report.actual = score_links(actual, beta);
  return report;
}

RepresentativeSequence most_utilized_sequence(const LinkTrafficCube& predicted,
                                              const LinkTrafficCube& actual, std::size_t link,
                                              double beta) {
  if (link >= predicted.traffic.size() || link >= actual.traffic.size())
    throw DataError("most_utilized_sequence: link index out of range");
  if (predicted.sequences != actual.sequences || predicted.horizon != actual.horizon)
    throw DataError("most_utilized_sequence: cube shapes differ");
  const MatrixXd& tau = predicted.traffic[link];
  const double p = static_cast<double>(predicted.horizon);
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (Index m = 0; m < tau.cols(); ++m) {
    const double mean = tau.col(m).sum() / p;
    const double sd = std::sqrt((tau.col(m).array() - mean).square().sum() / p);
    const double value = beta * mean + (1.0 - beta) * sd;
    if (value > best_value) {
      best_value = value;
      best = static_cast<std::size_t>(m);
    }
  }
  return {best, tau.col(static_cast<Index>(best)),
          actual.traffic[link].col(static_cast<Index>(best))};
}

RankingComparison compare_rankings(const std::vector<std::string>& labels,
                                   const LinkScores& predicted, const LinkScores& actual,
                                   std::size_t q) {
  const std::size_t n = labels.size();
  if (predicted.rank.size() != n || actual.rank.size() != n)
    throw DataError("compare: rankings cover different link sets");
  if (q == 0 || q > n) throw ConfigError("compare: q out of range");

  RankingComparison cmp;
  std::set<std::size_t> top_pred(predicted.order.begin(),
                                 predicted.order.begin() + static_cast<std::ptrdiff_t>(q));
  std::size_t shared = 0;
  for (std::size_t r = 0; r < q; ++r) shared += top_pred.contains(actual.order[r]) ? 1 : 0;
  cmp.top_overlap = static_cast<double>(shared) / static_cast<double>(q);

  if (n >= 2) {
    double d2 = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double d = static_cast<double>(predicted.rank[l]) - static_cast<double>(actual.rank[l]);
      d2 += d * d;
    }
    const double nn = static_cast<double>(n);
    cmp.spearman = 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
  } else {
    cmp.spearman = 1.0;
  }

  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "rank  actual   zeta    predicted  zeta\n";
  for (std::size_t r = 0; r < q; ++r) {
    const std::size_t a = actual.order[r];
    const std::size_t p = predicted.order[r];
    os << std::setw(4) << r + 1 << "  " << std::left << std::setw(7) << labels[a] << std::right
       << "  " << actual.zeta[a] << "   " << std::left << std::setw(9) << labels[p]
       << std::right << "  " << predicted.zeta[p] << '\n';
  }
  os << "top-" << q << " overlap " << cmp.top_overlap << ", spearman " << cmp.spearman << '\n';
  cmp.table = os.str();
  return cmp;
}

RankingComparison compare_actual_predicted(const LinkScoreReport& report) {
  return compare_rankings(report.labels, report.predicted, report.actual, report.q);
}

void write_link_outputs(const std::filesystem::path& dir, const LinkScoreReport& report,
                        const LinkTrafficCube& predicted, const LinkTrafficCube& actual,
                        std::size_t h, std::size_t p) {
  std::filesystem::create_directories(dir);
  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
  };
  {
    auto out = open(dir / ("link_scores_" + std::to_string(h) + "_" + std::to_string(p) + ".csv"));
    out << "label,mean_bar_pred,std_bar_pred,mean_bar_actual,std_bar_actual,zeta_pred,"
           "zeta_actual,rank_pred,rank_actual\n";
    for (std::size_t l = 0; l < report.labels.size(); ++l) {
      out << report.labels[l] << ',' << report.predicted.mean_bar[l] << ','
          << report.predicted.std_bar[l] << ',' << report.actual.mean_bar[l] << ','
          << report.actual.std_bar[l] << ',' << report.predicted.zeta[l] << ','
          << report.actual.zeta[l] << ',' << report.predicted.rank[l] << ','
          << report.actual.rank[l] << '\n';
    }
  }
  {
    auto out = open(dir / "top_q.csv");
    out << "rank,actual_label,actual_zeta,predicted_label,predicted_zeta\n";
    for (std::size_t r = 0; r < report.q; ++r) {
      const std::size_t a = report.actual.order[r];
      const std::size_t pr = report.predicted.order[r];
      out << r + 1 << ',' << report.labels[a] << ',' << report.actual.zeta[a] << ','
          << report.labels[pr] << ',' << report.predicted.zeta[pr] << '\n';
    }
  }
  for (std::size_t l : report.top_predicted()) {
    const auto rep = most_utilized_sequence(predicted, actual, l, report.beta);
    auto out = open(dir / ("link_" + report.labels[l] + "_sequence.csv"));
    out << "step,predicted,actual\n";
    for (Index t = 0; t < rep.predicted.size(); ++t)
      out << t + 1 << ',' << rep.predicted(t) << ',' << rep.actual(t) << '\n';
  }
}

}  // namespace fednet
