#include "fednet/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fednet/error.hpp"

namespace fednet {

namespace {

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

// Hop distance from every node to `destination`, indexed like nodes().
std::vector<std::size_t> distances_to(const Topology& topo, int destination) {
  std::vector<std::size_t> dist(topo.node_count(), kUnreached);
  std::deque<int> queue{destination};
  dist[topo.node_index(destination)] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    const std::size_t dv = dist[topo.node_index(v)];
    for (int u : topo.predecessors(v)) {
      std::size_t& du = dist[topo.node_index(u)];
      if (du == kUnreached) {
        du = dv + 1;
        queue.push_back(u);
      }
    }
  }
  return dist;
}

Path walk(const Topology& topo, const std::vector<std::size_t>& dist, int source,
          int destination) {
  Path path{source, destination, {}};
  int at = source;
  while (at != destination) {
    const std::size_t here = dist[topo.node_index(at)];
    int next = 0;
    bool found = false;
    for (int v : topo.successors(at)) {  // ascending ids
      if (dist[topo.node_index(v)] + 1 == here) {
        next = v;
        found = true;
        break;
      }
    }
    if (!found) throw Error("shortest path walk lost the distance gradient");
    path.arcs.push_back(*topo.find_arc(at, next));
    at = next;
  }
  return path;
}

}  // namespace

TopologyMode parse_topology_mode(const std::string& text) {
  if (text == "directed") return TopologyMode::Directed;
  if (text == "undirected") return TopologyMode::Undirected;
  throw ConfigError("unknown topology mode '" + text + "' (expected directed|undirected)");
}

std::string arc_label(int from, int to) {
  if (from >= 0 && from < 10 && to >= 0 && to < 10)
    return "L" + std::to_string(from) + std::to_string(to);
  return "L" + std::to_string(from) + "-" + std::to_string(to);
}

Topology Topology::from_edges(std::vector<int> declared_nodes,
                              const std::vector<std::pair<int, int>>& edges, TopologyMode mode) {
  Topology t;
  t.mode_ = mode;
  std::set<int> node_set(declared_nodes.begin(), declared_nodes.end());
  if (node_set.size() != declared_nodes.size()) throw DataError("duplicate node declaration");
  const bool declared = !declared_nodes.empty();

  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : edges) {
    if (u == v) throw DataError("self-loop on node " + std::to_string(u));
    if (declared && (!node_set.contains(u) || !node_set.contains(v))) {
      throw DataError("edge " + std::to_string(u) + " " + std::to_string(v) +
                      " references an undeclared node");
    }
    std::pair<int, int> key{u, v};
    if (mode == TopologyMode::Undirected && v < u) key = {v, u};
    if (!seen.insert(key).second)
      throw DataError("duplicate edge " + std::to_string(u) + " " + std::to_string(v));
    if (!declared) {
      node_set.insert(u);
      node_set.insert(v);
    }
  }

  t.nodes_.assign(node_set.begin(), node_set.end());
  for (std::size_t i = 0; i < t.nodes_.size(); ++i) t.index_[t.nodes_[i]] = i;

  std::set<std::pair<int, int>> arcs;
  for (const auto& [u, v] : edges) {
    arcs.insert({u, v});
    if (mode == TopologyMode::Undirected) arcs.insert({v, u});
  }
  t.succ_.resize(t.nodes_.size());
  t.pred_.resize(t.nodes_.size());
  for (const auto& [u, v] : arcs) {
    t.arc_index_[{u, v}] = t.arcs_.size();
    t.arcs_.push_back({u, v, arc_label(u, v)});
    t.succ_[t.index_[u]].push_back(v);
    t.pred_[t.index_[v]].push_back(u);
  }
  for (auto& s : t.succ_) std::sort(s.begin(), s.end());
  for (auto& s : t.pred_) std::sort(s.begin(), s.end());
  return t;
}

bool Topology::has_node(int id) const { return index_.contains(id); }

std::size_t Topology::node_index(int id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown node " + std::to_string(id));
  return it->second;
}

std::optional<std::size_t> Topology::find_arc(int from, int to) const {
  const auto it = arc_index_.find({from, to});
  if (it == arc_index_.end()) return std::nullopt;
  return it->second;
}

const std::vector<int>& Topology::successors(int id) const { return succ_[node_index(id)]; }
const std::vector<int>& Topology::predecessors(int id) const { return pred_[node_index(id)]; }

Topology load_topology(const std::filesystem::path& path, TopologyMode mode) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open topology file: " + path.string());
  std::vector<int> declared;
  std::vector<std::pair<int, int>> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    auto fail = [&] {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed line");
    };
    if (first == "nodes") {
      int id = 0;
      while (ss >> id) declared.push_back(id);
      if (!ss.eof()) fail();
      continue;
    }
    int u = 0;
    int v = 0;
    std::string rest;
    try {
      std::size_t used = 0;
      u = std::stoi(first, &used);
      if (used != first.size()) fail();
    } catch (const std::logic_error&) {
      fail();
    }
    if (!(ss >> v) || (ss >> rest)) fail();
    edges.emplace_back(u, v);
  }
  if (edges.empty()) throw DataError("topology file has no edges: " + path.string());
  return Topology::from_edges(std::move(declared), edges, mode);
}

Path shortest_path(const Topology& topology, int source, int destination) {
  if (source == destination) throw DataError("shortest_path: source equals destination");
  if (!topology.has_node(source) || !topology.has_node(destination))
    throw DataError("shortest_path: unknown endpoint");
  const auto dist = distances_to(topology, destination);
  if (dist[topology.node_index(source)] == kUnreached) {
    throw DataError("node " + std::to_string(destination) + " is unreachable from node " +
                    std::to_string(source));
  }
  return walk(topology, dist, source, destination);
}

PathTable all_pairs_paths(const Topology& topology) {
  PathTable table;
  std::vector<std::string> missing;
  for (int d : topology.nodes()) {
    const auto dist = distances_to(topology, d);
    for (int s : topology.nodes()) {
      if (s == d) continue;
      if (dist[topology.node_index(s)] == kUnreached) {
        missing.push_back(std::to_string(s) + "->" + std::to_string(d));
        continue;
      }
      table.emplace(std::pair{s, d}, walk(topology, dist, s, d));
    }
  }
  if (!missing.empty()) {
    std::string msg = "topology is not connected; unreachable pairs:";
    for (const auto& m : missing) msg += " " + m;
    throw DataError(msg);
  }
  return table;
}

}  // namespace fednet
