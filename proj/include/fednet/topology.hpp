#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fednet {

enum class TopologyMode { Directed, Undirected };

TopologyMode parse_topology_mode(const std::string& text);

/// Directed arc u -> v labelled "L{u}{v}" ("L{u}-{v}" when an id has
/// more than one digit).
struct Arc {
  int from = 0;
  int to = 0;
  std::string label;
};

std::string arc_label(int from, int to);

/// Immutable network graph.  Arcs are stored sorted by (from, to).
class Topology {
 public:
  /// `declared_nodes` may be empty, in which case the node set is
  /// inferred from the edges.  In undirected mode each edge yields both
  /// arcs.
  static Topology from_edges(std::vector<int> declared_nodes,
                             const std::vector<std::pair<int, int>>& edges, TopologyMode mode);

  const std::vector<int>& nodes() const { return nodes_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t arc_count() const { return arcs_.size(); }
  TopologyMode mode() const { return mode_; }

  bool has_node(int id) const;
  /// Position of `id` in nodes(); throws for unknown ids.
  std::size_t node_index(int id) const;
  std::optional<std::size_t> find_arc(int from, int to) const;
  /// Successors of `id` in ascending id order.
  const std::vector<int>& successors(int id) const;
  const std::vector<int>& predecessors(int id) const;

 private:
  TopologyMode mode_ = TopologyMode::Undirected;
  std::vector<int> nodes_;
  std::vector<Arc> arcs_;
  std::map<int, std::size_t> index_;
  std::map<std::pair<int, int>, std::size_t> arc_index_;
  std::vector<std::vector<int>> succ_;
  std::vector<std::vector<int>> pred_;
};

/// Edge-list file: one "u v" pair per line, '#' comments, and an
/// optional "nodes <id> <id> ..." line declaring the node set.
Topology load_topology(const std::filesystem::path& path, TopologyMode mode);

/// Sequence of arc indices from `source` to `destination`.
struct Path {
  int source = 0;
  int destination = 0;
  std::vector<std::size_t> arcs;

  std::size_t hops() const { return arcs.size(); }
};

/// Minimum-hop path.  Among equal-length paths the one whose node
/// sequence is lexicographically smallest is returned: at every step the
/// walk moves to the smallest-id successor that is still on a shortest
/// path to the destination.
Path shortest_path(const Topology& topology, int source, int destination);

using PathTable = std::map<std::pair<int, int>, Path>;

/// shortest_path for every ordered pair s != d; throws listing the
/// unreachable pairs if the graph is not strongly connected.
PathTable all_pairs_paths(const Topology& topology);

}  // namespace fednet
