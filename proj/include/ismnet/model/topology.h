#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ismnet {

enum class TopologyKind { kFullyConnected, kRing, kBinaryTree, kStar, kLine, kCustom };

std::string_view topology_name(TopologyKind kind);
/// Accepts fully_connected, ring, binary_tree, star, line, custom.
TopologyKind parse_topology_kind(std::string_view name);

/// Directed influence j -> i: subsystem `to` receives the state of `from`
/// through the coupling block `weights()[weight]` (n_to x n_from).
struct Edge {
  int from = 0;
  int to = 0;
  int weight = 0;
};

/// Interconnection graph. Subsystems are 0-based here; the textual examples
/// in documentation use 1-based labels. Coupling blocks are kept in a small
/// table shared by the edges, so a fully connected graph with a uniform
/// weight costs one matrix.
class Topology {
 public:
  /// Built-in pattern with a uniform coupling block.
  static Topology build(TopologyKind kind, int n_subsystems,
                        const Eigen::MatrixXd& weight);
  /// Built-in pattern with the default weight for state dimension n.
  static Topology build(TopologyKind kind, int n_subsystems, int state_dim = 2);
  /// Arbitrary edge set; self edges and out-of-range indices are rejected.
  static Topology custom(int n_subsystems, std::vector<Edge> edges,
                         std::vector<Eigen::MatrixXd> weights);

  TopologyKind kind() const { return kind_; }
  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const Eigen::MatrixXd& weight(const Edge& e) const { return weights_[e.weight]; }

  /// Edges entering `i`, ordered by ascending source index.
  std::span<const Edge> in_edges(int i) const;
  /// Number of subsystems influenced by `j`.
  int out_degree(int j) const { return out_degree_[j]; }

  bool has_edge(int from, int to) const;

 private:
  Topology(TopologyKind kind, int n, std::vector<Edge> edges,
           std::vector<Eigen::MatrixXd> weights);

  TopologyKind kind_;
  int n_;
  std::vector<Edge> edges_;  // sorted by (to, from)
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<std::size_t> in_begin_;  // CSR offsets into edges_
  std::vector<int> out_degree_;
};

/// Default coupling block: scale times the anti-identity, with scale 5e-4
/// for fully_connected and 1e-2 for every other kind.
Eigen::MatrixXd default_coupling(TopologyKind kind, int state_dim);

}  // namespace ismnet
