#include "ismnet/model/topology.h"

#include <algorithm>

#include "ismnet/error.h"

namespace ismnet {

std::string_view topology_name(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kFullyConnected: return "fully_connected";
    case TopologyKind::kRing: return "ring";
    case TopologyKind::kBinaryTree: return "binary_tree";
    case TopologyKind::kStar: return "star";
    case TopologyKind::kLine: return "line";
    case TopologyKind::kCustom: return "custom";
  }
  return "unknown";
}

TopologyKind parse_topology_kind(std::string_view name) {
  for (auto k : {TopologyKind::kFullyConnected, TopologyKind::kRing,
                 TopologyKind::kBinaryTree, TopologyKind::kStar, TopologyKind::kLine,
                 TopologyKind::kCustom}) {
    if (topology_name(k) == name) return k;
  }
  throw ConfigError("unknown topology '" + std::string(name) + "'");
}

Eigen::MatrixXd default_coupling(TopologyKind kind, int state_dim) {
  const double scale = kind == TopologyKind::kFullyConnected ? 5e-4 : 1e-2;
  return scale * Eigen::MatrixXd::Identity(state_dim, state_dim).rowwise().reverse();
}

Topology::Topology(TopologyKind kind, int n, std::vector<Edge> edges,
                   std::vector<Eigen::MatrixXd> weights)
    : kind_(kind), n_(n), edges_(std::move(edges)), weights_(std::move(weights)) {
  for (const auto& e : edges_) {
    if (e.from < 0 || e.from >= n_ || e.to < 0 || e.to >= n_) {
      throw ConfigError("edge " + std::to_string(e.from + 1) + " -> " +
                        std::to_string(e.to + 1) + " references a missing subsystem");
    }
    if (e.from == e.to) {
      throw ConfigError("self edge on subsystem " + std::to_string(e.to + 1));
    }
    if (e.weight < 0 || e.weight >= static_cast<int>(weights_.size())) {
      throw ConfigError("edge references a missing coupling weight");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.to != b.to ? a.to < b.to : a.from < b.from;
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].to == edges_[k - 1].to && edges_[k].from == edges_[k - 1].from) {
      throw ConfigError("duplicate edge " + std::to_string(edges_[k].from + 1) +
                        " -> " + std::to_string(edges_[k].to + 1));
    }
  }
  in_begin_.assign(n_ + 1, 0);
  out_degree_.assign(n_, 0);
  for (const auto& e : edges_) {
    ++in_begin_[e.to + 1];
    ++out_degree_[e.from];
  }
  for (int i = 0; i < n_; ++i) in_begin_[i + 1] += in_begin_[i];
}

Topology Topology::build(TopologyKind kind, int n, const Eigen::MatrixXd& weight) {
  if (n < 2) throw ConfigError("a topology needs N >= 2 subsystems");
  std::vector<Edge> edges;
  switch (kind) {
    case TopologyKind::kFullyConnected:
      edges.reserve(static_cast<std::size_t>(n) * (n - 1));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (j != i) edges.push_back({j, i, 0});
        }
      }
      break;
    case TopologyKind::kRing:
      for (int i = 0; i < n; ++i) edges.push_back({(i + n - 1) % n, i, 0});
      break;
    case TopologyKind::kBinaryTree: {
      if (((n + 1) & n) != 0) {
        throw ConfigError("binary_tree needs N = 2^l - 1, got " + std::to_string(n));
      }
      // 1-based parent(i) = floor(i / 2).
      for (int i = 2; i <= n; ++i) edges.push_back({i / 2 - 1, i - 1, 0});
      break;
    }
    case TopologyKind::kStar:
      for (int i = 1; i < n; ++i) edges.push_back({0, i, 0});
      break;
    case TopologyKind::kLine:
      for (int i = 1; i < n; ++i) edges.push_back({i - 1, i, 0});
      break;
    case TopologyKind::kCustom:
      throw ConfigError("custom topologies need an explicit edge list");
  }
  return Topology(kind, n, std::move(edges), {weight});
}

Topology Topology::build(TopologyKind kind, int n, int state_dim) {
  return build(kind, n, default_coupling(kind, state_dim));
}

Topology Topology::custom(int n, std::vector<Edge> edges,
                          std::vector<Eigen::MatrixXd> weights) {
  if (n < 1) throw ConfigError("a topology needs at least one subsystem");
  return Topology(TopologyKind::kCustom, n, std::move(edges), std::move(weights));
}

std::span<const Edge> Topology::in_edges(int i) const {
  return {edges_.data() + in_begin_[i], in_begin_[i + 1] - in_begin_[i]};
}

bool Topology::has_edge(int from, int to) const {
  const auto in = in_edges(to);
  return std::binary_search(in.begin(), in.end(), Edge{from, to, 0},
                            [](const Edge& a, const Edge& b) { return a.from < b.from; });
}

}  // namespace ismnet
