#ifndef DGPR_TOPOLOGY_HPP
#define DGPR_TOPOLOGY_HPP

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include "dgpr/common.hpp"

namespace dgpr {

/// Undirected connected communication graph over N agents.
class NetworkTopology {
 public:
  NetworkTopology(int nodes, std::vector<std::pair<int, int>> edges) : n_(nodes) {
    require(nodes >= 1, "invalid-topology", "need at least one node");
    neighbors_.resize(nodes);
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
      require(u >= 0 && u < nodes && v >= 0 && v < nodes, "invalid-topology",
              "edge endpoint out of range");
      require(u != v, "invalid-topology", "self-loops are not allowed");
      if (u > v) std::swap(u, v);
      if (!seen.insert({u, v}).second) continue;
      neighbors_[u].push_back(v);
      neighbors_[v].push_back(u);
      edges_.emplace_back(u, v);
    }
    for (auto& nbrs : neighbors_) std::sort(nbrs.begin(), nbrs.end());
    require(is_connected(), "invalid-topology", "graph must be connected");
  }

  int size() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int node) const { return neighbors_[node]; }
  int degree(int node) const { return static_cast<int>(neighbors_[node].size()); }
  int max_degree() const {
    int d = 0;
    for (int i = 0; i < n_; ++i) d = std::max(d, degree(i));
    return d;
  }

  static NetworkTopology path(int nodes) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < nodes; ++i) edges.emplace_back(i, i + 1);
    return NetworkTopology(nodes, std::move(edges));
  }

  static NetworkTopology ring(int nodes) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < nodes; ++i) edges.emplace_back(i, i + 1);
    if (nodes > 2) edges.emplace_back(nodes - 1, 0);
    return NetworkTopology(nodes, std::move(edges));
  }

  static NetworkTopology complete(int nodes) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < nodes; ++i) {
      for (int j = i + 1; j < nodes; ++j) edges.emplace_back(i, j);
    }
    return NetworkTopology(nodes, std::move(edges));
  }

  /// Erdos-Renyi graph, rejection-sampled until connected; deterministic in
  /// the seed. Edge probability defaults to a value making connectivity
  /// likely at the given size.
  static NetworkTopology erdos_renyi(int nodes, double edge_probability, std::uint64_t seed) {
    require(edge_probability > 0 && edge_probability <= 1, "invalid-parameter",
            "edge probability must lie in (0,1]");
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::vector<std::pair<int, int>> edges;
      for (int i = 0; i < nodes; ++i) {
        for (int j = i + 1; j < nodes; ++j) {
          if (unif(rng) < edge_probability) edges.emplace_back(i, j);
        }
      }
      try {
        return NetworkTopology(nodes, std::move(edges));
      } catch (const Error&) {
        continue;  // disconnected draw; resample
      }
    }
    fail("invalid-topology", "could not sample a connected graph in 1000 attempts");
  }

  /// Edge-list CSV, one "u,v" pair per row (no header). Node count is
  /// 1 + max index unless `nodes` is given.
  static NetworkTopology from_csv(const std::string& path, int nodes = -1) {
    std::ifstream in(path);
    require(in.good(), "parse-error", "cannot open edge list: " + path);
    std::vector<std::pair<int, int>> edges;
    std::string line;
    long line_no = 0;
    int max_node = -1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::stringstream ss(line);
      std::string a, b;
      require(static_cast<bool>(std::getline(ss, a, ',')) &&
                  static_cast<bool>(std::getline(ss, b, ',')),
              "parse-error", "row " + std::to_string(line_no) + ": expected 'u,v'");
      try {
        const int u = std::stoi(a), v = std::stoi(b);
        edges.emplace_back(u, v);
        max_node = std::max({max_node, u, v});
      } catch (const std::exception&) {
        fail("parse-error", "row " + std::to_string(line_no) + ": cannot parse node ids");
      }
    }
    return NetworkTopology(nodes > 0 ? nodes : max_node + 1, std::move(edges));
  }

 private:
  bool is_connected() const {
    std::vector<char> seen(n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const int v : neighbors_[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n_;
  }

  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> neighbors_;
};

/// Metropolis weights: w_uv = 1 / (1 + max(deg_u, deg_v)) on edges, diagonal
/// filled to make rows sum to one. Symmetric and doubly stochastic on any
/// connected graph.
inline Matrix metropolis_weights(const NetworkTopology& topology) {
  const int n = topology.size();
  Matrix w = Matrix::Zero(n, n);
  for (const auto& [u, v] : topology.edges()) {
    const double weight = 1.0 / (1.0 + std::max(topology.degree(u), topology.degree(v)));
    w(u, v) = weight;
    w(v, u) = weight;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return w;
}

/// Uniform edge weights eps_w with w_ii = 1 - deg_i * eps_w; requires
/// eps_w <= 1/max_degree to stay a nonnegative averaging matrix.
inline Matrix uniform_weights(const NetworkTopology& topology, double eps_w) {
  require(eps_w > 0 && eps_w <= 1.0 / std::max(1, topology.max_degree()), "invalid-parameter",
          "need 0 < eps_w <= 1/max_degree");
  const int n = topology.size();
  Matrix w = Matrix::Zero(n, n);
  for (const auto& [u, v] : topology.edges()) {
    w(u, v) = eps_w;
    w(v, u) = eps_w;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - eps_w * topology.degree(i);
  return w;
}

}  // namespace dgpr

#endif
