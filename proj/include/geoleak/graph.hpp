#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "geoleak/error.hpp"

namespace geoleak {

namespace detail {
inline std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}
}  // namespace detail

// Mutual-follow pairs. Self-loops are dropped; one-directional follows do
// not count. Returned pairs are (min, max), sorted.
inline std::vector<std::pair<int, int>> derive_friendships(
    int n_users, const std::vector<std::pair<int, int>>& follow_edges) {
  std::unordered_set<std::uint64_t> follows;
  follows.reserve(follow_edges.size() * 2);
  for (const auto& [u, v] : follow_edges) {
    if (u < 0 || v < 0 || u >= n_users || v >= n_users) {
      throw errors::invalid_input("follow edge (" + std::to_string(u) + "," +
                                  std::to_string(v) + ") outside [0," +
                                  std::to_string(n_users) + ")");
    }
    if (u == v) continue;
    follows.insert(detail::edge_key(u, v));
  }
  std::vector<std::pair<int, int>> friends;
  for (const auto& [u, v] : follow_edges) {
    if (u >= v) continue;  // visit each unordered pair once, from (min,max)
    if (follows.count(detail::edge_key(u, v)) &&
        follows.count(detail::edge_key(v, u))) {
      friends.emplace_back(u, v);
    }
  }
  std::sort(friends.begin(), friends.end());
  friends.erase(std::unique(friends.begin(), friends.end()), friends.end());
  return friends;
}

// Users plus the undirected friendship graph derived from directed
// follows. Immutable after construction; safe to share across threads.
class SocialGraph {
 public:
  static constexpr int kDenseCap = 5000;

  static SocialGraph from_follows(int n_users,
                                  std::vector<std::pair<int, int>> follows) {
    SocialGraph g;
    g.n_users_ = n_users;
    g.friend_edges_ = derive_friendships(n_users, follows);
    g.follow_edges_ = std::move(follows);
    g.build_adjacency();
    return g;
  }

  // For graphs that are undirected by construction (e.g. the synthetic
  // generator): every pair is materialized as two follows.
  static SocialGraph from_friendships(int n_users,
                                      std::vector<std::pair<int, int>> pairs) {
    std::vector<std::pair<int, int>> follows;
    follows.reserve(pairs.size() * 2);
    for (const auto& [a, b] : pairs) {
      follows.emplace_back(a, b);
      follows.emplace_back(b, a);
    }
    return from_follows(n_users, std::move(follows));
  }

  int n_users() const { return n_users_; }
  const std::vector<std::pair<int, int>>& follow_edges() const { return follow_edges_; }
  const std::vector<std::pair<int, int>>& friend_edges() const { return friend_edges_; }
  const std::vector<int>& neighbors(int u) const { return adjacency_[u]; }
  int degree(int u) const { return static_cast<int>(adjacency_[u].size()); }

  bool are_friends(int a, int b) const {
    if (a > b) std::swap(a, b);
    return friend_set_.count(detail::edge_key(a, b)) > 0;
  }

  // Symmetric 0/1 matrix with zero diagonal. Only materialized for graphs
  // small enough that a dense matrix is reasonable.
  Eigen::MatrixXd adjacency_dense() const {
    if (n_users_ > kDenseCap) {
      throw errors::invalid_input(
          "adjacency_dense: graph too large for dense representation");
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_users_, n_users_);
    for (const auto& [u, v] : friend_edges_) {
      a(u, v) = 1.0;
      a(v, u) = 1.0;
    }
    return a;
  }

 private:
  void build_adjacency() {
    adjacency_.assign(n_users_, {});
    friend_set_.reserve(friend_edges_.size());
    for (const auto& [u, v] : friend_edges_) {
      adjacency_[u].push_back(v);
      adjacency_[v].push_back(u);
      friend_set_.insert(detail::edge_key(u, v));
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
  }

  int n_users_ = 0;
  std::vector<std::pair<int, int>> follow_edges_;
  std::vector<std::pair<int, int>> friend_edges_;
  std::vector<std::vector<int>> adjacency_;
  std::unordered_set<std::uint64_t> friend_set_;
};

struct GraphStatistics {
  double average_degree = 0.0;
  double density = 0.0;
  double clustering_coefficient = 0.0;
  int diameter = 0;
  int largest_component_size = 0;
};

namespace detail {

// BFS distances from src restricted to the friendship graph.
inline int bfs_eccentricity(const SocialGraph& g, int src,
                            const std::vector<int>& component_of,
                            std::vector<int>& dist_scratch) {
  std::fill(dist_scratch.begin(), dist_scratch.end(), -1);
  std::deque<int> queue{src};
  dist_scratch[src] = 0;
  int ecc = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : g.neighbors(u)) {
      if (dist_scratch[v] < 0) {
        dist_scratch[v] = dist_scratch[u] + 1;
        ecc = std::max(ecc, dist_scratch[v]);
        queue.push_back(v);
      }
    }
  }
  (void)component_of;
  return ecc;
}

}  // namespace detail

// Degree/density/clustering/diameter of the friendship graph. Diameter is
// computed on the largest connected component; users of degree < 2
// contribute 0 to the clustering average.
inline GraphStatistics graph_statistics(const SocialGraph& g) {
  const int n = g.n_users();
  if (n < 1) throw errors::invalid_input("graph_statistics: empty graph");
  const double e = static_cast<double>(g.friend_edges().size());

  GraphStatistics s;
  s.average_degree = 2.0 * e / n;
  s.density = n > 1 ? e / (n * (n - 1) / 2.0) : 0.0;

  double clustering_sum = 0.0;
  for (int u = 0; u < n; ++u) {
    const auto& nbrs = g.neighbors(u);
    const int d = static_cast<int>(nbrs.size());
    if (d < 2) continue;
    int links = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (g.are_friends(nbrs[i], nbrs[j])) ++links;
    clustering_sum += 2.0 * links / (static_cast<double>(d) * (d - 1));
  }
  s.clustering_coefficient = clustering_sum / n;

  // Connected components by BFS.
  std::vector<int> component(n, -1);
  int n_components = 0;
  for (int u = 0; u < n; ++u) {
    if (component[u] >= 0) continue;
    std::deque<int> queue{u};
    component[u] = n_components;
    while (!queue.empty()) {
      int x = queue.front();
      queue.pop_front();
      for (int v : g.neighbors(x)) {
        if (component[v] < 0) {
          component[v] = n_components;
          queue.push_back(v);
        }
      }
    }
    ++n_components;
  }
  std::vector<int> sizes(n_components, 0);
  for (int u = 0; u < n; ++u) ++sizes[component[u]];
  const int largest =
      static_cast<int>(std::max_element(sizes.begin(), sizes.end()) -
                       sizes.begin());
  s.largest_component_size = sizes[largest];

  std::vector<int> dist(n);
  int diameter = 0;
  for (int u = 0; u < n; ++u) {
    if (component[u] != largest) continue;
    diameter = std::max(diameter, detail::bfs_eccentricity(g, u, component, dist));
  }
  s.diameter = diameter;
  return s;
}

// Edge-list file: one "follower<TAB>followee" per line, '#' comments
// skipped. A "# users: N" comment pins the user count; otherwise max id + 1.
inline SocialGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw errors::io("cannot open graph file: " + path);
  std::vector<std::pair<int, int>> follows;
  int n_users = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string word;
      if (hs >> word && word == "users:") {
        long declared = -1;
        if (hs >> declared && declared >= 0) n_users = static_cast<int>(declared);
      }
      continue;
    }
    std::istringstream ls(line);
    long a = -1, b = -1;
    if (!(ls >> a >> b) || a < 0 || b < 0) {
      throw errors::io("bad edge at " + path + ":" + std::to_string(line_no) +
                       ": '" + line + "'");
    }
    follows.emplace_back(static_cast<int>(a), static_cast<int>(b));
    n_users = std::max({n_users, static_cast<int>(a) + 1, static_cast<int>(b) + 1});
  }
  return SocialGraph::from_follows(n_users, std::move(follows));
}

inline void save_edge_list(const SocialGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write graph file: " + path);
  out << "# users: " << g.n_users() << "\n";
  for (const auto& [u, v] : g.follow_edges()) out << u << "\t" << v << "\n";
  if (!out) throw errors::io("write failed: " + path);
}

}  // namespace geoleak
