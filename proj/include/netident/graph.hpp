#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace netident {

/// Undirected edge with canonical orientation i < j.
struct Edge {
    int i = 0;
    int j = 0;
    double weight = 1.0;
};

/// Undirected, positively-weighted graph on nodes 0..n-1.
///
/// Construction canonicalizes each edge to i < j, sorts the edge list
/// lexicographically and rejects self-loops, duplicates, out-of-range
/// indices and non-positive weights. Instances are immutable afterwards
/// and safe to share across threads.
class WeightedGraph {
public:
    WeightedGraph(int node_count, std::vector<Edge> edges);

    int node_count() const noexcept { return n_; }
    int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    bool has_edge(int i, int j) const;
    /// Weight of {i,j}, or 0 when the edge is absent.
    double weight(int i, int j) const;

private:
    int n_;
    std::vector<Edge> edges_;
};

/// Node-by-edge incidence matrix (n x |E|): column k of edge (i,j) has +1 at
/// row i and -1 at row j. Columns follow the canonical sorted edge order.
Eigen::MatrixXd incidence_matrix(const WeightedGraph& g);

/// E diag(nu_e * edge_scale_e) E^T. Symmetric, PSD, zero row sums.
/// edge_scale must have one positive entry per edge.
Eigen::MatrixXd weighted_laplacian(const WeightedGraph& g, const Eigen::VectorXd& edge_scale);

/// Laplacian with unit edge scale.
Eigen::MatrixXd weighted_laplacian(const WeightedGraph& g);

/// Symmetric adjacency matrix with weights as entries.
Eigen::MatrixXd adjacency_matrix(const WeightedGraph& g);

/// Erdos-Renyi style generator: every unordered pair is included
/// independently with probability p; weights are drawn log-uniformly on
/// [weight_lo, weight_hi]. Deterministic for a fixed seed.
WeightedGraph random_graph(int n, double p, double weight_lo, double weight_hi,
                           std::uint64_t seed);

/// Relabels nodes by a permutation: node v becomes perm[v].
WeightedGraph relabel(const WeightedGraph& g, const std::vector<int>& perm);

}  // namespace netident
