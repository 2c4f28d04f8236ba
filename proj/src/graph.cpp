#include "netident/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "netident/rng.hpp"

namespace netident {

WeightedGraph::WeightedGraph(int node_count, std::vector<Edge> edges)
    : n_(node_count), edges_(std::move(edges)) {
    if (n_ <= 0) throw std::invalid_argument("WeightedGraph: node count must be positive");
    for (auto& e : edges_) {
        if (e.i == e.j) throw std::invalid_argument("WeightedGraph: self-loop rejected");
        if (e.i > e.j) std::swap(e.i, e.j);
        if (e.i < 0 || e.j >= n_)
            throw std::invalid_argument("WeightedGraph: node index out of range");
        if (!(e.weight > 0.0) || !std::isfinite(e.weight))
            throw std::invalid_argument("WeightedGraph: edge weight must be positive and finite");
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t k = 1; k < edges_.size(); ++k) {
        if (edges_[k - 1].i == edges_[k].i && edges_[k - 1].j == edges_[k].j)
            throw std::invalid_argument("WeightedGraph: duplicate edge rejected");
    }
}

bool WeightedGraph::has_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    Edge probe{i, j, 1.0};
    auto it = std::lower_bound(edges_.begin(), edges_.end(), probe,
                               [](const Edge& a, const Edge& b) {
                                   return a.i != b.i ? a.i < b.i : a.j < b.j;
                               });
    return it != edges_.end() && it->i == i && it->j == j;
}

double WeightedGraph::weight(int i, int j) const {
    if (i > j) std::swap(i, j);
    Edge probe{i, j, 1.0};
    auto it = std::lower_bound(edges_.begin(), edges_.end(), probe,
                               [](const Edge& a, const Edge& b) {
                                   return a.i != b.i ? a.i < b.i : a.j < b.j;
                               });
    if (it != edges_.end() && it->i == i && it->j == j) return it->weight;
    return 0.0;
}

Eigen::MatrixXd incidence_matrix(const WeightedGraph& g) {
    Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(g.node_count(), g.edge_count());
    int k = 0;
    for (const auto& e : g.edges()) {
        inc(e.i, k) = 1.0;
        inc(e.j, k) = -1.0;
        ++k;
    }
    return inc;
}

Eigen::MatrixXd weighted_laplacian(const WeightedGraph& g, const Eigen::VectorXd& edge_scale) {
    if (edge_scale.size() != g.edge_count())
        throw std::invalid_argument("weighted_laplacian: edge_scale length mismatch");
    for (Eigen::Index k = 0; k < edge_scale.size(); ++k)
        if (!(edge_scale[k] > 0.0) || !std::isfinite(edge_scale[k]))
            throw std::invalid_argument("weighted_laplacian: edge_scale must be positive");

    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(g.node_count(), g.node_count());
    int k = 0;
    for (const auto& e : g.edges()) {
        const double c = e.weight * edge_scale[k++];
        lap(e.i, e.i) += c;
        lap(e.j, e.j) += c;
        lap(e.i, e.j) -= c;
        lap(e.j, e.i) -= c;
    }
    return lap;
}

Eigen::MatrixXd weighted_laplacian(const WeightedGraph& g) {
    return weighted_laplacian(g, Eigen::VectorXd::Ones(g.edge_count()));
}

Eigen::MatrixXd adjacency_matrix(const WeightedGraph& g) {
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(g.node_count(), g.node_count());
    for (const auto& e : g.edges()) {
        adj(e.i, e.j) = e.weight;
        adj(e.j, e.i) = e.weight;
    }
    return adj;
}

WeightedGraph random_graph(int n, double p, double weight_lo, double weight_hi,
                           std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("random_graph: need at least 2 nodes");
    if (!(p >= 0.0) || !(p <= 1.0))
        throw std::invalid_argument("random_graph: probability must lie in [0, 1]");
    if (!(weight_lo > 0.0) || !(weight_hi >= weight_lo))
        throw std::invalid_argument("random_graph: need 0 < weight_lo <= weight_hi");

    Rng rng(seed);
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.bernoulli(p)) edges.push_back({i, j, rng.log_uniform(weight_lo, weight_hi)});
        }
    }
    return WeightedGraph(n, std::move(edges));
}

WeightedGraph relabel(const WeightedGraph& g, const std::vector<int>& perm) {
    const int n = g.node_count();
    if (static_cast<int>(perm.size()) != n)
        throw std::invalid_argument("relabel: permutation length mismatch");
    std::vector<bool> seen(n, false);
    for (int v : perm) {
        if (v < 0 || v >= n || seen[v])
            throw std::invalid_argument("relabel: not a permutation");
        seen[v] = true;
    }
    std::vector<Edge> edges;
    edges.reserve(g.edge_count());
    for (const auto& e : g.edges()) edges.push_back({perm[e.i], perm[e.j], e.weight});
    return WeightedGraph(n, std::move(edges));
}

}  // namespace netident
