#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netident/model.hpp"
#include "netident/rng.hpp"

namespace testutil {

using namespace netident;

// LTI population with log-uniform decay rates and per-pair static gain
// controllers (the paper-style linear test bench).
inline NetworkSystem lti_system(int n, double p, std::uint64_t seed,
                                std::pair<double, double> a_range = {1.0, 10.0},
                                std::pair<double, double> gain_range = {0.1, 1.0},
                                std::pair<double, double> nu_range = {0.3, 10.0}) {
    WeightedGraph g = random_graph(n, p, nu_range.first, nu_range.second, seed);
    Rng rng(splitmix64(seed + 1));
    std::vector<AgentModel> agents;
    for (int i = 0; i < n; ++i) agents.push_back(AgentModel::lti(rng.log_uniform(a_range.first, a_range.second)));
    auto couplings = gain_range.first == gain_range.second
                         ? CouplingTable::uniform(EdgeCoupling::identity(gain_range.first))
                         : CouplingTable::seeded(EdgeCoupling::Kind::Identity, gain_range,
                                                 {0.0, 0.0}, splitmix64(seed + 2));
    return NetworkSystem(std::move(g), std::move(agents), couplings);
}

// Consensus bench: pure integrators with unit-gain identity couplings.
inline NetworkSystem consensus_system(int n, double p, std::uint64_t seed,
                                      std::pair<double, double> nu_range = {0.3, 10.0},
                                      std::pair<double, double> gain_range = {0.1, 1.0}) {
    WeightedGraph g = random_graph(n, p, nu_range.first, nu_range.second, seed);
    std::vector<AgentModel> agents(n, AgentModel::integrator());
    auto couplings = gain_range.first == gain_range.second
                         ? CouplingTable::uniform(EdgeCoupling::identity(gain_range.first))
                         : CouplingTable::seeded(EdgeCoupling::Kind::Identity, gain_range,
                                                 {0.0, 0.0}, splitmix64(seed + 2));
    return NetworkSystem(std::move(g), std::move(agents), couplings);
}

// Voltage-style nonlinear population (tanh outputs, per-node gains).
inline NetworkSystem neural_system(int n, double p, std::uint64_t seed,
                                   std::pair<double, double> tau_range = {3.0, 30.0},
                                   std::pair<double, double> b_range = {1.0, 5.0},
                                   std::pair<double, double> nu_range = {1.0, 10.0}) {
    WeightedGraph g = random_graph(n, p, nu_range.first, nu_range.second, seed);
    Rng rng(splitmix64(seed + 1));
    std::vector<AgentModel> agents;
    for (int i = 0; i < n; ++i) {
        const double tau = rng.log_uniform(tau_range.first, tau_range.second);
        const double b = rng.log_uniform(b_range.first, b_range.second);
        agents.push_back(AgentModel::neural(tau, b));
    }
    return NetworkSystem(std::move(g), std::move(agents),
                         CouplingTable::uniform(EdgeCoupling::identity()));
}

inline bool is_connected(const WeightedGraph& g) {
    const int n = g.node_count();
    std::vector<int> parent(n);
    for (int v = 0; v < n; ++v) parent[v] = v;
    auto find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    int components = n;
    for (const auto& e : g.edges()) {
        const int a = find(e.i), b = find(e.j);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components == 1;
}

// First seed >= `seed` whose random graph is connected (integrator
// populations only admit steady states on connected topologies).
inline std::uint64_t connected_graph_seed(int n, double p, std::pair<double, double> nu_range,
                                          std::uint64_t seed) {
    while (!is_connected(random_graph(n, p, nu_range.first, nu_range.second, seed))) ++seed;
    return seed;
}

// Dense steady-state matrix A + E diag(nu * gain) E^T assembled directly
// from definitions (independent of the library's edge accumulation).
inline Eigen::MatrixXd lti_connection_oracle(const NetworkSystem& sys) {
    const int n = sys.size();
    Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(n, sys.graph().edge_count());
    Eigen::VectorXd scale(sys.graph().edge_count());
    int k = 0;
    for (const auto& e : sys.graph().edges()) {
        inc(e.i, k) = 1.0;
        inc(e.j, k) = -1.0;
        scale[k] = e.weight * sys.edge_couplings()[k].gain;
        ++k;
    }
    Eigen::MatrixXd m = inc * scale.asDiagonal() * inc.transpose();
    for (int i = 0; i < n; ++i) m(i, i) += sys.agents()[i].a;
    return m;
}

}  // namespace testutil
