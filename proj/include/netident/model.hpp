#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netident/graph.hpp"

namespace netident {

/// Scalar single-state agent
///
///     xdot = f(x) + b * u + w,    y = h(x),
///
/// where u is the network feedback and w the exogenous input. The agent
/// publishes its inverse steady-state relation k_inv(y) = -f(h_inv(y)),
/// i.e. the exogenous input that holds output y with zero feedback, and
/// its derivative; the identification algorithm relies only on k_inv,
/// k_inv_deriv and the gain b.
///
/// Built-in kinds:
///   Lti         xdot = -a x + b u + w, y = x;  k_inv(y) = a y. a = 0 is the
///               pure integrator (k_inv identically zero).
///   Neural      xdot = -x/tau + b u + w, y = tanh(x);  k_inv(y) = atanh(y)/tau
///               with output range (-1, 1).
///   Polynomial  xdot = -(c1 x + c3 x^3) + b u + w, y = x;
///               k_inv(y) = c1 y + c3 y^3 (monotone for c1, c3 >= 0).
struct AgentModel {
    enum class Kind { Lti, Neural, Polynomial };

    Kind kind = Kind::Lti;
    double a = 0.0;
    double tau = 1.0;
    double b = 1.0;
    double c1 = 0.0;
    double c3 = 0.0;

    static AgentModel lti(double a);
    static AgentModel integrator();  // lti(0)
    static AgentModel neural(double tau, double b);
    static AgentModel polynomial(double c1, double c3, double b = 1.0);

    double f(double x) const;
    double f_deriv(double x) const;
    double h(double x) const;
    double h_deriv(double x) const;
    double h_inv(double y) const;
    /// Throws std::domain_error outside the output range.
    double k_inv(double y) const;
    double k_inv_deriv(double y) const;

    bool output_in_range(double y) const;
    /// True when k_inv vanishes identically (integrator-type agent).
    bool is_integrator() const;
};

/// Static monotone edge controller g with derivative, shared by both
/// orientations of a node pair; evaluated at the canonical difference
/// z = y_i - y_j with i < j.
///
/// Kinds: Identity g(z) = gain*z; Tanh g(z) = gain*tanh(z);
/// Cubic g(z) = gain*(z + cubic*z^3). All monotone nondecreasing for
/// gain >= 0, cubic >= 0.
struct EdgeCoupling {
    enum class Kind { Identity, Tanh, Cubic };

    Kind kind = Kind::Identity;
    double gain = 1.0;
    double cubic = 0.0;

    static EdgeCoupling identity(double gain = 1.0);
    static EdgeCoupling tanh_coupling(double gain = 1.0);
    static EdgeCoupling cubic_coupling(double gain, double cubic);

    double g(double z) const;
    double g_deriv(double z) const;
};

/// Controller assignment for every unordered node pair, including pairs
/// absent from the underlying graph. Either one shared coupling or a
/// seeded per-pair draw (stateless, keyed on the pair, so any pair can be
/// queried in O(1) without materializing all n(n-1)/2 entries).
class CouplingTable {
public:
    static CouplingTable uniform(EdgeCoupling c);
    static CouplingTable seeded(EdgeCoupling::Kind kind,
                                std::pair<double, double> gain_range,
                                std::pair<double, double> cubic_range,
                                std::uint64_t seed);

    EdgeCoupling at(int i, int j) const;

private:
    CouplingTable() = default;
    bool uniform_ = true;
    EdgeCoupling base_{};
    EdgeCoupling::Kind kind_ = EdgeCoupling::Kind::Identity;
    std::pair<double, double> gain_range_{1.0, 1.0};
    std::pair<double, double> cubic_range_{0.0, 0.0};
    std::uint64_t seed_ = 0;
};

/// Closed-loop network: hidden weighted graph, one agent per node and a
/// coupling table defined for all pairs. Immutable after construction.
class NetworkSystem {
public:
    NetworkSystem(WeightedGraph graph, std::vector<AgentModel> agents, CouplingTable couplings);

    const WeightedGraph& graph() const noexcept { return graph_; }
    const std::vector<AgentModel>& agents() const noexcept { return agents_; }
    const CouplingTable& couplings() const noexcept { return couplings_; }
    /// Couplings of the actual graph edges, aligned with graph().edges().
    const std::vector<EdgeCoupling>& edge_couplings() const noexcept { return edge_couplings_; }

    int size() const noexcept { return graph_.node_count(); }
    Eigen::VectorXd gains() const;

private:
    WeightedGraph graph_;
    std::vector<AgentModel> agents_;
    CouplingTable couplings_;
    std::vector<EdgeCoupling> edge_couplings_;
};

/// xdot_i = f_i(x_i) + b_i u_i + w_i with diffusive feedback
/// u = -E N g(E^T h(x)). Rejects non-finite states.
Eigen::VectorXd closed_loop_rhs(const NetworkSystem& sys, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& w);

/// k_inv(y) + diag(b) E N g(E^T y) - w. Zero exactly at the steady-state
/// outputs for input w; throws std::domain_error when y leaves the output
/// range of some agent.
Eigen::VectorXd steady_state_residual(const NetworkSystem& sys, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& w);

/// Ground-truth Jacobian of the steady-state map at y0:
/// diag(k_inv_deriv(y0)) + diag(b) E N diag(g'(E^T y0)) E^T.
/// Uses the hidden graph; intended as a test oracle.
Eigen::MatrixXd connection_matrix_true(const NetworkSystem& sys, const Eigen::VectorXd& y0);

Eigen::VectorXd outputs_of_state(const NetworkSystem& sys, const Eigen::VectorXd& x);
Eigen::VectorXd state_of_outputs(const NetworkSystem& sys, const Eigen::VectorXd& y);

namespace detail {
/// RHS without allocation, for integrator inner loops. w_total already
/// includes any disturbance.
void closed_loop_rhs_into(const NetworkSystem& sys, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& w_total, Eigen::VectorXd& y_buf,
                          Eigen::VectorXd& out);
}  // namespace detail

}  // namespace netident
