#include "netident/model.hpp"

#include <cmath>
#include <stdexcept>

#include "netident/rng.hpp"

namespace netident {

AgentModel AgentModel::lti(double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("lti agent: a must be nonnegative");
    AgentModel m;
    m.kind = Kind::Lti;
    m.a = a;
    m.b = 1.0;
    return m;
}

AgentModel AgentModel::integrator() { return lti(0.0); }

AgentModel AgentModel::neural(double tau, double b) {
    if (!(tau > 0.0)) throw std::invalid_argument("neural agent: tau must be positive");
    if (!(b > 0.0)) throw std::invalid_argument("neural agent: b must be positive");
    AgentModel m;
    m.kind = Kind::Neural;
    m.tau = tau;
    m.b = b;
    return m;
}

AgentModel AgentModel::polynomial(double c1, double c3, double b) {
    if (!(c1 >= 0.0) || !(c3 >= 0.0))
        throw std::invalid_argument("polynomial agent: coefficients must be nonnegative");
    if (!(b > 0.0)) throw std::invalid_argument("polynomial agent: b must be positive");
    AgentModel m;
    m.kind = Kind::Polynomial;
    m.c1 = c1;
    m.c3 = c3;
    m.b = b;
    return m;
}

double AgentModel::f(double x) const {
    switch (kind) {
        case Kind::Lti: return -a * x;
        case Kind::Neural: return -x / tau;
        case Kind::Polynomial: return -(c1 * x + c3 * x * x * x);
    }
    return 0.0;
}

double AgentModel::f_deriv(double x) const {
    switch (kind) {
        case Kind::Lti: return -a;
        case Kind::Neural: return -1.0 / tau;
        case Kind::Polynomial: return -(c1 + 3.0 * c3 * x * x);
    }
    return 0.0;
}

double AgentModel::h(double x) const {
    return kind == Kind::Neural ? std::tanh(x) : x;
}

double AgentModel::h_deriv(double x) const {
    if (kind == Kind::Neural) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    return 1.0;
}

double AgentModel::h_inv(double y) const {
    if (kind == Kind::Neural) {
        if (!output_in_range(y)) throw std::domain_error("neural agent: output outside (-1, 1)");
        return std::atanh(y);
    }
    return y;
}

double AgentModel::k_inv(double y) const {
    switch (kind) {
        case Kind::Lti: return a * y;
        case Kind::Neural:
            if (!output_in_range(y)) throw std::domain_error("neural agent: output outside (-1, 1)");
            return std::atanh(y) / tau;
        case Kind::Polynomial: return c1 * y + c3 * y * y * y;
    }
    return 0.0;
}

double AgentModel::k_inv_deriv(double y) const {
    switch (kind) {
        case Kind::Lti: return a;
        case Kind::Neural:
            if (!output_in_range(y)) throw std::domain_error("neural agent: output outside (-1, 1)");
            return 1.0 / (tau * (1.0 - y * y));
        case Kind::Polynomial: return c1 + 3.0 * c3 * y * y;
    }
    return 0.0;
}

bool AgentModel::output_in_range(double y) const {
    if (!std::isfinite(y)) return false;
    return kind == Kind::Neural ? (y > -1.0 && y < 1.0) : true;
}

bool AgentModel::is_integrator() const {
    switch (kind) {
        case Kind::Lti: return a == 0.0;
        case Kind::Neural: return false;
        case Kind::Polynomial: return c1 == 0.0 && c3 == 0.0;
    }
    return false;
}

EdgeCoupling EdgeCoupling::identity(double gain) {
    if (!(gain > 0.0)) throw std::invalid_argument("coupling: gain must be positive");
    return EdgeCoupling{Kind::Identity, gain, 0.0};
}

EdgeCoupling EdgeCoupling::tanh_coupling(double gain) {
    if (!(gain > 0.0)) throw std::invalid_argument("coupling: gain must be positive");
    return EdgeCoupling{Kind::Tanh, gain, 0.0};
}

EdgeCoupling EdgeCoupling::cubic_coupling(double gain, double cubic) {
    if (!(gain > 0.0)) throw std::invalid_argument("coupling: gain must be positive");
    if (!(cubic >= 0.0)) throw std::invalid_argument("coupling: cubic coefficient must be nonnegative");
    return EdgeCoupling{Kind::Cubic, gain, cubic};
}

double EdgeCoupling::g(double z) const {
    switch (kind) {
        case Kind::Identity: return gain * z;
        case Kind::Tanh: return gain * std::tanh(z);
        case Kind::Cubic: return gain * (z + cubic * z * z * z);
    }
    return 0.0;
}

double EdgeCoupling::g_deriv(double z) const {
    switch (kind) {
        case Kind::Identity: return gain;
        case Kind::Tanh: {
            const double t = std::tanh(z);
            return gain * (1.0 - t * t);
        }
        case Kind::Cubic: return gain * (1.0 + 3.0 * cubic * z * z);
    }
    return 0.0;
}

CouplingTable CouplingTable::uniform(EdgeCoupling c) {
    CouplingTable t;
    t.uniform_ = true;
    t.base_ = c;
    return t;
}

CouplingTable CouplingTable::seeded(EdgeCoupling::Kind kind,
                                    std::pair<double, double> gain_range,
                                    std::pair<double, double> cubic_range,
                                    std::uint64_t seed) {
    if (!(gain_range.first > 0.0) || !(gain_range.second >= gain_range.first))
        throw std::invalid_argument("CouplingTable: need 0 < gain_lo <= gain_hi");
    if (!(cubic_range.first >= 0.0) || !(cubic_range.second >= cubic_range.first))
        throw std::invalid_argument("CouplingTable: need 0 <= cubic_lo <= cubic_hi");
    CouplingTable t;
    t.uniform_ = false;
    t.kind_ = kind;
    t.gain_range_ = gain_range;
    t.cubic_range_ = cubic_range;
    t.seed_ = seed;
    return t;
}

namespace {
// Stateless log-uniform draw keyed on (seed, pair, salt).
double keyed_log_uniform(std::uint64_t seed, std::uint64_t key, std::uint64_t salt,
                         double lo, double hi) {
    if (lo == hi) return lo;
    const std::uint64_t bits = splitmix64(splitmix64(seed ^ key) + salt);
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * u);
}
}  // namespace

EdgeCoupling CouplingTable::at(int i, int j) const {
    if (i == j || i < 0 || j < 0) throw std::invalid_argument("CouplingTable: invalid pair");
    if (uniform_) return base_;
    if (i > j) std::swap(i, j);
    const std::uint64_t key =
        (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
    EdgeCoupling c;
    c.kind = kind_;
    c.gain = keyed_log_uniform(seed_, key, 0x67a1u, gain_range_.first, gain_range_.second);
    if (kind_ == EdgeCoupling::Kind::Cubic) {
        // cubic range may include 0; draw uniformly instead of log-uniformly
        const std::uint64_t bits = splitmix64(splitmix64(seed_ ^ key) + 0x99c3u);
        const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
        c.cubic = cubic_range_.first + (cubic_range_.second - cubic_range_.first) * u;
    }
    return c;
}

NetworkSystem::NetworkSystem(WeightedGraph graph, std::vector<AgentModel> agents,
                             CouplingTable couplings)
    : graph_(std::move(graph)), agents_(std::move(agents)), couplings_(std::move(couplings)) {
    if (static_cast<int>(agents_.size()) != graph_.node_count())
        throw std::invalid_argument("NetworkSystem: one agent per node required");
    edge_couplings_.reserve(graph_.edge_count());
    for (const auto& e : graph_.edges()) edge_couplings_.push_back(couplings_.at(e.i, e.j));
}

Eigen::VectorXd NetworkSystem::gains() const {
    Eigen::VectorXd b(size());
    for (int i = 0; i < size(); ++i) b[i] = agents_[i].b;
    return b;
}

namespace detail {

void closed_loop_rhs_into(const NetworkSystem& sys, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& w_total, Eigen::VectorXd& y_buf,
                          Eigen::VectorXd& out) {
    const int n = sys.size();
    const auto& agents = sys.agents();
    y_buf.resize(n);
    out.resize(n);
    for (int i = 0; i < n; ++i) y_buf[i] = agents[i].h(x[i]);

    for (int i = 0; i < n; ++i) out[i] = agents[i].f(x[i]) + w_total[i];

    const auto& edges = sys.graph().edges();
    const auto& cpl = sys.edge_couplings();
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        const double mu = e.weight * cpl[k].g(y_buf[e.i] - y_buf[e.j]);
        out[e.i] -= agents[e.i].b * mu;
        out[e.j] += agents[e.j].b * mu;
    }
}

}  // namespace detail

Eigen::VectorXd closed_loop_rhs(const NetworkSystem& sys, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& w) {
    if (x.size() != sys.size() || w.size() != sys.size())
        throw std::invalid_argument("closed_loop_rhs: dimension mismatch");
    if (!x.allFinite()) throw std::invalid_argument("closed_loop_rhs: non-finite state");
    Eigen::VectorXd y, out;
    detail::closed_loop_rhs_into(sys, x, w, y, out);
    return out;
}

Eigen::VectorXd steady_state_residual(const NetworkSystem& sys, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& w) {
    const int n = sys.size();
    if (y.size() != n || w.size() != n)
        throw std::invalid_argument("steady_state_residual: dimension mismatch");
    const auto& agents = sys.agents();
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = agents[i].k_inv(y[i]) - w[i];

    const auto& edges = sys.graph().edges();
    const auto& cpl = sys.edge_couplings();
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        const double mu = e.weight * cpl[k].g(y[e.i] - y[e.j]);
        r[e.i] += agents[e.i].b * mu;
        r[e.j] -= agents[e.j].b * mu;
    }
    return r;
}

Eigen::MatrixXd connection_matrix_true(const NetworkSystem& sys, const Eigen::VectorXd& y0) {
    const int n = sys.size();
    if (y0.size() != n) throw std::invalid_argument("connection_matrix_true: dimension mismatch");
    const auto& agents = sys.agents();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = agents[i].k_inv_deriv(y0[i]);

    const auto& edges = sys.graph().edges();
    const auto& cpl = sys.edge_couplings();
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        const double c = e.weight * cpl[k].g_deriv(y0[e.i] - y0[e.j]);
        m(e.i, e.i) += agents[e.i].b * c;
        m(e.j, e.j) += agents[e.j].b * c;
        m(e.i, e.j) -= agents[e.i].b * c;
        m(e.j, e.i) -= agents[e.j].b * c;
    }
    return m;
}

Eigen::VectorXd outputs_of_state(const NetworkSystem& sys, const Eigen::VectorXd& x) {
    Eigen::VectorXd y(sys.size());
    for (int i = 0; i < sys.size(); ++i) y[i] = sys.agents()[i].h(x[i]);
    return y;
}

Eigen::VectorXd state_of_outputs(const NetworkSystem& sys, const Eigen::VectorXd& y) {
    Eigen::VectorXd x(sys.size());
    for (int i = 0; i < sys.size(); ++i) x[i] = sys.agents()[i].h_inv(y[i]);
    return x;
}

}  // namespace netident
