#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "netident/model.hpp"
#include "netident/rng.hpp"

using namespace netident;
using testutil::lti_system;

TEST_SUITE_BEGIN("model");

TEST_CASE("closed-loop derivative matches hand evaluation") {
    SUBCASE("isolated linear agent") {
        WeightedGraph g(1, {});
        NetworkSystem sys(g, {AgentModel::lti(1.0)}, CouplingTable::uniform(EdgeCoupling::identity()));
        Eigen::VectorXd x(1), w(1);
        x << 2.0;
        w << 0.0;
        CHECK(closed_loop_rhs(sys, x, w)[0] == doctest::Approx(-2.0).epsilon(1e-15));
    }
    SUBCASE("two nodes exchanging relative output") {
        WeightedGraph g(2, {{0, 1, 1.0}});
        std::vector<AgentModel> agents = {AgentModel::integrator(), AgentModel::integrator()};
        NetworkSystem sys(g, agents, CouplingTable::uniform(EdgeCoupling::identity()));
        Eigen::VectorXd x(2), w(2);
        x << 0.0, 1.0;
        w << 0.0, 0.0;
        Eigen::VectorXd dx = closed_loop_rhs(sys, x, w);
        CHECK(dx[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(dx[1] == doctest::Approx(-1.0).epsilon(1e-15));
    }
    SUBCASE("voltage model with gain and tanh outputs") {
        WeightedGraph g(2, {{0, 1, 3.0}});
        std::vector<AgentModel> agents = {AgentModel::neural(1.0, 2.0), AgentModel::neural(1.0, 2.0)};
        NetworkSystem sys(g, agents, CouplingTable::uniform(EdgeCoupling::identity()));
        Eigen::VectorXd x(2), w(2);
        x << 0.0, 0.5;
        w << 0.0, 0.0;
        Eigen::VectorXd dx = closed_loop_rhs(sys, x, w);
        // direct evaluation of  -x/tau + b sum nu (tanh x_j - tanh x_i)
        CHECK(dx[0] == doctest::Approx(2.0 * 3.0 * std::tanh(0.5)).epsilon(1e-15));
        CHECK(dx[1] == doctest::Approx(-0.5 - 2.0 * 3.0 * std::tanh(0.5)).epsilon(1e-15));
    }
    SUBCASE("non-finite state is rejected") {
        WeightedGraph g(1, {});
        NetworkSystem sys(g, {AgentModel::lti(1.0)}, CouplingTable::uniform(EdgeCoupling::identity()));
        Eigen::VectorXd x(1), w(1);
        x << std::numeric_limits<double>::quiet_NaN();
        w << 0.0;
        CHECK_THROWS_AS(closed_loop_rhs(sys, x, w), std::invalid_argument);
    }
}

TEST_CASE("steady-state residual") {
    SUBCASE("linear population reduces to (A + L) y - w") {
        NetworkSystem sys = lti_system(8, 0.5, 31);
        Eigen::MatrixXd m = testutil::lti_connection_oracle(sys);
        Rng rng(9);
        for (int rep = 0; rep < 5; ++rep) {
            Eigen::VectorXd y = rng.gaussian_vector(8);
            Eigen::VectorXd w = rng.gaussian_vector(8);
            Eigen::VectorXd expected = m * y - w;
            CHECK((steady_state_residual(sys, y, w) - expected).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("consensus at agreement needs no input") {
        NetworkSystem sys = testutil::consensus_system(5, 0.6, 11, {0.3, 10.0}, {1.0, 1.0});
        Eigen::VectorXd y = Eigen::VectorXd::Constant(5, 3.7);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(5);
        CHECK(steady_state_residual(sys, y, w).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("isolated integrator-free agent") {
        WeightedGraph g(1, {});
        NetworkSystem sys(g, {AgentModel::lti(1.0)}, CouplingTable::uniform(EdgeCoupling::identity()));
        Eigen::VectorXd y(1), w(1);
        y << 5.0;
        w << 3.0;
        CHECK(steady_state_residual(sys, y, w)[0] == doctest::Approx(2.0).epsilon(1e-15));
        y << 3.0;
        CHECK(steady_state_residual(sys, y, w)[0] == 0.0);
    }
    SUBCASE("output outside the admissible range is a domain error") {
        WeightedGraph g(1, {});
        NetworkSystem sys(g, {AgentModel::neural(1.0, 1.0)}, CouplingTable::uniform(EdgeCoupling::identity()));
        Eigen::VectorXd y(1), w(1);
        y << 1.5;
        w << 0.0;
        CHECK_THROWS_AS(steady_state_residual(sys, y, w), std::domain_error);
    }
}

TEST_CASE("true connection matrix") {
    SUBCASE("linear case is input-point independent and matches the oracle") {
        NetworkSystem sys = lti_system(10, 0.4, 17);
        Eigen::MatrixXd oracle = testutil::lti_connection_oracle(sys);
        Rng rng(3);
        CHECK((connection_matrix_true(sys, Eigen::VectorXd::Zero(10)) - oracle)
                  .cwiseAbs()
                  .maxCoeff() <= 1e-12);
        CHECK((connection_matrix_true(sys, rng.gaussian_vector(10)) - oracle)
                  .cwiseAbs()
                  .maxCoeff() <= 1e-12);
    }
    SUBCASE("empty graph leaves only the diagonal") {
        WeightedGraph g(3, {});
        std::vector<AgentModel> agents = {AgentModel::lti(1.0), AgentModel::lti(2.0),
                                          AgentModel::lti(3.0)};
        NetworkSystem sys(g, agents, CouplingTable::uniform(EdgeCoupling::identity()));
        Eigen::MatrixXd m = connection_matrix_true(sys, Eigen::VectorXd::Zero(3));
        CHECK((m - Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() ==
              0.0);
    }
    SUBCASE("single strong edge") {
        WeightedGraph g(2, {{0, 1, 5.0}});
        std::vector<AgentModel> agents = {AgentModel::integrator(), AgentModel::integrator()};
        NetworkSystem sys(g, agents, CouplingTable::uniform(EdgeCoupling::identity()));
        Eigen::MatrixXd expected(2, 2);
        expected << 5, -5, -5, 5;
        CHECK((connection_matrix_true(sys, Eigen::VectorXd::Zero(2)) - expected)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    SUBCASE("equal gains keep it symmetric and the coupling part kills the ones vector") {
        NetworkSystem sys = testutil::neural_system(8, 0.5, 23, {3.0, 30.0}, {2.0, 2.0});
        Eigen::VectorXd y0 = 0.3 * Rng(5).gaussian_vector(8).array().tanh();
        Eigen::MatrixXd m = connection_matrix_true(sys, y0);
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * m.cwiseAbs().maxCoeff());
        Eigen::VectorXd grad(8);
        for (int i = 0; i < 8; ++i) grad[i] = sys.agents()[i].k_inv_deriv(y0[i]);
        CHECK((m * Eigen::VectorXd::Ones(8) - grad).cwiseAbs().maxCoeff() <=
              1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("built-in agents") {
    SUBCASE("linear steady-state relation") {
        AgentModel m = AgentModel::lti(2.0);
        CHECK(m.k_inv(1.5) == 3.0);
        CHECK(m.k_inv_deriv(0.7) == 2.0);
        CHECK(m.b == 1.0);
    }
    SUBCASE("integrator relation vanishes") {
        AgentModel m = AgentModel::integrator();
        CHECK(m.k_inv(4.2) == 0.0);
        CHECK(m.k_inv_deriv(-1.0) == 0.0);
        CHECK(m.is_integrator());
        CHECK(!AgentModel::lti(0.5).is_integrator());
    }
    SUBCASE("voltage agent solves its isolated equilibrium in closed form") {
        AgentModel m = AgentModel::neural(1.0, 1.0);
        // steady state of xdot = -x + w at w = 2 gives y = tanh(2)
        const double y = std::tanh(2.0);
        CHECK(m.k_inv(y) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("parameter validation") {
        CHECK_THROWS_AS(AgentModel::lti(-1.0), std::invalid_argument);
        CHECK_THROWS_AS(AgentModel::neural(0.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(AgentModel::neural(1.0, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(AgentModel::polynomial(-1.0, 0.0), std::invalid_argument);
    }
}

namespace {

double central_difference(double (*eval)(const void*, double), const void* ctx, double x,
                          double h) {
    return (eval(ctx, x + h) - eval(ctx, x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("derivatives match finite differences") {
    const double h = 1e-6;
    SUBCASE("agent steady-state relations") {
        std::vector<AgentModel> agents = {AgentModel::lti(2.0), AgentModel::neural(3.0, 2.0),
                                          AgentModel::polynomial(1.0, 0.5, 1.5)};
        for (const auto& agent : agents) {
            for (double y = -0.9; y <= 0.9; y += 0.15) {
                auto eval = +[](const void* ctx, double v) {
                    return static_cast<const AgentModel*>(ctx)->k_inv(v);
                };
                const double fd = central_difference(eval, &agent, y, h);
                const double an = agent.k_inv_deriv(y);
                CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
            }
        }
    }
    SUBCASE("edge controllers") {
        std::vector<EdgeCoupling> couplings = {EdgeCoupling::identity(0.7),
                                               EdgeCoupling::tanh_coupling(1.3),
                                               EdgeCoupling::cubic_coupling(0.5, 2.0)};
        for (const auto& c : couplings) {
            for (double z = -2.0; z <= 2.0; z += 0.25) {
                auto eval = +[](const void* ctx, double v) {
                    return static_cast<const EdgeCoupling*>(ctx)->g(v);
                };
                const double fd = central_difference(eval, &c, z, h);
                const double an = c.g_deriv(z);
                CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
                CHECK(an >= 0.0);
            }
        }
    }
}

TEST_CASE("coupling table is total and deterministic") {
    CouplingTable t = CouplingTable::seeded(EdgeCoupling::Kind::Identity, {0.1, 1.0}, {0.0, 0.0}, 404);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if (i == j) continue;
            EdgeCoupling a = t.at(i, j);
            EdgeCoupling b = t.at(j, i);
            CHECK(a.gain == b.gain);
            CHECK(a.gain >= 0.1);
            CHECK(a.gain <= 1.0);
        }
    }
    CHECK(t.at(2, 5).gain == t.at(2, 5).gain);
    CHECK_THROWS_AS(t.at(3, 3), std::invalid_argument);
}

TEST_SUITE_END();
