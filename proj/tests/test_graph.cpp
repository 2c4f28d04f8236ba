#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "netident/graph.hpp"
#include "netident/io.hpp"
#include "netident/rng.hpp"

using namespace netident;

TEST_SUITE_BEGIN("graph");

TEST_CASE("incidence matrix follows the canonical orientation") {
    SUBCASE("two-edge path") {
        WeightedGraph g(3, {{0, 1, 1.0}, {1, 2, 1.0}});
        Eigen::MatrixXd inc = incidence_matrix(g);
        REQUIRE(inc.rows() == 3);
        REQUIRE(inc.cols() == 2);
        CHECK(inc(0, 0) == 1.0);
        CHECK(inc(1, 0) == -1.0);
        CHECK(inc(2, 0) == 0.0);
        CHECK(inc(0, 1) == 0.0);
        CHECK(inc(1, 1) == 1.0);
        CHECK(inc(2, 1) == -1.0);
    }
    SUBCASE("single edge") {
        WeightedGraph g(2, {{0, 1, 3.0}});
        Eigen::MatrixXd inc = incidence_matrix(g);
        CHECK(inc(0, 0) == 1.0);
        CHECK(inc(1, 0) == -1.0);
    }
    SUBCASE("empty edge set") {
        WeightedGraph g(3, {});
        Eigen::MatrixXd inc = incidence_matrix(g);
        CHECK(inc.rows() == 3);
        CHECK(inc.cols() == 0);
    }
}

TEST_CASE("weighted laplacian matches hand values") {
    SUBCASE("triangle with unit weights") {
        WeightedGraph g(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}});
        Eigen::MatrixXd expected(3, 3);
        expected << 2, -1, -1, -1, 2, -1, -1, -1, 2;
        CHECK((weighted_laplacian(g) - expected).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single edge of weight 2") {
        WeightedGraph g(2, {{0, 1, 2.0}});
        Eigen::MatrixXd expected(2, 2);
        expected << 2, -2, -2, 2;
        CHECK((weighted_laplacian(g) - expected).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("non-positive edge scale is rejected") {
        WeightedGraph g(2, {{0, 1, 1.0}});
        Eigen::VectorXd bad(1);
        bad << 0.0;
        CHECK_THROWS_AS(weighted_laplacian(g, bad), std::invalid_argument);
    }
}

// brute-force oracle: accumulate nu_e (e_i - e_j)(e_i - e_j)^T per edge
TEST_CASE("laplacian equals the per-edge outer-product accumulation") {
    WeightedGraph g = random_graph(12, 0.4, 0.5, 5.0, 99);
    Eigen::VectorXd scale(g.edge_count());
    Rng rng(7);
    for (int k = 0; k < g.edge_count(); ++k) scale[k] = rng.uniform(0.1, 2.0);

    Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(12, 12);
    int k = 0;
    for (const auto& e : g.edges()) {
        Eigen::VectorXd diff = Eigen::VectorXd::Zero(12);
        diff[e.i] = 1.0;
        diff[e.j] = -1.0;
        oracle += e.weight * scale[k++] * diff * diff.transpose();
    }
    CHECK((weighted_laplacian(g, scale) - oracle).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("laplacian properties on random instances") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        WeightedGraph g = random_graph(15, 0.3, 0.3, 10.0, seed);
        Eigen::MatrixXd lap = weighted_laplacian(g);
        const double scale_ref = std::max(1.0, lap.cwiseAbs().maxCoeff());
        CHECK((lap - lap.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((lap * Eigen::VectorXd::Ones(15)).cwiseAbs().maxCoeff() <= 1e-12 * scale_ref);
        Rng rng(seed + 100);
        for (int rep = 0; rep < 20; ++rep) {
            Eigen::VectorXd x = rng.gaussian_vector(15);
            CHECK(x.dot(lap * x) >= -1e-12 * scale_ref * x.squaredNorm());
        }
        // every incidence column sums to zero
        Eigen::MatrixXd inc = incidence_matrix(g);
        CHECK(inc.colwise().sum().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("random graph generation") {
    SUBCASE("p = 0 gives the empty graph") {
        CHECK(random_graph(10, 0.0, 1.0, 2.0, 1).edge_count() == 0);
    }
    SUBCASE("p = 1 gives the complete graph") {
        CHECK(random_graph(3, 1.0, 1.0, 2.0, 1).edge_count() == 3);
    }
    SUBCASE("edge count stays within three sigmas of the binomial mean") {
        // n=100, p=0.15: mean 742.5, sigma ~25.1
        WeightedGraph g = random_graph(100, 0.15, 0.3, 10.0, 4242);
        CHECK(g.edge_count() >= 668);
        CHECK(g.edge_count() <= 817);
    }
    SUBCASE("weights honor the log-uniform range") {
        WeightedGraph g = random_graph(40, 0.5, 0.3, 10.0, 5);
        for (const auto& e : g.edges()) {
            CHECK(e.weight >= 0.3);
            CHECK(e.weight <= 10.0);
        }
    }
    SUBCASE("same seed is bit-identical") {
        WeightedGraph a = random_graph(30, 0.4, 0.5, 4.0, 77);
        WeightedGraph b = random_graph(30, 0.4, 0.5, 4.0, 77);
        REQUIRE(a.edge_count() == b.edge_count());
        for (int k = 0; k < a.edge_count(); ++k) {
            CHECK(a.edges()[k].i == b.edges()[k].i);
            CHECK(a.edges()[k].j == b.edges()[k].j);
            CHECK(a.edges()[k].weight == b.edges()[k].weight);
        }
    }
    SUBCASE("invalid arguments are rejected") {
        CHECK_THROWS_AS(random_graph(1, 0.5, 1.0, 2.0, 0), std::invalid_argument);
        CHECK_THROWS_AS(random_graph(5, 1.5, 1.0, 2.0, 0), std::invalid_argument);
        CHECK_THROWS_AS(random_graph(5, 0.5, 0.0, 2.0, 0), std::invalid_argument);
        CHECK_THROWS_AS(random_graph(5, 0.5, 3.0, 2.0, 0), std::invalid_argument);
    }
}

TEST_CASE("graph invariants are enforced") {
    CHECK_THROWS_AS(WeightedGraph(3, {{1, 1, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, 1.0}, {1, 0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, -2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(WeightedGraph(3, {{0, 3, 1.0}}), std::invalid_argument);

    WeightedGraph g(3, {{2, 0, 1.5}});  // canonicalized to (0, 2)
    CHECK(g.has_edge(0, 2));
    CHECK(g.has_edge(2, 0));
    CHECK(g.weight(2, 0) == 1.5);
    CHECK(g.weight(0, 1) == 0.0);
}

TEST_CASE("relabeling permutes incidence rows and conjugates the laplacian") {
    WeightedGraph g = random_graph(9, 0.4, 0.5, 3.0, 21);
    std::vector<int> perm = {3, 1, 4, 0, 8, 6, 7, 5, 2};
    WeightedGraph h = relabel(g, perm);

    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(9, 9);
    for (int v = 0; v < 9; ++v) p(perm[v], v) = 1.0;
    Eigen::MatrixXd lhs = weighted_laplacian(h);
    Eigen::MatrixXd rhs = p * weighted_laplacian(g) * p.transpose();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-14);
    for (const auto& e : g.edges()) CHECK(h.weight(perm[e.i], perm[e.j]) == e.weight);
}

TEST_CASE("edge-list csv round-trips exactly") {
    namespace fs = std::filesystem;
    WeightedGraph g = random_graph(12, 0.4, 0.3, 10.0, 123);
    const auto path = (fs::temp_directory_path() / "netident_graph_rt.csv").string();
    save_edge_list_csv(g, path);
    WeightedGraph loaded = load_edge_list_csv(path);
    REQUIRE(loaded.node_count() >= g.edges().back().j + 1);
    REQUIRE(loaded.edge_count() == g.edge_count());
    for (int k = 0; k < g.edge_count(); ++k) {
        CHECK(loaded.edges()[k].i == g.edges()[k].i);
        CHECK(loaded.edges()[k].j == g.edges()[k].j);
        CHECK(loaded.edges()[k].weight == g.edges()[k].weight);
    }
    std::remove(path.c_str());
}

TEST_SUITE_END();
