#include "netident/verify.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <Eigen/SVD>

#include "netident/analysis.hpp"
#include "netident/reconstruct.hpp"
#include "netident/rng.hpp"
#include "netident/runner.hpp"
#include "netident/scenario.hpp"

namespace netident {

namespace {

struct Reporter {
    std::ostream& out;
    bool all_ok = true;
    void check(const std::string& name, bool ok, const std::string& detail = "") {
        out << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) out << "  (" << detail << ")";
        out << '\n';
        all_ok = all_ok && ok;
    }
};

Eigen::MatrixXd probe_matrix_f(int n) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) {
        f(k, k) = 1.0;
        f(n - 1, k) = -1.0;
    }
    f.col(n - 1).setOnes();
    return f;
}

void check_probe_inverse(Reporter& rep) {
    bool identity_ok = true, norm_ok = true, ops_ok = true;
    double worst_dev = 0.0, worst_norm = 0.0;
    for (int n : {5, 50, 200}) {
        auto applied = delta_w_inverse_apply(Eigen::MatrixXd::Identity(n, n),
                                             Branch::Integrator, 1.0);
        const Eigen::MatrixXd finv = applied.value;
        const Eigen::MatrixXd f = probe_matrix_f(n);
        const double dev = (f * finv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
        worst_dev = std::max(worst_dev, dev);
        identity_ok = identity_ok && dev <= 1e-12;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(finv);
        worst_norm = std::max(worst_norm, svd.singularValues()(0));
        norm_ok = norm_ok && svd.singularValues()(0) <= 2.0;
        ops_ok = ops_ok && applied.multiply_adds <= 8ull * n * n;
    }
    rep.check("closed-form probe-matrix inverse is exact", identity_ok,
              "max deviation " + format_double(worst_dev));
    rep.check("probe-matrix inverse norm bounded by 2", norm_ok,
              "max norm " + format_double(worst_norm));
    rep.check("probe-matrix inverse stays within 8n^2 operations", ops_ok);
}

NetworkSystem make_lti_system(int n, double p, bool integrator, std::uint64_t seed) {
    WeightedGraph g = random_graph(n, p, 0.3, 10.0, seed);
    std::vector<AgentModel> agents;
    Rng rng(splitmix64(seed + 1));
    for (int i = 0; i < n; ++i)
        agents.push_back(integrator ? AgentModel::integrator()
                                    : AgentModel::lti(rng.log_uniform(1.0, 10.0)));
    CouplingTable couplings =
        CouplingTable::seeded(EdgeCoupling::Kind::Identity, {0.1, 1.0}, {0.0, 0.0},
                              splitmix64(seed + 2));
    return NetworkSystem(std::move(g), std::move(agents), couplings);
}

Eigen::MatrixXd lti_connection_expected(const NetworkSystem& sys) {
    const int n = sys.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = sys.agents()[i].a;
    Eigen::VectorXd scale(sys.graph().edge_count());
    for (int k = 0; k < sys.graph().edge_count(); ++k) scale[k] = sys.edge_couplings()[k].gain;
    return m + weighted_laplacian(sys.graph(), scale);
}

void check_exact_recovery(Reporter& rep) {
    double worst = 0.0;
    bool ok = true;
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        for (bool integrator : {false, true}) {
            NetworkSystem sys = make_lti_system(20, 0.3, integrator, seed);
            NewtonRunner runner(sys, Eigen::VectorXd::Zero(20));
            ReconstructOptions opts;
            opts.kappa = 0.5;
            opts.epsilon = 0.01;
            opts.w0_seed = seed;
            ReconstructionResult rec = reconstruct(runner, sys.agents(), sys.couplings(), opts);
            const double dev =
                (rec.M - lti_connection_expected(sys)).cwiseAbs().maxCoeff();
            worst = std::max(worst, dev);
            ok = ok && dev <= 1e-10;
            GraphComparison cmp = compare_graphs(sys.graph(), rec.edges);
            ok = ok && cmp.exact_edge_set();
        }
    }
    rep.check("linear systems reconstruct exactly from solver steady states", ok,
              "max entry deviation " + format_double(worst));
}

void check_rigidity(Reporter& rep) {
    bool ok = true;
    Rng rng(2024);
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const int n = 6;
        WeightedGraph g = random_graph(n, 0.5, 0.5, 4.0, 3000 + trial);
        if (g.edge_count() == 0) continue;
        NetworkSystem sys(g, std::vector<AgentModel>(n, AgentModel::lti(1.0)),
                          CouplingTable::uniform(EdgeCoupling::identity()));
        Eigen::VectorXd y0 = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd truth = connection_matrix_true(sys, y0);
        double min_nu_d = std::numeric_limits<double>::infinity();
        for (const auto& e : g.edges()) min_nu_d = std::min(min_nu_d, e.weight);
        const double m_bound = 0.25 * min_nu_d * rng.uniform(0.1, 1.0);
        Eigen::MatrixXd noisy = truth;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) noisy(r, c) += m_bound * rng.uniform(-1.0, 1.0);
        RigidityCheck check = rigidity_threshold(m_bound, min_nu_d);
        if (!check.valid) {
            ok = false;
            break;
        }
        auto edges = extract_graph(noisy, check.epsilon, y0, sys.couplings(),
                                   Eigen::VectorXd::Ones(n));
        GraphComparison cmp = compare_graphs(g, edges);
        ok = ok && cmp.exact_edge_set();
        for (const auto& err : cmp.per_edge) ok = ok && err.abs_err <= m_bound + 1e-12;
    }
    rep.check("rigidity threshold recovers the exact edge set under bounded noise", ok);
}

void check_restricted_rank(Reporter& rep) {
    NetworkSystem sys = make_lti_system(8, 0.5, false, 99);
    NewtonRunner runner(sys, Eigen::VectorXd::Zero(8));
    Rng rng(7);
    Eigen::VectorXd w0 = rng.gaussian_vector(8);
    auto deviations = collect_restricted_probes(runner, w0, {0, 1, 2}, 8, 0.5, 77);
    const int rank = estimate_reachable_rank(deviations, 1e-8);
    rep.check("restricted probing spans exactly the probed dimensions on a linear system",
              rank == 3, "rank " + std::to_string(rank));
}

void check_disturbance(Reporter& rep) {
    WeightedGraph g(1, {});
    NetworkSystem sys(g, {AgentModel::lti(1.0)}, CouplingTable::uniform(EdgeCoupling::identity()));
    SimOptions opts;
    opts.deriv_tol = 1e-11;
    const double bound = 0.5;
    DisturbanceReport rep_dist =
        disturbance_experiment(sys, Eigen::VectorXd::Zero(1), bound, 10, 30.0, opts, 5);
    bool ok = rep_dist.sup_deviation <= bound + 1e-9;
    DisturbanceReport clean =
        disturbance_experiment(sys, Eigen::VectorXd::Zero(1), 0.0, 1, 10.0, opts, 5);
    ok = ok && clean.sup_deviation <= 10 * opts.deriv_tol;
    rep.check("bounded disturbance keeps the output within the bound", ok,
              "sup " + format_double(rep_dist.sup_deviation));
}

void check_determinism(Reporter& rep) {
    namespace fs = std::filesystem;
    Scenario s = scenario_from_json_text(R"({
      "graph": {"n": 6, "p": 0.5, "weight_range": [0.5, 3.0], "seed": 5},
      "agents": {"kind": "lti", "a_range": [1.0, 4.0], "seed": 6},
      "algorithm": {"kappa": 0.1, "epsilon": 0.01, "w0_seed": 7, "oracle": "newton"}
    })");
    auto read_without_runtime = [](const std::string& dir) {
        std::ifstream in(fs::path(dir) / "metrics.json");
        nlohmann::ordered_json j;
        in >> j;
        j.erase("runtime_sec");
        return j.dump();
    };
    std::ostringstream sink;
    s.output_dir = (fs::temp_directory_path() / "netident_verify_a").string();
    run_scenario(s, sink);
    const std::string first = read_without_runtime(s.output_dir);
    s.output_dir = (fs::temp_directory_path() / "netident_verify_b").string();
    run_scenario(s, sink);
    const std::string second = read_without_runtime(s.output_dir);
    rep.check("identical seeds give identical metrics", first == second);
}

}  // namespace

bool run_verification(std::ostream& out) {
    Reporter rep{out};
    check_probe_inverse(rep);
    check_exact_recovery(rep);
    check_rigidity(rep);
    check_restricted_rank(rep);
    check_disturbance(rep);
    check_determinism(rep);
    out << (rep.all_ok ? "verification passed\n" : "verification FAILED\n");
    return rep.all_ok;
}

}  // namespace netident
