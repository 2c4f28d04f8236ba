#include "netident/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>

#include <json.hpp>

#include "netident/rng.hpp"

namespace netident {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ValidationError(path + ": " + msg);
}

void expect_object(const json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
}

void expect_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& path, const std::string& key,
                         std::int64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::uint64_t get_seed(const json& obj, const std::string& path, const std::string& key,
                       std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        fail(path + "." + key, "expected a nonnegative integer seed");
    return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::pair<double, double> get_range(const json& obj, const std::string& path,
                                    const std::string& key, std::pair<double, double> fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(path + "." + key, "expected [lo, hi]");
    const double lo = v[0].get<double>();
    const double hi = v[1].get<double>();
    if (!(lo <= hi)) fail(path + "." + key, "expected lo <= hi");
    return {lo, hi};
}

void require_positive_range(std::pair<double, double> r, const std::string& path) {
    if (!(r.first > 0.0)) fail(path, "range must be strictly positive");
}

GraphSpec parse_graph(const json& obj) {
    GraphSpec g;
    expect_object(obj, "graph");
    expect_keys(obj, "graph", {"n", "p", "weight_range", "seed", "edges"});
    const auto n = get_integer(obj, "graph", "n", 0);
    if (n < 2) fail("graph.n", "need at least 2 nodes");
    g.n = static_cast<int>(n);
    if (obj.contains("edges")) {
        if (obj.contains("p") || obj.contains("weight_range") || obj.contains("seed"))
            fail("graph.edges", "explicit edges exclude p/weight_range/seed");
        g.explicit_edges = true;
        const auto& arr = obj.at("edges");
        if (!arr.is_array()) fail("graph.edges", "expected an array of [i, j, weight]");
        for (const auto& row : arr) {
            if (!row.is_array() || row.size() != 3)
                fail("graph.edges", "expected rows [i, j, weight]");
            g.edges.push_back(
                {row[0].get<int>(), row[1].get<int>(), row[2].get<double>()});
        }
    } else {
        g.p = get_number(obj, "graph", "p", 0.0);
        if (!(g.p >= 0.0) || !(g.p <= 1.0)) fail("graph.p", "must lie in [0, 1]");
        g.weight_range = get_range(obj, "graph", "weight_range", {0.3, 10.0});
        require_positive_range(g.weight_range, "graph.weight_range");
        g.seed = get_seed(obj, "graph", "seed", 0);
    }
    return g;
}

AgentSpec parse_agents(const json& obj) {
    AgentSpec a;
    expect_object(obj, "agents");
    expect_keys(obj, "agents",
                {"kind", "a_range", "tau_range", "b_range", "c1_range", "c3_range", "seed"});
    a.kind = get_string(obj, "agents", "kind", "lti");
    if (a.kind == "polynomial") a.kind = "custom-polynomial";
    if (a.kind != "lti" && a.kind != "integrator" && a.kind != "neural" &&
        a.kind != "custom-polynomial")
        fail("agents.kind", "expected lti | integrator | neural | custom-polynomial");
    a.a_range = get_range(obj, "agents", "a_range", {1.0, 1.0});
    a.tau_range = get_range(obj, "agents", "tau_range", {1.0, 1.0});
    a.b_range = get_range(obj, "agents", "b_range", {1.0, 1.0});
    a.c1_range = get_range(obj, "agents", "c1_range", {1.0, 1.0});
    a.c3_range = get_range(obj, "agents", "c3_range", {0.0, 0.0});
    a.seed = get_seed(obj, "agents", "seed", 0);
    if (a.kind == "lti") require_positive_range(a.a_range, "agents.a_range");
    if (a.kind == "neural") {
        require_positive_range(a.tau_range, "agents.tau_range");
        require_positive_range(a.b_range, "agents.b_range");
    }
    if (a.kind == "custom-polynomial") {
        if (!(a.c1_range.first >= 0.0)) fail("agents.c1_range", "must be nonnegative");
        if (!(a.c3_range.first >= 0.0)) fail("agents.c3_range", "must be nonnegative");
        require_positive_range(a.b_range, "agents.b_range");
    }
    return a;
}

CouplingSpec parse_coupling(const json& obj) {
    CouplingSpec c;
    expect_object(obj, "coupling");
    expect_keys(obj, "coupling", {"kind", "gain_range", "cubic_range", "seed"});
    c.kind = get_string(obj, "coupling", "kind", "identity");
    if (c.kind == "custom") c.kind = "custom-cubic";
    if (c.kind != "identity" && c.kind != "tanh-difference" && c.kind != "custom-cubic")
        fail("coupling.kind", "expected identity | tanh-difference | custom-cubic");
    c.gain_range = get_range(obj, "coupling", "gain_range", {1.0, 1.0});
    require_positive_range(c.gain_range, "coupling.gain_range");
    c.cubic_range = get_range(obj, "coupling", "cubic_range", {0.0, 0.0});
    if (!(c.cubic_range.first >= 0.0)) fail("coupling.cubic_range", "must be nonnegative");
    c.seed = get_seed(obj, "coupling", "seed", 0);
    return c;
}

AlgorithmSpec parse_algorithm(const json& obj) {
    AlgorithmSpec a;
    expect_object(obj, "algorithm");
    expect_keys(obj, "algorithm",
                {"kappa", "epsilon", "w0_seed", "oracle", "switch_mode", "switch_time",
                 "probe_mode"});
    a.kappa = get_number(obj, "algorithm", "kappa", 1e-3);
    if (!(a.kappa > 0.0)) fail("algorithm.kappa", "must be positive");
    a.epsilon = get_number(obj, "algorithm", "epsilon", 0.01);
    if (!(a.epsilon > 0.0)) fail("algorithm.epsilon", "must be positive");
    a.w0_seed = get_seed(obj, "algorithm", "w0_seed", 0);
    a.oracle = get_string(obj, "algorithm", "oracle", "simulate");
    if (a.oracle != "simulate" && a.oracle != "newton")
        fail("algorithm.oracle", "expected simulate | newton");
    a.switch_mode = get_string(obj, "algorithm", "switch_mode", "converge");
    if (a.switch_mode != "converge" && a.switch_mode != "fixed")
        fail("algorithm.switch_mode", "expected converge | fixed");
    a.switch_time = get_number(obj, "algorithm", "switch_time", 10.0);
    if (!(a.switch_time > 0.0)) fail("algorithm.switch_time", "must be positive");
    a.probe_mode = get_string(obj, "algorithm", "probe_mode", "switching");
    if (a.probe_mode != "switching" && a.probe_mode != "parallel")
        fail("algorithm.probe_mode", "expected switching | parallel");
    return a;
}

IntegratorSpec parse_integrator(const json& obj) {
    IntegratorSpec s;
    expect_object(obj, "integrator");
    expect_keys(obj, "integrator",
                {"method", "rtol", "atol", "dt", "deriv_tol", "dwell", "t_max",
                 "trajectory_stride"});
    s.method = get_string(obj, "integrator", "method", "rkf45");
    if (s.method != "rkf45" && s.method != "rk4")
        fail("integrator.method", "expected rkf45 | rk4");
    s.rtol = get_number(obj, "integrator", "rtol", 1e-10);
    s.atol = get_number(obj, "integrator", "atol", 1e-12);
    s.dt = get_number(obj, "integrator", "dt", 1e-3);
    s.deriv_tol = get_number(obj, "integrator", "deriv_tol", 1e-9);
    s.dwell = static_cast<int>(get_integer(obj, "integrator", "dwell", 10));
    s.t_max = get_number(obj, "integrator", "t_max", 1e4);
    s.trajectory_stride =
        static_cast<int>(get_integer(obj, "integrator", "trajectory_stride", 0));
    if (!(s.rtol > 0.0)) fail("integrator.rtol", "must be positive");
    if (!(s.atol > 0.0)) fail("integrator.atol", "must be positive");
    if (!(s.dt > 0.0)) fail("integrator.dt", "must be positive");
    if (!(s.deriv_tol > 0.0)) fail("integrator.deriv_tol", "must be positive");
    if (s.dwell < 1) fail("integrator.dwell", "must be >= 1");
    if (!(s.t_max > 0.0)) fail("integrator.t_max", "must be positive");
    if (s.trajectory_stride < 0) fail("integrator.trajectory_stride", "must be >= 0");
    return s;
}

NoiseSpec parse_noise(const json& obj) {
    NoiseSpec n;
    expect_object(obj, "noise");
    expect_keys(obj, "noise", {"disturbance_bound", "measurement_sigma", "seed"});
    n.disturbance_bound = get_number(obj, "noise", "disturbance_bound", 0.0);
    n.measurement_sigma = get_number(obj, "noise", "measurement_sigma", 0.0);
    n.seed = get_seed(obj, "noise", "seed", 0);
    if (!(n.disturbance_bound >= 0.0)) fail("noise.disturbance_bound", "must be nonnegative");
    if (!(n.measurement_sigma >= 0.0)) fail("noise.measurement_sigma", "must be nonnegative");
    return n;
}

RestrictionSpec parse_restriction(const json& obj) {
    RestrictionSpec r;
    expect_object(obj, "probe_restriction");
    expect_keys(obj, "probe_restriction", {"nodes", "samples", "tol", "kappa"});
    if (!obj.contains("nodes") || !obj.at("nodes").is_array() || obj.at("nodes").empty())
        fail("probe_restriction.nodes", "expected a nonempty array of node indices");
    for (const auto& v : obj.at("nodes")) {
        if (!v.is_number_integer() || v.get<int>() < 0)
            fail("probe_restriction.nodes", "expected nonnegative node indices");
        r.nodes.push_back(v.get<int>());
    }
    r.samples = static_cast<int>(get_integer(obj, "probe_restriction", "samples", 0));
    if (r.samples < 0) fail("probe_restriction.samples", "must be >= 0");
    r.tol = get_number(obj, "probe_restriction", "tol", 1e-8);
    if (!(r.tol > 0.0)) fail("probe_restriction.tol", "must be positive");
    if (obj.contains("kappa")) {
        r.kappa = get_number(obj, "probe_restriction", "kappa", 0.0);
        if (!(*r.kappa > 0.0)) fail("probe_restriction.kappa", "must be positive");
    }
    return r;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
    json root = json::parse(text);
    expect_object(root, "scenario");
    expect_keys(root, "",
                {"graph", "agents", "coupling", "algorithm", "integrator", "noise", "x0",
                 "probe_restriction", "output_dir"});
    if (!root.contains("graph")) fail("graph", "required section is missing");

    Scenario s;
    s.graph = parse_graph(root.at("graph"));
    if (root.contains("agents")) s.agents = parse_agents(root.at("agents"));
    if (root.contains("coupling")) s.coupling = parse_coupling(root.at("coupling"));
    if (root.contains("algorithm")) s.algorithm = parse_algorithm(root.at("algorithm"));
    if (root.contains("integrator")) s.integrator = parse_integrator(root.at("integrator"));
    if (root.contains("noise")) s.noise = parse_noise(root.at("noise"));
    if (root.contains("x0")) {
        const auto& v = root.at("x0");
        if (v.is_number()) {
            s.x0_fill = v.get<double>();
        } else if (v.is_array()) {
            std::vector<double> vals;
            for (const auto& item : v) {
                if (!item.is_number()) fail("x0", "expected numbers");
                vals.push_back(item.get<double>());
            }
            s.x0_values = std::move(vals);
        } else {
            fail("x0", "expected a number or an array");
        }
    }
    if (root.contains("probe_restriction"))
        s.restriction = parse_restriction(root.at("probe_restriction"));
    if (root.contains("output_dir")) {
        if (!root.at("output_dir").is_string()) fail("output_dir", "expected a string");
        s.output_dir = root.at("output_dir").get<std::string>();
    }

    // cross-field validation
    if (s.graph.explicit_edges)
        for (const auto& e : s.graph.edges)
            if (e.i < 0 || e.j < 0 || e.i >= s.graph.n || e.j >= s.graph.n)
                fail("graph.edges", "node index out of range");
    if (s.x0_values && static_cast<int>(s.x0_values->size()) != s.graph.n)
        fail("x0", "array length must equal graph.n");
    if (s.restriction) {
        for (int v : s.restriction->nodes)
            if (v >= s.graph.n) fail("probe_restriction.nodes", "node index out of range");
        std::set<int> uniq(s.restriction->nodes.begin(), s.restriction->nodes.end());
        if (uniq.size() != s.restriction->nodes.size())
            fail("probe_restriction.nodes", "duplicate node index");
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario file not found: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return scenario_from_json_text(text);
    } catch (const json::parse_error& err) {
        throw ValidationError(path + ": " + err.what());
    }
}

std::string scenario_to_json_text(const Scenario& s) {
    ordered_json root;
    ordered_json graph;
    graph["n"] = s.graph.n;
    if (s.graph.explicit_edges) {
        ordered_json arr = ordered_json::array();
        for (const auto& e : s.graph.edges) arr.push_back({e.i, e.j, e.weight});
        graph["edges"] = arr;
    } else {
        graph["p"] = s.graph.p;
        graph["weight_range"] = {s.graph.weight_range.first, s.graph.weight_range.second};
        graph["seed"] = s.graph.seed;
    }
    root["graph"] = graph;
    root["agents"] = {{"kind", s.agents.kind},
                      {"a_range", {s.agents.a_range.first, s.agents.a_range.second}},
                      {"tau_range", {s.agents.tau_range.first, s.agents.tau_range.second}},
                      {"b_range", {s.agents.b_range.first, s.agents.b_range.second}},
                      {"c1_range", {s.agents.c1_range.first, s.agents.c1_range.second}},
                      {"c3_range", {s.agents.c3_range.first, s.agents.c3_range.second}},
                      {"seed", s.agents.seed}};
    root["coupling"] = {{"kind", s.coupling.kind},
                        {"gain_range", {s.coupling.gain_range.first, s.coupling.gain_range.second}},
                        {"cubic_range", {s.coupling.cubic_range.first, s.coupling.cubic_range.second}},
                        {"seed", s.coupling.seed}};
    root["algorithm"] = {{"kappa", s.algorithm.kappa},       {"epsilon", s.algorithm.epsilon},
                         {"w0_seed", s.algorithm.w0_seed},   {"oracle", s.algorithm.oracle},
                         {"switch_mode", s.algorithm.switch_mode},
                         {"switch_time", s.algorithm.switch_time},
                         {"probe_mode", s.algorithm.probe_mode}};
    root["integrator"] = {{"method", s.integrator.method},
                          {"rtol", s.integrator.rtol},
                          {"atol", s.integrator.atol},
                          {"dt", s.integrator.dt},
                          {"deriv_tol", s.integrator.deriv_tol},
                          {"dwell", s.integrator.dwell},
                          {"t_max", s.integrator.t_max},
                          {"trajectory_stride", s.integrator.trajectory_stride}};
    root["noise"] = {{"disturbance_bound", s.noise.disturbance_bound},
                     {"measurement_sigma", s.noise.measurement_sigma},
                     {"seed", s.noise.seed}};
    if (s.x0_values)
        root["x0"] = *s.x0_values;
    else
        root["x0"] = s.x0_fill;
    if (s.restriction) {
        ordered_json r;
        r["nodes"] = s.restriction->nodes;
        r["samples"] = s.restriction->samples;
        r["tol"] = s.restriction->tol;
        if (s.restriction->kappa) r["kappa"] = *s.restriction->kappa;
        root["probe_restriction"] = r;
    }
    root["output_dir"] = s.output_dir;
    return root.dump(2) + "\n";
}

WeightedGraph build_graph(const GraphSpec& spec) {
    if (spec.explicit_edges) return WeightedGraph(spec.n, spec.edges);
    return random_graph(spec.n, spec.p, spec.weight_range.first, spec.weight_range.second,
                        spec.seed);
}

std::vector<AgentModel> build_agents(const AgentSpec& spec, int n) {
    Rng rng(spec.seed);
    std::vector<AgentModel> agents;
    agents.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (spec.kind == "lti") {
            agents.push_back(AgentModel::lti(rng.log_uniform(spec.a_range.first, spec.a_range.second)));
        } else if (spec.kind == "integrator") {
            agents.push_back(AgentModel::integrator());
        } else if (spec.kind == "neural") {
            const double tau = rng.log_uniform(spec.tau_range.first, spec.tau_range.second);
            const double b = rng.log_uniform(spec.b_range.first, spec.b_range.second);
            agents.push_back(AgentModel::neural(tau, b));
        } else {  // polynomial
            const double c1 = rng.uniform(spec.c1_range.first, spec.c1_range.second);
            const double c3 = rng.uniform(spec.c3_range.first, spec.c3_range.second);
            const double b = rng.log_uniform(spec.b_range.first, spec.b_range.second);
            agents.push_back(AgentModel::polynomial(c1, c3, b));
        }
    }
    return agents;
}

CouplingTable build_couplings(const CouplingSpec& spec) {
    EdgeCoupling::Kind kind = EdgeCoupling::Kind::Identity;
    if (spec.kind == "tanh-difference") kind = EdgeCoupling::Kind::Tanh;
    if (spec.kind == "custom-cubic") kind = EdgeCoupling::Kind::Cubic;
    const bool fixed_gain = spec.gain_range.first == spec.gain_range.second;
    const bool fixed_cubic = spec.cubic_range.first == spec.cubic_range.second;
    if (fixed_gain && fixed_cubic) {
        EdgeCoupling c;
        c.kind = kind;
        c.gain = spec.gain_range.first;
        c.cubic = spec.cubic_range.first;
        return CouplingTable::uniform(c);
    }
    return CouplingTable::seeded(kind, spec.gain_range, spec.cubic_range, spec.seed);
}

NetworkSystem build_system(const Scenario& s) {
    return NetworkSystem(build_graph(s.graph), build_agents(s.agents, s.graph.n),
                         build_couplings(s.coupling));
}

SimOptions build_sim_options(const Scenario& s) {
    SimOptions opts;
    opts.method = s.integrator.method == "rk4" ? SimOptions::Method::Rk4 : SimOptions::Method::Rkf45;
    opts.stop = s.algorithm.switch_mode == "fixed" ? SimOptions::StopMode::FixedTime
                                                   : SimOptions::StopMode::Converge;
    opts.dt = s.integrator.dt;
    opts.rtol = s.integrator.rtol;
    opts.atol = s.integrator.atol;
    opts.deriv_tol = s.integrator.deriv_tol;
    opts.dwell = s.integrator.dwell;
    opts.t_max = s.integrator.t_max;
    opts.switch_time = s.algorithm.switch_time;
    return opts;
}

Eigen::VectorXd build_x0(const Scenario& s, int n) {
    if (s.x0_values)
        return Eigen::Map<const Eigen::VectorXd>(s.x0_values->data(), s.x0_values->size());
    return Eigen::VectorXd::Constant(n, s.x0_fill);
}

namespace {

std::unique_ptr<SteadyStateRunner> build_runner(const Scenario& s, const NetworkSystem& sys,
                                                const SimOptions& opts) {
    const Eigen::VectorXd x0 = build_x0(s, sys.size());
    if (s.algorithm.oracle == "newton") {
        std::unique_ptr<SteadyStateRunner> base = std::make_unique<NewtonRunner>(sys, x0);
        if (s.noise.measurement_sigma > 0.0) {
            // wrap so oracle-based runs honor the configured measurement noise
            struct Owning final : SteadyStateRunner {
                std::unique_ptr<SteadyStateRunner> base;
                NoisyRunner noisy;
                Owning(std::unique_ptr<SteadyStateRunner> b, double sigma, std::uint64_t seed)
                    : base(std::move(b)), noisy(*base, sigma, seed) {}
                int size() const override { return noisy.size(); }
                SteadyStateSample run(const Eigen::VectorXd& w, int tag) override {
                    return noisy.run(w, tag);
                }
                bool parallelizable() const override { return noisy.parallelizable(); }
                void reset() override { noisy.reset(); }
            };
            return std::make_unique<Owning>(std::move(base), s.noise.measurement_sigma,
                                            s.noise.seed);
        }
        return base;
    }
    const ScheduleMode mode = s.algorithm.probe_mode == "parallel" ? ScheduleMode::Parallel
                                                                   : ScheduleMode::Sequential;
    return std::make_unique<SimulatedRunner>(sys, opts, s.noise, x0, mode);
}

ordered_json metrics_details(const Scenario& s, const ReconstructionResult& rec,
                             const GraphComparison& cmp) {
    int indeterminate = 0;
    for (const auto& e : rec.edges)
        if (!e.determinate) ++indeterminate;
    ordered_json d;
    d["n"] = s.graph.n;
    d["branch"] = to_string(rec.branch);
    d["true_edges"] = cmp.true_edge_count;
    d["est_edges"] = cmp.est_edge_count;
    d["common_edges"] = cmp.common_edge_count;
    d["indeterminate_edges"] = indeterminate;
    d["delta_y_condition"] = rec.diagnostics.delta_y_condition;
    d["error_scale"] = rec.diagnostics.error_scale;
    d["fast_path"] = rec.diagnostics.fast_path;
    d["fallback_reason"] = rec.diagnostics.fallback_reason;
    d["w0_redraws"] = rec.diagnostics.w0_redraws;
    d["oracle"] = s.algorithm.oracle;
    d["probe_mode"] = s.algorithm.probe_mode;
    d["exit_detail"] = cmp.exact_edge_set() ? "exact" : "mismatch";
    return d;
}

}  // namespace

RunOutcome run_scenario(const Scenario& s, std::ostream& log) {
    namespace fs = std::filesystem;
    const auto t_start = std::chrono::steady_clock::now();

    fs::create_directories(s.output_dir);
    const auto artifact = [&](const std::string& name) {
        return (fs::path(s.output_dir) / name).string();
    };
    {
        std::ofstream out(artifact("scenario.json"));
        out << scenario_to_json_text(s);
    }

    NetworkSystem sys = build_system(s);
    SimOptions opts = build_sim_options(s);
    std::unique_ptr<CsvTrajectoryWriter> traj;
    if (s.integrator.trajectory_stride > 0 && s.algorithm.oracle == "simulate") {
        traj = std::make_unique<CsvTrajectoryWriter>(artifact("trajectory.csv"), sys.size());
        opts.trajectory = traj.get();
        opts.trajectory_stride = s.integrator.trajectory_stride;
    }
    save_edge_list_csv(sys.graph(), artifact("graph_true.csv"));
    save_adjacency_csv(sys.graph(), artifact("adjacency_true.csv"));

    auto runner = build_runner(s, sys, opts);

    RunOutcome outcome;
    outcome.output_dir = s.output_dir;

    if (s.restriction) {
        const auto& r = *s.restriction;
        Rng rng(splitmix64(s.algorithm.w0_seed));
        Eigen::VectorXd w0 = rng.gaussian_vector(sys.size());
        const double kappa = r.kappa.value_or(s.algorithm.kappa);
        const int samples = r.samples > 0 ? r.samples : sys.size();
        auto deviations = collect_restricted_probes(*runner, w0, r.nodes, samples, kappa,
                                                    splitmix64(s.algorithm.w0_seed + 1));
        outcome.restricted_rank = estimate_reachable_rank(deviations, r.tol);
        outcome.runtime_sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

        ordered_json metrics;
        metrics["restricted_rank"] = *outcome.restricted_rank;
        metrics["probed_nodes"] = r.nodes.size();
        metrics["samples"] = samples;
        metrics["rank_tol"] = r.tol;
        metrics["kappa"] = kappa;
        metrics["seed"] = s.algorithm.w0_seed;
        metrics["runtime_sec"] = outcome.runtime_sec;
        std::ofstream(artifact("metrics.json")) << metrics.dump(2) << '\n';
        log << "restricted rank " << *outcome.restricted_rank << " from "
            << r.nodes.size() << " probed nodes (" << samples << " samples), runtime "
            << outcome.runtime_sec << " s\n";
        outcome.exit_code = 0;
        return outcome;
    }

    ReconstructOptions ropts;
    ropts.kappa = s.algorithm.kappa;
    ropts.epsilon = s.algorithm.epsilon;
    ropts.w0_seed = s.algorithm.w0_seed;
    ropts.parallel_probes = s.algorithm.probe_mode == "parallel";
    ReconstructionResult rec = reconstruct(*runner, sys.agents(), sys.couplings(), ropts);

    GraphComparison cmp = compare_graphs(sys.graph(), rec.edges);
    outcome.comparison = cmp;

    // artifacts
    {
        std::vector<Edge> est_edges;
        for (const auto& e : rec.edges)
            if (e.determinate) est_edges.push_back({e.i, e.j, e.p});
        WeightedGraph est(sys.size(), std::move(est_edges));
        save_edge_list_csv(est, artifact("graph_est.csv"));
        save_adjacency_csv(est, artifact("adjacency_est.csv"));
    }
    save_probe_log(rec.log, artifact("probes.csv"), artifact("probes.json"));
    save_edge_errors_csv(cmp, artifact("edge_errors.csv"));

    outcome.runtime_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    ordered_json metrics;
    metrics["precision"] = cmp.precision;
    metrics["recall"] = cmp.recall;
    metrics["max_abs_err"] = cmp.max_abs_weight_err;
    metrics["max_rel_err"] = cmp.max_rel_weight_err;
    metrics["kappa"] = rec.kappa;
    metrics["epsilon"] = rec.epsilon;
    metrics["seed"] = s.algorithm.w0_seed;
    metrics["runtime_sec"] = outcome.runtime_sec;
    metrics["details"] = metrics_details(s, rec, cmp);
    std::ofstream(artifact("metrics.json")) << metrics.dump(2) << '\n';

    outcome.reconstruction = std::move(rec);
    outcome.exit_code = cmp.exact_edge_set() ? 0 : 2;

    char line[256];
    std::snprintf(line, sizeof(line),
                  "precision=%.4f recall=%.4f max_rel_err=%.4g runtime=%.2fs (n=%d, %s branch)",
                  cmp.precision, cmp.recall, cmp.max_rel_weight_err, outcome.runtime_sec,
                  s.graph.n, to_string(outcome.reconstruction->branch).c_str());
    log << line << '\n';
    return outcome;
}

std::vector<SweepCell> sweep_scenario(const Scenario& s, const std::string& param,
                                      const std::vector<double>& values, std::ostream& log) {
    if (values.empty()) throw ValidationError("sweep: values must be nonempty");
    if (param != "kappa" && param != "sigma" && param != "switch_time")
        throw ValidationError("sweep: parameter must be kappa | sigma | switch_time");

    namespace fs = std::filesystem;
    fs::create_directories(s.output_dir);
    std::ofstream table((fs::path(s.output_dir) / "sweep.csv").string());
    table << "param,value,precision,recall,max_abs_err,max_rel_err,status\n";

    std::vector<SweepCell> cells;
    for (std::size_t k = 0; k < values.size(); ++k) {
        Scenario cell = s;
        if (param == "kappa") {
            if (!(values[k] > 0.0)) throw ValidationError("sweep: kappa values must be positive");
            cell.algorithm.kappa = values[k];
        } else if (param == "sigma") {
            if (!(values[k] >= 0.0)) throw ValidationError("sweep: sigma values must be nonnegative");
            cell.noise.measurement_sigma = values[k];
        } else {
            if (!(values[k] > 0.0))
                throw ValidationError("sweep: switch_time values must be positive");
            cell.algorithm.switch_time = values[k];
        }
        cell.output_dir =
            (fs::path(s.output_dir) / ("cell_" + std::to_string(k))).string();

        SweepCell out;
        out.value = values[k];
        try {
            RunOutcome run = run_scenario(cell, log);
            out.exit_code = run.exit_code;
            out.comparison = run.comparison;
            table << param << ',' << format_double(values[k]) << ','
                  << format_double(run.comparison.precision) << ','
                  << format_double(run.comparison.recall) << ','
                  << format_double(run.comparison.max_abs_weight_err) << ','
                  << format_double(run.comparison.max_rel_weight_err) << ",ok\n";
        } catch (const std::exception& err) {
            out.exit_code = 1;
            out.error = err.what();
            table << param << ',' << format_double(values[k]) << ",,,,,error: " << err.what()
                  << '\n';
            log << "sweep cell " << values[k] << " failed: " << err.what() << '\n';
        }
        cells.push_back(std::move(out));
    }
    return cells;
}

std::string preset_scenario_text(const std::string& name) {
    if (name == "lti") {
        return R"({
  "graph": {"n": 100, "p": 0.15, "weight_range": [0.3, 10.0], "seed": 71},
  "agents": {"kind": "lti", "a_range": [1.0, 100.0], "seed": 72},
  "coupling": {"kind": "identity", "gain_range": [0.1, 1.0], "seed": 73},
  "algorithm": {"kappa": 1.0, "epsilon": 0.01, "w0_seed": 74, "oracle": "simulate",
                "switch_mode": "fixed", "switch_time": 10.0},
  "integrator": {"method": "rkf45", "rtol": 1e-10, "atol": 1e-12},
  "output_dir": "out/casestudy_lti"
})";
    }
    if (name == "neural") {
        return R"({
  "graph": {"n": 50, "p": 0.25, "weight_range": [1.0, 10.0], "seed": 333},
  "agents": {"kind": "neural", "tau_range": [3.0, 30.0], "b_range": [1.0, 5.0], "seed": 82},
  "coupling": {"kind": "identity", "seed": 83},
  "algorithm": {"kappa": 1e-3, "epsilon": 0.01, "w0_seed": 35, "oracle": "simulate",
                "switch_mode": "fixed", "switch_time": 200.0},
  "integrator": {"method": "rkf45", "rtol": 1e-10, "atol": 1e-12},
  "output_dir": "out/casestudy_neural"
})";
    }
    throw ValidationError("unknown case study preset: " + name + " (expected lti | neural)");
}

}  // namespace netident
