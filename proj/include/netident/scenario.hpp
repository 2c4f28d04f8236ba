#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "netident/analysis.hpp"
#include "netident/io.hpp"
#include "netident/model.hpp"
#include "netident/reconstruct.hpp"
#include "netident/runner.hpp"

namespace netident {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GraphSpec {
    int n = 0;
    bool explicit_edges = false;
    double p = 0.0;
    std::pair<double, double> weight_range{0.3, 10.0};
    std::uint64_t seed = 0;
    std::vector<Edge> edges;
};

struct AgentSpec {
    std::string kind = "lti";  // lti | integrator | neural | polynomial
    std::pair<double, double> a_range{1.0, 1.0};
    std::pair<double, double> tau_range{1.0, 1.0};
    std::pair<double, double> b_range{1.0, 1.0};
    std::pair<double, double> c1_range{1.0, 1.0};
    std::pair<double, double> c3_range{0.0, 0.0};
    std::uint64_t seed = 0;
};

struct CouplingSpec {
    std::string kind = "identity";  // identity | tanh-difference | custom-cubic
    std::pair<double, double> gain_range{1.0, 1.0};
    std::pair<double, double> cubic_range{0.0, 0.0};
    std::uint64_t seed = 0;
};

struct AlgorithmSpec {
    double kappa = 1e-3;
    double epsilon = 0.01;
    std::uint64_t w0_seed = 0;
    std::string oracle = "simulate";      // simulate | newton
    std::string switch_mode = "converge"; // converge | fixed
    double switch_time = 10.0;
    std::string probe_mode = "switching"; // switching | parallel
};

struct IntegratorSpec {
    std::string method = "rkf45";  // rkf45 | rk4
    double rtol = 1e-10;
    double atol = 1e-12;
    double dt = 1e-3;
    double deriv_tol = 1e-9;
    int dwell = 10;
    double t_max = 1e4;
    int trajectory_stride = 0;  // 0 disables the dump
};

struct RestrictionSpec {
    std::vector<int> nodes;
    int samples = 0;  // 0 means n
    double tol = 1e-8;
    std::optional<double> kappa;  // defaults to algorithm.kappa
};

struct Scenario {
    GraphSpec graph;
    AgentSpec agents;
    CouplingSpec coupling;
    AlgorithmSpec algorithm;
    IntegratorSpec integrator;
    NoiseSpec noise;
    double x0_fill = 0.0;
    std::optional<std::vector<double>> x0_values;
    std::optional<RestrictionSpec> restriction;
    std::string output_dir = "out";
};

/// Parses and fully validates a scenario file. Unknown keys and
/// out-of-range values are rejected with the offending key path.
Scenario load_scenario(const std::string& path);
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& s);

WeightedGraph build_graph(const GraphSpec& spec);
std::vector<AgentModel> build_agents(const AgentSpec& spec, int n);
CouplingTable build_couplings(const CouplingSpec& spec);
NetworkSystem build_system(const Scenario& s);
SimOptions build_sim_options(const Scenario& s);
Eigen::VectorXd build_x0(const Scenario& s, int n);

struct RunOutcome {
    int exit_code = 0;  // 0 exact, 2 completed with a mismatched graph
    GraphComparison comparison;
    std::optional<ReconstructionResult> reconstruction;
    std::optional<int> restricted_rank;
    double runtime_sec = 0.0;
    std::string output_dir;
};

/// Runs the full pipeline for a scenario and writes graph_true.csv,
/// graph_est.csv, probes.csv/probes.json, edge_errors.csv, metrics.json and
/// the resolved scenario into the output directory; prints a one-line
/// summary. A scenario with a probe restriction runs the reachable-rank
/// experiment instead of the reconstruction.
RunOutcome run_scenario(const Scenario& s, std::ostream& log);

struct SweepCell {
    double value = 0.0;
    int exit_code = 0;
    std::string error;  // empty on success
    GraphComparison comparison;
};

/// One run per value with shared seeds; per-cell failures are recorded and
/// the sweep continues. Emits `<output_dir>/sweep.csv`.
std::vector<SweepCell> sweep_scenario(const Scenario& s, const std::string& param,
                                      const std::vector<double>& values, std::ostream& log);

/// Embedded case-study presets: "lti" or "neural".
std::string preset_scenario_text(const std::string& name);

}  // namespace netident
