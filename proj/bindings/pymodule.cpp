// Python bindings for the main operations: graph construction, the
// closed-form probe-matrix inverse, rank estimation, rigidity checks and
// scenario runs.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "netident/analysis.hpp"
#include "netident/graph.hpp"
#include "netident/reconstruct.hpp"
#include "netident/scenario.hpp"

namespace py = pybind11;
using namespace netident;

namespace {

WeightedGraph graph_from_tuples(int n, const std::vector<std::tuple<int, int, double>>& edges) {
    std::vector<Edge> list;
    list.reserve(edges.size());
    for (const auto& [i, j, w] : edges) list.push_back({i, j, w});
    return WeightedGraph(n, std::move(list));
}

std::vector<std::tuple<int, int, double>> graph_to_tuples(const WeightedGraph& g) {
    std::vector<std::tuple<int, int, double>> out;
    for (const auto& e : g.edges()) out.emplace_back(e.i, e.j, e.weight);
    return out;
}

py::dict run_scenario_json(const std::string& text) {
    Scenario s = scenario_from_json_text(text);
    std::ostringstream sink;
    RunOutcome outcome = run_scenario(s, sink);

    py::dict d;
    d["exit_code"] = outcome.exit_code;
    d["output_dir"] = outcome.output_dir;
    d["runtime_sec"] = outcome.runtime_sec;
    if (outcome.restricted_rank) {
        d["restricted_rank"] = *outcome.restricted_rank;
        return d;
    }
    d["precision"] = outcome.comparison.precision;
    d["recall"] = outcome.comparison.recall;
    d["max_abs_err"] = outcome.comparison.max_abs_weight_err;
    d["max_rel_err"] = outcome.comparison.max_rel_weight_err;
    const auto& rec = *outcome.reconstruction;
    d["branch"] = to_string(rec.branch);
    d["M"] = rec.M;
    std::vector<std::tuple<int, int, double>> edges;
    for (const auto& e : rec.edges) edges.emplace_back(e.i, e.j, e.p);
    d["edges"] = edges;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Steady-state probing and network identification for "
              "diffusively-coupled systems";

    m.def("random_graph",
          [](int n, double p, double lo, double hi, std::uint64_t seed) {
              return graph_to_tuples(random_graph(n, p, lo, hi, seed));
          },
          py::arg("n"), py::arg("p"), py::arg("weight_lo"), py::arg("weight_hi"),
          py::arg("seed"),
          "Seeded random graph as a list of (i, j, weight) tuples");

    m.def("incidence_matrix",
          [](int n, const std::vector<std::tuple<int, int, double>>& edges) {
              return incidence_matrix(graph_from_tuples(n, edges));
          },
          py::arg("n"), py::arg("edges"));

    m.def("weighted_laplacian",
          [](int n, const std::vector<std::tuple<int, int, double>>& edges) {
              return weighted_laplacian(graph_from_tuples(n, edges));
          },
          py::arg("n"), py::arg("edges"));

    m.def("delta_w_inverse_apply",
          [](const Eigen::MatrixXd& delta_y, const std::string& branch, double kappa) {
              auto out = delta_w_inverse_apply(delta_y, branch_from_string(branch), kappa);
              return py::make_tuple(out.value, out.multiply_adds);
          },
          py::arg("delta_y"), py::arg("branch"), py::arg("kappa"),
          "Closed-form probe-matrix inverse applied to delta_y; returns "
          "(matrix, counted multiply-adds)");

    m.def("estimate_reachable_rank",
          [](const std::vector<Eigen::VectorXd>& samples, double tol) {
              return estimate_reachable_rank(samples, tol);
          },
          py::arg("samples"), py::arg("tol") = 1e-8);

    m.def("rigidity_threshold",
          [](double m_bound, double min_nu_d) {
              RigidityCheck check = rigidity_threshold(m_bound, min_nu_d);
              py::dict d;
              d["valid"] = check.valid;
              d["epsilon"] = check.epsilon;
              d["entry_bound"] = check.entry_bound;
              return d;
          },
          py::arg("m"), py::arg("min_nu_d"));

    m.def("run_scenario_json", &run_scenario_json, py::arg("scenario_json"),
          "Run a scenario given as a JSON string; returns a metrics dict");

    m.def("preset_scenario", &preset_scenario_text, py::arg("name"),
          "JSON text of a shipped case-study preset (lti | neural)");

    m.attr("__version__") = "0.1.0";
}
