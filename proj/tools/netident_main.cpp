// Command-line front end: run scenarios, sweep parameters, replicate the
// shipped case studies and run the verification suite.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netident/scenario.hpp"
#include "netident/verify.hpp"

namespace {

struct CommonFlags {
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<double> kappa;
    std::optional<double> epsilon;
    bool parallel_probes = false;
    std::vector<int> probe_nodes;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool scenario_required) {
    auto* opt = cmd->add_option("--scenario", flags.scenario_path, "Scenario JSON file");
    if (scenario_required) opt->required();
    cmd->add_option("--seed", flags.seed, "Override the baseline-input seed");
    cmd->add_option("--out", flags.out_dir, "Output directory");
    cmd->add_option("--kappa", flags.kappa, "Override the probe amplitude");
    cmd->add_option("--epsilon", flags.epsilon, "Override the edge threshold");
    cmd->add_flag("--parallel-probes", flags.parallel_probes,
                  "Collect probes concurrently (independent restarts)");
    cmd->add_option("--probe-nodes", flags.probe_nodes,
                    "Restrict probing to these nodes and estimate the reachable rank");
}

netident::Scenario apply_flags(netident::Scenario s, const CommonFlags& flags) {
    if (flags.seed) s.algorithm.w0_seed = *flags.seed;
    if (flags.kappa) s.algorithm.kappa = *flags.kappa;
    if (flags.epsilon) s.algorithm.epsilon = *flags.epsilon;
    if (flags.parallel_probes) s.algorithm.probe_mode = "parallel";
    if (!flags.probe_nodes.empty()) {
        netident::RestrictionSpec r;
        r.nodes = flags.probe_nodes;
        s.restriction = r;
    }
    if (flags.out_dir) {
        s.output_dir = *flags.out_dir;
    } else if (const char* root = std::getenv("NETIDENT_OUT_ROOT")) {
        s.output_dir = (std::filesystem::path(root) /
                        std::filesystem::path(s.output_dir).filename())
                           .string();
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady-state network identification for diffusively-coupled systems"};
    app.require_subcommand(1);

    CommonFlags run_flags, sweep_flags, case_flags;
    std::string sweep_param;
    std::vector<double> sweep_values;
    std::string case_name;

    auto* run_cmd = app.add_subcommand("run", "Run one scenario end to end");
    add_common_flags(run_cmd, run_flags, true);

    auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario once per parameter value");
    add_common_flags(sweep_cmd, sweep_flags, true);
    sweep_cmd->add_option("--param", sweep_param, "kappa | sigma | switch_time")->required();
    sweep_cmd->add_option("--values", sweep_values, "Parameter values")->required();

    auto* case_cmd = app.add_subcommand("casestudy", "Run a shipped case-study preset");
    case_cmd->add_option("name", case_name, "lti or neural")->required();
    add_common_flags(case_cmd, case_flags, false);

    app.add_subcommand("verify", "Run the end-to-end property suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            auto s = apply_flags(netident::load_scenario(run_flags.scenario_path), run_flags);
            return netident::run_scenario(s, std::cout).exit_code;
        }
        if (sweep_cmd->parsed()) {
            auto s = apply_flags(netident::load_scenario(sweep_flags.scenario_path), sweep_flags);
            auto cells = netident::sweep_scenario(s, sweep_param, sweep_values, std::cout);
            for (const auto& cell : cells)
                if (cell.exit_code == 1) return 1;
            return 0;
        }
        if (case_cmd->parsed()) {
            auto text = case_flags.scenario_path.empty()
                            ? netident::preset_scenario_text(case_name)
                            : std::string();
            auto s = case_flags.scenario_path.empty()
                         ? netident::scenario_from_json_text(text)
                         : netident::load_scenario(case_flags.scenario_path);
            s = apply_flags(std::move(s), case_flags);
            return netident::run_scenario(s, std::cout).exit_code;
        }
        return netident::run_verification(std::cout) ? 0 : 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
}
