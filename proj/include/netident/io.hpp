#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "netident/analysis.hpp"
#include "netident/graph.hpp"
#include "netident/reconstruct.hpp"
#include "netident/simulate.hpp"

namespace netident {

/// Shortest text form of a double that parses back to the same bits.
std::string format_double(double v);

/// Edge-list CSV with header `i,j,weight`. Round-trips exactly.
void save_edge_list_csv(const WeightedGraph& g, const std::string& path);
WeightedGraph load_edge_list_csv(const std::string& path);

/// Plain numeric adjacency-matrix CSV (case-study figures).
void save_adjacency_csv(const WeightedGraph& g, const std::string& path);

/// Probe records as CSV `probe_index,dw_1..dw_n,dy_1..dy_n` plus a JSON
/// header carrying branch, kappa, seed, baseline and gains.
void save_probe_log(const ProbeLog& log, const std::string& csv_path,
                    const std::string& json_path);
ProbeLog load_probe_log(const std::string& csv_path, const std::string& json_path);

void save_edge_errors_csv(const GraphComparison& cmp, const std::string& path);

/// CSV sink `t,x_1..x_n,y_1..y_n` for trajectory dumps.
class CsvTrajectoryWriter final : public TrajectorySink {
public:
    explicit CsvTrajectoryWriter(const std::string& path, int n);
    void record(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& y) override;

private:
    std::ofstream out_;
};

}  // namespace netident
