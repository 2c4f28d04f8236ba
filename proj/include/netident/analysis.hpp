#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netident/graph.hpp"
#include "netident/reconstruct.hpp"

namespace netident {

struct EdgeError {
    int i = 0, j = 0;
    double nu_true = 0.0;
    double p_est = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;  // |p - nu| / nu
};

struct GraphComparison {
    double precision = 1.0;  // detected edges that are real
    double recall = 1.0;     // real edges that were detected
    double max_abs_weight_err = 0.0;
    double max_rel_weight_err = 0.0;
    int true_edge_count = 0;
    int est_edge_count = 0;
    int common_edge_count = 0;
    std::vector<EdgeError> per_edge;  // over the intersection edge set

    bool exact_edge_set() const {
        return true_edge_count == common_edge_count && est_edge_count == common_edge_count;
    }
};

/// Edge-detection rates plus weight-error statistics over the intersection
/// edge set. Indeterminate estimated weights count for detection but are
/// skipped in the error table.
GraphComparison compare_graphs(const WeightedGraph& truth,
                               const std::vector<RecoveredEdge>& estimate);

GraphComparison compare_graphs(const WeightedGraph& truth, const WeightedGraph& estimate);

struct RigidityCheck {
    bool valid = false;    // m <= min_nu_d / 4
    double epsilon = 0.0;  // 2m, the threshold that guarantees exact recovery
    double entry_bound = 0.0;
    std::map<std::pair<int, int>, double> weight_err_bound;  // m / d_ij per edge
};

/// Entrywise-error threshold test: when the connection-matrix error is at
/// most m and m <= min(nu_ij d_ij)/4, thresholding at epsilon = 2m recovers
/// the exact edge set and each weight to within m / d_ij.
RigidityCheck rigidity_threshold(double m, double min_nu_d);
RigidityCheck rigidity_threshold(double m, double min_nu_d,
                                 const std::map<std::pair<int, int>, double>& d_by_edge);

struct MeasurementErrorScale {
    double scale = 0.0;           // sqrt(n)(1 + max_nu_d * lambda_max) * ||DeltaY deltaY^{-1}||
    double operator_ratio = 0.0;  // ||DeltaY deltaY^{-1}||_2
    double norm_ratio = 0.0;      // ||DeltaY|| / ||deltaY||
    bool reliable = true;         // norm_ratio < 0.1
};

/// First-order sensitivity of the estimate to a measurement perturbation
/// DeltaY of the deviation matrix (diagnostic; the multiplicative constant
/// is not certified). Flagged unreliable when the perturbation is not small
/// relative to the deviations.
MeasurementErrorScale measurement_error_scale(const Eigen::MatrixXd& delta_y,
                                              const Eigen::MatrixXd& Delta_y, double max_nu_d,
                                              double lambda_max);

}  // namespace netident
