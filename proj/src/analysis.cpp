#include "netident/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace netident {

namespace {

GraphComparison compare_impl(const WeightedGraph& truth,
                             const std::vector<RecoveredEdge>& estimate) {
    GraphComparison cmp;
    cmp.true_edge_count = truth.edge_count();
    cmp.est_edge_count = static_cast<int>(estimate.size());

    std::set<std::pair<int, int>> est_keys;
    for (const auto& e : estimate) {
        const auto key = std::minmax(e.i, e.j);
        if (!est_keys.insert(key).second)
            throw std::invalid_argument("compare_graphs: duplicate estimated edge");
        if (truth.has_edge(e.i, e.j)) {
            ++cmp.common_edge_count;
            if (e.determinate) {
                EdgeError err;
                err.i = key.first;
                err.j = key.second;
                err.nu_true = truth.weight(e.i, e.j);
                err.p_est = e.p;
                err.abs_err = std::abs(e.p - err.nu_true);
                err.rel_err = err.abs_err / err.nu_true;
                cmp.per_edge.push_back(err);
            }
        }
    }
    std::sort(cmp.per_edge.begin(), cmp.per_edge.end(), [](const EdgeError& a, const EdgeError& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });

    cmp.precision = cmp.est_edge_count == 0
                        ? 1.0
                        : static_cast<double>(cmp.common_edge_count) / cmp.est_edge_count;
    cmp.recall = cmp.true_edge_count == 0
                     ? 1.0
                     : static_cast<double>(cmp.common_edge_count) / cmp.true_edge_count;
    for (const auto& err : cmp.per_edge) {
        cmp.max_abs_weight_err = std::max(cmp.max_abs_weight_err, err.abs_err);
        cmp.max_rel_weight_err = std::max(cmp.max_rel_weight_err, err.rel_err);
    }
    return cmp;
}

}  // namespace

GraphComparison compare_graphs(const WeightedGraph& truth,
                               const std::vector<RecoveredEdge>& estimate) {
    for (const auto& e : estimate)
        if (e.i < 0 || e.j < 0 || e.i >= truth.node_count() || e.j >= truth.node_count() ||
            e.i == e.j)
            throw std::invalid_argument("compare_graphs: estimated edge out of range");
    return compare_impl(truth, estimate);
}

GraphComparison compare_graphs(const WeightedGraph& truth, const WeightedGraph& estimate) {
    if (truth.node_count() != estimate.node_count())
        throw std::invalid_argument("compare_graphs: node counts differ");
    std::vector<RecoveredEdge> est;
    est.reserve(estimate.edge_count());
    for (const auto& e : estimate.edges()) {
        RecoveredEdge r;
        r.i = e.i;
        r.j = e.j;
        r.p = e.weight;
        r.d = 1.0;
        est.push_back(r);
    }
    return compare_impl(truth, est);
}

RigidityCheck rigidity_threshold(double m, double min_nu_d) {
    return rigidity_threshold(m, min_nu_d, {});
}

RigidityCheck rigidity_threshold(double m, double min_nu_d,
                                 const std::map<std::pair<int, int>, double>& d_by_edge) {
    if (!(m >= 0.0)) throw std::invalid_argument("rigidity_threshold: m must be nonnegative");
    if (!(min_nu_d > 0.0))
        throw std::invalid_argument("rigidity_threshold: min_nu_d must be positive");
    RigidityCheck check;
    check.valid = m <= 0.25 * min_nu_d;
    check.epsilon = 2.0 * m;
    check.entry_bound = m;
    for (const auto& [edge, d] : d_by_edge) {
        if (!(d > 0.0)) throw std::invalid_argument("rigidity_threshold: edge derivative must be positive");
        check.weight_err_bound[edge] = m / d;
    }
    return check;
}

MeasurementErrorScale measurement_error_scale(const Eigen::MatrixXd& delta_y,
                                              const Eigen::MatrixXd& Delta_y, double max_nu_d,
                                              double lambda_max) {
    const Eigen::Index n = delta_y.rows();
    if (delta_y.cols() != n || Delta_y.rows() != n || Delta_y.cols() != n)
        throw std::invalid_argument("measurement_error_scale: square matrices of equal size required");
    if (!(max_nu_d >= 0.0) || !(lambda_max >= 0.0))
        throw std::invalid_argument("measurement_error_scale: recovered quantities must be nonnegative");

    MeasurementErrorScale out;
    Eigen::BDCSVD<Eigen::MatrixXd> svd_dy(delta_y);
    Eigen::BDCSVD<Eigen::MatrixXd> svd_Dy(Delta_y);
    const double norm_dy = svd_dy.singularValues()(0);
    const double norm_Dy = svd_Dy.singularValues()(0);
    if (!(norm_dy > 0.0))
        throw std::invalid_argument("measurement_error_scale: deviation matrix is zero");
    out.norm_ratio = norm_Dy / norm_dy;
    out.reliable = out.norm_ratio < 0.1;

    // DeltaY * deltaY^{-1} via a transposed solve
    Eigen::MatrixXd prod =
        delta_y.transpose().partialPivLu().solve(Delta_y.transpose()).transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd_prod(prod);
    out.operator_ratio = svd_prod.singularValues()(0);
    out.scale = std::sqrt(static_cast<double>(n)) * (1.0 + max_nu_d * lambda_max) *
                out.operator_ratio;
    return out;
}

}  // namespace netident
