#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netident/model.hpp"
#include "netident/runner.hpp"

namespace netident {

enum class Branch { Generic, Integrator };

std::string to_string(Branch b);
Branch branch_from_string(const std::string& s);

/// Probing design. The generic branch perturbs one node at a time
/// (delta_w_i = kappa e_i, n runs, no projection). The integrator branch
/// (inverse steady-state relation has zero derivative at the baseline)
/// perturbs node differences (kappa (e_i - e_n), n-1 runs), projects
/// measured deviations onto the mean-zero subspace, regularizes with the
/// rank-one averaging matrix Q, and accounts for the known all-ones
/// direction with a synthetic pair appended without a run.
struct ProbePlan {
    Branch branch = Branch::Generic;
    double kappa = 0.0;
    int n = 0;
    int num_runs = 0;
    std::vector<Eigen::VectorXd> delta_ws;

    Eigen::VectorXd apply_J(const Eigen::VectorXd& v) const;
    Eigen::MatrixXd J() const;
    Eigen::MatrixXd Q() const;
};

/// Branch selection threshold on max_i |k_inv_deriv(y0_i)|.
inline constexpr double kGradZeroTol = 1e-12;
/// Edge-controller derivatives below this are flagged indeterminate.
inline constexpr double kDerivTol = 1e-12;
/// Condition-number cap on the deviation matrix.
inline constexpr double kConditionLimit = 1e12;

ProbePlan design_probes(const Eigen::VectorXd& y0, const std::vector<AgentModel>& agents,
                        double kappa);

struct ProbeRecord {
    Eigen::VectorXd delta_w;
    Eigen::VectorXd delta_y;
    bool synthetic = false;
};

struct ProbeLog {
    Eigen::VectorXd w0, y0;
    double kappa = 0.0;
    Branch branch = Branch::Generic;
    std::vector<ProbeRecord> records;  // n entries once sealed
    Eigen::VectorXd gains;             // known input gains b_i
    std::vector<double> segment_residuals;
    std::uint64_t seed = 0;
};

struct ProbeError : std::runtime_error {
    ProbeError(int index, const std::string& msg)
        : std::runtime_error("probe " + std::to_string(index) + ": " + msg), probe_index(index) {}
    int probe_index;
};

/// Runs the planned perturbed inputs through the black box and seals the
/// log (appending the synthetic pair in the integrator branch). Throws
/// ProbeError naming the failing probe on any non-converged segment. With
/// parallel = true and a parallelizable runner the probes run concurrently
/// and are merged by index.
ProbeLog collect_probes(SteadyStateRunner& runner, const Eigen::VectorXd& w0,
                        const Eigen::VectorXd& y0, const ProbePlan& plan,
                        const Eigen::VectorXd& gains, bool parallel = false);

struct DeltaWInverseApply {
    Eigen::MatrixXd value;          // deltaW^{-1} * deltaY
    std::uint64_t multiply_adds;    // counted scalar operations
};

/// Applies the closed-form inverse of the probe-input matrix deltaW to
/// deltaY from the right (M' deltaY = deltaW gives (M')^{-1} = deltaY
/// deltaW^{-1}) in O(n^2) counted scalar operations, never through a
/// generic inverse. Generic branch: value = deltaY / kappa. Integrator
/// branch: the inverse of kappa [e_1-e_n, ..., e_{n-1}-e_n, 1] acts by
/// column folding.
DeltaWInverseApply delta_w_inverse_apply(const Eigen::MatrixXd& delta_y, Branch branch,
                                         double kappa);

struct EstimationDiagnostics {
    double delta_y_condition = 0.0;
    bool fast_path = true;
    std::string fallback_reason;
    double error_scale = 0.0;  // sqrt(n) kappa (1 + max(p d) lambda_max), recovered quantities
    int w0_redraws = 0;
};

struct IllConditionedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Estimates the connection matrix from a sealed probe log.
///
/// Fast path: apply the closed-form probe-matrix inverse, post-scale by the
/// known gains so the result is symmetric up to the linearization error,
/// symmetrize, verify positive definiteness via Cholesky and invert the
/// factorization; subtract Q. Falls back to the direct dense solve
/// M' = deltaW * deltaY^{-1} when the symmetrized matrix is not positive
/// definite (flagged in diagnostics).
Eigen::MatrixXd estimate_connection_matrix(const ProbeLog& log,
                                           EstimationDiagnostics* diag = nullptr);

struct RecoveredEdge {
    int i = 0, j = 0;
    double p = 0.0;           // recovered coupling weight
    double d = 0.0;           // controller derivative at the baseline difference
    bool determinate = true;  // false when d fell below kDerivTol
};

/// Thresholded edge detection and weight extraction: the pair {i,j} is an
/// edge when min(M_ij, M_ji) < -epsilon, and each negative orientation
/// contributes -M_ij / (b_i d_ij) to the averaged weight.
std::vector<RecoveredEdge> extract_graph(const Eigen::MatrixXd& m, double epsilon,
                                         const Eigen::VectorXd& y0, const CouplingTable& couplings,
                                         const Eigen::VectorXd& gains);

struct ReconstructionResult {
    Eigen::MatrixXd M;
    double epsilon = 0.0;
    double kappa = 0.0;
    Branch branch = Branch::Generic;
    Eigen::VectorXd w0, y0;
    std::vector<RecoveredEdge> edges;
    ProbeLog log;
    EstimationDiagnostics diagnostics;

    /// Recovered graph; throws when any weight is indeterminate.
    WeightedGraph graph(int n) const;
};

struct ReconstructOptions {
    double kappa = 1e-3;
    double epsilon = 0.01;
    std::uint64_t w0_seed = 0;
    int max_redraws = 5;
    bool parallel_probes = false;
    std::optional<Eigen::VectorXd> w0_override;
};

/// Full identification pipeline against a black box: draw the baseline
/// input, run it, design probes, collect the log, estimate the connection
/// matrix and extract the graph. Domain errors at non-differentiable points
/// trigger a redraw of the baseline input with a shifted seed.
ReconstructionResult reconstruct(SteadyStateRunner& runner, const std::vector<AgentModel>& agents,
                                 const CouplingTable& couplings, const ReconstructOptions& opts);

/// Numerical rank of stacked output deviations: number of singular values
/// >= tol * sigma_max.
int estimate_reachable_rank(const std::vector<Eigen::VectorXd>& samples, double tol);

/// Probes with random perturbations supported on a node subset and returns
/// the raw output deviations (for reachable-rank experiments).
std::vector<Eigen::VectorXd> collect_restricted_probes(SteadyStateRunner& runner,
                                                       const Eigen::VectorXd& w0,
                                                       const std::vector<int>& nodes,
                                                       int num_samples, double kappa,
                                                       std::uint64_t seed);

}  // namespace netident
