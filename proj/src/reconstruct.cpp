#include "netident/reconstruct.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "netident/rng.hpp"

namespace netident {

std::string to_string(Branch b) { return b == Branch::Generic ? "generic" : "integrator"; }

Branch branch_from_string(const std::string& s) {
    if (s == "generic") return Branch::Generic;
    if (s == "integrator") return Branch::Integrator;
    throw std::invalid_argument("unknown branch: " + s);
}

Eigen::VectorXd ProbePlan::apply_J(const Eigen::VectorXd& v) const {
    if (branch == Branch::Generic) return v;
    return v.array() - v.mean();
}

Eigen::MatrixXd ProbePlan::J() const {
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    if (branch == Branch::Generic) return id;
    return id - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
}

Eigen::MatrixXd ProbePlan::Q() const {
    if (branch == Branch::Generic) return Eigen::MatrixXd::Zero(n, n);
    return Eigen::MatrixXd::Constant(n, n, 1.0 / n);
}

ProbePlan design_probes(const Eigen::VectorXd& y0, const std::vector<AgentModel>& agents,
                        double kappa) {
    const int n = static_cast<int>(y0.size());
    if (n < 2) throw std::invalid_argument("design_probes: need at least 2 nodes");
    if (static_cast<int>(agents.size()) != n)
        throw std::invalid_argument("design_probes: one agent per node required");
    if (!(kappa > 0.0)) throw std::invalid_argument("design_probes: kappa must be positive");

    // may raise std::domain_error at a non-differentiable point; the caller
    // redraws the baseline input in that case
    double grad_max = 0.0;
    for (int i = 0; i < n; ++i)
        grad_max = std::max(grad_max, std::abs(agents[i].k_inv_deriv(y0[i])));

    ProbePlan plan;
    plan.kappa = kappa;
    plan.n = n;
    if (grad_max < kGradZeroTol) {
        plan.branch = Branch::Integrator;
        plan.num_runs = n - 1;
        for (int i = 0; i + 1 < n; ++i) {
            Eigen::VectorXd dw = Eigen::VectorXd::Zero(n);
            dw[i] = kappa;
            dw[n - 1] = -kappa;
            plan.delta_ws.push_back(std::move(dw));
        }
    } else {
        plan.branch = Branch::Generic;
        plan.num_runs = n;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd dw = Eigen::VectorXd::Zero(n);
            dw[i] = kappa;
            plan.delta_ws.push_back(std::move(dw));
        }
    }
    return plan;
}

ProbeLog collect_probes(SteadyStateRunner& runner, const Eigen::VectorXd& w0,
                        const Eigen::VectorXd& y0, const ProbePlan& plan,
                        const Eigen::VectorXd& gains, bool parallel) {
    const int n = plan.n;
    if (runner.size() != n || w0.size() != n || y0.size() != n || gains.size() != n)
        throw std::invalid_argument("collect_probes: dimension mismatch");

    ProbeLog log;
    log.w0 = w0;
    log.y0 = y0;
    log.kappa = plan.kappa;
    log.branch = plan.branch;
    log.gains = gains;
    log.records.resize(plan.num_runs);
    log.segment_residuals.resize(plan.num_runs, 0.0);

    auto run_one = [&](int i) {
        SteadyStateSample sample = runner.run(w0 + plan.delta_ws[i], i + 1);
        if (!sample.converged)
            throw ProbeError(i, "segment did not converge within t_max");
        log.records[i].delta_w = plan.delta_ws[i];
        log.records[i].delta_y = plan.apply_J(sample.y - y0);
        log.segment_residuals[i] = sample.residual_norm;
    };

    if (parallel && runner.parallelizable() && plan.num_runs > 1) {
        const unsigned workers =
            std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                               static_cast<unsigned>(plan.num_runs));
        std::atomic<int> next{0};
        std::vector<std::exception_ptr> errors(plan.num_runs);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < plan.num_runs; i = next.fetch_add(1)) {
                    try {
                        run_one(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        for (int i = 0; i < plan.num_runs; ++i)
            if (errors[i]) std::rethrow_exception(errors[i]);
    } else {
        for (int i = 0; i < plan.num_runs; ++i) run_one(i);
    }

    if (plan.branch == Branch::Integrator) {
        ProbeRecord synth;
        synth.delta_w = Eigen::VectorXd::Constant(n, plan.kappa);
        synth.delta_y = synth.delta_w;
        synth.synthetic = true;
        log.records.push_back(std::move(synth));
    }
    return log;
}

DeltaWInverseApply delta_w_inverse_apply(const Eigen::MatrixXd& delta_y, Branch branch,
                                         double kappa) {
    const Eigen::Index n = delta_y.rows();
    if (delta_y.cols() != n) throw std::invalid_argument("delta_w_inverse_apply: square matrix required");
    if (!(kappa > 0.0)) throw std::invalid_argument("delta_w_inverse_apply: kappa must be positive");

    DeltaWInverseApply out;
    out.multiply_adds = 0;
    const double inv_kappa = 1.0 / kappa;
    out.multiply_adds += 1;

    if (branch == Branch::Generic) {
        out.value = delta_y * inv_kappa;
        out.multiply_adds += static_cast<std::uint64_t>(n) * n;
        return out;
    }

    // The probe-matrix inverse acts from the right (M' deltaY = deltaW, so
    // (M')^{-1} = deltaY deltaW^{-1}); its closed form turns into column
    // operations: fold all leading columns into the last, divide by n, add
    // the result back onto each leading column.
    out.value.resize(n, n);
    Eigen::VectorXd fold = delta_y.col(n - 1);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        fold -= delta_y.col(k);
        out.multiply_adds += static_cast<std::uint64_t>(n);
    }
    fold /= static_cast<double>(n);
    out.multiply_adds += static_cast<std::uint64_t>(n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        out.value.col(k) = (delta_y.col(k) + fold) * inv_kappa;
        out.multiply_adds += 2 * static_cast<std::uint64_t>(n);
    }
    out.value.col(n - 1) = fold * inv_kappa;
    out.multiply_adds += static_cast<std::uint64_t>(n);
    return out;
}

namespace {

bool uniform_gains(const Eigen::VectorXd& b) {
    const double span = b.maxCoeff() - b.minCoeff();
    return span <= 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff());
}

Eigen::MatrixXd probe_input_matrix(Branch branch, double kappa, Eigen::Index n) {
    if (branch == Branch::Generic)
        return kappa * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        f(k, k) = 1.0;
        f(n - 1, k) = -1.0;
    }
    f.col(n - 1).setOnes();
    return kappa * f;
}

}  // namespace

Eigen::MatrixXd estimate_connection_matrix(const ProbeLog& log, EstimationDiagnostics* diag) {
    const Eigen::Index n = log.y0.size();
    if (static_cast<Eigen::Index>(log.records.size()) != n)
        throw std::invalid_argument("estimate_connection_matrix: sealed log with n records required");
    if (!(log.kappa > 0.0))
        throw std::invalid_argument("estimate_connection_matrix: kappa must be positive");

    Eigen::MatrixXd delta_y(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (log.records[k].delta_y.size() != n)
            throw std::invalid_argument("estimate_connection_matrix: record dimension mismatch");
        delta_y.col(k) = log.records[k].delta_y;
    }
    if (!delta_y.allFinite())
        throw IllConditionedError("estimate_connection_matrix: non-finite output deviations");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(delta_y);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(n - 1);
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (diag) diag->delta_y_condition = cond;
    if (!(cond < kConditionLimit))
        throw IllConditionedError(
            "estimate_connection_matrix: deviation matrix is numerically singular "
            "(condition " + std::to_string(cond) +
            "); use a smaller kappa or a fresh baseline seed");

    const bool gain_uniform = uniform_gains(log.gains);
    Eigen::MatrixXd m_prime;
    bool fast = false;
    std::string reason;

    if (log.branch == Branch::Generic || gain_uniform) {
        DeltaWInverseApply inv = delta_w_inverse_apply(delta_y, log.branch, log.kappa);
        // postmultiplying by the known gains makes the exact target symmetric
        Eigen::MatrixXd xb = inv.value * log.gains.asDiagonal();
        Eigen::MatrixXd sym = 0.5 * (xb + xb.transpose());
        Eigen::LLT<Eigen::MatrixXd> llt(sym);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd sym_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
            m_prime = log.gains.asDiagonal() * sym_inv;
            fast = true;
        } else {
            reason = "symmetrized inverse failed the positive-definiteness check";
        }
    } else {
        reason = "non-uniform gains with the rank-one regularizer";
    }

    if (!fast) {
        Eigen::MatrixXd delta_w = probe_input_matrix(log.branch, log.kappa, n);
        m_prime = delta_y.transpose().partialPivLu().solve(delta_w.transpose()).transpose();
    }

    if (diag) {
        diag->fast_path = fast;
        diag->fallback_reason = reason;
    }

    if (log.branch == Branch::Integrator)
        m_prime.array() -= 1.0 / static_cast<double>(n);
    return m_prime;
}

std::vector<RecoveredEdge> extract_graph(const Eigen::MatrixXd& m, double epsilon,
                                         const Eigen::VectorXd& y0, const CouplingTable& couplings,
                                         const Eigen::VectorXd& gains) {
    const Eigen::Index n = m.rows();
    if (m.cols() != n || y0.size() != n || gains.size() != n)
        throw std::invalid_argument("extract_graph: dimension mismatch");
    if (!(epsilon > 0.0)) throw std::invalid_argument("extract_graph: epsilon must be positive");

    std::vector<RecoveredEdge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double mij = m(i, j);
            const double mji = m(j, i);
            if (std::min(mij, mji) >= -epsilon) continue;

            RecoveredEdge e;
            e.i = i;
            e.j = j;
            e.d = couplings.at(i, j).g_deriv(y0[i] - y0[j]);
            if (e.d < kDerivTol) {
                e.determinate = false;  // measure-zero event; edge still reported
                e.p = 0.0;
            } else {
                double sum = 0.0;
                int count = 0;
                if (mij < 0.0) {
                    sum += -mij / (gains[i] * e.d);
                    ++count;
                }
                if (mji < 0.0) {
                    sum += -mji / (gains[j] * e.d);
                    ++count;
                }
                e.p = sum / count;
            }
            edges.push_back(e);
        }
    }
    return edges;
}

WeightedGraph ReconstructionResult::graph(int n) const {
    std::vector<Edge> list;
    list.reserve(edges.size());
    for (const auto& e : edges) {
        if (!e.determinate)
            throw std::runtime_error("ReconstructionResult: indeterminate weight on edge {" +
                                     std::to_string(e.i) + "," + std::to_string(e.j) + "}");
        list.push_back({e.i, e.j, e.p});
    }
    return WeightedGraph(n, std::move(list));
}

namespace {

double error_scale_diagnostic(const std::vector<RecoveredEdge>& edges, int n, double kappa) {
    double max_pd = 0.0;
    std::vector<Edge> unit;
    for (const auto& e : edges) {
        if (e.determinate) max_pd = std::max(max_pd, e.p * e.d);
        unit.push_back({e.i, e.j, 1.0});
    }
    double lambda_max = 0.0;
    if (!unit.empty()) {
        WeightedGraph h(n, std::move(unit));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(weighted_laplacian(h));
        lambda_max = es.eigenvalues().maxCoeff();
    }
    return std::sqrt(static_cast<double>(n)) * kappa * (1.0 + max_pd * lambda_max);
}

}  // namespace

ReconstructionResult reconstruct(SteadyStateRunner& runner, const std::vector<AgentModel>& agents,
                                 const CouplingTable& couplings, const ReconstructOptions& opts) {
    const int n = runner.size();
    if (n < 2) throw std::invalid_argument("reconstruct: need at least 2 nodes");
    if (static_cast<int>(agents.size()) != n)
        throw std::invalid_argument("reconstruct: one agent per node required");
    if (!(opts.kappa > 0.0)) throw std::invalid_argument("reconstruct: kappa must be positive");
    if (!(opts.epsilon > 0.0)) throw std::invalid_argument("reconstruct: epsilon must be positive");

    Eigen::VectorXd gains(n);
    bool all_integrator = true;
    for (int i = 0; i < n; ++i) {
        gains[i] = agents[i].b;
        all_integrator = all_integrator && agents[i].is_integrator();
    }

    std::string last_domain_error;
    for (int attempt = 0; attempt <= opts.max_redraws; ++attempt) {
        runner.reset();
        Eigen::VectorXd w0;
        if (opts.w0_override && attempt == 0) {
            w0 = *opts.w0_override;
            if (w0.size() != n) throw std::invalid_argument("reconstruct: w0 override size mismatch");
        } else {
            Rng rng(splitmix64(opts.w0_seed + static_cast<std::uint64_t>(attempt)));
            w0 = rng.gaussian_vector(n);
        }
        // an all-integrator population only admits steady states for
        // mean-free inputs; the mean of the output is conserved instead
        if (all_integrator) w0.array() -= w0.mean();

        try {
            SteadyStateSample base = runner.run(w0, 0);
            if (!base.converged) throw ProbeError(-1, "baseline segment did not converge");

            ProbePlan plan = design_probes(base.y, agents, opts.kappa);
            ProbeLog log =
                collect_probes(runner, w0, base.y, plan, gains, opts.parallel_probes);
            log.seed = opts.w0_seed;

            ReconstructionResult result;
            result.diagnostics.w0_redraws = attempt;
            result.M = estimate_connection_matrix(log, &result.diagnostics);
            result.edges = extract_graph(result.M, opts.epsilon, base.y, couplings, gains);
            result.epsilon = opts.epsilon;
            result.kappa = opts.kappa;
            result.branch = plan.branch;
            result.w0 = w0;
            result.y0 = base.y;
            result.log = std::move(log);
            result.diagnostics.error_scale =
                error_scale_diagnostic(result.edges, n, opts.kappa);
            return result;
        } catch (const std::domain_error& err) {
            // non-differentiable point hit (probability-zero event): redraw
            last_domain_error = err.what();
        }
    }
    throw std::domain_error("reconstruct: baseline redraws exhausted; last error: " +
                            last_domain_error);
}

int estimate_reachable_rank(const std::vector<Eigen::VectorXd>& samples, double tol) {
    if (samples.empty()) throw std::invalid_argument("estimate_reachable_rank: no samples");
    if (!(tol > 0.0)) throw std::invalid_argument("estimate_reachable_rank: tol must be positive");
    const Eigen::Index n = samples.front().size();
    Eigen::MatrixXd stack(n, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].size() != n)
            throw std::invalid_argument("estimate_reachable_rank: sample dimension mismatch");
        stack.col(static_cast<Eigen::Index>(k)) = samples[k];
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(stack);
    const auto& sigma = svd.singularValues();
    const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    if (!(smax > 0.0)) return 0;
    int rank = 0;
    for (Eigen::Index k = 0; k < sigma.size(); ++k)
        if (sigma(k) >= tol * smax) ++rank;
    return rank;
}

std::vector<Eigen::VectorXd> collect_restricted_probes(SteadyStateRunner& runner,
                                                       const Eigen::VectorXd& w0,
                                                       const std::vector<int>& nodes,
                                                       int num_samples, double kappa,
                                                       std::uint64_t seed) {
    const int n = runner.size();
    if (w0.size() != n) throw std::invalid_argument("collect_restricted_probes: w0 size mismatch");
    if (nodes.empty()) throw std::invalid_argument("collect_restricted_probes: empty node set");
    for (int v : nodes)
        if (v < 0 || v >= n)
            throw std::invalid_argument("collect_restricted_probes: node index out of range");
    if (num_samples < 1) throw std::invalid_argument("collect_restricted_probes: need samples");
    if (!(kappa > 0.0)) throw std::invalid_argument("collect_restricted_probes: kappa must be positive");

    SteadyStateSample base = runner.run(w0, 0);
    if (!base.converged) throw ProbeError(-1, "baseline segment did not converge");

    std::vector<Eigen::VectorXd> deviations;
    deviations.reserve(num_samples);
    for (int s = 0; s < num_samples; ++s) {
        Rng rng(splitmix64(seed + static_cast<std::uint64_t>(s)));
        Eigen::VectorXd dw = Eigen::VectorXd::Zero(n);
        for (int v : nodes) dw[v] = kappa * rng.uniform(-1.0, 1.0);
        SteadyStateSample sample = runner.run(w0 + dw, s + 1);
        if (!sample.converged) throw ProbeError(s, "restricted probe did not converge");
        deviations.push_back(sample.y - base.y);
    }
    return deviations;
}

}  // namespace netident
