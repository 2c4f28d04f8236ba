#include "netident/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netident/rng.hpp"

namespace netident {

void SimOptions::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SimOptions: dt must be positive");
    if (!(rtol > 0.0) || !(atol > 0.0))
        throw std::invalid_argument("SimOptions: tolerances must be positive");
    if (!(deriv_tol > 0.0)) throw std::invalid_argument("SimOptions: deriv_tol must be positive");
    if (dwell < 1) throw std::invalid_argument("SimOptions: dwell must be >= 1");
    if (!(t_max > 0.0)) throw std::invalid_argument("SimOptions: t_max must be positive");
    if (!(switch_time > 0.0)) throw std::invalid_argument("SimOptions: switch_time must be positive");
    if (!(h_min > 0.0) || !(h_max > h_min))
        throw std::invalid_argument("SimOptions: need 0 < h_min < h_max");
    if (trajectory_stride < 1) throw std::invalid_argument("SimOptions: stride must be >= 1");
}

namespace {

// Fehlberg 4(5) tableau.
constexpr double B21 = 1.0 / 4.0;
constexpr double B31 = 3.0 / 32.0, B32 = 9.0 / 32.0;
constexpr double B41 = 1932.0 / 2197.0, B42 = -7200.0 / 2197.0, B43 = 7296.0 / 2197.0;
constexpr double B51 = 439.0 / 216.0, B52 = -8.0, B53 = 3680.0 / 513.0, B54 = -845.0 / 4104.0;
constexpr double B61 = -8.0 / 27.0, B62 = 2.0, B63 = -3544.0 / 2565.0, B64 = 1859.0 / 4104.0,
                 B65 = -11.0 / 40.0;
constexpr double C41 = 25.0 / 216.0, C43 = 1408.0 / 2565.0, C44 = 2197.0 / 4104.0,
                 C45 = -1.0 / 5.0;
constexpr double C51 = 16.0 / 135.0, C53 = 6656.0 / 12825.0, C54 = 28561.0 / 56430.0,
                 C55 = -9.0 / 50.0, C56 = 2.0 / 55.0;

struct Workspace {
    Eigen::VectorXd ybuf, k1, k2, k3, k4, k5, k6, xt, x4, x5;
    explicit Workspace(int n)
        : ybuf(n), k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), xt(n), x4(n), x5(n) {}
};

// Uniform sample from the Euclidean ball of radius `radius`.
Eigen::VectorXd ball_sample(Rng& rng, int n, double radius) {
    Eigen::VectorXd dir = rng.gaussian_vector(n);
    const double norm = dir.norm();
    if (norm == 0.0) return Eigen::VectorXd::Zero(n);
    const double r = radius * std::pow(rng.uniform01(), 1.0 / n);
    return dir * (r / norm);
}

double error_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& x4, const Eigen::VectorXd& x5,
                  double rtol, double atol) {
    double err = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double scale = atol + rtol * std::max(std::abs(x[i]), std::abs(x5[i]));
        err = std::max(err, std::abs(x5[i] - x4[i]) / scale);
    }
    return err;
}

}  // namespace

SteadyStateSample simulate_to_steady_state(const NetworkSystem& sys, const Eigen::VectorXd& w,
                                           const Eigen::VectorXd& x0, const SimOptions& opts,
                                           const NoiseSpec& noise, Eigen::VectorXd* final_state) {
    opts.validate();
    const int n = sys.size();
    if (w.size() != n || x0.size() != n)
        throw std::invalid_argument("simulate_to_steady_state: dimension mismatch");
    if (!(noise.disturbance_bound >= 0.0) || !(noise.measurement_sigma >= 0.0))
        throw std::invalid_argument("simulate_to_steady_state: noise bounds must be nonnegative");

    Rng dist_rng(splitmix64(noise.seed ^ 0x44495354ull));
    const bool disturbed = noise.disturbance_bound > 0.0;

    Eigen::VectorXd x = x0;
    Eigen::VectorXd w_total = w;
    if (disturbed) w_total = w + ball_sample(dist_rng, n, noise.disturbance_bound);

    Workspace ws(n);
    auto rhs = [&](const Eigen::VectorXd& xi, Eigen::VectorXd& out) {
        detail::closed_loop_rhs_into(sys, xi, w_total, ws.ybuf, out);
    };

    const bool fixed_time = opts.stop == SimOptions::StopMode::FixedTime;
    const double horizon = fixed_time ? opts.switch_time : opts.t_max;

    double t = 0.0;
    double h_next = opts.method == SimOptions::Method::Rk4 ? opts.dt : opts.h_init;
    int streak = 0;
    long accepted = 0;
    bool converged = false;

    rhs(x, ws.k1);
    if (opts.trajectory) opts.trajectory->record(0.0, x, outputs_of_state(sys, x));

    while (true) {
        if (!x.allFinite() || !ws.k1.allFinite())
            throw SimulationError("integration produced a non-finite state");

        if (!fixed_time) {
            if (ws.k1.lpNorm<Eigen::Infinity>() < opts.deriv_tol) {
                if (++streak >= opts.dwell) {
                    converged = true;
                    break;
                }
            } else {
                streak = 0;
            }
        }
        const double remaining = horizon - t;
        if (remaining <= 0.0) {
            converged = fixed_time;
            break;
        }

        double h;
        bool landing = false;
        if (opts.method == SimOptions::Method::Rk4) {
            h = opts.dt;
            if (h >= remaining) {
                h = remaining;
                landing = true;
            }
        } else {
            h = std::clamp(h_next, opts.h_min, opts.h_max);
            if (h >= remaining) {
                h = remaining;
                landing = true;
            }
        }

        if (opts.method == SimOptions::Method::Rk4) {
            ws.xt = x + (0.5 * h) * ws.k1;
            rhs(ws.xt, ws.k2);
            ws.xt = x + (0.5 * h) * ws.k2;
            rhs(ws.xt, ws.k3);
            ws.xt = x + h * ws.k3;
            rhs(ws.xt, ws.k4);
            x += (h / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
        } else {
            // attempt loop: shrink h until the embedded error passes
            while (true) {
                ws.xt = x + h * (B21 * ws.k1);
                rhs(ws.xt, ws.k2);
                ws.xt = x + h * (B31 * ws.k1 + B32 * ws.k2);
                rhs(ws.xt, ws.k3);
                ws.xt = x + h * (B41 * ws.k1 + B42 * ws.k2 + B43 * ws.k3);
                rhs(ws.xt, ws.k4);
                ws.xt = x + h * (B51 * ws.k1 + B52 * ws.k2 + B53 * ws.k3 + B54 * ws.k4);
                rhs(ws.xt, ws.k5);
                ws.xt = x + h * (B61 * ws.k1 + B62 * ws.k2 + B63 * ws.k3 + B64 * ws.k4 + B65 * ws.k5);
                rhs(ws.xt, ws.k6);
                ws.x4 = x + h * (C41 * ws.k1 + C43 * ws.k3 + C44 * ws.k4 + C45 * ws.k5);
                ws.x5 = x + h * (C51 * ws.k1 + C53 * ws.k3 + C54 * ws.k4 + C55 * ws.k5 + C56 * ws.k6);

                double err = std::numeric_limits<double>::infinity();
                if (ws.x5.allFinite() && ws.x4.allFinite())
                    err = error_norm(x, ws.x4, ws.x5, opts.rtol, opts.atol);

                if (err <= 1.0) {
                    const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
                    h_next = std::clamp(h * grow, opts.h_min, opts.h_max);
                    break;
                }
                landing = false;
                const double shrink = std::max(0.2, 0.9 * std::pow(err, -0.2));
                h *= std::isfinite(err) ? shrink : 0.2;
                if (h < opts.h_min)
                    throw SimulationError("adaptive step size underflow");
            }
            x = ws.x5;
        }

        t = landing ? horizon : t + h;
        ++accepted;

        if (disturbed) w_total = w + ball_sample(dist_rng, n, noise.disturbance_bound);
        rhs(x, ws.k1);

        if (opts.trajectory && accepted % opts.trajectory_stride == 0)
            opts.trajectory->record(t, x, outputs_of_state(sys, x));
    }

    SteadyStateSample sample;
    sample.y = outputs_of_state(sys, x);
    sample.t_elapsed = t;
    sample.converged = converged;
    try {
        sample.residual_norm = steady_state_residual(sys, sample.y, w).lpNorm<Eigen::Infinity>();
    } catch (const std::domain_error&) {
        sample.residual_norm = std::numeric_limits<double>::infinity();
    }
    if (final_state) *final_state = x;

    if (noise.measurement_sigma > 0.0) {
        Rng meas_rng(splitmix64(noise.seed ^ 0x4d454153ull));
        sample.y += noise.measurement_sigma * meas_rng.gaussian_vector(n);
    }
    return sample;
}

std::vector<SteadyStateSample> run_probe_schedule(const NetworkSystem& sys,
                                                  const std::vector<Eigen::VectorXd>& schedule,
                                                  const Eigen::VectorXd& x0, const SimOptions& opts,
                                                  const NoiseSpec& noise, ScheduleMode mode) {
    if (schedule.empty()) throw std::invalid_argument("run_probe_schedule: empty schedule");
    std::vector<SteadyStateSample> samples;
    samples.reserve(schedule.size());
    Eigen::VectorXd x = x0;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        NoiseSpec seg_noise = noise;
        seg_noise.seed = splitmix64(noise.seed + i + 1);
        Eigen::VectorXd terminal;
        const Eigen::VectorXd& start = mode == ScheduleMode::Sequential ? x : x0;
        samples.push_back(
            simulate_to_steady_state(sys, schedule[i], start, opts, seg_noise, &terminal));
        if (mode == ScheduleMode::Sequential) x = terminal;
    }
    return samples;
}

Eigen::VectorXd newton_steady_state(const NetworkSystem& sys, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& y_guess, double tol, int max_iter) {
    const int n = sys.size();
    if (w.size() != n || y_guess.size() != n)
        throw std::invalid_argument("newton_steady_state: dimension mismatch");
    const auto& agents = sys.agents();

    // Iterating in state coordinates keeps the problem smooth for agents
    // with saturating output maps and removes the output-range constraint;
    // for identity outputs this is the plain residual iteration. The
    // residual value itself is unchanged: it equals the negated closed-loop
    // derivative at x.
    bool integrator_branch = true;
    for (int i = 0; i < n; ++i) integrator_branch = integrator_branch && agents[i].is_integrator();

    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = agents[i].h_inv(y_guess[i]);
    const double target_mean = x.mean();

    auto residual_x = [&](const Eigen::VectorXd& xi) {
        Eigen::VectorXd r = -closed_loop_rhs(sys, xi, w);
        if (integrator_branch) r.array() += xi.mean() - target_mean;
        return r;
    };
    auto jacobian_x = [&](const Eigen::VectorXd& xi) {
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) jac(i, i) = -agents[i].f_deriv(xi[i]);
        const auto& edges = sys.graph().edges();
        const auto& cpl = sys.edge_couplings();
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const auto& e = edges[k];
            const double zeta = agents[e.i].h(xi[e.i]) - agents[e.j].h(xi[e.j]);
            const double c = e.weight * cpl[k].g_deriv(zeta);
            const double di = agents[e.i].h_deriv(xi[e.i]);
            const double dj = agents[e.j].h_deriv(xi[e.j]);
            jac(e.i, e.i) += agents[e.i].b * c * di;
            jac(e.j, e.j) += agents[e.j].b * c * dj;
            jac(e.i, e.j) -= agents[e.i].b * c * dj;
            jac(e.j, e.i) -= agents[e.j].b * c * di;
        }
        if (integrator_branch) jac.array() += 1.0 / n;
        return jac;
    };

    // the rank-one pin makes the augmented system solvable even when the
    // drive admits no steady state; reject such surrogate solutions
    auto finish = [&](const Eigen::VectorXd& xf) {
        Eigen::VectorXd y = outputs_of_state(sys, xf);
        if (integrator_branch) {
            const double true_res = closed_loop_rhs(sys, xf, w).lpNorm<Eigen::Infinity>();
            if (true_res > 10.0 * tol)
                throw NewtonError(
                    "newton_steady_state: no steady state for this input (residual " +
                        std::to_string(true_res) + " after the regularized solve)",
                    y);
        }
        return y;
    };

    Eigen::VectorXd r = residual_x(x);
    double merit = r.norm();  // Euclidean merit; convergence is checked in the inf-norm

    for (int it = 0; it < max_iter; ++it) {
        if (r.lpNorm<Eigen::Infinity>() < tol) return finish(x);

        Eigen::VectorXd step = jacobian_x(x).partialPivLu().solve(-r);
        if (!step.allFinite())
            throw NewtonError("newton_steady_state: singular Jacobian", outputs_of_state(sys, x));

        double lambda = 1.0;
        bool accepted = false;
        while (lambda >= 0x1p-40) {
            const Eigen::VectorXd x_try = x + lambda * step;
            Eigen::VectorXd r_try = residual_x(x_try);
            const double merit_try = r_try.norm();
            if (r_try.lpNorm<Eigen::Infinity>() < tol ||
                merit_try <= (1.0 - 1e-4 * lambda) * merit) {
                x = x_try;
                r = std::move(r_try);
                merit = merit_try;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted)
            throw NewtonError("newton_steady_state: line search stalled", outputs_of_state(sys, x));
    }
    if (r.lpNorm<Eigen::Infinity>() < tol) return finish(x);
    throw NewtonError("newton_steady_state: no convergence after max iterations",
                      outputs_of_state(sys, x));
}

namespace {

struct DeviationTracker final : TrajectorySink {
    const Eigen::VectorXd& y_ref;
    const std::vector<double>& bounds;
    double sup = 0.0;
    std::vector<double> time_above;
    double total_time = 0.0;
    double t_prev = 0.0;
    bool first = true;

    DeviationTracker(const Eigen::VectorXd& ref, const std::vector<double>& b)
        : y_ref(ref), bounds(b), time_above(b.size(), 0.0) {}

    void record(double t, const Eigen::VectorXd&, const Eigen::VectorXd& y) override {
        const double dev = (y - y_ref).lpNorm<Eigen::Infinity>();
        sup = std::max(sup, dev);
        if (!first) {
            const double dt = t - t_prev;
            total_time += dt;
            for (std::size_t k = 0; k < bounds.size(); ++k)
                if (dev > bounds[k]) time_above[k] += dt;
        }
        first = false;
        t_prev = t;
    }
};

}  // namespace

DisturbanceReport disturbance_experiment(const NetworkSystem& sys, const Eigen::VectorXd& w,
                                         double delta_in, int trials, double window_seconds,
                                         const SimOptions& opts, std::uint64_t seed) {
    if (!(delta_in >= 0.0)) throw std::invalid_argument("disturbance_experiment: delta_in >= 0");
    if (trials < 1) throw std::invalid_argument("disturbance_experiment: trials >= 1");
    if (!(window_seconds > 0.0))
        throw std::invalid_argument("disturbance_experiment: window must be positive");

    SimOptions base = opts;
    base.stop = SimOptions::StopMode::Converge;
    base.trajectory = nullptr;
    Eigen::VectorXd x_ss;
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(sys.size());
    SteadyStateSample ss = simulate_to_steady_state(sys, w, x0, base, {}, &x_ss);
    if (!ss.converged)
        throw SimulationError("disturbance_experiment: noiseless baseline did not converge");

    DisturbanceReport report;
    report.y_steady = ss.y;
    if (delta_in > 0.0) report.candidate_bounds = {0.5 * delta_in, delta_in, 2.0 * delta_in};
    std::vector<double> time_above(report.candidate_bounds.size(), 0.0);
    double total_time = 0.0;

    for (int trial = 0; trial < trials; ++trial) {
        DeviationTracker tracker(ss.y, report.candidate_bounds);
        SimOptions topts = opts;
        topts.stop = SimOptions::StopMode::FixedTime;
        topts.switch_time = window_seconds;
        topts.trajectory = &tracker;
        topts.trajectory_stride = 1;
        NoiseSpec tn;
        tn.disturbance_bound = delta_in;
        tn.seed = splitmix64(seed + static_cast<std::uint64_t>(trial));
        simulate_to_steady_state(sys, w, x_ss, topts, tn);

        report.per_trial_sup.push_back(tracker.sup);
        report.sup_deviation = std::max(report.sup_deviation, tracker.sup);
        for (std::size_t k = 0; k < time_above.size(); ++k) time_above[k] += tracker.time_above[k];
        total_time += tracker.total_time;
    }
    for (std::size_t k = 0; k < time_above.size(); ++k)
        report.fraction_above.push_back(total_time > 0.0 ? time_above[k] / total_time : 0.0);
    return report;
}

}  // namespace netident
