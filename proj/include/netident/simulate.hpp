#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "netident/model.hpp"

namespace netident {

/// Per-step observer for trajectory dumps and deviation tracking.
struct TrajectorySink {
    virtual ~TrajectorySink() = default;
    virtual void record(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& y) = 0;
};

struct SimOptions {
    enum class Method { Rk4, Rkf45 };
    /// Stop after the state derivative stays small, or exactly at switch_time.
    enum class StopMode { Converge, FixedTime };

    Method method = Method::Rkf45;
    StopMode stop = StopMode::Converge;

    double dt = 1e-3;      // fixed step (Rk4)
    double rtol = 1e-10;   // adaptive controls (Rkf45)
    double atol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-13;
    double h_max = 1e3;

    double deriv_tol = 1e-9;  // inf-norm threshold on xdot
    int dwell = 10;           // consecutive checks below threshold
    double t_max = 1e4;       // cap for Converge mode
    double switch_time = 10.0;

    TrajectorySink* trajectory = nullptr;
    int trajectory_stride = 1;  // accepted steps between records

    void validate() const;
};

struct NoiseSpec {
    double disturbance_bound = 0.0;   // Euclidean bound on the parasitic input
    double measurement_sigma = 0.0;   // Gaussian std on the sampled output
    std::uint64_t seed = 0;
};

struct SteadyStateSample {
    Eigen::VectorXd y;
    double t_elapsed = 0.0;
    bool converged = false;
    double residual_norm = 0.0;  // inf-norm of the steady-state residual at the sampled y
};

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Integrates the closed loop under constant input w from state x0.
///
/// Converge mode returns the first sample whose derivative stays below
/// opts.deriv_tol for opts.dwell consecutive checks; hitting t_max instead
/// yields converged = false (never silent). FixedTime mode returns y at
/// exactly switch_time. Measurement noise is applied after sampling; the
/// optional final_state out-param receives the unnoised terminal state.
SteadyStateSample simulate_to_steady_state(const NetworkSystem& sys, const Eigen::VectorXd& w,
                                           const Eigen::VectorXd& x0, const SimOptions& opts,
                                           const NoiseSpec& noise = {},
                                           Eigen::VectorXd* final_state = nullptr);

enum class ScheduleMode {
    Sequential,  // each segment starts from the previous terminal state (switching input)
    Parallel     // each segment starts from x0 independently
};

std::vector<SteadyStateSample> run_probe_schedule(const NetworkSystem& sys,
                                                  const std::vector<Eigen::VectorXd>& schedule,
                                                  const Eigen::VectorXd& x0, const SimOptions& opts,
                                                  const NoiseSpec& noise = {},
                                                  ScheduleMode mode = ScheduleMode::Sequential);

struct NewtonError : std::runtime_error {
    NewtonError(const std::string& msg, Eigen::VectorXd iterate)
        : std::runtime_error(msg), last_iterate(std::move(iterate)) {}
    Eigen::VectorXd last_iterate;
};

/// Direct steady-state solve of the residual equation (test oracle).
///
/// For integrator-type populations the Jacobian is regularized with the
/// rank-one averaging matrix and the mean of y stays pinned to the mean of
/// y_guess, matching the quantity the dynamics conserve.
Eigen::VectorXd newton_steady_state(const NetworkSystem& sys, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& y_guess, double tol = 1e-12,
                                    int max_iter = 100);

struct DisturbanceReport {
    double sup_deviation = 0.0;            // max over trials of sup_t ||y(t) - y_ss||_inf
    std::vector<double> per_trial_sup;
    std::vector<double> candidate_bounds;  // {0.5, 1, 2} x delta_in
    std::vector<double> fraction_above;    // time fraction deviation exceeded each bound
    Eigen::VectorXd y_steady;
};

/// Runs `trials` seeded realizations of a bounded piecewise-constant
/// disturbance (resampled each accepted step, uniform in the Euclidean
/// delta_in-ball) starting from the noiseless steady state, and reports the
/// observed output deviations over a window of `window_seconds`.
DisturbanceReport disturbance_experiment(const NetworkSystem& sys, const Eigen::VectorXd& w,
                                         double delta_in, int trials, double window_seconds,
                                         const SimOptions& opts, std::uint64_t seed);

}  // namespace netident
