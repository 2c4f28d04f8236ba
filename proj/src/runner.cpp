#include "netident/runner.hpp"

#include "netident/rng.hpp"

namespace netident {

SimulatedRunner::SimulatedRunner(const NetworkSystem& sys, SimOptions opts, NoiseSpec noise,
                                 Eigen::VectorXd x0, ScheduleMode mode)
    : sys_(sys), opts_(std::move(opts)), noise_(noise), x0_(std::move(x0)), x_(x0_), mode_(mode) {
    if (x0_.size() != sys_.size())
        throw std::invalid_argument("SimulatedRunner: x0 dimension mismatch");
    opts_.validate();
}

SteadyStateSample SimulatedRunner::run(const Eigen::VectorXd& w, int tag) {
    NoiseSpec seg = noise_;
    seg.seed = splitmix64(noise_.seed + static_cast<std::uint64_t>(tag) + 1);
    Eigen::VectorXd terminal;
    const Eigen::VectorXd& start = mode_ == ScheduleMode::Sequential ? x_ : x0_;
    SteadyStateSample sample = simulate_to_steady_state(sys_, w, start, opts_, seg, &terminal);
    if (mode_ == ScheduleMode::Sequential) {
        x_ = terminal;
        total_time_ += sample.t_elapsed;
    }
    return sample;
}

NewtonRunner::NewtonRunner(const NetworkSystem& sys, Eigen::VectorXd x0, double tol)
    : sys_(sys), tol_(tol) {
    if (x0.size() != sys.size()) throw std::invalid_argument("NewtonRunner: x0 dimension mismatch");
    y_guess_ = outputs_of_state(sys, x0);
}

SteadyStateSample NewtonRunner::run(const Eigen::VectorXd& w, int) {
    SteadyStateSample sample;
    sample.y = newton_steady_state(sys_, w, y_guess_, tol_);
    sample.converged = true;
    sample.residual_norm = steady_state_residual(sys_, sample.y, w).lpNorm<Eigen::Infinity>();
    return sample;
}

SteadyStateSample NoisyRunner::run(const Eigen::VectorXd& w, int tag) {
    SteadyStateSample sample = base_.run(w, tag);
    if (sigma_ > 0.0) {
        Rng rng(splitmix64(seed_ ^ (0x6e6f6973ull + static_cast<std::uint64_t>(tag) * 0x1000193ull)));
        sample.y += sigma_ * rng.gaussian_vector(sample.y.size());
    }
    return sample;
}

}  // namespace netident
