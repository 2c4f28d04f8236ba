#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/Dense>

#include "netident/simulate.hpp"

namespace netident {

/// Black-box probing interface: apply a constant exogenous input, obtain the
/// (approximate) steady-state output. The identification pipeline touches the
/// network only through this interface, never through the hidden graph.
///
/// `tag` identifies the probe deterministically so that parallel collection
/// and reruns consume identical noise streams.
class SteadyStateRunner {
public:
    virtual ~SteadyStateRunner() = default;
    virtual int size() const = 0;
    virtual SteadyStateSample run(const Eigen::VectorXd& w, int tag) = 0;
    /// True when run() may be invoked concurrently for distinct tags.
    virtual bool parallelizable() const { return false; }
    /// Return to the initial state (sequential runners).
    virtual void reset() {}
};

/// Runs the closed-loop ODE. Sequential mode implements the switching-input
/// scheme: every run continues from the terminal state of the previous one.
/// Parallel mode restarts from x0 for every probe and is safe to call
/// concurrently.
class SimulatedRunner final : public SteadyStateRunner {
public:
    SimulatedRunner(const NetworkSystem& sys, SimOptions opts, NoiseSpec noise,
                    Eigen::VectorXd x0, ScheduleMode mode = ScheduleMode::Sequential);

    int size() const override { return sys_.size(); }
    SteadyStateSample run(const Eigen::VectorXd& w, int tag) override;
    bool parallelizable() const override { return mode_ == ScheduleMode::Parallel; }
    void reset() override { x_ = x0_; }

    double total_sim_time() const { return total_time_; }

private:
    const NetworkSystem& sys_;
    SimOptions opts_;
    NoiseSpec noise_;
    Eigen::VectorXd x0_;
    Eigen::VectorXd x_;
    ScheduleMode mode_;
    double total_time_ = 0.0;
};

/// Solves the steady-state equation directly (exact-oracle backend).
class NewtonRunner final : public SteadyStateRunner {
public:
    explicit NewtonRunner(const NetworkSystem& sys, Eigen::VectorXd x0, double tol = 1e-13);

    int size() const override { return sys_.size(); }
    SteadyStateSample run(const Eigen::VectorXd& w, int tag) override;
    bool parallelizable() const override { return true; }

private:
    const NetworkSystem& sys_;
    Eigen::VectorXd y_guess_;
    double tol_;
};

/// Adds Gaussian measurement noise to another runner's samples; the noise
/// stream is keyed on (seed, tag).
class NoisyRunner final : public SteadyStateRunner {
public:
    NoisyRunner(SteadyStateRunner& base, double sigma, std::uint64_t seed)
        : base_(base), sigma_(sigma), seed_(seed) {}

    int size() const override { return base_.size(); }
    SteadyStateSample run(const Eigen::VectorXd& w, int tag) override;
    bool parallelizable() const override { return base_.parallelizable(); }
    void reset() override { base_.reset(); }

private:
    SteadyStateRunner& base_;
    double sigma_;
    std::uint64_t seed_;
};

}  // namespace netident
