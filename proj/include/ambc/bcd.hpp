#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "config.hpp"
#include "metrics.hpp"
#include "subproblems.hpp"

namespace ambc
{

enum class Termination
{
    converged,
    infeasible,
    iteration_cap,
    monotonicity_violation,
    numerical_failure
};

inline const char* termination_name(Termination t)
{
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::infeasible: return "infeasible";
    case Termination::iteration_cap: return "iteration-cap";
    case Termination::monotonicity_violation: return "monotonicity-violation";
    case Termination::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

/// One pass of the three block updates.
struct IterationRecord
{
    std::size_t index = 0;
    double objective = 0.0;         ///< true min-throughput after the pass
    double after_time = 0.0;        ///< objective after the time block
    double after_reflection = 0.0;  ///< objective after the reflection block
    double power_bound_at_local = 0.0; ///< convexified objective at the previous powers
    Eigen::VectorXd tau;
    Eigen::VectorXd alpha;
    double power_used = 0.0;
    double power_max = 0.0;
    SolveStatus time_status = SolveStatus::optimal;
    SolveStatus reflection_status = SolveStatus::optimal;
    SolveStatus power_status = SolveStatus::optimal;
    int power_newton_steps = 0;
    double seconds = 0.0;
};

struct SolveTrace
{
    std::vector<IterationRecord> iterations;
    AllocationState final_state;
    double initial_objective = 0.0;
    bool converged = false;
    Termination termination = Termination::iteration_cap;
    ConstraintReport final_report;
    std::vector<std::string> warnings;
};

/// Slack granted to every monotonicity assertion.
inline constexpr double monotonicity_slack = 1e-9;

/// Equal time, power P_bar/N per subcarrier clipped to P_peak, alpha = 0.5.
inline AllocationState default_init(const ChannelGains& gains, const ScenarioConfig& cfg)
{
    const Eigen::Index M = gains.num_bds();
    const Eigen::Index N = gains.num_subcarriers();
    AllocationState s;
    s.tau = Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
    s.alpha = Eigen::VectorXd::Constant(M, 0.5);
    s.power = Eigen::MatrixXd::Constant(M, N, std::min(cfg.peak_power, cfg.power_budget / static_cast<double>(N)));
    s.objective = min_bd_throughput(s, gains, cfg);
    return s;
}

inline AllocationState default_init(const FrequencyGrid& grid, const ScenarioConfig& cfg)
{
    return default_init(channel_gains(grid), cfg);
}

/// default_init() when it already meets the LU and energy rows; otherwise the
/// reflection is lowered step by step and the power block searches for powers
/// meeting them. Returns default_init() unchanged when no such point is found,
/// so optimize() then reports the instance infeasible.
inline AllocationState feasible_init(const ChannelGains& gains, const ScenarioConfig& cfg)
{
    AllocationState s = default_init(gains, cfg);
    auto feasible = [&](const AllocationState& st) {
        AllocationState probe = st;
        probe.objective = 0.0;
        return check_feasibility(probe, gains, cfg).feasible;
    };
    if (feasible(s)) return s;
    for (double a : {0.5, 0.1, 0.01}) {
        AllocationState trial = s;
        trial.alpha.setConstant(a);
        const auto pw = solve_power_sco(gains, cfg, trial.tau, trial.alpha, trial.power);
        if (pw.status == SolveStatus::infeasible || pw.max_residual > feasibility_tolerance) continue;
        trial.power = pw.variables;
        if (!feasible(trial)) continue;
        trial.objective = min_bd_throughput(trial, gains, cfg);
        return trial;
    }
    return s;
}

inline AllocationState feasible_init(const FrequencyGrid& grid, const ScenarioConfig& cfg)
{
    return feasible_init(channel_gains(grid), cfg);
}

struct OptimizeOptions
{
    PowerSolveOptions power{};
    /// Called after each completed pass (for per-iteration dumps).
    std::function<void(const IterationRecord&)> on_iteration;
};

/// Block coordinate ascent over (tau, alpha, P) until successive objectives
/// differ by at most cfg.epsilon.
///
/// Every block update is checked to not lower the objective (beyond
/// monotonicity_slack) once the incumbent is feasible; the time block of the
/// first pass is exempt when the initial point violates the LU or energy rows.
inline SolveTrace optimize(const ChannelGains& gains, const ScenarioConfig& cfg, const AllocationState& init,
                           const OptimizeOptions& opt = {})
{
    using clock = std::chrono::steady_clock;
    SolveTrace trace;
    AllocationState state = init;
    state.objective = min_bd_throughput(state, gains, cfg);
    trace.initial_objective = state.objective;

    AllocationState probe = state;
    probe.objective = 0.0;
    bool incumbent_feasible = check_feasibility(probe, gains, cfg).feasible;
    double previous = state.objective;

    auto finish = [&](Termination t) {
        trace.termination = t;
        trace.converged = t == Termination::converged;
        trace.final_state = state;
        trace.final_report = check_feasibility(state, gains, cfg);
        return trace;
    };
    auto regressed = [](double before, double after) { return after < before - monotonicity_slack; };

    for (std::size_t j = 1; j <= cfg.max_iterations; ++j) {
        const auto start = clock::now();
        IterationRecord rec;
        rec.index = j;
        const double before = state.objective;

        const auto time = solve_time_allocation(gains, cfg, state.alpha, state.power);
        rec.time_status = time.status;
        if (time.status != SolveStatus::optimal) {
            if (j == 1 && time.status == SolveStatus::infeasible) return finish(Termination::infeasible);
            trace.warnings.push_back("time block failed at iteration " + std::to_string(j) + ": " +
                                     status_name(time.status));
            return finish(Termination::numerical_failure);
        }
        if (incumbent_feasible && regressed(before, time.objective)) return finish(Termination::monotonicity_violation);
        state.tau = time.variables;
        state.objective = time.objective;
        rec.after_time = time.objective;

        const auto refl = solve_reflection(gains, cfg, state.tau, state.power);
        rec.reflection_status = refl.status;
        if (refl.status != SolveStatus::optimal) {
            trace.warnings.push_back("reflection block failed at iteration " + std::to_string(j) + ": " +
                                     status_name(refl.status));
            return finish(j == 1 ? Termination::infeasible : Termination::numerical_failure);
        }
        if (regressed(state.objective, refl.objective)) return finish(Termination::monotonicity_violation);
        state.alpha = refl.variables;
        state.objective = refl.objective;
        rec.after_reflection = refl.objective;

        // the convexified LU row is tight at the local point, so the block objective there equals the true one
        rec.power_bound_at_local = state.objective;
        const auto pw = solve_power_sco(gains, cfg, state.tau, state.alpha, state.power, opt.power);
        rec.power_status = pw.status;
        rec.power_newton_steps = pw.iterations;
        if (pw.status == SolveStatus::infeasible) {
            trace.warnings.push_back("power block infeasible at iteration " + std::to_string(j));
            return finish(j == 1 ? Termination::infeasible : Termination::numerical_failure);
        }
        if (pw.status == SolveStatus::numerical_failure)
            trace.warnings.push_back("power block did not certify its gap at iteration " + std::to_string(j));
        if (pw.max_residual > feasibility_tolerance) {
            trace.warnings.push_back("power block returned an infeasible point at iteration " + std::to_string(j));
            return finish(Termination::numerical_failure);
        }
        const double after_reflection = state.objective;
        state.power = pw.variables;
        state.objective = min_bd_throughput(state, gains, cfg);
        if (regressed(after_reflection, state.objective)) return finish(Termination::monotonicity_violation);
        incumbent_feasible = true;

        rec.objective = state.objective;
        rec.tau = state.tau;
        rec.alpha = state.alpha;
        rec.power_used = (state.power.rowwise().sum().array() * state.tau.array()).sum();
        rec.power_max = state.power.maxCoeff();
        rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
        trace.iterations.push_back(rec);
        if (opt.on_iteration) opt.on_iteration(trace.iterations.back());

        if (std::abs(state.objective - previous) <= cfg.epsilon) return finish(Termination::converged);
        previous = state.objective;
    }
    return finish(Termination::iteration_cap);
}

inline SolveTrace optimize(const FrequencyGrid& grid, const ScenarioConfig& cfg, const AllocationState& init,
                           const OptimizeOptions& opt = {})
{
    return optimize(channel_gains(grid), cfg, init, opt);
}

} // namespace ambc
