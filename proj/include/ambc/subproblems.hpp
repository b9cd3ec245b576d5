#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "barrier.hpp"
#include "config.hpp"
#include "metrics.hpp"
#include "simplex.hpp"

namespace ambc
{

enum class SolveStatus
{
    optimal,
    infeasible,
    numerical_failure
};

inline const char* status_name(SolveStatus s)
{
    switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

/// Outcome of one block update of the BCD loop.
template <class Vars>
struct SubproblemResult
{
    Vars variables{};
    double objective = 0.0; ///< min-throughput at the returned variables
    SolveStatus status = SolveStatus::numerical_failure;
    int iterations = 0;
    double max_residual = 0.0; ///< worst (normalized) violation of the block's constraints, >= 0
};

// ---------------------------------------------------------------------------
// Time allocation

/// Per-unit-time coefficients that make the time block linear in tau.
struct TimeCoefficients
{
    Eigen::VectorXd rate;   ///< R_m = tau_m * rate_m
    Eigen::VectorXd lu;     ///< LU rate = sum_m tau_m * lu_m
    Eigen::MatrixXd energy; ///< E_m = sum_r energy(m, r) * tau_r
    Eigen::VectorXd power;  ///< power use = sum_m tau_m * power_m
};

inline TimeCoefficients time_coefficients(const ChannelGains& gains, const ScenarioConfig& cfg,
                                          const Eigen::VectorXd& alpha, const Eigen::MatrixXd& power)
{
    const Eigen::Index M = gains.num_bds();
    AllocationState unit{Eigen::VectorXd::Ones(M), alpha, power, 0.0};

    TimeCoefficients c;
    c.rate.resize(M);
    c.lu.resize(M);
    c.energy.resize(M, M);
    c.power = power.rowwise().sum();
    for (Eigen::Index m = 0; m < M; ++m)
        c.rate(m) = bd_throughput(unit, gains, cfg, m);
    for (Eigen::Index r = 0; r < M; ++r) {
        // one slot active at a time isolates its coefficient
        AllocationState slot{Eigen::VectorXd::Unit(M, r), alpha, power, 0.0};
        c.lu(r) = lu_throughput(slot, gains, cfg);
        for (Eigen::Index m = 0; m < M; ++m)
            c.energy(m, r) = harvested_energy(slot, gains, cfg, m);
    }
    return c;
}

/// Builds the time-block LP over x = [tau_1 .. tau_M, Q] >= 0.
///
/// Rows, in order: Q - rate_m tau_m <= 0 (M rows); the LU row when D > 0; one
/// energy row per BD with E_min,m > 0; the power budget; sum tau <= 1.
inline lp::LinearProgram time_allocation_lp(const ChannelGains& gains, const ScenarioConfig& cfg,
                                            const Eigen::VectorXd& alpha, const Eigen::MatrixXd& power)
{
    const Eigen::Index M = gains.num_bds();
    const TimeCoefficients c = time_coefficients(gains, cfg, alpha, power);

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    for (Eigen::Index m = 0; m < M; ++m) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(M + 1);
        row(m) = -c.rate(m);
        row(M) = 1.0;
        rows.push_back(row);
        rhs.push_back(0.0);
    }
    if (cfg.min_lu_rate > 0.0) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(M + 1);
        row.head(M) = -c.lu;
        rows.push_back(row);
        rhs.push_back(-cfg.min_lu_rate);
    }
    for (Eigen::Index m = 0; m < M; ++m) {
        const double emin = cfg.min_energy[static_cast<std::size_t>(m)];
        if (emin <= 0.0) continue;
        Eigen::VectorXd row = Eigen::VectorXd::Zero(M + 1);
        row.head(M) = -c.energy.row(m).transpose();
        rows.push_back(row);
        rhs.push_back(-emin);
    }
    {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(M + 1);
        row.head(M) = c.power;
        rows.push_back(row);
        rhs.push_back(cfg.power_budget);
    }
    {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(M + 1);
        row.head(M).setOnes();
        rows.push_back(row);
        rhs.push_back(1.0);
    }

    lp::LinearProgram prog;
    prog.A.resize(static_cast<Eigen::Index>(rows.size()), M + 1);
    prog.b.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        prog.A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        prog.b(static_cast<Eigen::Index>(i)) = rhs[i];
    }
    prog.c = Eigen::VectorXd::Unit(M + 1, M);
    return prog;
}

namespace detail
{

/// Worst normalized violation of the LU, energy, budget, and box constraints at a state.
inline double block_violation(const AllocationState& s, const ChannelGains& gains, const ScenarioConfig& cfg)
{
    AllocationState probe = s;
    probe.objective = -std::numeric_limits<double>::infinity(); // the rate rows are not part of this measure
    const ConstraintReport rep = check_feasibility(probe, gains, cfg);
    double worst = 0.0;
    for (const auto& r : rep.residuals)
        worst = std::max(worst, -r.slack);
    return worst;
}

} // namespace detail

/// Optimal backscatter time portions for fixed reflection and power.
inline SubproblemResult<Eigen::VectorXd> solve_time_allocation(const ChannelGains& gains, const ScenarioConfig& cfg,
                                                               const Eigen::VectorXd& alpha,
                                                               const Eigen::MatrixXd& power)
{
    const Eigen::Index M = gains.num_bds();
    const lp::LpSolution sol = lp::solve(time_allocation_lp(gains, cfg, alpha, power));

    SubproblemResult<Eigen::VectorXd> res;
    res.iterations = sol.iterations;
    switch (sol.status) {
    case lp::LpStatus::optimal: res.status = SolveStatus::optimal; break;
    case lp::LpStatus::infeasible: res.status = SolveStatus::infeasible; return res;
    default: res.status = SolveStatus::numerical_failure; return res;
    }
    res.variables = sol.x.head(M);
    const AllocationState s{res.variables, alpha, power, 0.0};
    res.objective = min_bd_throughput(s, gains, cfg);
    res.max_residual = detail::block_violation(s, gains, cfg);
    return res;
}

// ---------------------------------------------------------------------------
// Reflection coefficients

/// Structure of the reflection block for fixed (tau, P).
///
/// R_m is increasing in alpha_m while the LU rate and every E_m are
/// decreasing, so the set of feasible targets Q is an interval [0, Q*] and
/// the smallest reflection achieving a target has a closed form.
class ReflectionModel
{
public:
    ReflectionModel(const ChannelGains& gains, const ScenarioConfig& cfg, const Eigen::VectorXd& tau,
                    const Eigen::MatrixXd& power)
        : gains_(gains), cfg_(cfg), tau_(tau), power_(power)
    {
        const Eigen::Index M = gains.num_bds();
        const double noise = noise_variance(cfg);
        snr_per_alpha_.resize(M);
        for (Eigen::Index m = 0; m < M; ++m)
            snr_per_alpha_(m) = (gains.cascade.row(m) * power.row(m).array()).sum() / noise;
    }

    Eigen::Index num_bds() const { return tau_.size(); }

    /// A BD with no slot time or no backscatter gain pins the objective to zero.
    bool degenerate(Eigen::Index m) const { return !(tau_(m) > 0.0) || !(snr_per_alpha_(m) > 0.0); }

    /// Largest min-throughput reachable with every alpha_m = 1.
    double max_objective() const
    {
        double q = std::numeric_limits<double>::infinity();
        for (Eigen::Index m = 0; m < num_bds(); ++m)
            q = std::min(q, degenerate(m) ? 0.0 : rate(m, 1.0));
        return q;
    }

    double rate(Eigen::Index m, double alpha) const
    {
        return tau_(m) / static_cast<double>(gains_.num_subcarriers()) *
               log1p_base(alpha * snr_per_alpha_(m), cfg_.log_base);
    }

    /// alpha_m(Q) = (base^{N Q / tau_m} - 1) / snr_m, the smallest reflection meeting R_m >= Q.
    Eigen::VectorXd alpha_for(double q) const
    {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(num_bds());
        if (q <= 0.0) return a;
        const double n = static_cast<double>(gains_.num_subcarriers());
        for (Eigen::Index m = 0; m < num_bds(); ++m) {
            if (degenerate(m)) continue;
            const double exponent = n * q / tau_(m) * log_base_factor(cfg_.log_base);
            a(m) = std::expm1(exponent) / snr_per_alpha_(m);
        }
        return a;
    }

    /// LU-rate, energy and box feasibility of a reflection vector.
    bool feasible(const Eigen::VectorXd& alpha) const
    {
        if ((alpha.array() < 0.0).any() || (alpha.array() > 1.0).any()) return false;
        const AllocationState s{tau_, alpha, power_, 0.0};
        if (cfg_.min_lu_rate > 0.0 && lu_throughput(s, gains_, cfg_) < cfg_.min_lu_rate) return false;
        for (Eigen::Index m = 0; m < num_bds(); ++m) {
            const double emin = cfg_.min_energy[static_cast<std::size_t>(m)];
            if (emin > 0.0 && harvested_energy(s, gains_, cfg_, m) < emin) return false;
        }
        return true;
    }

    bool target_feasible(double q) const
    {
        if (q > max_objective()) return false;
        Eigen::VectorXd a = alpha_for(q);
        // the bottleneck BD may land a rounding error above 1 at q = max_objective()
        a = a.cwiseMin(1.0);
        return feasible(a);
    }

private:
    const ChannelGains& gains_;
    const ScenarioConfig& cfg_;
    Eigen::VectorXd tau_;
    Eigen::MatrixXd power_;
    Eigen::VectorXd snr_per_alpha_;
};

/// Optimal reflection coefficients for fixed time and power.
///
/// Bisection over the target Q using the closed-form minimal reflection;
/// afterwards every non-degenerate alpha_m is raised by a common fraction
/// theta of its headroom to 1 (largest feasible theta), so that slack
/// constraints leave all BDs at full reflection. BDs with tau_m = 0 get 0.
inline SubproblemResult<Eigen::VectorXd> solve_reflection(const ChannelGains& gains, const ScenarioConfig& cfg,
                                                          const Eigen::VectorXd& tau, const Eigen::MatrixXd& power,
                                                          double tolerance = 1e-13)
{
    const ReflectionModel model(gains, cfg, tau, power);
    const Eigen::Index M = model.num_bds();

    SubproblemResult<Eigen::VectorXd> res;
    if (!model.feasible(Eigen::VectorXd::Zero(M))) {
        res.status = SolveStatus::infeasible;
        return res;
    }

    double lo = 0.0;
    double hi = model.max_objective();
    if (model.target_feasible(hi)) {
        lo = hi;
    } else {
        while (hi - lo > tolerance * std::max(1.0, hi) && res.iterations < 200) {
            const double mid = 0.5 * (lo + hi);
            (model.target_feasible(mid) ? lo : hi) = mid;
            ++res.iterations;
        }
    }
    const Eigen::VectorXd base = model.alpha_for(lo).cwiseMin(1.0);

    Eigen::VectorXd headroom = Eigen::VectorXd::Zero(M);
    for (Eigen::Index m = 0; m < M; ++m)
        if (!model.degenerate(m)) headroom(m) = 1.0 - base(m);
    auto lifted = [&](double theta) { return Eigen::VectorXd((base + theta * headroom).cwiseMin(1.0)); };
    double t_lo = 0.0;
    double t_hi = 1.0;
    if (model.feasible(lifted(1.0))) {
        t_lo = 1.0;
    } else {
        while (t_hi - t_lo > 1e-12) {
            const double mid = 0.5 * (t_lo + t_hi);
            (model.feasible(lifted(mid)) ? t_lo : t_hi) = mid;
            ++res.iterations;
        }
    }

    res.variables = lifted(t_lo);
    res.status = SolveStatus::optimal;
    const AllocationState s{tau, res.variables, power, 0.0};
    res.objective = min_bd_throughput(s, gains, cfg);
    res.max_residual = detail::block_violation(s, gains, cfg);
    return res;
}

// ---------------------------------------------------------------------------
// Subcarrier power (successive convex approximation)

/// Concave minorant of the LU rate in P, tight at `local`.
///
/// The interference term -log(alpha|FV|^2 P + sigma^2) is replaced by its
/// first-order expansion at `local`, which over-estimates that concave term.
inline double sco_lower_bound(const Eigen::MatrixXd& power, const Eigen::MatrixXd& local, const ChannelGains& gains,
                              const Eigen::VectorXd& tau, const Eigen::VectorXd& alpha, const ScenarioConfig& cfg)
{
    const double noise = noise_variance(cfg);
    const double n = static_cast<double>(gains.num_subcarriers());
    double total = 0.0;
    for (Eigen::Index m = 0; m < gains.num_bds(); ++m) {
        double slot = 0.0;
        for (Eigen::Index k = 0; k < gains.num_subcarriers(); ++k) {
            // all terms divided through by sigma^2; the log(sigma^2) offsets cancel
            const double interf = alpha(m) * gains.interference(m, k) / noise;
            const double total_gain = interf + gains.direct(k) / noise;
            const double p = power(m, k);
            const double p0 = local(m, k);
            slot += std::log1p(total_gain * p) - std::log1p(interf * p0) - interf * (p - p0) / (1.0 + interf * p0);
        }
        total += tau(m) / n * slot;
    }
    return total / log_base_factor(cfg.log_base);
}

namespace detail
{

/// Constraint model of the convexified power block in scaled variables
/// z = vec(P) / P_peak (index m*N + k).
///
/// Phase 1 holds the LU/energy/budget rows as g_i(z) - s <= 0; phase 2 adds
/// the rate epigraph rows t - R_m(z) <= 0 and keeps the others with no aux term.
class PowerBlockModel
{
public:
    enum class Phase
    {
        find_interior,
        maximize
    };

    PowerBlockModel(const ChannelGains& gains, const ScenarioConfig& cfg, const Eigen::VectorXd& tau,
                    const Eigen::VectorXd& alpha, const Eigen::MatrixXd& local)
        : M_(gains.num_bds()), N_(gains.num_subcarriers()), cfg_(cfg), tau_(tau)
    {
        const double noise = noise_variance(cfg);
        const double peak = cfg.peak_power;
        const double ln_base = log_base_factor(cfg.log_base);

        rate_scale_.resize(M_);
        rate_gain_.resize(M_, N_);
        for (Eigen::Index m = 0; m < M_; ++m) {
            rate_scale_(m) = tau(m) / (static_cast<double>(N_) * ln_base);
            rate_gain_.row(m) = alpha(m) * gains.cascade.row(m) * peak / noise;
        }

        has_lu_ = cfg.min_lu_rate > 0.0;
        interf_.resize(M_, N_);
        total_gain_.resize(M_, N_);
        lu_offset_ = 0.0;
        for (Eigen::Index m = 0; m < M_; ++m)
            for (Eigen::Index k = 0; k < N_; ++k) {
                interf_(m, k) = alpha(m) * gains.interference(m, k) * peak / noise;
                total_gain_(m, k) = interf_(m, k) + gains.direct(k) * peak / noise;
            }
        local_ = Eigen::Map<const Eigen::VectorXd>(Eigen::MatrixXd(local.transpose() / peak).data(), M_ * N_);
        // constant part of the minorant: -log1p(c z0) + c z0 / (1 + c z0); the slope is c / (1 + c z0)
        interf_slope_.resize(M_ * N_);
        for (Eigen::Index m = 0; m < M_; ++m)
            for (Eigen::Index k = 0; k < N_; ++k) {
                const double c = interf_(m, k);
                const double z0 = local_(m * N_ + k);
                interf_slope_(m * N_ + k) = c / (1.0 + c * z0);
                lu_offset_ += rate_scale_(m) * (-std::log1p(c * z0) + c * z0 / (1.0 + c * z0));
            }

        for (Eigen::Index m = 0; m < M_; ++m) {
            const double emin = cfg.min_energy[static_cast<std::size_t>(m)];
            if (emin <= 0.0) continue;
            Eigen::VectorXd grad(M_ * N_);
            for (Eigen::Index r = 0; r < M_; ++r) {
                const double share = r == m ? tau(m) * (1.0 - alpha(m)) : tau(r);
                for (Eigen::Index k = 0; k < N_; ++k)
                    grad(r * N_ + k) = cfg.eta * gains.forward(m, k) * share * peak / emin;
            }
            energy_rows_.push_back(std::move(grad)); // E_m / E_min = grad . z
        }

        budget_row_.resize(M_ * N_);
        for (Eigen::Index m = 0; m < M_; ++m)
            budget_row_.segment(m * N_, N_).setConstant(tau(m) * peak / cfg.power_budget);
    }

    void set_phase(Phase p) { phase_ = p; }

    Eigen::Index dimension() const { return M_ * N_; }

    std::size_t core_count() const { return (has_lu_ ? 1u : 0u) + energy_rows_.size() + 1u; }

    std::size_t constraint_count() const
    {
        return core_count() + (phase_ == Phase::maximize ? static_cast<std::size_t>(M_) : 0u);
    }

    double rate(const Eigen::VectorXd& z, Eigen::Index m) const
    {
        return rate_scale_(m) * std::log1p(rate_gain_.row(m).dot(z.segment(m * N_, N_)));
    }

    double min_rate(const Eigen::VectorXd& z) const
    {
        double q = std::numeric_limits<double>::infinity();
        for (Eigen::Index m = 0; m < M_; ++m)
            q = std::min(q, rate(z, m));
        return q;
    }

    double lu_bound(const Eigen::VectorXd& z) const
    {
        double total = lu_offset_;
        for (Eigen::Index m = 0; m < M_; ++m)
            for (Eigen::Index k = 0; k < N_; ++k) {
                const Eigen::Index i = m * N_ + k;
                total += rate_scale_(m) * (std::log1p(total_gain_(m, k) * z(i)) - interf_slope_(i) * z(i));
            }
        return total;
    }

    /// Normalized LU/energy/budget rows, each <= 0 when satisfied.
    void core_values(const Eigen::VectorXd& z, Eigen::VectorXd& out) const
    {
        out.resize(static_cast<Eigen::Index>(core_count()));
        Eigen::Index i = 0;
        if (has_lu_) out(i++) = 1.0 - lu_bound(z) / cfg_.min_lu_rate;
        for (const auto& row : energy_rows_)
            out(i++) = 1.0 - row.dot(z);
        out(i++) = budget_row_.dot(z) - 1.0;
    }

    bool evaluate(const Eigen::VectorXd& z, double w, Eigen::VectorXd& g) const
    {
        Eigen::VectorXd core;
        core_values(z, core);
        g.resize(static_cast<Eigen::Index>(constraint_count()));
        if (phase_ == Phase::find_interior) {
            g = core.array() - w;
        } else {
            g.head(core.size()) = core;
            for (Eigen::Index m = 0; m < M_; ++m)
                g(core.size() + m) = w - rate(z, m);
        }
        return g.allFinite();
    }

    void linearize(const Eigen::VectorXd& z, double w, std::vector<barrier::ConstraintTerm>& out) const
    {
        Eigen::VectorXd core;
        core_values(z, core);
        const double aux = phase_ == Phase::find_interior ? -1.0 : 0.0;
        Eigen::Index i = 0;
        if (has_lu_) {
            barrier::ConstraintTerm t;
            t.value = core(i++) + aux * w;
            t.aux_coef = aux;
            t.gradient.resize(dimension());
            t.hess_diag.resize(dimension());
            for (Eigen::Index m = 0; m < M_; ++m)
                for (Eigen::Index k = 0; k < N_; ++k) {
                    const Eigen::Index j = m * N_ + k;
                    const double c = total_gain_(m, k);
                    const double denom = 1.0 + c * z(j);
                    const double s = rate_scale_(m) / cfg_.min_lu_rate;
                    t.gradient(j) = -s * (c / denom - interf_slope_(j));
                    t.hess_diag(j) = s * c * c / (denom * denom);
                }
            out.push_back(std::move(t));
        }
        for (const auto& row : energy_rows_) {
            barrier::ConstraintTerm t;
            t.value = core(i++) + aux * w;
            t.aux_coef = aux;
            t.gradient = -row;
            out.push_back(std::move(t));
        }
        {
            barrier::ConstraintTerm t;
            t.value = core(i++) + aux * w;
            t.aux_coef = aux;
            t.gradient = budget_row_;
            out.push_back(std::move(t));
        }
        if (phase_ == Phase::maximize) {
            for (Eigen::Index m = 0; m < M_; ++m) {
                barrier::ConstraintTerm t;
                const Eigen::VectorXd gain = rate_gain_.row(m).transpose();
                const double snr = 1.0 + gain.dot(z.segment(m * N_, N_));
                t.value = w - rate_scale_(m) * std::log1p(snr - 1.0);
                t.aux_coef = 1.0;
                t.gradient = Eigen::VectorXd::Zero(dimension());
                t.gradient.segment(m * N_, N_) = -rate_scale_(m) * gain / snr;
                t.hess_vec = Eigen::VectorXd::Zero(dimension());
                t.hess_vec.segment(m * N_, N_) = gain;
                t.hess_weight = rate_scale_(m) / (snr * snr);
                out.push_back(std::move(t));
            }
        }
    }

    const Eigen::VectorXd& local() const { return local_; }

private:
    Eigen::Index M_, N_;
    const ScenarioConfig& cfg_;
    Eigen::VectorXd tau_;
    Phase phase_ = Phase::find_interior;

    Eigen::VectorXd rate_scale_;
    Eigen::MatrixXd rate_gain_;
    bool has_lu_ = false;
    Eigen::MatrixXd interf_, total_gain_;
    Eigen::VectorXd interf_slope_;
    double lu_offset_ = 0.0;
    Eigen::VectorXd local_;
    std::vector<Eigen::VectorXd> energy_rows_;
    Eigen::VectorXd budget_row_;
};

} // namespace detail

struct PowerSolveOptions
{
    barrier::Options barrier{};
    /// Interior start: P_local pulled this fraction of P_peak away from the box faces.
    double box_margin = 1e-4;
};

/// Solves the convexified power block around `local`.
///
/// The returned objective is the true min-throughput at the returned powers
/// (the rate rows are exact; only the LU row is convexified). If the incumbent
/// `local` is at least as good it is returned unchanged.
inline SubproblemResult<Eigen::MatrixXd> solve_power_sco(const ChannelGains& gains, const ScenarioConfig& cfg,
                                                         const Eigen::VectorXd& tau, const Eigen::VectorXd& alpha,
                                                         const Eigen::MatrixXd& local,
                                                         const PowerSolveOptions& opt = {})
{
    const Eigen::Index M = gains.num_bds();
    const Eigen::Index N = gains.num_subcarriers();
    const double tol = feasibility_tolerance;

    detail::PowerBlockModel model(gains, cfg, tau, alpha, local);
    auto to_power = [&](const Eigen::VectorXd& z) {
        return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(z.data(), N, M).transpose() * cfg.peak_power);
    };
    auto violation = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd core;
        model.core_values(z, core);
        double v = core.size() > 0 ? std::max(0.0, core.maxCoeff()) : 0.0;
        v = std::max(v, std::max(-z.minCoeff(), z.maxCoeff() - 1.0) * cfg.peak_power);
        return v;
    };

    SubproblemResult<Eigen::MatrixXd> res;
    const Eigen::VectorXd& z_local = model.local();
    const double local_violation = violation(z_local);
    const bool local_ok = local_violation <= tol;
    const double local_q = model.min_rate(z_local);

    auto keep_incumbent = [&](SolveStatus st) {
        res.variables = local;
        res.objective = local_q;
        res.status = st;
        res.max_residual = local_violation;
        return res;
    };

    // The objective is identically zero when some BD cannot transmit.
    bool trivial = false;
    for (Eigen::Index m = 0; m < M; ++m)
        if (!(tau(m) > 0.0) || !(alpha(m) > 0.0) || !(gains.cascade.row(m).maxCoeff() > 0.0)) trivial = true;
    if (trivial) return keep_incumbent(local_ok ? SolveStatus::optimal : SolveStatus::infeasible);

    const Eigen::VectorXd lower = Eigen::VectorXd::Zero(M * N);
    const Eigen::VectorXd upper = Eigen::VectorXd::Ones(M * N);
    Eigen::VectorXd z = z_local.cwiseMax(opt.box_margin).cwiseMin(1.0 - opt.box_margin);

    // phase 1: strictly interior start for the LU/energy/budget rows
    Eigen::VectorXd core;
    model.core_values(z, core);
    if (core.maxCoeff() >= -1e-9) {
        model.set_phase(detail::PowerBlockModel::Phase::find_interior);
        barrier::Options p1 = opt.barrier;
        p1.stop_below = -1e-6;
        const barrier::Result r1 =
            barrier::minimize_epigraph(model, lower, upper, z, core.maxCoeff() + 1.0, 1.0, p1);
        res.iterations += r1.newton_steps;
        if (!(r1.w < 0.0)) return keep_incumbent(local_ok ? SolveStatus::optimal : SolveStatus::infeasible);
        z = r1.z;
    }

    // phase 2: maximize the epigraph variable of the min-throughput
    model.set_phase(detail::PowerBlockModel::Phase::maximize);
    const double start_q = model.min_rate(z);
    const barrier::Result r2 =
        barrier::minimize_epigraph(model, lower, upper, z, start_q - 0.1 * start_q - 1e-12, -1.0, opt.barrier);
    res.iterations += r2.newton_steps;

    const Eigen::VectorXd& z_new = r2.z;
    const double new_violation = violation(z_new);
    const double new_q = model.min_rate(z_new);
    const bool new_ok = new_violation <= tol;

    if (local_ok && (!new_ok || local_q >= new_q))
        return keep_incumbent(r2.outcome == barrier::Outcome::converged ? SolveStatus::optimal
                                                                        : SolveStatus::numerical_failure);
    if (!new_ok) {
        res.status = SolveStatus::numerical_failure;
        res.variables = to_power(z_new);
        res.objective = new_q;
        res.max_residual = new_violation;
        return res;
    }
    res.variables = to_power(z_new);
    res.objective = new_q;
    res.max_residual = new_violation;
    res.status = r2.outcome == barrier::Outcome::converged ? SolveStatus::optimal : SolveStatus::numerical_failure;
    return res;
}

} // namespace ambc
