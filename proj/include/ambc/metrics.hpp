#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"
#include "config.hpp"

namespace ambc
{

/// Decision variables of the joint design plus the current objective.
struct AllocationState
{
    Eigen::VectorXd tau;   ///< backscatter time portions, M
    Eigen::VectorXd alpha; ///< power reflection coefficients, M
    Eigen::MatrixXd power; ///< subcarrier powers, M x N (row m = slot m)
    double objective = 0.0;
};

/// Squared magnitudes that every metric needs, computed once per realization.
struct ChannelGains
{
    Eigen::ArrayXXd forward;      ///< |F_{m,k}|^2
    Eigen::ArrayXXd cascade;      ///< |F_{m,k} G_{m,k}|^2
    Eigen::ArrayXXd interference; ///< |F_{m,k} V_{m,k}|^2
    Eigen::ArrayXd direct;        ///< |H_k|^2

    Eigen::Index num_bds() const { return forward.rows(); }
    Eigen::Index num_subcarriers() const { return forward.cols(); }
};

inline ChannelGains channel_gains(const FrequencyGrid& grid)
{
    ChannelGains g;
    g.forward = grid.F.array().abs2();
    g.cascade = g.forward * grid.G.array().abs2();
    g.interference = g.forward * grid.V.array().abs2();
    g.direct = grid.H.array().abs2();
    return g;
}

namespace detail
{

inline void check_bd_index(const ChannelGains& gains, Eigen::Index m)
{
    if (m < 0 || m >= gains.num_bds())
        throw std::out_of_range("BD index " + std::to_string(m) + " out of range");
}

} // namespace detail

/// E_m = eta sum_k |F_mk|^2 [tau_m P_mk (1 - alpha_m) + sum_{r != m} tau_r P_rk]
inline double harvested_energy(const AllocationState& s, const ChannelGains& gains, const ScenarioConfig& cfg,
                               Eigen::Index m)
{
    detail::check_bd_index(gains, m);
    // incident power summed over all slots, then remove the part BD m reflects
    Eigen::ArrayXd incident = (s.power.transpose() * s.tau).array();
    incident -= s.tau(m) * s.alpha(m) * s.power.row(m).transpose().array();
    return cfg.eta * (gains.forward.row(m).transpose() * incident).sum();
}

/// gamma_m = alpha_m / sigma^2 sum_k |F_mk G_mk|^2 P_mk
inline double bd_snr(const AllocationState& s, const ChannelGains& gains, const ScenarioConfig& cfg, Eigen::Index m)
{
    detail::check_bd_index(gains, m);
    const double received = (gains.cascade.row(m) * s.power.row(m).array()).sum();
    return s.alpha(m) * received / noise_variance(cfg);
}

/// R_m = tau_m / N log(1 + gamma_m)
inline double bd_throughput(const AllocationState& s, const ChannelGains& gains, const ScenarioConfig& cfg,
                            Eigen::Index m)
{
    const double snr = bd_snr(s, gains, cfg, m);
    return s.tau(m) / static_cast<double>(gains.num_subcarriers()) * log1p_base(snr, cfg.log_base);
}

/// LU sum rate with backscatter treated as Gaussian interference.
inline double lu_throughput(const AllocationState& s, const ChannelGains& gains, const ScenarioConfig& cfg)
{
    const double noise = noise_variance(cfg);
    double total = 0.0;
    for (Eigen::Index m = 0; m < gains.num_bds(); ++m) {
        const Eigen::ArrayXd p = s.power.row(m).transpose().array();
        const Eigen::ArrayXd sinr =
            gains.direct * p / (s.alpha(m) * gains.interference.row(m).transpose() * p + noise);
        double slot = 0.0;
        for (Eigen::Index k = 0; k < sinr.size(); ++k)
            slot += log1p_base(sinr(k), cfg.log_base);
        total += s.tau(m) * slot;
    }
    return total / static_cast<double>(gains.num_subcarriers());
}

inline double min_bd_throughput(const AllocationState& s, const ChannelGains& gains, const ScenarioConfig& cfg)
{
    double q = std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < gains.num_bds(); ++m)
        q = std::min(q, bd_throughput(s, gains, cfg, m));
    return q;
}

// Grid overloads for callers that do not cache the gains.
inline double harvested_energy(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg,
                               Eigen::Index m)
{
    return harvested_energy(s, channel_gains(g), cfg, m);
}
inline double bd_snr(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg, Eigen::Index m)
{
    return bd_snr(s, channel_gains(g), cfg, m);
}
inline double bd_throughput(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg,
                            Eigen::Index m)
{
    return bd_throughput(s, channel_gains(g), cfg, m);
}
inline double lu_throughput(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg)
{
    return lu_throughput(s, channel_gains(g), cfg);
}
inline double min_bd_throughput(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg)
{
    return min_bd_throughput(s, channel_gains(g), cfg);
}

/// Absolute tolerance applied to every normalized residual.
inline constexpr double feasibility_tolerance = 1e-6;

/// Constraint families of the joint problem.
enum class ConstraintFamily
{
    bd_rate,        ///< R_m >= Q
    lu_rate,        ///< LU rate >= D
    energy,         ///< E_m >= E_min,m
    power_budget,   ///< sum_m tau_m sum_k P_mk <= P_bar
    time_budget,    ///< sum_m tau_m <= 1
    power_box,      ///< 0 <= P_mk <= P_peak
    time_nonneg,    ///< tau_m >= 0
    reflection_box  ///< 0 <= alpha_m <= 1
};

inline const char* family_name(ConstraintFamily f)
{
    switch (f) {
    case ConstraintFamily::bd_rate: return "bd_rate";
    case ConstraintFamily::lu_rate: return "lu_rate";
    case ConstraintFamily::energy: return "energy";
    case ConstraintFamily::power_budget: return "power_budget";
    case ConstraintFamily::time_budget: return "time_budget";
    case ConstraintFamily::power_box: return "power_box";
    case ConstraintFamily::time_nonneg: return "time_nonneg";
    case ConstraintFamily::reflection_box: return "reflection_box";
    }
    return "unknown";
}

/// Worst signed slack of one constraint family (negative = violated).
///
/// Energy slacks are relative to E_min,m when E_min,m > 0; all other slacks
/// are in the constraint's natural unit (bps/Hz, W, or dimensionless).
struct Residual
{
    ConstraintFamily family;
    double slack;
    Eigen::Index worst_index; ///< BD (or flattened m*N+k for power_box) attaining the worst slack, -1 if scalar
};

struct ConstraintReport
{
    std::vector<double> bd_throughputs;
    double lu_throughput = 0.0;
    std::vector<double> harvested;
    double power_used = 0.0;
    std::vector<Residual> residuals;
    bool feasible = false;

    std::vector<ConstraintFamily> violated(double tol = feasibility_tolerance) const
    {
        std::vector<ConstraintFamily> out;
        for (const auto& r : residuals)
            if (r.slack < -tol) out.push_back(r.family);
        return out;
    }

    const Residual& residual(ConstraintFamily f) const
    {
        for (const auto& r : residuals)
            if (r.family == f) return r;
        throw std::out_of_range("no residual for family");
    }
};

inline ConstraintReport check_feasibility(const AllocationState& s, const ChannelGains& gains,
                                          const ScenarioConfig& cfg, double tol = feasibility_tolerance)
{
    const Eigen::Index M = gains.num_bds();
    if (s.tau.size() != M || s.alpha.size() != M || s.power.rows() != M ||
        s.power.cols() != gains.num_subcarriers() || static_cast<Eigen::Index>(cfg.min_energy.size()) != M)
        throw std::invalid_argument("allocation dimensions do not match the channel");

    ConstraintReport rep;
    auto worst = [](ConstraintFamily f) {
        return Residual{f, std::numeric_limits<double>::infinity(), -1};
    };
    Residual rate = worst(ConstraintFamily::bd_rate);
    Residual energy = worst(ConstraintFamily::energy);
    Residual tau_nn = worst(ConstraintFamily::time_nonneg);
    Residual alpha_box = worst(ConstraintFamily::reflection_box);
    auto update = [](Residual& r, double slack, Eigen::Index idx) {
        if (slack < r.slack) {
            r.slack = slack;
            r.worst_index = idx;
        }
    };

    for (Eigen::Index m = 0; m < M; ++m) {
        const double rm = bd_throughput(s, gains, cfg, m);
        const double em = harvested_energy(s, gains, cfg, m);
        rep.bd_throughputs.push_back(rm);
        rep.harvested.push_back(em);
        update(rate, rm - s.objective, m);
        const double emin = cfg.min_energy[static_cast<std::size_t>(m)];
        update(energy, emin > 0.0 ? (em - emin) / emin : em, m);
        update(tau_nn, s.tau(m), m);
        update(alpha_box, std::min(s.alpha(m), 1.0 - s.alpha(m)), m);
    }

    rep.lu_throughput = lu_throughput(s, gains, cfg);
    rep.power_used = (s.power.rowwise().sum().array() * s.tau.array()).sum();

    Residual pbox = worst(ConstraintFamily::power_box);
    for (Eigen::Index m = 0; m < M; ++m)
        for (Eigen::Index k = 0; k < s.power.cols(); ++k)
            update(pbox, std::min(s.power(m, k), cfg.peak_power - s.power(m, k)), m * s.power.cols() + k);

    rep.residuals = {
        rate,
        Residual{ConstraintFamily::lu_rate, rep.lu_throughput - cfg.min_lu_rate, -1},
        energy,
        Residual{ConstraintFamily::power_budget, cfg.power_budget - rep.power_used, -1},
        Residual{ConstraintFamily::time_budget, 1.0 - s.tau.sum(), -1},
        pbox,
        tau_nn,
        alpha_box,
    };
    rep.feasible = std::all_of(rep.residuals.begin(), rep.residuals.end(),
                               [tol](const Residual& r) { return r.slack >= -tol; });
    return rep;
}

inline ConstraintReport check_feasibility(const AllocationState& s, const FrequencyGrid& grid,
                                          const ScenarioConfig& cfg, double tol = feasibility_tolerance)
{
    return check_feasibility(s, channel_gains(grid), cfg, tol);
}

} // namespace ambc
