#pragma once

// Shared fixtures and independent reference implementations for the tests.
// The oracles below work from the complex frequency responses with plain
// loops and never call into the library's metric code.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "ambc/ambc.hpp"

namespace testing_support
{

using ambc::AllocationState;
using ambc::FrequencyGrid;
using ambc::ScenarioConfig;

inline FrequencyGrid draw_grid(const ScenarioConfig& cfg, std::uint64_t seed)
{
    return ambc::frequency_response(ambc::sample_taps(cfg, seed), cfg.num_subcarriers);
}

inline ambc::ChannelGains draw_gains(const ScenarioConfig& cfg, std::uint64_t seed)
{
    return ambc::channel_gains(draw_grid(cfg, seed));
}

/// Small scenario used where a grid search must enumerate the powers.
inline ScenarioConfig tiny_config()
{
    ScenarioConfig cfg;
    cfg.num_bds = 1;
    cfg.num_subcarriers = 2;
    cfg.paths_forward = cfg.paths_backward = cfg.paths_direct = cfg.paths_interference = 2;
    cfg.dist_fap_bd = {2.5};
    cfg.dist_bd_lu = {15.0};
    cfg.min_energy = {0.0};
    cfg.min_lu_rate = 0.0;
    return cfg;
}

namespace oracle
{

inline double noise(const ScenarioConfig& cfg)
{
    if (cfg.noise_override) return *cfg.noise_override;
    // first BD's cascade: sum over paths of (g0 d^-2 rho^l)^2
    double s = 0.0;
    const double d = cfg.dist_fap_bd[0];
    for (std::size_t l = 0; l < std::min(cfg.paths_forward, cfg.paths_backward); ++l) {
        const double p = cfg.first_path_gain * std::exp(static_cast<double>(l) * std::log(cfg.decay)) / (d * d);
        s += p * p;
    }
    return cfg.power_budget * s / std::pow(10.0, cfg.snr_db / 10.0);
}

inline double log_rate(double x, const ScenarioConfig& cfg)
{
    return cfg.log_base == ambc::LogBase::two ? std::log2(1.0 + x) : std::log(1.0 + x);
}

inline double energy(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg, int m)
{
    double sum = 0.0;
    for (int r = 0; r < s.tau.size(); ++r)
        for (int k = 0; k < g.F.cols(); ++k) {
            const double share = r == m ? s.tau(m) * (1.0 - s.alpha(m)) : s.tau(r);
            sum += std::norm(g.F(m, k)) * share * s.power(r, k);
        }
    return cfg.eta * sum;
}

inline double snr(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg, int m)
{
    double sum = 0.0;
    for (int k = 0; k < g.F.cols(); ++k)
        sum += std::norm(g.F(m, k) * g.G(m, k)) * s.power(m, k);
    return s.alpha(m) * sum / noise(cfg);
}

inline double bd_rate(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg, int m)
{
    return s.tau(m) * log_rate(snr(s, g, cfg, m), cfg) / static_cast<double>(g.F.cols());
}

inline double lu_rate(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg)
{
    const double n0 = noise(cfg);
    double total = 0.0;
    for (int m = 0; m < s.tau.size(); ++m) {
        double slot = 0.0;
        for (int k = 0; k < g.F.cols(); ++k) {
            const double p = s.power(m, k);
            const double sinr = std::norm(g.H(k)) * p / (s.alpha(m) * std::norm(g.F(m, k) * g.V(m, k)) * p + n0);
            slot += log_rate(sinr, cfg);
        }
        total += s.tau(m) * slot;
    }
    return total / static_cast<double>(g.F.cols());
}

inline double min_rate(const AllocationState& s, const FrequencyGrid& g, const ScenarioConfig& cfg)
{
    double q = INFINITY;
    for (int m = 0; m < s.tau.size(); ++m)
        q = std::min(q, bd_rate(s, g, cfg, m));
    return q;
}

/// Concave LU-rate minorant around `local`, written out from its definition:
/// log(a p + b p + s2) - [log(a p0 + s2) + a (p - p0) / (a p0 + s2)], a = interference, b = direct.
inline double lu_bound(const Eigen::MatrixXd& P, const Eigen::MatrixXd& P0, const AllocationState& s,
                       const FrequencyGrid& g, const ScenarioConfig& cfg)
{
    const double n0 = noise(cfg);
    const double ln_base = cfg.log_base == ambc::LogBase::two ? std::log(2.0) : 1.0;
    double total = 0.0;
    for (int m = 0; m < s.tau.size(); ++m) {
        double slot = 0.0;
        for (int k = 0; k < g.F.cols(); ++k) {
            const double a = s.alpha(m) * std::norm(g.F(m, k) * g.V(m, k));
            const double b = std::norm(g.H(k));
            const double p = P(m, k), p0 = P0(m, k);
            slot += std::log(a * p + b * p + n0) - std::log(a * p0 + n0) - a * (p - p0) / (a * p0 + n0);
        }
        total += s.tau(m) * slot;
    }
    return total / (static_cast<double>(g.F.cols()) * ln_base);
}

} // namespace oracle

/// Grid search of the time block over the simplex {tau >= 0, tau_1 + tau_2 <= 1}
/// (M = 2). Each slot's contribution is measured with the oracle at unit time.
/// Returns -1 when no grid point is feasible.
inline double grid_time_block(const FrequencyGrid& g, const ScenarioConfig& cfg, const Eigen::VectorXd& alpha,
                              const Eigen::MatrixXd& power, double step)
{
    double rate[2], lu[2], energy[2][2], used[2];
    for (int r = 0; r < 2; ++r) {
        AllocationState unit{Eigen::VectorXd::Zero(2), alpha, power, 0.0};
        unit.tau(r) = 1.0;
        rate[r] = oracle::bd_rate(unit, g, cfg, r);
        lu[r] = oracle::lu_rate(unit, g, cfg);
        for (int m = 0; m < 2; ++m)
            energy[m][r] = oracle::energy(unit, g, cfg, m);
        used[r] = power.row(r).sum();
    }
    double best = -1.0;
    const int steps = static_cast<int>(std::lround(1.0 / step));
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; i + j <= steps; ++j) {
            const double t0 = i * step, t1 = j * step;
            if (t0 * lu[0] + t1 * lu[1] < cfg.min_lu_rate) continue;
            if (t0 * energy[0][0] + t1 * energy[0][1] < cfg.min_energy[0]) continue;
            if (t0 * energy[1][0] + t1 * energy[1][1] < cfg.min_energy[1]) continue;
            if (t0 * used[0] + t1 * used[1] > cfg.power_budget) continue;
            best = std::max(best, std::min(t0 * rate[0], t1 * rate[1]));
        }
    return best;
}

/// Grid search of the reflection block over [0, 1]^2 (M = 2). Every term is
/// separable in the BDs, so each BD's curves are tabulated once.
inline double grid_reflection_block(const FrequencyGrid& g, const ScenarioConfig& cfg, const Eigen::VectorXd& tau,
                                    const Eigen::MatrixXd& power, double step)
{
    const int steps = static_cast<int>(std::lround(1.0 / step));
    std::vector<double> rate[2], lu[2], energy[2];
    for (int m = 0; m < 2; ++m)
        for (int i = 0; i <= steps; ++i) {
            AllocationState s{tau, Eigen::VectorXd::Zero(2), power, 0.0};
            s.alpha(m) = i * step;
            rate[m].push_back(oracle::bd_rate(s, g, cfg, m));
            energy[m].push_back(oracle::energy(s, g, cfg, m));
            AllocationState slot = s;
            slot.tau = Eigen::VectorXd::Zero(2);
            slot.tau(m) = tau(m);
            lu[m].push_back(oracle::lu_rate(slot, g, cfg));
        }
    double best = -1.0;
    for (int i = 0; i <= steps; ++i) {
        if (energy[0][static_cast<std::size_t>(i)] < cfg.min_energy[0]) continue;
        for (int j = 0; j <= steps; ++j) {
            const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
            if (energy[1][b] < cfg.min_energy[1]) continue;
            if (lu[0][a] + lu[1][b] < cfg.min_lu_rate) continue;
            best = std::max(best, std::min(rate[0][a], rate[1][b]));
        }
    }
    return best;
}

/// Grid search of the convexified power block for M = 1, N = 2 with step P_peak / divisions.
inline double grid_power_block(const FrequencyGrid& g, const ScenarioConfig& cfg, const AllocationState& at,
                               const Eigen::MatrixXd& local, int divisions)
{
    double best = -1.0;
    Eigen::MatrixXd P(1, 2);
    for (int i = 0; i <= divisions; ++i)
        for (int j = 0; j <= divisions; ++j) {
            P << cfg.peak_power * i / divisions, cfg.peak_power * j / divisions;
            if (at.tau(0) * P.sum() > cfg.power_budget) continue;
            AllocationState s = at;
            s.power = P;
            if (oracle::energy(s, g, cfg, 0) < cfg.min_energy[0]) continue;
            if (cfg.min_lu_rate > 0.0 && oracle::lu_bound(P, local, s, g, cfg) < cfg.min_lu_rate) continue;
            best = std::max(best, oracle::bd_rate(s, g, cfg, 0));
        }
    return best;
}

/// Uniform random allocation inside the variable boxes.
inline AllocationState random_state(std::mt19937_64& rng, const ScenarioConfig& cfg, double alpha_min = 0.0)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto M = static_cast<Eigen::Index>(cfg.num_bds);
    const auto N = static_cast<Eigen::Index>(cfg.num_subcarriers);
    AllocationState s;
    s.tau.resize(M);
    s.alpha.resize(M);
    s.power.resize(M, N);
    for (Eigen::Index m = 0; m < M; ++m) {
        s.tau(m) = u(rng) / static_cast<double>(M);
        s.alpha(m) = alpha_min + (1.0 - alpha_min) * u(rng);
        for (Eigen::Index k = 0; k < N; ++k)
            s.power(m, k) = cfg.peak_power * u(rng);
    }
    return s;
}

} // namespace testing_support
