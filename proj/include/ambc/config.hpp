#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ambc
{

enum class LogBase
{
    two,
    natural
};

/// Per-slot power used by the equal-allocation benchmark.
enum class BenchmarkPower
{
    per_slot_share, ///< P_ave = P_bar / (M N)
    full_budget     ///< P_bar / N, which saturates the budget under equal time
};

/// Scalar parameters of one full-duplex backscatter network instance.
///
/// Distances are in meters, powers in watts, energies in joules per unit
/// frame and rates in bps/Hz. The receiver noise variance is derived from
/// `snr_db` unless `noise_override` is set.
struct ScenarioConfig
{
    std::size_t num_bds = 2;
    std::size_t num_subcarriers = 64;
    std::size_t cp_length = 16; // carried for completeness, unused

    std::size_t paths_forward = 4;
    std::size_t paths_backward = 4;
    std::size_t paths_direct = 8;
    std::size_t paths_interference = 6;

    std::vector<double> dist_fap_bd{2.5, 4.0};
    double dist_fap_lu = 15.0;
    std::vector<double> dist_bd_lu{15.0, 15.0};

    double eta = 0.5;
    double power_budget = 1.0;
    double peak_power = 20.0 / 128.0;
    std::vector<double> min_energy{1e-5, 1e-5};
    double min_lu_rate = 1.0;

    double snr_db = 20.0;
    std::optional<double> noise_override;

    double epsilon = 1e-4;
    std::size_t max_iterations = 200;
    LogBase log_base = LogBase::two;

    /// Mean power of path l is first_path_gain * d^-2 * decay^l.
    double decay = 0.36787944117144233; // e^-1
    double first_path_gain = 1e-3;

    BenchmarkPower benchmark_power = BenchmarkPower::per_slot_share;

    double average_power() const
    {
        return power_budget / static_cast<double>(num_bds * num_subcarriers);
    }
};

inline double log_base_factor(LogBase base)
{
    return base == LogBase::two ? std::numbers::ln2 : 1.0;
}

/// log_base(1 + x), accurate for small x.
inline double log1p_base(double x, LogBase base)
{
    return std::log1p(x) / log_base_factor(base);
}

inline void validate(const ScenarioConfig& cfg)
{
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid scenario: " + what); };
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };

    if (cfg.num_bds == 0) fail("num_bds must be positive");
    if (cfg.num_subcarriers == 0) fail("num_subcarriers must be positive");
    if (cfg.paths_forward == 0 || cfg.paths_backward == 0 || cfg.paths_direct == 0 || cfg.paths_interference == 0)
        fail("path counts must be positive");
    if (cfg.dist_fap_bd.size() != cfg.num_bds) fail("d_fap_bd needs one entry per BD");
    if (cfg.dist_bd_lu.size() != cfg.num_bds) fail("d_bd_lu needs one entry per BD");
    if (cfg.min_energy.size() != cfg.num_bds) fail("E_min needs one entry per BD");
    for (double d : cfg.dist_fap_bd)
        if (!positive(d)) fail("distances must be positive");
    for (double d : cfg.dist_bd_lu)
        if (!positive(d)) fail("distances must be positive");
    if (!positive(cfg.dist_fap_lu)) fail("distances must be positive");
    if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) fail("eta must lie in [0,1]");
    if (!positive(cfg.power_budget)) fail("P_bar must be positive");
    if (!positive(cfg.peak_power)) fail("P_peak must be positive");
    for (double e : cfg.min_energy)
        if (!(std::isfinite(e) && e >= 0.0)) fail("E_min must be non-negative");
    if (!std::isfinite(cfg.min_lu_rate) || cfg.min_lu_rate < 0.0) fail("D must be non-negative");
    if (!std::isfinite(cfg.snr_db)) fail("snr_db must be finite");
    if (cfg.noise_override && !positive(*cfg.noise_override)) fail("noise_power must be positive");
    if (!positive(cfg.epsilon)) fail("epsilon must be positive");
    if (cfg.max_iterations == 0) fail("max_iterations must be positive");
    if (!(cfg.decay > 0.0 && cfg.decay <= 1.0)) fail("decay must lie in (0,1]");
    if (!positive(cfg.first_path_gain)) fail("first_path_gain must be positive");
}

} // namespace ambc
