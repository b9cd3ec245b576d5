#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "bcd.hpp"
#include "channel.hpp"
#include "config.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace ambc
{

/// Equal time and equal power with one reflection coefficient shared by all BDs.
struct BenchmarkResult
{
    double alpha = 0.0;
    double objective = 0.0;
    SolveStatus status = SolveStatus::infeasible;
    AllocationState state;
};

inline double benchmark_power_level(const ScenarioConfig& cfg)
{
    const double level = cfg.benchmark_power == BenchmarkPower::full_budget
                             ? cfg.power_budget / static_cast<double>(cfg.num_subcarriers)
                             : cfg.average_power();
    return std::min(level, cfg.peak_power);
}

inline AllocationState benchmark_state(const ChannelGains& gains, const ScenarioConfig& cfg, double alpha)
{
    const Eigen::Index M = gains.num_bds();
    AllocationState s;
    s.tau = Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
    s.alpha = Eigen::VectorXd::Constant(M, alpha);
    s.power = Eigen::MatrixXd::Constant(M, gains.num_subcarriers(), benchmark_power_level(cfg));
    s.objective = min_bd_throughput(s, gains, cfg);
    return s;
}

/// Largest common alpha meeting the LU and energy rows, found by bisection.
///
/// Both rows only tighten as alpha grows while every BD rate improves, so the
/// largest feasible alpha is optimal.
inline BenchmarkResult solve_benchmark(const ChannelGains& gains, const ScenarioConfig& cfg, double tol = 1e-9)
{
    auto feasible = [&](double a) {
        AllocationState s = benchmark_state(gains, cfg, a);
        s.objective = 0.0;
        return check_feasibility(s, gains, cfg).feasible;
    };
    BenchmarkResult res;
    if (!feasible(0.0)) {
        res.state = benchmark_state(gains, cfg, 0.0);
        res.objective = res.state.objective;
        res.status = SolveStatus::infeasible;
        return res;
    }
    double lo = 0.0, hi = 1.0;
    if (feasible(1.0)) {
        lo = 1.0;
    } else {
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
    }
    res.alpha = lo;
    res.state = benchmark_state(gains, cfg, lo);
    res.objective = res.state.objective;
    res.status = SolveStatus::optimal;
    return res;
}

inline BenchmarkResult solve_benchmark(const FrequencyGrid& grid, const ScenarioConfig& cfg, double tol = 1e-9)
{
    return solve_benchmark(channel_gains(grid), cfg, tol);
}

// ---------------------------------------------------------------------------
// Monte Carlo sweeps

enum class SweepVariable
{
    lu_rate,          ///< D
    snr_db,
    min_energy,       ///< E_min applied to every BD
    peak_power,       ///< P_peak in watts
    peak_power_factor ///< P_peak as a multiple of P_ave
};

inline const char* sweep_variable_name(SweepVariable v)
{
    switch (v) {
    case SweepVariable::lu_rate: return "D";
    case SweepVariable::snr_db: return "snr_db";
    case SweepVariable::min_energy: return "E_min";
    case SweepVariable::peak_power: return "P_peak";
    case SweepVariable::peak_power_factor: return "P_peak_factor";
    }
    return "unknown";
}

inline std::optional<SweepVariable> parse_sweep_variable(const std::string& s)
{
    for (auto v : {SweepVariable::lu_rate, SweepVariable::snr_db, SweepVariable::min_energy,
                   SweepVariable::peak_power, SweepVariable::peak_power_factor})
        if (s == sweep_variable_name(v)) return v;
    return std::nullopt;
}

inline void apply_sweep_value(ScenarioConfig& cfg, SweepVariable v, double value)
{
    switch (v) {
    case SweepVariable::lu_rate: cfg.min_lu_rate = value; break;
    case SweepVariable::snr_db: cfg.snr_db = value; break;
    case SweepVariable::min_energy: cfg.min_energy.assign(cfg.num_bds, value); break;
    case SweepVariable::peak_power: cfg.peak_power = value; break;
    case SweepVariable::peak_power_factor: cfg.peak_power = value * cfg.average_power(); break;
    }
}

struct SweepSpec
{
    std::string scenario = "sweep";
    ScenarioConfig base;
    SweepVariable variable = SweepVariable::lu_rate;
    std::vector<double> values;
    std::size_t realizations = 100;
    std::uint64_t base_seed = 1;
};

inline void validate(const SweepSpec& spec)
{
    if (spec.values.empty()) throw std::invalid_argument("sweep '" + spec.scenario + "': value list is empty");
    if (spec.realizations == 0) throw std::invalid_argument("sweep '" + spec.scenario + "': realizations must be >= 1");
    for (double v : spec.values) {
        ScenarioConfig cfg = spec.base;
        apply_sweep_value(cfg, spec.variable, v);
        validate(cfg);
    }
}

/// Channel seed of realization r. It does not depend on the sweep value, so
/// every point of a sweep (and every family sharing a base seed) sees the same
/// channel draws.
inline std::uint64_t realization_seed(std::uint64_t base_seed, std::size_t r)
{
    return derive_seed(base_seed, {static_cast<std::uint64_t>(r)});
}

struct ExperimentRecord
{
    std::string scenario;
    SweepVariable variable = SweepVariable::lu_rate;
    double value = 0.0;
    std::size_t value_index = 0;
    std::size_t realization = 0;
    std::uint64_t seed = 0;
    std::optional<double> joint_q; ///< empty when the joint design found no feasible point
    std::optional<double> bench_q; ///< empty when the benchmark is infeasible
    std::size_t iterations = 0;
    Termination termination = Termination::infeasible;
    bool joint_feasible = false;
    bool bench_feasible = false;
};

/// Joint design and benchmark on one channel draw.
inline ExperimentRecord run_experiment(const ScenarioConfig& cfg, std::uint64_t seed, const OptimizeOptions& opt = {})
{
    ExperimentRecord rec;
    rec.seed = seed;
    const ChannelGains gains = channel_gains(frequency_response(sample_taps(cfg, seed), cfg.num_subcarriers));

    const SolveTrace trace = optimize(gains, cfg, feasible_init(gains, cfg), opt);
    rec.iterations = trace.iterations.size();
    rec.termination = trace.termination;
    rec.joint_feasible = trace.termination != Termination::infeasible && trace.final_report.feasible;
    if (rec.joint_feasible) rec.joint_q = trace.final_state.objective;

    const BenchmarkResult bench = solve_benchmark(gains, cfg);
    rec.bench_feasible = bench.status == SolveStatus::optimal;
    if (rec.bench_feasible) rec.bench_q = bench.objective;
    return rec;
}

/// Runs every (value, realization) pair, `jobs` at a time. Records come back
/// ordered by (value index, realization) whatever the scheduling.
inline std::vector<ExperimentRecord> run_sweep(const SweepSpec& spec, unsigned jobs = 1,
                                               const std::function<void(const ExperimentRecord&)>& on_record = {})
{
    validate(spec);
    const std::size_t total = spec.values.size() * spec.realizations;
    std::vector<ExperimentRecord> out(total);
    std::atomic<std::size_t> next{0};
    std::mutex report;

    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            const std::size_t vi = i / spec.realizations;
            const std::size_t r = i % spec.realizations;
            ScenarioConfig cfg = spec.base;
            apply_sweep_value(cfg, spec.variable, spec.values[vi]);
            ExperimentRecord rec = run_experiment(cfg, realization_seed(spec.base_seed, r));
            rec.scenario = spec.scenario;
            rec.variable = spec.variable;
            rec.value = spec.values[vi];
            rec.value_index = vi;
            rec.realization = r;
            out[i] = std::move(rec);
            if (on_record) {
                std::lock_guard lock(report);
                on_record(out[i]);
            }
        }
    };

    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(total)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    return out;
}

/// Per-value means; infeasible runs are left out and counted.
struct SweepPoint
{
    double value = 0.0;
    double mean_joint_q = 0.0; ///< over joint-feasible runs, NaN when there are none
    double mean_bench_q = 0.0; ///< over benchmark-feasible runs, NaN when there are none
    std::size_t n_feasible = 0; ///< joint-feasible runs
    std::size_t n_bench_feasible = 0;
    std::size_t runs = 0;
};

inline std::vector<SweepPoint> aggregate(const SweepSpec& spec, const std::vector<ExperimentRecord>& records)
{
    std::vector<SweepPoint> points(spec.values.size());
    std::vector<double> joint_sum(points.size(), 0.0), bench_sum(points.size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i)
        points[i].value = spec.values[i];
    for (const auto& r : records) {
        auto& p = points.at(r.value_index);
        ++p.runs;
        if (r.joint_q) {
            ++p.n_feasible;
            joint_sum[r.value_index] += *r.joint_q;
        }
        if (r.bench_q) {
            ++p.n_bench_feasible;
            bench_sum[r.value_index] += *r.bench_q;
        }
    }
    const double nan = std::nan("");
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& p = points[i];
        p.mean_joint_q = p.n_feasible ? joint_sum[i] / static_cast<double>(p.n_feasible) : nan;
        p.mean_bench_q = p.n_bench_feasible ? bench_sum[i] / static_cast<double>(p.n_bench_feasible) : nan;
    }
    return points;
}

namespace detail
{

/// Shortest text that reads back to the same double.
inline std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string format_optional(const std::optional<double>& v)
{
    return v ? format_number(*v) : std::string("NA");
}

} // namespace detail

inline void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records)
{
    os << "sweep_var,value,seed,joint_q,bench_q,iters,joint_feasible,bench_feasible\n";
    for (const auto& r : records)
        os << sweep_variable_name(r.variable) << ',' << detail::format_number(r.value) << ',' << r.seed << ','
           << detail::format_optional(r.joint_q) << ',' << detail::format_optional(r.bench_q) << ','
           << r.iterations << ',' << (r.joint_feasible ? 1 : 0) << ',' << (r.bench_feasible ? 1 : 0) << '\n';
}

inline void write_aggregate_csv(std::ostream& os, const std::vector<SweepPoint>& points)
{
    os << "value,mean_joint_q,mean_bench_q,n_feasible\n";
    for (const auto& p : points)
        os << detail::format_number(p.value) << ',' << detail::format_number(p.mean_joint_q) << ','
           << detail::format_number(p.mean_bench_q) << ',' << p.n_feasible << '\n';
}

} // namespace ambc
