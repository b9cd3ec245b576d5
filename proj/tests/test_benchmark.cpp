#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace ambc;
namespace ts = testing_support;
namespace oracle = testing_support::oracle;

TEST(Benchmark, FullReflectionWhenNothingBinds)
{
    ScenarioConfig cfg;
    cfg.min_lu_rate = 0.0;
    cfg.min_energy = {0.0, 0.0};
    const auto gains = ts::draw_gains(cfg, 1);
    const auto b = solve_benchmark(gains, cfg);
    ASSERT_EQ(b.status, SolveStatus::optimal);
    EXPECT_EQ(b.alpha, 1.0);
    EXPECT_EQ(b.state.tau, Eigen::VectorXd::Constant(2, 0.5));
    EXPECT_TRUE((b.state.power.array() == cfg.power_budget / 128.0).all());
}

TEST(Benchmark, EnergyBoundReflectionMatchesLinearRoot)
{
    ScenarioConfig cfg;
    cfg.min_lu_rate = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto grid = ts::draw_grid(cfg, 100 + seed);
        // energy is affine in the common alpha: E_m(a) = E_m(0) + a (E_m(1) - E_m(0))
        auto energy_at = [&](double a, int m) {
            AllocationState s{Eigen::VectorXd::Constant(2, 0.5), Eigen::VectorXd::Constant(2, a),
                              Eigen::MatrixXd::Constant(2, 64, cfg.power_budget / 128.0), 0.0};
            return oracle::energy(s, grid, cfg, m);
        };
        const double emin = std::min(energy_at(0.4, 0), energy_at(0.4, 1));
        cfg.min_energy = {emin, emin};
        double root = 1.0;
        for (int m = 0; m < 2; ++m) {
            const double e0 = energy_at(0.0, m), e1 = energy_at(1.0, m);
            // the check accepts E >= E_min (1 - tolerance)
            root = std::min(root, (e0 - emin * (1.0 - feasibility_tolerance)) / (e0 - e1));
        }
        const auto b = solve_benchmark(grid, cfg);
        ASSERT_EQ(b.status, SolveStatus::optimal);
        EXPECT_NEAR(b.alpha, root, 1e-8) << "seed " << seed;
        EXPECT_NEAR(b.objective, oracle::min_rate(b.state, grid, cfg), 1e-12);
    }
}

TEST(Benchmark, InfeasibleWhenEvenZeroReflectionFails)
{
    ScenarioConfig cfg;
    cfg.min_energy = {1.0, 1.0};
    const auto b = solve_benchmark(ts::draw_gains(cfg, 2), cfg);
    EXPECT_EQ(b.status, SolveStatus::infeasible);
}

TEST(Benchmark, PowerLevelOptions)
{
    ScenarioConfig cfg;
    EXPECT_DOUBLE_EQ(benchmark_power_level(cfg), 1.0 / 128.0);
    cfg.benchmark_power = BenchmarkPower::full_budget;
    EXPECT_DOUBLE_EQ(benchmark_power_level(cfg), 1.0 / 64.0);
    cfg.peak_power = 0.01;
    EXPECT_DOUBLE_EQ(benchmark_power_level(cfg), 0.01);
}

TEST(Benchmark, JointDesignStartedThereIsNoWorse)
{
    ScenarioConfig cfg;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto gains = ts::draw_gains(cfg, derive_seed(9, {seed}));
        const auto b = solve_benchmark(gains, cfg);
        if (b.status != SolveStatus::optimal) continue;
        const auto trace = optimize(gains, cfg, b.state);
        ASSERT_NE(trace.termination, Termination::infeasible);
        EXPECT_GE(trace.final_state.objective, b.objective - 1e-6);
    }
}

namespace
{

SweepSpec small_spec()
{
    SweepSpec spec;
    spec.scenario = "unit";
    spec.variable = SweepVariable::lu_rate;
    spec.values = {0.5, 2.0};
    spec.realizations = 3;
    spec.base_seed = 77;
    return spec;
}

std::string records_csv(const std::vector<ExperimentRecord>& recs)
{
    std::ostringstream os;
    write_records_csv(os, recs);
    return os.str();
}

} // namespace

TEST(Sweep, DeterministicAndIndependentOfThreadCount)
{
    const auto spec = small_spec();
    const auto a = run_sweep(spec, 1);
    const auto b = run_sweep(spec, 3);
    ASSERT_EQ(a.size(), 6u);
    EXPECT_EQ(records_csv(a), records_csv(b));
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].value_index, i / 3);
        EXPECT_EQ(a[i].realization, i % 3);
        EXPECT_EQ(a[i].seed, realization_seed(77, i % 3));
    }
    // every value sees the same channel draws
    EXPECT_EQ(a[0].seed, a[3].seed);
    EXPECT_EQ(a[0].bench_feasible, a[0].bench_q.has_value());
}

TEST(Sweep, ApplyValueTouchesOnlyItsField)
{
    ScenarioConfig cfg;
    apply_sweep_value(cfg, SweepVariable::min_energy, 3e-6);
    EXPECT_EQ(cfg.min_energy, (std::vector<double>{3e-6, 3e-6}));
    apply_sweep_value(cfg, SweepVariable::snr_db, 5.0);
    EXPECT_EQ(cfg.snr_db, 5.0);
    apply_sweep_value(cfg, SweepVariable::peak_power_factor, 10.0);
    EXPECT_DOUBLE_EQ(cfg.peak_power, 10.0 * cfg.power_budget / 128.0);
    apply_sweep_value(cfg, SweepVariable::peak_power, 0.3);
    EXPECT_EQ(cfg.peak_power, 0.3);
    EXPECT_EQ(parse_sweep_variable("E_min"), SweepVariable::min_energy);
    EXPECT_FALSE(parse_sweep_variable("bogus").has_value());
}

TEST(Sweep, InvalidSpecsAreRejected)
{
    auto spec = small_spec();
    spec.values.clear();
    EXPECT_THROW(run_sweep(spec), std::invalid_argument);
    spec = small_spec();
    spec.realizations = 0;
    EXPECT_THROW(run_sweep(spec), std::invalid_argument);
    spec = small_spec();
    spec.values = {-1.0};
    EXPECT_THROW(run_sweep(spec), std::invalid_argument);
}

TEST(Aggregate, LeavesOutInfeasibleRuns)
{
    SweepSpec spec;
    spec.values = {1.0, 2.0};
    std::vector<ExperimentRecord> recs(4);
    recs[0].value_index = 0;
    recs[0].joint_q = 0.25;
    recs[0].bench_q = 0.1;
    recs[1].value_index = 0;
    recs[1].joint_q = 0.5;
    recs[2].value_index = 1;
    recs[3].value_index = 1;
    recs[3].bench_q = 0.05;
    const auto pts = aggregate(spec, recs);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_DOUBLE_EQ(pts[0].mean_joint_q, 0.375);
    EXPECT_DOUBLE_EQ(pts[0].mean_bench_q, 0.1);
    EXPECT_EQ(pts[0].n_feasible, 2u);
    EXPECT_EQ(pts[0].runs, 2u);
    EXPECT_TRUE(std::isnan(pts[1].mean_joint_q));
    EXPECT_DOUBLE_EQ(pts[1].mean_bench_q, 0.05);
    EXPECT_EQ(pts[1].n_feasible, 0u);

    std::ostringstream os;
    write_aggregate_csv(os, pts);
    EXPECT_EQ(os.str(), "value,mean_joint_q,mean_bench_q,n_feasible\n1,0.375,0.1,2\n2,nan,0.05,0\n");
}

TEST(Csv, RecordsSchemaAndMissingValues)
{
    ExperimentRecord r;
    r.variable = SweepVariable::snr_db;
    r.value = 15.0;
    r.seed = 12;
    r.joint_q = 0.125;
    r.iterations = 3;
    r.joint_feasible = true;
    EXPECT_EQ(records_csv({r}), "sweep_var,value,seed,joint_q,bench_q,iters,joint_feasible,bench_feasible\n"
                                "snr_db,15,12,0.125,NA,3,1,0\n");
}

TEST(Csv, NumbersRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, 0.046925123456789})
        EXPECT_EQ(std::strtod(detail::format_number(v).c_str(), nullptr), v);
    EXPECT_EQ(detail::format_number(0.5), "0.5");
}
