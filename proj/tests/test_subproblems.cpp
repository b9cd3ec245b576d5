#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace ambc;
namespace ts = testing_support;
namespace oracle = testing_support::oracle;

namespace
{

Eigen::MatrixXd random_power(std::mt19937_64& rng, const ScenarioConfig& cfg, double scale)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return Eigen::MatrixXd::NullaryExpr(static_cast<Eigen::Index>(cfg.num_bds),
                                        static_cast<Eigen::Index>(cfg.num_subcarriers),
                                        [&] { return cfg.peak_power * scale * u(rng); });
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    return Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); });
}

} // namespace

// ---------------------------------------------------------------------------
// time block

TEST(TimeBlock, MatchesSimplexGridSearch)
{
    ScenarioConfig cfg;
    std::mt19937_64 rng(31);
    int compared = 0;
    for (int trial = 0; trial < 40 && compared < 12; ++trial) {
        const auto grid = ts::draw_grid(cfg, 500 + trial);
        const auto gains = channel_gains(grid);
        const Eigen::VectorXd alpha = random_vector(rng, 2, 0.05, 1.0);
        const Eigen::MatrixXd P = random_power(rng, cfg, std::uniform_real_distribution<double>(0.1, 0.6)(rng));
        const auto res = solve_time_allocation(gains, cfg, alpha, P);
        const double best = ts::grid_time_block(grid, cfg, alpha, P, 2e-3);
        if (best < 0.0) continue;
        ASSERT_EQ(res.status, SolveStatus::optimal);
        EXPECT_NEAR(res.objective, best, 2e-3);
        EXPECT_GE(res.objective, best - 1e-9); // the grid can only undershoot
        EXPECT_LE(res.max_residual, feasibility_tolerance);
        ++compared;
    }
    EXPECT_GE(compared, 12);
}

TEST(TimeBlock, NoFeasiblePerturbationImproves)
{
    ScenarioConfig cfg;
    std::mt19937_64 rng(37);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto gains = ts::draw_gains(cfg, 700 + trial);
        const Eigen::VectorXd alpha = random_vector(rng, 2, 0.05, 1.0);
        const Eigen::MatrixXd P = random_power(rng, cfg, 0.3);
        const auto res = solve_time_allocation(gains, cfg, alpha, P);
        if (res.status != SolveStatus::optimal) continue;
        for (int k = 0; k < 200; ++k) {
            AllocationState s{res.variables, alpha, P, 0.0};
            for (Eigen::Index m = 0; m < 2; ++m)
                s.tau(m) = std::max(0.0, s.tau(m) + 1e-4 * n01(rng));
            if (!check_feasibility(s, gains, cfg, 0.0).feasible) continue;
            EXPECT_LE(min_bd_throughput(s, gains, cfg), res.objective + 1e-8);
        }
    }
}

TEST(TimeBlock, DualsCertifyOptimality)
{
    ScenarioConfig cfg;
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto gains = ts::draw_gains(cfg, 900 + trial);
        const Eigen::VectorXd alpha = random_vector(rng, 2, 0.05, 1.0);
        const Eigen::MatrixXd P = random_power(rng, cfg, 0.3);
        const auto prog = time_allocation_lp(gains, cfg, alpha, P);
        const auto sol = lp::solve(prog);
        if (sol.status != lp::LpStatus::optimal) continue;
        EXPECT_TRUE((sol.duals.array() >= -1e-9).all());
        EXPECT_TRUE(((prog.A.transpose() * sol.duals - prog.c).array() >= -1e-9).all());
        EXPECT_NEAR(prog.b.dot(sol.duals), sol.objective, 1e-9);
        // complementary slackness
        const Eigen::VectorXd slack = prog.b - prog.A * sol.x;
        EXPECT_LT((slack.array() * sol.duals.array()).abs().maxCoeff(), 1e-9);
    }
}

TEST(TimeBlock, ImpossibleLuRequirementIsInfeasible)
{
    ScenarioConfig cfg;
    cfg.min_lu_rate = 100.0;
    const auto gains = ts::draw_gains(cfg, 1);
    const auto init = default_init(gains, cfg);
    EXPECT_EQ(solve_time_allocation(gains, cfg, init.alpha, init.power).status, SolveStatus::infeasible);
}

TEST(TimeBlock, UnconstrainedSplitEqualizesRates)
{
    ScenarioConfig cfg;
    cfg.min_lu_rate = 0.0;
    cfg.min_energy = {0.0, 0.0};
    const auto gains = ts::draw_gains(cfg, 2);
    const auto init = default_init(gains, cfg);
    const auto res = solve_time_allocation(gains, cfg, init.alpha, init.power);
    ASSERT_EQ(res.status, SolveStatus::optimal);
    AllocationState s{res.variables, init.alpha, init.power, 0.0};
    // max min tau_m c_m with tau_1 + tau_2 = 1 gives tau_m proportional to 1 / c_m
    const double c0 = bd_throughput(AllocationState{Eigen::Vector2d(1, 1), init.alpha, init.power, 0}, gains, cfg, 0);
    const double c1 = bd_throughput(AllocationState{Eigen::Vector2d(1, 1), init.alpha, init.power, 0}, gains, cfg, 1);
    EXPECT_NEAR(res.objective, c0 * c1 / (c0 + c1), 1e-12);
    EXPECT_NEAR(s.tau.sum(), 1.0, 1e-12);
}

// ---------------------------------------------------------------------------
// reflection block

TEST(ReflectionBlock, MatchesGridSearch)
{
    ScenarioConfig cfg;
    std::mt19937_64 rng(43);
    int compared = 0;
    for (int trial = 0; trial < 40 && compared < 12; ++trial) {
        const auto grid = ts::draw_grid(cfg, 1100 + trial);
        const auto gains = channel_gains(grid);
        Eigen::VectorXd tau = random_vector(rng, 2, 0.1, 0.5);
        const Eigen::MatrixXd P = random_power(rng, cfg, std::uniform_real_distribution<double>(0.1, 0.5)(rng));
        // requirements drawn relative to what alpha = 0 achieves so that they bind
        AllocationState zero{tau, Eigen::VectorXd::Zero(2), P, 0.0};
        ScenarioConfig c = cfg;
        std::uniform_real_distribution<double> frac(0.3, 1.0);
        c.min_lu_rate = frac(rng) * oracle::lu_rate(zero, grid, cfg);
        c.min_energy = {frac(rng) * oracle::energy(zero, grid, cfg, 0), frac(rng) * oracle::energy(zero, grid, cfg, 1)};
        const auto res = solve_reflection(gains, c, tau, P);
        const double best = ts::grid_reflection_block(grid, c, tau, P, 1e-3);
        if (best < 0.0) continue;
        ASSERT_EQ(res.status, SolveStatus::optimal);
        EXPECT_NEAR(res.objective, best, 2e-3);
        EXPECT_GE(res.objective, best - 1e-9);
        // the random powers may break the budget, which is not this block's row
        EXPECT_TRUE(ReflectionModel(gains, c, tau, P).feasible(res.variables));
        ++compared;
    }
    EXPECT_GE(compared, 12);
}

TEST(ReflectionBlock, FeasibilityIsMonotoneInTarget)
{
    ScenarioConfig cfg;
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto gains = ts::draw_gains(cfg, 1300 + trial);
        const Eigen::VectorXd tau = random_vector(rng, 2, 0.1, 0.5);
        const Eigen::MatrixXd P = random_power(rng, cfg, 0.3);
        const ReflectionModel model(gains, cfg, tau, P);
        const double top = model.max_objective();
        for (int k = 0; k < 100; ++k) {
            double a = u(rng) * top, b = u(rng) * top;
            if (a > b) std::swap(a, b);
            if (model.target_feasible(b)) EXPECT_TRUE(model.target_feasible(a)) << a << " < " << b;
        }
    }
}

TEST(ReflectionBlock, ClosedFormInvertsTheRate)
{
    ScenarioConfig cfg;
    std::mt19937_64 rng(53);
    const auto gains = ts::draw_gains(cfg, 3);
    const Eigen::VectorXd tau = random_vector(rng, 2, 0.2, 0.5);
    const Eigen::MatrixXd P = random_power(rng, cfg, 0.3);
    const ReflectionModel model(gains, cfg, tau, P);
    for (double q : {1e-4, 1e-3, 0.01}) {
        const Eigen::VectorXd a = model.alpha_for(q);
        const AllocationState s{tau, a, P, 0.0};
        for (Eigen::Index m = 0; m < 2; ++m)
            EXPECT_NEAR(bd_throughput(s, gains, cfg, m), q, 1e-12);
    }
}

TEST(ReflectionBlock, SlackConstraintsGiveFullReflection)
{
    ScenarioConfig cfg;
    cfg.min_lu_rate = 0.0;
    cfg.min_energy = {0.0, 0.0};
    const auto gains = ts::draw_gains(cfg, 4);
    const auto init = default_init(gains, cfg);
    const auto res = solve_reflection(gains, cfg, init.tau, init.power);
    ASSERT_EQ(res.status, SolveStatus::optimal);
    EXPECT_EQ(res.variables, Eigen::VectorXd::Ones(2));
}

TEST(ReflectionBlock, HugeEnergyRequirementIsInfeasible)
{
    ScenarioConfig cfg;
    cfg.min_energy = {1.0, 1.0};
    const auto gains = ts::draw_gains(cfg, 5);
    const auto init = default_init(gains, cfg);
    EXPECT_EQ(solve_reflection(gains, cfg, init.tau, init.power).status, SolveStatus::infeasible);
}

TEST(ReflectionBlock, IdleBdGetsZeroReflection)
{
    ScenarioConfig cfg;
    cfg.min_lu_rate = 0.0;
    cfg.min_energy = {0.0, 0.0};
    const auto gains = ts::draw_gains(cfg, 6);
    const auto init = default_init(gains, cfg);
    const Eigen::Vector2d tau(0.0, 1.0);
    const auto res = solve_reflection(gains, cfg, tau, init.power);
    ASSERT_EQ(res.status, SolveStatus::optimal);
    EXPECT_EQ(res.variables(0), 0.0);
    EXPECT_EQ(res.objective, 0.0);
}

// ---------------------------------------------------------------------------
// power block

TEST(PowerBlock, BoundIsBelowTheRateAndTightAtTheLocalPoint)
{
    ScenarioConfig cfg;
    std::mt19937_64 rng(59);
    for (int draw = 0; draw < 5; ++draw) {
        const auto grid = ts::draw_grid(cfg, 1500 + draw);
        const auto gains = channel_gains(grid);
        for (int k = 0; k < 40; ++k) {
            auto s = ts::random_state(rng, cfg);
            const Eigen::MatrixXd local = random_power(rng, cfg, 1.0);
            const double lb = sco_lower_bound(s.power, local, gains, s.tau, s.alpha, cfg);
            EXPECT_LE(lb, lu_throughput(s, gains, cfg) + 1e-12);
            EXPECT_NEAR(lb, oracle::lu_bound(s.power, local, s, grid, cfg), 1e-10);
            AllocationState at_local = s;
            at_local.power = local;
            EXPECT_NEAR(sco_lower_bound(local, local, gains, s.tau, s.alpha, cfg), lu_throughput(at_local, gains, cfg),
                        1e-9);
        }
    }
}

TEST(PowerBlock, MatchesGridSearchOnTwoSubcarriers)
{
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        ScenarioConfig cfg = ts::tiny_config();
        cfg.peak_power = 1.0;
        const auto grid = ts::draw_grid(cfg, 1700 + trial);
        const auto gains = channel_gains(grid);
        AllocationState at{Eigen::VectorXd::Constant(1, 0.6 + 0.4 * u(rng)), Eigen::VectorXd::Constant(1, 0.1 + 0.9 * u(rng)),
                           Eigen::MatrixXd::Zero(1, 2), 0.0};
        const Eigen::MatrixXd local = Eigen::MatrixXd::Constant(1, 2, 0.5 / at.tau(0) * u(rng));
        AllocationState full = at;
        full.power.setConstant(cfg.power_budget / (2.0 * at.tau(0)));
        cfg.min_lu_rate = 0.8 * u(rng) * oracle::lu_bound(full.power, local, full, grid, cfg);
        cfg.min_energy = {0.8 * u(rng) * oracle::energy(full, grid, cfg, 0)};

        const auto res = solve_power_sco(gains, cfg, at.tau, at.alpha, local);
        const double best = ts::grid_power_block(grid, cfg, at, local, 2000);
        ASSERT_GE(best, 0.0);
        ASSERT_NE(res.status, SolveStatus::infeasible);
        EXPECT_NEAR(res.objective, best, 1e-3 * best) << "trial " << trial;
        EXPECT_GE(res.objective, best * (1.0 - 1e-6)); // barrier iterates stay interior
    }
}

TEST(PowerBlock, NeverWorseThanTheIncumbentAndFeasibleForTheTrueProblem)
{
    ScenarioConfig cfg;
    std::mt19937_64 rng(67);
    for (int trial = 0; trial < 10; ++trial) {
        const auto gains = ts::draw_gains(cfg, 1900 + trial);
        auto s = default_init(gains, cfg);
        const auto t = solve_time_allocation(gains, cfg, s.alpha, s.power);
        if (t.status != SolveStatus::optimal) continue;
        s.tau = t.variables;
        const auto r = solve_reflection(gains, cfg, s.tau, s.power);
        ASSERT_EQ(r.status, SolveStatus::optimal);
        s.alpha = r.variables;
        const double before = min_bd_throughput(s, gains, cfg);
        const auto p = solve_power_sco(gains, cfg, s.tau, s.alpha, s.power);
        ASSERT_NE(p.status, SolveStatus::infeasible);
        EXPECT_GE(p.objective, before - 1e-12);
        s.power = p.variables;
        s.objective = p.objective;
        EXPECT_TRUE(check_feasibility(s, gains, cfg).feasible) << "trial " << trial;
        EXPECT_NEAR(min_bd_throughput(s, gains, cfg), p.objective, 1e-12);
    }
}

TEST(PowerBlock, ImpossibleEnergyIsInfeasible)
{
    ScenarioConfig cfg;
    cfg.min_energy = {1.0, 1.0};
    const auto gains = ts::draw_gains(cfg, 7);
    const auto init = default_init(gains, cfg);
    EXPECT_EQ(solve_power_sco(gains, cfg, init.tau, init.alpha, init.power).status, SolveStatus::infeasible);
}
