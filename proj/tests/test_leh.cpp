#include <gtest/gtest.h>
#include <rpso/leh.hpp>

#include <algorithm>
#include <cmath>

using namespace rpso;

namespace {

// Exhaustive search over a 200x200 lattice of the box (inclusive of edges).
double grid_optimum(const GlobalHighCostSet& h, const BoxDomain& box, int steps = 200)
{
    double best = 0.0;
    for (int i = 0; i < steps; ++i) {
        for (int j = 0; j < steps; ++j) {
            const Point c{box.lower[0] + box.width(0) * i / (steps - 1), box.lower[1] + box.width(1) * j / (steps - 1)};
            best = std::max(best, clearance(c, h));
        }
    }
    return best;
}

EvaluationLedger ledger_with_values(const std::vector<double>& values)
{
    EvaluationLedger ledger(make_problem("sphere", 1), 100);
    for (double v : values) {
        ledger.evaluate(Point{20.0 + std::sqrt(v)});
    }
    return ledger;
}

} // namespace

TEST(GlobalHighCostSet, StrictThreshold)
{
    auto ledger = ledger_with_values({1.0, 4.0, 9.0});
    const auto h = global_high_cost_set(ledger, 4.0);
    ASSERT_EQ(h.points.size(), 1u);
    EXPECT_EQ(h.points[0][0], 23.0);
    EXPECT_TRUE(global_high_cost_set(ledger, 1e300).empty());
    EXPECT_EQ(global_high_cost_set(ledger, -1e300).points.size(), 3u);
}

TEST(LehCenter, EmptySetGivesDomainCentre)
{
    const BoxDomain box({0.0, 2.0}, {1.0, 6.0});
    Rng rng(1);
    const auto c = leh_center(GlobalHighCostSet{}, box, 0.5, LehConfig{}, rng);
    ASSERT_TRUE(c);
    EXPECT_EQ((*c)[0], 0.5);
    EXPECT_EQ((*c)[1], 4.0);
}

TEST(LehCenter, FourCorners)
{
    const auto box = BoxDomain::cube(2, 0.0, 1.0);
    GlobalHighCostSet h;
    h.points = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    Rng rng(2);
    const auto s = largest_empty_sphere(h, box, LehConfig{}, rng);
    const double oracle = grid_optimum(h, box);
    EXPECT_GE(s.radius, 0.98 * oracle);
    EXPECT_NEAR(s.center[0], 0.5, 0.05);
    EXPECT_NEAR(s.center[1], 0.5, 0.05);
}

TEST(LehCenter, CentreHcpPushesToCorner)
{
    const auto box = BoxDomain::cube(2, 0.0, 1.0);
    GlobalHighCostSet h;
    h.points = {{0.5, 0.5}};
    Rng rng(3);
    const auto s = largest_empty_sphere(h, box, LehConfig{}, rng);
    EXPECT_GE(s.radius, 0.98 * grid_optimum(h, box));
    EXPECT_NEAR(s.radius, std::sqrt(0.5), 0.02);
}

TEST(LehCenter, NotFoundBelowGamma)
{
    const auto box = BoxDomain::cube(2, 0.0, 1.0);
    GlobalHighCostSet h;
    h.points = {{0.5, 0.5}};
    Rng rng(4);
    EXPECT_FALSE(leh_center(h, box, 0.8, LehConfig{}, rng));
    EXPECT_TRUE(leh_center(h, box, 0.5, LehConfig{}, rng));
}

TEST(LehCenter, InBoxAndAtLeastBestInitial)
{
    Rng rng(5);
    for (int inst = 0; inst < 30; ++inst) {
        const auto box = BoxDomain::cube(3, -2.0, 3.0);
        GlobalHighCostSet h;
        for (int k = 0; k < 6; ++k) {
            h.points.push_back(uniform_in_box(box, rng));
        }
        LehConfig cfg;
        cfg.generations = 0;
        Rng a(100 + inst);
        const auto initial = largest_empty_sphere(h, box, cfg, a);
        cfg.generations = 30;
        Rng b(100 + inst);
        const auto evolved = largest_empty_sphere(h, box, cfg, b);
        EXPECT_TRUE(box.contains(evolved.center));
        EXPECT_GE(evolved.radius, initial.radius);
        EXPECT_DOUBLE_EQ(evolved.radius, clearance(evolved.center, h));
    }
}

TEST(Dormancy, BelowThresholdDoesNothing)
{
    EvaluationLedger ledger(make_problem("sphere", 2), 10);
    Particle p;
    p.position = {20.0, 20.0};
    p.velocity = {0.05, 0.05};
    p.idle_iterations = 2;
    LehConfig cfg;
    cfg.dorm_threshold = 3;
    Rng rng(6);
    EXPECT_FALSE(check_dormancy_and_relocate(p, cfg, 0.0, ledger, 1.0, rng));
    EXPECT_EQ(p.idle_iterations, 2u);
}

TEST(Dormancy, LehWithEmptyHistoryGoesToCentre)
{
    EvaluationLedger ledger(make_problem("sphere", 2), 10);
    Particle p;
    p.position = {16.0, 24.0};
    p.velocity = {1.0, 1.0};
    p.idle_iterations = 5;
    p.last_direction = Point{1.0, 0.0};
    LehConfig cfg;
    Rng rng(7);
    const auto moved = check_dormancy_and_relocate(p, cfg, 0.0, ledger, 1.0, rng);
    ASSERT_TRUE(moved);
    EXPECT_EQ(p.position, (Point{20.0, 20.0}));
    EXPECT_EQ(p.idle_iterations, 0u);
    EXPECT_FALSE(p.last_direction);
    for (double v : p.velocity) {
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, 0.1);
    }
    EXPECT_EQ(ledger.total_spent(), 0u);
}

TEST(Dormancy, RandomRelocationIsUniform)
{
    // One-sample Kolmogorov-Smirnov per dimension against U(l, u), alpha = 0.01.
    const auto problem = make_problem("ackley", 2);
    EvaluationLedger ledger(problem, 10);
    LehConfig cfg;
    cfg.relocation = Relocation::Random;
    Rng rng(8);
    const int draws = 10000;
    std::vector<std::vector<double>> u(2);
    for (int k = 0; k < draws; ++k) {
        Particle p;
        p.position = {50.0, 50.0};
        p.idle_iterations = cfg.dorm_threshold;
        ASSERT_TRUE(check_dormancy_and_relocate(p, cfg, 0.0, ledger, problem.gamma, rng));
        for (std::size_t i = 0; i < 2; ++i) {
            u[i].push_back((p.position[i] - problem.domain.lower[i]) / problem.domain.width(i));
        }
    }
    const double critical = 1.628 / std::sqrt(static_cast<double>(draws));
    for (auto& col : u) {
        std::sort(col.begin(), col.end());
        double dmax = 0.0;
        for (int k = 0; k < draws; ++k) {
            dmax = std::max({dmax, (k + 1.0) / draws - col[k], col[k] - static_cast<double>(k) / draws});
        }
        EXPECT_LT(dmax, critical);
    }
}

TEST(Dormancy, NotFoundFallsBackToRandom)
{
    const auto problem = make_problem("sphere", 2);
    EvaluationLedger ledger(problem, 200);
    // Dense hcps across the box: nothing is Gamma = 1 clear of all of them.
    for (double a = 15.0; a <= 25.0; a += 1.0) {
        for (double b = 15.0; b <= 25.0; b += 1.0) {
            ledger.evaluate(Point{a, b});
        }
    }
    Particle p;
    p.position = {20.0, 20.0};
    p.idle_iterations = 10;
    Rng rng(9);
    const auto moved = check_dormancy_and_relocate(p, LehConfig{}, -1.0, ledger, 1.0, rng);
    ASSERT_TRUE(moved);
    EXPECT_TRUE(problem.domain.contains(p.position));
}
