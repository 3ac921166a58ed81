#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "delayshare/allocation.hpp"
#include "delayshare/project_io.hpp"
#include "test_util.hpp"

using namespace delayshare;
namespace tt = delayshare::testing;

namespace {

CharacteristicFunction table_game(int players, std::map<std::uint64_t, double> table) {
    CharacteristicFunction cf;
    cf.players.resize(players);
    std::iota(cf.players.begin(), cf.players.end(), 0);
    cf.value = [table = std::move(table)](std::uint64_t mask) {
        return mask == 0 ? 0.0 : table.at(mask);
    };
    return cf;
}

StochasticProblem example1_discretized(int k = 2000) {
    Project project(2, {}, {"1", "2"});
    std::vector<DurationDistribution> dists{
        DurationDistribution::uniform(0, 10).discretize(k),
        DurationDistribution::uniform(2, 8).discretize(k)};
    return StochasticProblem(std::move(project), std::move(dists), {7.0, 7.0},
                             ThresholdCost(6.0));
}

}  // namespace

TEST_CASE("exact shapley of the two-activity game") {
    auto cf = table_game(2, {{0b01, 13.0 / 12}, {0b10, 29.0 / 20}, {0b11, 1.0}});
    Allocation alloc = exact_shapley(cf);
    CHECK(alloc.payments[0] == doctest::Approx(19.0 / 60).epsilon(1e-12));
    CHECK(alloc.payments[1] == doctest::Approx(41.0 / 60).epsilon(1e-12));
    CHECK(std::abs(alloc.payments[0] - 0.31666) < 1e-4);
    CHECK(std::abs(alloc.payments[1] - 0.68333) < 1e-4);
    CHECK(alloc.total() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(alloc.meta.method == "exact");
}

TEST_CASE("exact shapley basics") {
    auto single = table_game(1, {{0b1, 3.25}});
    CHECK(exact_shapley(single).payments[0] == doctest::Approx(3.25));

    auto symmetric = table_game(2, {{0b01, 0.7}, {0b10, 0.7}, {0b11, 1.9}});
    Allocation alloc = exact_shapley(symmetric);
    CHECK(alloc.payments[0] == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(alloc.payments[1] == doctest::Approx(0.95).epsilon(1e-12));

    CHECK_THROWS_AS(exact_shapley(table_game(3, {}), 2), BudgetError);
}

TEST_CASE("exact shapley matches the full-permutation oracle") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        tt::RandomProblemOptions opt;
        opt.n = 3 + static_cast<int>(seed % 4);
        opt.discrete_only = true;
        StochasticProblem sp = tt::random_problem(seed + 40, opt);
        CharacteristicFunction cf = make_stoch_game_exact(sp);
        Allocation alloc = exact_shapley(cf);
        std::vector<double> oracle = tt::permutation_shapley_oracle(cf);
        CAPTURE(seed);
        for (int i = 0; i < opt.n; ++i)
            CHECK(alloc.payments[i] == doctest::Approx(oracle[i]).epsilon(1e-11));
    }
}

TEST_CASE("deterministic rule on the worked five-activity example") {
    Allocation alloc = shapley_det(tt::example2_spbar());
    // exact rationals (13/48, 1/48, 0, 3/16, 1/48)
    const std::vector<double> exact{13.0 / 48, 1.0 / 48, 0.0, 3.0 / 16, 1.0 / 48};
    const std::vector<double> printed{0.27083, 0.02083, 0.0, 0.18750, 0.02083};
    for (int i = 0; i < 5; ++i) {
        CHECK(alloc.payments[i] == doctest::Approx(exact[i]).epsilon(1e-12));
        CHECK(std::abs(alloc.payments[i] - printed[i]) < 1e-4);
    }
    CHECK(alloc.total() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(alloc.std_errors.has_value());
}

TEST_CASE("deterministic rule: no delay, no payment") {
    Project p = tt::example2_project();
    DurationVector planned{2, 1, 1, 4, 2};
    DeterministicProblem problem(p, planned, planned, ThresholdCost(6.5));
    Allocation alloc = shapley_det(problem);
    for (double pay : alloc.payments) CHECK(pay == 0.0);
}

TEST_CASE("deterministic rule treats mean-identical parallel activities equally") {
    Project p(2, {}, {"1", "2"});
    DeterministicProblem problem(p, {5, 5}, {7, 7}, ThresholdCost(6.0));
    Allocation alloc = shapley_det(problem);
    CHECK(alloc.payments[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(alloc.payments[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("sampled deterministic rule agrees with exact enumeration") {
    DeterministicProblem problem = tt::example2_spbar();
    Allocation exact = shapley_det(problem);

    SamplingPlan plan;
    plan.m = 30000;
    plan.m1 = 1;
    plan.seed = 3;
    plan.force_sampling = true;
    Allocation sampled = shapley_det(problem, plan);
    REQUIRE(sampled.meta.method == "sampled");
    for (int i = 0; i < 5; ++i)
        CHECK(std::abs(sampled.payments[i] - exact.payments[i]) <=
              4 * (*sampled.std_errors)[i] + 1e-9);
    // deterministic coalition values make the telescoped total exact
    CHECK(std::abs(sampled.total() - 0.5) < 1e-12);
}

TEST_CASE("zero payments are reported with absolute half-widths") {
    Project p(2, {});
    // activity 0 on plan: its marginal is zero in every ordering
    DeterministicProblem problem(p, {5, 5}, {5, 7}, ThresholdCost(6.0));
    SamplingPlan plan;
    plan.m = 50;
    plan.m1 = 1;
    plan.force_sampling = true;
    Allocation alloc = shapley_det(problem, plan);
    CHECK(alloc.payments[0] == 0.0);
    std::string table = format_allocation_table(alloc, {"a", "b"});
    CHECK(table.find("(abs)") != std::string::npos);
}

TEST_CASE("null-delay activities pay zero in exact mode") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        RngStream rng(seed, 77);
        int n = 3 + static_cast<int>(rng.next_below(5));
        Project p = tt::random_project(rng, n);
        DurationVector planned(n), actual(n);
        for (int i = 0; i < n; ++i) {
            planned[i] = 1.0 + rng.next_double() * 3.0;
            actual[i] = planned[i] + (i % 2 == 0 ? 0.0 : rng.next_double());
        }
        double base = tt::brute_force_makespan(p, planned);
        DeterministicProblem problem(p, planned, actual, ThresholdCost(base));
        Allocation alloc = shapley_det(problem);
        CAPTURE(seed);
        for (int i = 0; i < n; i += 2) CHECK(alloc.payments[i] == 0.0);
    }
}

TEST_CASE("stochastic rule picks the exact path on discrete instances") {
    StochasticProblem sp = example1_discretized();
    SamplingPlan plan;
    plan.exact_budget = 1e7;
    Allocation alloc = shapley_stoch(sp, plan);
    CHECK(alloc.meta.method == "exact");
    CHECK(std::abs(alloc.payments[0] - 19.0 / 60) < 1e-3);
    CHECK(std::abs(alloc.payments[1] - 41.0 / 60) < 1e-3);
    CHECK(alloc.total() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sampled stochastic rule approximates the two-activity example") {
    StochasticProblem sp = tt::example1_problem();
    SamplingPlan plan;
    plan.m = 10000;
    plan.m1 = 10000;
    plan.seed = 31;
    Allocation alloc = shapley_stoch(sp, plan);
    CHECK(alloc.meta.method == "sampled");
    REQUIRE(alloc.std_errors.has_value());
    CHECK(std::abs(alloc.payments[0] - 19.0 / 60) < 4 * (*alloc.std_errors)[0]);
    CHECK(std::abs(alloc.payments[1] - 41.0 / 60) < 4 * (*alloc.std_errors)[1]);
    // telescoping makes the total exact, not statistical
    CHECK(std::abs(alloc.total() - 1.0) < 1e-9);
}

TEST_CASE("sampled rule agrees with the exact rule on discrete instances") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        tt::RandomProblemOptions opt;
        opt.n = 4 + static_cast<int>(seed % 3);
        opt.discrete_only = true;
        StochasticProblem sp = tt::random_problem(seed + 60, opt);

        Allocation exact = shapley_stoch(sp, SamplingPlan{});
        REQUIRE(exact.meta.method == "exact");

        SamplingPlan plan;
        plan.m = 20000;
        plan.m1 = 50000;
        plan.seed = seed;
        plan.force_sampling = true;
        Allocation sampled = shapley_stoch(sp, plan);
        REQUIRE(sampled.meta.method == "sampled");
        CAPTURE(seed);
        for (int i = 0; i < opt.n; ++i)
            CHECK(std::abs(sampled.payments[i] - exact.payments[i]) <=
                  4 * (*sampled.std_errors)[i] + 1e-9);
    }
}

TEST_CASE("sampled allocations are efficient to numerical precision") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        tt::RandomProblemOptions opt;
        opt.n = 3 + static_cast<int>(seed % 10);
        StochasticProblem sp = tt::random_problem(seed + 80, opt);
        SamplingPlan plan;
        plan.m = 200;
        plan.m1 = 100;
        plan.seed = seed;
        plan.force_sampling = true;
        Allocation alloc = shapley_stoch(sp, plan);
        CAPTURE(seed);
        CHECK(std::abs(alloc.total() - sp.cost_of_actual()) < 1e-9);
    }
}

TEST_CASE("identical plans give bit-identical results for any worker count") {
    StochasticProblem sp = tt::example2_problem();
    SamplingPlan plan;
    plan.m = 4000;
    plan.m1 = 500;
    plan.seed = 99;

    SamplingPlan plan4 = plan;
    plan4.workers = 4;
    Allocation a = shapley_stoch(sp, plan);
    Allocation b = shapley_stoch(sp, plan4);
    CHECK(a.payments == b.payments);  // element-wise bitwise equality
    CHECK(*a.std_errors == *b.std_errors);

    SamplingPlan other = plan;
    other.seed = 100;
    CHECK(shapley_stoch(sp, other).payments != a.payments);
}

TEST_CASE("identically distributed parallel activities get equal payments") {
    Project p(2, {}, {"1", "2"});
    std::vector<DurationDistribution> dists{
        DurationDistribution::uniform(1, 5), DurationDistribution::uniform(1, 5)};
    StochasticProblem sp(p, dists, {4.5, 4.5}, ThresholdCost(4.0));
    SamplingPlan plan;
    plan.m = 20000;
    plan.m1 = 20000;
    Allocation alloc = shapley_stoch(sp, plan);
    double tol = 4 * std::hypot((*alloc.std_errors)[0], (*alloc.std_errors)[1]);
    CHECK(std::abs(alloc.payments[0] - alloc.payments[1]) <= tol + 1e-9);
}

TEST_CASE("relabeling permutes exact payments") {
    tt::RandomProblemOptions opt;
    opt.n = 5;
    opt.discrete_only = true;
    StochasticProblem sp = tt::random_problem(123, opt);
    Allocation base = shapley_stoch(sp, SamplingPlan{});
    REQUIRE(base.meta.method == "exact");

    // relabel i -> sigma[i]
    std::vector<int> sigma{3, 0, 4, 1, 2};
    std::vector<std::pair<ActivityId, ActivityId>> edges;
    for (auto [a, b] : sp.project().immediate_prec())
        edges.emplace_back(sigma[a], sigma[b]);
    std::vector<DurationDistribution> dists(5, DurationDistribution::point(0));
    DurationVector actual(5);
    for (int i = 0; i < 5; ++i) {
        dists[sigma[i]] = sp.planned_dists()[i];
        actual[sigma[i]] = sp.actual()[i];
    }
    StochasticProblem relabeled(Project(5, edges), dists, actual, sp.cost());
    Allocation perm = shapley_stoch(relabeled, SamplingPlan{});
    for (int i = 0; i < 5; ++i)
        CHECK(perm.payments[sigma[i]] ==
              doctest::Approx(base.payments[i]).epsilon(1e-11));
}

TEST_CASE("normal quantile") {
    CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-12);
    CHECK(std::abs(normal_quantile(0.995) - 2.5758293035489004) < 1e-12);
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0));
    CHECK(std::abs(normal_quantile(0.0013498980316300933) - (-3.0)) < 1e-10);
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("relative error in percent") {
    std::vector<double> constant(50, 2.5);
    CHECK(relative_error_pct(constant, 0.05) == 0.0);

    // 1e4 uniform(0,10) draws: z * (s/100) * (100/mean) with s ~ sqrt(100/12)
    RngStream rng(5, 6);
    auto u = DurationDistribution::uniform(0, 10);
    std::vector<double> draws(10000);
    for (double& d : draws) d = u.sample(rng);
    double rel = relative_error_pct(draws, 0.05);
    CHECK(std::abs(rel - 1.1316) < 0.15);

    std::vector<double> mixed{1.0, -1.0, 1.0, -1.0};
    CHECK_THROWS_AS(relative_error_pct(mixed, 0.05), DomainError);
    CHECK_THROWS_AS(relative_error_pct(std::vector<double>{1.0}, 0.05), ValidationError);
    CHECK(relative_error_pct_from_se(0.05, 2.0, 0.05) ==
          doctest::Approx(normal_quantile(0.975) * 0.05 * 100 / 2.0));
}

TEST_CASE("balancedness residual vanishes on exact instances") {
    // all-point instance
    Project p = tt::example2_project();
    std::vector<DurationDistribution> points;
    for (double v : {2.0, 1.0, 1.0, 4.0, 2.0}) points.push_back(DurationDistribution::point(v));
    StochasticProblem sp(p, points, tt::example2_actual(), ThresholdCost(6.5));
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j) CHECK(balancedness_residual(sp, i, j) <= 1e-9);

    // two-activity instance: residual reduces to pure algebra
    StochasticProblem two = example1_discretized(200);
    CHECK(balancedness_residual(two, 0, 1) <= 1e-9);

    CHECK_THROWS_AS(balancedness_residual(tt::example1_problem(), 0, 1), BudgetError);
    CHECK_THROWS_AS(balancedness_residual(two, 0, 0), ValidationError);
}

TEST_CASE("sampling plan validation") {
    SamplingPlan plan;
    plan.m = 0;
    CHECK_THROWS_AS(plan.validate(), ValidationError);
    plan.m = 1;
    plan.alpha = 1.0;
    CHECK_THROWS_AS(plan.validate(), ValidationError);
    plan.alpha = 0.05;
    plan.m1 = 0;
    CHECK_THROWS_AS(plan.validate(), ValidationError);
}
