#include "test_support.hpp"

#include <doctest.h>

using namespace bessplan;
using testing::TempDir;

namespace {

BessCandidate unit(double fixed, double per_mwh, double eta = 1.0)
{
    BessCandidate c;
    c.id = 1;
    c.bus_id = 2;
    c.fixed_cost = fixed;
    c.unit_cost = per_mwh;
    c.charge_rate = 0.5;
    c.discharge_rate = 0.5;
    c.soc_min = 0.0;
    c.soc_max = 1.0;
    c.eta_charge = eta;
    c.eta_discharge = eta;
    return c;
}

ScheduleInputs one_unit(const BessCandidate& c, std::vector<double> prices, double budget)
{
    ScheduleInputs in;
    in.candidates = {c};
    in.prices = Eigen::Map<Eigen::RowVectorXd>(prices.data(), static_cast<Eigen::Index>(prices.size()));
    in.budget = budget;
    return in;
}

}  // namespace

TEST_CASE("fixed-size unit buys low and sells high")
{
    auto in = one_unit(unit(0.0, 1.0), {10, 30}, 100);
    in.fixed_capacity = {10.0};
    const auto sol = solve_schedule(build_schedule(in));
    REQUIRE(sol.optimal());
    CHECK(sol.charge(0, 0) == doctest::Approx(5.0));
    CHECK(sol.discharge(0, 1) == doctest::Approx(5.0));
    CHECK(sol.energy_cost() == doctest::Approx(-100.0));
    CHECK(sol.investment == doctest::Approx(10.0));
    CHECK(sol.objective == doctest::Approx(-90.0));
    CHECK(sol.cashflow()(0, 1) == doctest::Approx(150.0));
    CHECK(sol.soc(0, 1) == doctest::Approx(5.0));
    CHECK(sol.soc(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("round-trip losses shrink the sale")
{
    auto in = one_unit(unit(0.0, 1.0, 0.9), {10, 30}, 100);
    in.fixed_capacity = {10.0};
    const auto sol = solve_schedule(build_schedule(in));
    REQUIRE(sol.optimal());
    CHECK(sol.soc(0, 1) == doctest::Approx(4.5));
    CHECK(sol.discharge(0, 1) == doctest::Approx(4.05));
    CHECK(sol.energy_cost() == doctest::Approx(50.0 - 30.0 * 4.05));
}

TEST_CASE("sizing against the budget")
{
    SUBCASE("no fixed cost: the cap is budget over unit cost")
    {
        const auto sol = solve_schedule(build_schedule(one_unit(unit(0.0, 1.0), {10, 30}, 100)));
        REQUIRE(sol.optimal());
        CHECK(sol.capacity[0] == doctest::Approx(100.0));
        CHECK(sol.objective == doctest::Approx(100.0 - 0.5 * 100.0 * 20.0));
    }
    SUBCASE("fixed cost eats into the budget")
    {
        const auto in = one_unit(unit(50.0, 1.0), {10, 30}, 100);
        const auto model = build_schedule(in);
        CHECK(model.big_m[0] == doctest::Approx(50.0));
        const auto sol = solve_schedule(model);
        REQUIRE(sol.optimal());
        CHECK(sol.installed[0] == 1);
        CHECK(sol.capacity[0] == doctest::Approx(50.0));
        CHECK(sol.objective == doctest::Approx(100.0 - 500.0));
        CHECK(sol.relaxation_objective <= sol.objective + 1e-9);

        auto zero = in;
        zero.variant.zero_fixed_cost = true;
        const auto zm = build_schedule(zero);
        CHECK(zm.milp.binary_vars.empty());
        CHECK(solve_schedule(zm).objective == doctest::Approx(-900.0));
    }
    SUBCASE("flat prices leave the site empty")
    {
        const auto sol = solve_schedule(build_schedule(one_unit(unit(5.0, 1.0), {20, 20, 20}, 100)));
        REQUIRE(sol.optimal());
        CHECK(sol.installed[0] == 0);
        CHECK(sol.capacity[0] == doctest::Approx(0.0));
        CHECK(sol.objective == doctest::Approx(0.0));
    }
}

TEST_CASE("input errors")
{
    auto in = one_unit(unit(0.0, 1.0), {10, 30}, 100);
    SUBCASE("forced installation over budget")
    {
        in.fixed_capacity = {200.0};
        CHECK_THROWS_AS(build_schedule(in), BudgetInfeasible);
    }
    SUBCASE("free size needs a unit cost")
    {
        in.candidates[0].unit_cost = 0.0;
        CHECK_THROWS_AS(build_schedule(in), InputError);
        in.fixed_capacity = {10.0};
        CHECK_NOTHROW(build_schedule(in));
    }
    SUBCASE("price rows must match the candidates")
    {
        in.prices = Eigen::MatrixXd::Zero(2, 2);
        CHECK_THROWS_AS(build_schedule(in), InputError);
    }
    SUBCASE("candidate ranges")
    {
        in.candidates[0].soc_min = 0.9;
        in.candidates[0].soc_max = 0.5;
        CHECK_THROWS_WITH_AS(build_schedule(in), doctest::Contains("SOC"), InputError);
    }
    SUBCASE("configuration budget check")
    {
        BessConfig cfg{{150.0}, 100.0};
        CHECK_THROWS_AS(cfg.validate(in.candidates), BudgetInfeasible);
        cfg.capacity = {-1.0};
        CHECK_THROWS_AS(cfg.validate(in.candidates), InputError);
        cfg.capacity = {50.0};
        CHECK_NOTHROW(cfg.validate(in.candidates));
        CHECK(cfg.investment(in.candidates) == doctest::Approx(50.0));
        CHECK(cfg.sites() == std::vector<int>{0});
    }
}

TEST_CASE("complementarity variant under negative prices")
{
    auto c = unit(0.0, 1.0, 0.8);
    c.initial_soc = 0.5;
    auto in = one_unit(c, {-10, -10, 40}, 100);
    in.fixed_capacity = {20.0};
    const auto free = solve_schedule(build_schedule(in));
    in.variant.enforce_complementarity = true;
    const auto strict = solve_schedule(build_schedule(in));
    REQUIRE(free.optimal());
    REQUIRE(strict.optimal());
    // Burning energy through losses pays when the price is negative.
    CHECK(complementarity_violation(free) > 1.0);
    CHECK(complementarity_violation(strict) <= 1e-6);
    CHECK(strict.objective >= free.objective - 1e-9);
}

TEST_CASE("bids from a schedule")
{
    auto in = one_unit(unit(0.0, 1.0), {10, 30}, 100);
    in.fixed_capacity = {10.0};
    const auto sol = solve_schedule(build_schedule(in));
    const auto bids = make_bids(sol, in.prices, 0.05);
    REQUIRE(bids.bids.size() == 1);
    const auto& b = bids.bids[0];
    CHECK(b.battery_id == 1);
    CHECK(b.bus_id == 2);
    CHECK(b.charge_price[0] == doctest::Approx(-10.5));
    CHECK(b.discharge_price[1] == doctest::Approx(28.5));
    CHECK(b.charge_max[0] == doctest::Approx(5.0));
    CHECK(b.discharge_max[0] == doctest::Approx(0.0));
    CHECK(b.discharge_max[1] == doctest::Approx(5.0));
    CHECK_NOTHROW(bids.validate(2));
    CHECK_THROWS_AS(MarginStrategy(-0.1), InputError);

    // Negative prices clip to zero on both sides.
    Eigen::MatrixXd neg(1, 2);
    neg << -5, 30;
    const auto clipped = make_bids(sol, neg, 0.05);
    CHECK(clipped.bids[0].charge_price[0] == 0.0);
    CHECK_NOTHROW(clipped.validate(2));
}

TEST_CASE("SOC replay")
{
    auto c = unit(0.0, 1.0, 0.9);
    c.soc_min = 0.1;
    c.soc_max = 0.9;
    c.initial_soc = 0.5;
    Eigen::VectorXd pc(3), pd(3);
    pc << 2, 0, 0;
    pd << 0, 0, 1.8;
    auto r = replay_soc(c, 10.0, pc, pd, 1.0);
    CHECK(r.soc[0] == doctest::Approx(5.0));
    CHECK(r.soc[1] == doctest::Approx(6.8));
    CHECK(r.soc[3] == doctest::Approx(4.8));
    CHECK(r.within_bounds);
    CHECK_FALSE(r.terminal_ok);
    pd(2) = 0.0;
    pc(0) = 5.0;  // overfills past 9 MWh
    r = replay_soc(c, 10.0, pc, pd, 1.0);
    CHECK_FALSE(r.within_bounds);
}

TEST_CASE("catalog files")
{
    const auto cat = load_catalog(testing::fixture("five_bus") / "catalog.csv");
    REQUIRE(cat.size() == 5);
    CHECK(cat[2].id == 3);
    CHECK(cat[2].eta_charge == doctest::Approx(0.92));
    CHECK(cat[0].initial_fraction() == doctest::Approx(0.5));

    TempDir d("catalog");
    const auto no_init = d.write("a.csv", "id,bus_id,F,G,kc,kd,Sl,Su,etac,etad\n4,1,10,2,0.5,0.5,0.2,0.8,1,1\n");
    CHECK(load_catalog(no_init)[0].initial_fraction() == doctest::Approx(0.2));
    const auto bad = d.write("b.csv", "id,bus_id,F,G,kc,kd,Sl,Su,etac,etad\n4,1,10,2,0.5,0.5,0.2,0.8,1.5,1\n");
    CHECK_THROWS_WITH_AS(load_catalog(bad), doctest::Contains("b.csv:2"), InputError);
    const auto empty = d.write("c.csv", "id,bus_id,F,G,kc,kd,Sl,Su,etac,etad\n");
    CHECK_THROWS_AS(load_catalog(empty), InputError);
}

TEST_CASE("property: random schedules are physically consistent")
{
    std::mt19937_64 rng(123);
    for (int k = 0; k < 25; ++k) {
        const int n = testing::uniform_int(rng, 1, 4), T = testing::uniform_int(rng, 2, 8);
        auto in = testing::random_schedule(rng, n, T);
        in.variant.enforce_complementarity = k % 3 == 0;
        const auto sol = solve_schedule(build_schedule(in));
        REQUIRE(sol.optimal());
        INFO("instance " << k);
        CHECK(sol.investment <= in.budget + 1e-6);
        CHECK(sol.objective == doctest::Approx(sol.investment + sol.energy_cost()));
        for (int i = 0; i < n; ++i) {
            const auto& c = in.candidates[i];
            if (!sol.installed[i]) {
                CHECK(sol.capacity[i] == doctest::Approx(0.0));
                CHECK(sol.charge.row(i).cwiseAbs().maxCoeff() <= 1e-7);
                continue;
            }
            const auto r = replay_soc(c, sol.capacity[i], sol.charge.row(i).transpose(),
                                      sol.discharge.row(i).transpose(), in.period_hours);
            CHECK(r.feasible());
            for (int t = 0; t <= T; ++t)
                CHECK(r.soc[t] == doctest::Approx(sol.soc(i, t)).epsilon(1e-7));
            for (int t = 0; t < T; ++t) {
                CHECK(sol.charge(i, t) <= c.charge_rate * sol.capacity[i] + 1e-7);
                CHECK(sol.discharge(i, t) <= c.discharge_rate * sol.capacity[i] + 1e-7);
            }
        }
        if (in.variant.enforce_complementarity)
            CHECK(complementarity_violation(sol) <= 1e-6);
    }
}
