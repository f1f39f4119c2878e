#include "test_support.hpp"

#include "bessplan/market.hpp"

#include <doctest.h>

using namespace bessplan;

namespace {

struct Day {
    testing::Loaded f = testing::load_fixture("triangle_day");
    std::vector<BessCandidate> catalog = load_catalog(testing::fixture("triangle_day") / "catalog.csv");
    MarketWindow window() const { return {f.net, f.ptdf, f.loads, 0, 24}; }
};

}  // namespace

TEST_CASE("price delta is the Frobenius norm of the change")
{
    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 1, 2, 3, 4;
    b << 1, 2, 3, 7;
    CHECK(price_delta(a, b) == doctest::Approx(3.0));
    CHECK(price_delta(a, a) == 0.0);
    CHECK_THROWS_AS(price_delta(a, Eigen::MatrixXd::Zero(1, 2)), InputError);
}

TEST_CASE("pareto check flags joint strict decreases")
{
    std::vector<AusIteration> t(3);
    t[0].iso_cost = 100;
    t[0].battery_cost = 10;
    t[1].iso_cost = 90;
    t[1].battery_cost = 5;
    t[2].iso_cost = 80;
    t[2].battery_cost = 5;
    CHECK(pareto_check(t) == std::vector<bool>{true, false});
    CHECK(pareto_check({}).empty());
}

TEST_CASE("triangle day settles after one battery response")
{
    Day d;
    const auto w = d.window();
    const BessConfig cfg{{100.0}, 1e6};
    const auto r = run_aus(w, d.catalog, cfg);
    REQUIRE(r.report.converged);
    CHECK(r.report.iterations == 2);
    CHECK(r.trace[0].delta > 1.0);
    CHECK(r.trace[1].delta < 1e-3);
    CHECK(r.report.returned_iteration == 2);
    CHECK(r.sites == std::vector<int>{0});

    // Line 1-2 binds at the 150 MW peak. With equal reactances bus 1 supplies
    // 240 - 150 = 90 MW and bus 3 the other 60, past the 50 MW unit, so bus 2
    // prices at 2 * 20.5 - 10. The 10 MW discharge pulls bus 3 back to 40 MW.
    for (int t = 16; t < 20; ++t) {
        CHECK(r.base_lmps(0, t) == doctest::Approx(10.0));
        CHECK(r.base_lmps(1, t) == doctest::Approx(31.0));
        CHECK(r.lmps(1, t) == doctest::Approx(30.0));
        CHECK(r.dispatch.discharge(0, t) == doctest::Approx(10.0));
    }
    CHECK(r.dispatch.discharge.maxCoeff() <= 10.0 + 1e-7);
    CHECK(clearing_rule_violations(r.dispatch, r.bids, d.f.net, r.lmps).empty());
    CHECK(pareto_check(r.trace).size() == 1);

    const auto grid = bid_deviation_grid(w, d.catalog, cfg, r);
    CHECK(grid.size() == 21);
    for (const auto& p : grid)
        CHECK_FALSE(p.improves);
}

TEST_CASE("an empty fleet converges at once")
{
    Day d;
    const auto r = run_aus(d.window(), d.catalog, BessConfig{{0.0}, 1e6});
    CHECK(r.report.converged);
    CHECK(r.report.iterations == 1);
    CHECK(r.report.final_delta == 0.0);
    CHECK(r.lmps == r.base_lmps);
    CHECK(installed_fleet(d.catalog, BessConfig{{0.0}, 1e6}).units.empty());
}

TEST_CASE("AUS failures")
{
    Day d;
    SUBCASE("over-budget configuration")
    {
        CHECK_THROWS_AS(run_aus(d.window(), d.catalog, BessConfig{{100.0}, 1000.0}), BudgetInfeasible);
    }
    SUBCASE("bad parameters")
    {
        AusParams p;
        p.max_iter = 0;
        CHECK_THROWS_AS(run_aus(d.window(), d.catalog, BessConfig{{100.0}, 1e6}, p), InputError);
    }
    SUBCASE("infeasible base dispatch reports iteration 0")
    {
        auto loads = d.f.loads;
        loads.mw(1, 3) = 5000.0;
        const MarketWindow w{d.f.net, d.f.ptdf, loads, 0, 24};
        try {
            run_aus(w, d.catalog, BessConfig{{100.0}, 1e6});
            FAIL("expected AusError");
        } catch (const AusError& e) {
            CHECK(e.iteration() == 0);
        }
    }
    SUBCASE("iteration cap without convergence")
    {
        AusParams p;
        p.max_iter = 1;
        const auto r = run_aus(d.window(), d.catalog, BessConfig{{100.0}, 1e6}, p);
        CHECK_FALSE(r.report.converged);
        CHECK(r.report.iterations == 1);
    }
}

TEST_CASE("clearing rule checks catch an offer cleared above the price")
{
    const auto f = testing::load_fixture("two_bus_congested");
    auto b = BatteryBid::empty(1, 2, 1);
    b.discharge_price[0] = 5.0;
    b.discharge_max[0] = 10.0;
    const BidSet bids{{b}};
    const auto sol = run_dispatch(f.net, f.ptdf, f.loads, bids, 0, 1);
    auto lmps = extract_lmps(sol, f.ptdf);
    CHECK(clearing_rule_violations(sol, bids, f.net, lmps).empty());
    lmps(1, 0) = 1.0;
    const auto v = clearing_rule_violations(sol, bids, f.net, lmps);
    REQUIRE(v.size() == 1);
    CHECK(v[0].battery_id == 1);
    CHECK(v[0].period == 0);
}

TEST_CASE("battery cost prices cleared energy at the bus")
{
    DispatchSolution sol;
    sol.battery_bus = {1};
    sol.charge = Eigen::MatrixXd::Zero(1, 2);
    sol.discharge = Eigen::MatrixXd::Zero(1, 2);
    sol.charge(0, 0) = 4.0;
    sol.discharge(0, 1) = 3.0;
    sol.period_hours = 0.5;
    Eigen::MatrixXd lmps(2, 2);
    lmps << 0, 0, 10, 40;
    CHECK(battery_cost(sol, lmps) == doctest::Approx(0.5 * (40.0 - 120.0)));
}
