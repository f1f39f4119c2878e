#include "test_support.hpp"

#include "bessplan/artifacts.hpp"

#include <doctest.h>

#include <sstream>

using namespace bessplan;
using namespace bessplan::io;

TEST_CASE("doubles survive text")
{
    std::mt19937_64 rng(2);
    for (int k = 0; k < 2000; ++k) {
        const double v = testing::uniform(rng, -1e6, 1e6) * std::pow(10.0, testing::uniform_int(rng, -12, 12));
        CHECK(parse_double(format_double(v)) == v);
    }
    for (double v : {0.0, -0.0, 0.1, 1e-300, 1.7976931348623157e308})
        CHECK(parse_double(format_double(v)) == v);
    CHECK(format_double(30.0) == "30");
    CHECK(std::isinf(parse_double(format_double(-std::numeric_limits<double>::infinity()))));
    CHECK(std::isnan(parse_double(format_double(std::nan("")))));
    CHECK_THROWS_AS(parse_double("3.0x"), InputError);
    CHECK_THROWS_AS(parse_double(""), InputError);
}

TEST_CASE("price, congestion and shift factor tables round trip")
{
    const auto f = testing::load_fixture("triangle_day");
    const auto sol = run_dispatch(f.net, f.ptdf, f.loads, BidSet{}, 4, 6);
    const auto lmps = extract_lmps(sol, f.ptdf);

    std::stringstream ss;
    write_lmps(ss, f.net, lmps, 4);
    const auto back = read_lmps(ss);
    CHECK(back.bus_ids == std::vector<int>{1, 2, 3});
    CHECK(back.first_period == 4);
    CHECK(back.lmps == lmps);

    std::stringstream cs;
    const auto score = congestion_score(sol, f.ptdf);
    write_congestion(cs, f.net, score);
    const auto cb = read_congestion(cs);
    REQUIRE(cb.size() == 3);
    for (int b = 0; b < 3; ++b) {
        CHECK(cb[b].first == f.net.buses[b].id);
        CHECK(cb[b].second == score.score(b));
    }

    std::stringstream ps;
    write_ptdf(ps, f.net, f.ptdf);
    const auto pb = read_ptdf(ps);
    CHECK(pb.size() == 9);
    for (const auto& e : pb) {
        int l = 0;
        while (f.net.lines[l].id != e.line_id)
            ++l;
        CHECK(e.factor == f.ptdf(l, f.net.bus_index(e.bus_id)));
    }

    std::istringstream bad("bus_id,period_index,lmp\n1,0,10\n1,2,11\n");
    CHECK_THROWS_AS(read_lmps(bad), InputError);
}

TEST_CASE("schedule and trace round trip")
{
    const auto f = testing::load_fixture("triangle_day");
    const auto catalog = load_catalog(testing::fixture("triangle_day") / "catalog.csv");
    const auto r = run_aus({f.net, f.ptdf, f.loads, 0, 24}, catalog, BessConfig{{100.0}, 1e6});

    std::stringstream ss;
    write_schedule(ss, r.schedule);
    const auto rows = read_schedule(ss);
    REQUIRE(rows.size() == 24);
    for (const auto& row : rows) {
        CHECK(row.battery_id == 1);
        CHECK(row.pc == r.schedule.charge(0, row.t));
        CHECK(row.pd == r.schedule.discharge(0, row.t));
        CHECK(row.e == r.schedule.soc(0, row.t));
        CHECK(row.cashflow == doctest::Approx(r.schedule.cashflow()(0, row.t)));
    }

    std::stringstream ts;
    write_trace(ts, f.net, r);
    const auto doc = read_trace(ts);
    CHECK(doc.report.converged == r.report.converged);
    CHECK(doc.report.iterations == r.report.iterations);
    CHECK(doc.report.returned_iteration == r.report.returned_iteration);
    CHECK(doc.bus_ids == std::vector<int>{1, 2, 3});
    REQUIRE(doc.iterations.size() == r.trace.size());
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
        CHECK(doc.iterations[k].delta == r.trace[k].delta);
        CHECK(doc.iterations[k].iso_cost == r.trace[k].iso_cost);
        CHECK(doc.iterations[k].battery_cost == r.trace[k].battery_cost);
        CHECK(doc.iterations[k].mean_lmp == r.trace[k].mean_lmp);
    }
}

TEST_CASE("search history and summary round trip")
{
    const auto f = testing::load_fixture("five_bus");
    const auto catalog = load_catalog(testing::fixture("five_bus") / "catalog.csv");
    Trial ok;
    ok.index = 0;
    ok.config = {{0.0, 12.5, 0.0, 40.25, 0.0}, 6e5};
    ok.sites = ok.config.sites();
    ok.investment = ok.config.investment(catalog);
    ok.R = -1234.5678;
    ok.s_cong = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
    ok.days = {{0, 10.5, 2, true}, {3, -1.25, 10, false}};
    ok.wall_seconds = 9.0;
    Trial bad = ok;
    bad.index = 1;
    bad.failed = true;
    bad.R = -std::numeric_limits<double>::infinity();
    bad.error = "day 3: iteration 1: infeasible";
    bad.days.clear();

    std::stringstream hs;
    write_history_line(hs, ok, catalog, f.net, "tpe");
    write_history_line(hs, bad, catalog, f.net, "tpe");
    CHECK(hs.str().find("wall") == std::string::npos);
    const auto back = read_history(hs, catalog, 6e5);
    REQUIRE(back.size() == 2);
    CHECK(back[0].config.capacity == ok.config.capacity);
    CHECK(back[0].R == ok.R);
    CHECK(back[0].s_cong == ok.s_cong);
    CHECK(back[0].days.size() == 2);
    CHECK(back[0].days[1].converged == false);
    CHECK(back[1].failed);
    CHECK(std::isinf(back[1].R));
    CHECK(back[1].error == bad.error);

    std::stringstream sm;
    write_summary_header(sm);
    write_summary_line(sm, ok, catalog);
    write_summary_line(sm, bad, catalog);
    const auto rows = read_summary(sm);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sites == std::vector<int>{catalog[1].id, catalog[3].id});
    CHECK(rows[0].capacities == std::vector<double>{12.5, 40.25});
    CHECK(rows[0].R == ok.R);
    CHECK(std::isinf(rows[1].R));

    std::stringstream tm;
    write_timings(tm, {ok});
    CHECK(tm.str() == "trial,wall_seconds\n0,9\n");

    std::istringstream junk("{\"trial\": 0}\n");
    CHECK_THROWS_WITH_AS(read_history(junk, catalog, 1.0), doctest::Contains("line 1"), InputError);
}
