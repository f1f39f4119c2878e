#include "test_support.hpp"

#include <doctest.h>

using namespace bessplan;
using testing::TempDir;

namespace {

PowerNetwork triangle()
{
    PowerNetwork net;
    for (int b = 1; b <= 3; ++b)
        net.add_bus(b);
    net.add_line(1, 1, 2, 0.1, 100);
    net.add_line(2, 2, 3, 0.1, 100);
    net.add_line(3, 1, 3, 0.1, 100);
    net.add_generator(1, 1, 10, 0, 100);
    net.set_default_slack();
    return net;
}

const char* kBuses = "bus_id,name\n1,a\n2,b\n";
const char* kLines = "line_id,from_bus,to_bus,reactance,flow_limit\n1,1,2,0.1,100\n";
const char* kGens = "gen_id,bus_id,marginal_cost,p_min,p_max\n1,1,10,0,200\n";

std::string message_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("two-bus shift factors")
{
    const auto f = testing::load_fixture("two_bus_congested");
    REQUIRE(f.ptdf.num_lines() == 1);
    CHECK(f.net.slack == 0);
    CHECK(f.ptdf(0, 0) == 0.0);
    // Injecting at bus 2 and withdrawing at bus 1 pushes flow against the 1->2 direction.
    CHECK(f.ptdf(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("triangle shift factors with equal reactances")
{
    const auto net = triangle();
    const auto ptdf = compute_ptdf(net);
    // 1 MW in at bus 2, out at bus 1: 2/3 over the direct line, 1/3 around.
    CHECK(ptdf(0, 1) == doctest::Approx(-2.0 / 3.0));
    CHECK(ptdf(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(ptdf(2, 1) == doctest::Approx(-1.0 / 3.0));
    CHECK(ptdf.factors.col(0).norm() == 0.0);
}

TEST_CASE("property: shift factors conserve power at every bus")
{
    std::mt19937_64 rng(5);
    for (int k = 0; k < 30; ++k) {
        const auto net = testing::random_network(rng, testing::uniform_int(rng, 2, 10), 2);
        const auto ptdf = compute_ptdf(net);
        Eigen::VectorXd inj = Eigen::VectorXd::Zero(net.num_buses());
        for (int b = 0; b < net.num_buses(); ++b)
            inj(b) = testing::uniform(rng, -50, 50);
        inj(net.slack) -= inj.sum();
        const Eigen::VectorXd flows = line_flows(ptdf, inj);
        Eigen::VectorXd net_out = Eigen::VectorXd::Zero(net.num_buses());
        for (int l = 0; l < net.num_lines(); ++l) {
            net_out(net.lines[l].from) += flows(l);
            net_out(net.lines[l].to) -= flows(l);
        }
        CHECK((net_out - inj).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("property: moving the slack shifts each row by a constant")
{
    std::mt19937_64 rng(6);
    for (int k = 0; k < 20; ++k) {
        auto net = testing::random_network(rng, testing::uniform_int(rng, 3, 9), 2);
        const auto a = compute_ptdf(net);
        const int s = testing::uniform_int(rng, 0, net.num_buses() - 1);
        net.set_slack_bus(net.buses[s].id);
        const auto b = compute_ptdf(net);
        for (int l = 0; l < net.num_lines(); ++l)
            for (int j = 0; j < net.num_buses(); ++j)
                CHECK(b(l, j) == doctest::Approx(a(l, j) - a(l, s)).epsilon(1e-9));
    }
}

TEST_CASE("network validation")
{
    SUBCASE("duplicate bus")
    {
        PowerNetwork net;
        net.add_bus(1);
        CHECK_THROWS_AS(net.add_bus(1), InputError);
    }
    SUBCASE("line to an unknown bus")
    {
        PowerNetwork net;
        net.add_bus(1);
        CHECK_THROWS_AS(net.add_line(1, 1, 7, 0.1, 10), InputError);
    }
    SUBCASE("nonpositive reactance")
    {
        auto net = triangle();
        net.lines[0].reactance = 0.0;
        CHECK_THROWS_WITH_AS(net.validate(), doctest::Contains("reactance"), InputError);
    }
    SUBCASE("disconnected buses are named")
    {
        auto net = triangle();
        net.add_bus(8);
        net.add_bus(9);
        net.add_line(4, 8, 9, 0.1, 10);
        const auto msg = message_of([&] { compute_ptdf(net); });
        CHECK(msg.find("8, 9") != std::string::npos);
        CHECK(connected_components(net).size() == 2);
    }
}

TEST_CASE("load series validation")
{
    const auto net = triangle();
    CHECK(validate_series(net, {{1, {1, 2}}, {2, {3, 4}}}) == 2);
    CHECK_THROWS_WITH_AS(validate_series(net, {{5, {1}}}), doctest::Contains("unknown bus 5"), InputError);
    CHECK_THROWS_WITH_AS(validate_series(net, {{1, {-1}}}), doctest::Contains("negative"), InputError);
    const auto msg = message_of([&] { validate_series(net, {{1, {1, 2}}, {2, {1}}, {3, {1}}}); });
    CHECK(msg.find("mismatched horizons") != std::string::npos);
    CHECK(msg.find("{2, 3}") != std::string::npos);

    const auto loads = make_bus_loads(net, {{2, {5, 6}}}, 0.5);
    CHECK(loads.periods() == 2);
    CHECK(loads.mw(1, 1) == 6.0);
    CHECK(loads.mw(0, 0) == 0.0);
    CHECK(loads.period_hours == 0.5);
}

TEST_CASE("case files")
{
    SUBCASE("fixture loads")
    {
        const auto c = load_case(testing::fixture("triangle_day"));
        CHECK(c.network.num_buses() == 3);
        CHECK(c.network.generators.size() == 3);
        REQUIRE(c.loads.size() == 1);
        CHECK(c.loads[0].values.size() == 24);
    }
    SUBCASE("explicit slack column")
    {
        TempDir d("slack");
        d.write("buses.csv", "bus_id,name,slack\n1,a,0\n2,b,1\n");
        d.write("lines.csv", kLines);
        d.write("generators.csv", kGens);
        CHECK(load_network(d.path()).slack == 1);
    }
    SUBCASE("errors carry file and line")
    {
        TempDir d("bad");
        d.write("buses.csv", kBuses);
        d.write("lines.csv", "line_id,from_bus,to_bus,reactance,flow_limit\n1,1,3,0.1,100\n");
        d.write("generators.csv", kGens);
        const auto msg = message_of([&] { load_network(d.path()); });
        CHECK(msg.find("lines.csv:2") != std::string::npos);
        CHECK(msg.find("undefined bus 3") != std::string::npos);
    }
    SUBCASE("missing column")
    {
        TempDir d("col");
        d.write("buses.csv", kBuses);
        d.write("lines.csv", "line_id,from_bus,to_bus,flow_limit\n1,1,2,100\n");
        d.write("generators.csv", kGens);
        CHECK_THROWS_WITH_AS(load_network(d.path()), doctest::Contains("reactance"), InputError);
    }
    SUBCASE("load gaps are reported")
    {
        TempDir d("gap");
        d.write("buses.csv", kBuses);
        d.write("lines.csv", kLines);
        d.write("generators.csv", kGens);
        const auto loads = d.write("loads.csv", "bus_id,period_index,load_mw\n2,0,10\n2,2,10\n");
        const auto net = load_network(d.path());
        CHECK_THROWS_WITH_AS(load_series(loads, net), doctest::Contains("missing period 1"), InputError);
    }
    SUBCASE("unknown bus in the loads")
    {
        const auto net = load_network(testing::fixture("bad_unknown_bus"));
        CHECK_THROWS_WITH_AS(load_series(testing::fixture("bad_unknown_bus") / "loads.csv", net),
                             doctest::Contains("undefined bus 9"), InputError);
    }
}
