#include "test_support.hpp"

#include "commands.hpp"

#include "bessplan/artifacts.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sstream>

using namespace bessplan;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome invoke(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fx(const std::string& name)
{
    return testing::fixture(name).string();
}

// Unsets the output directory override for the scope of a test.
struct EnvGuard {
    EnvGuard() { ::unsetenv("BESSPLAN_OUTPUT_DIR"); }
    ~EnvGuard() { ::unsetenv("BESSPLAN_OUTPUT_DIR"); }
};

}  // namespace

TEST_CASE("config files resolve paths against their directory")
{
    cli::RunConfig cfg;
    cli::apply_config_json(cfg,
                           R"({"catalog": "cat.csv", "output_dir": "../o", "budget": 5, "capacities": {"3": 7.5},
                               "aus": {"max_iter": 4, "margin": 0.1}, "search": {"method": "random", "trials": 3}})",
                           "/data/case");
    CHECK(cfg.case_dir == fs::path("/data/case"));
    CHECK(cfg.catalog == fs::path("/data/case/cat.csv"));
    CHECK(cfg.output_dir.lexically_normal() == fs::path("/data/o"));
    CHECK(cfg.budget == 5.0);
    CHECK(cfg.capacities.at(3) == 7.5);
    CHECK(cfg.aus.max_iter == 4);
    CHECK(cfg.margin == 0.1);
    CHECK(cfg.search.method == SearchMethod::Random);
    CHECK(cfg.search.trials == 3);

    cli::apply_config_json(cfg, R"({"case": "/elsewhere"})", "/data/case");
    CHECK(cfg.case_dir == fs::path("/elsewhere"));

    CHECK_THROWS_AS(cli::apply_config_json(cfg, "{not json", "."), InputError);
    CHECK_THROWS_AS(cli::apply_config_json(cfg, R"({"budget": "lots"})", "."), InputError);
    CHECK_THROWS_AS(cli::load_config("/nonexistent/config.json"), InputError);

    const auto loaded = cli::load_config(testing::fixture("five_bus") / "config.json");
    CHECK(loaded.case_dir == testing::fixture("five_bus"));
    CHECK(loaded.seed == 7);
    CHECK(loaded.max_sites == 2);
    CHECK(loaded.horizon.peak_fraction == 0.5);
}

TEST_CASE("dispatch writes prices and scores")
{
    EnvGuard env;
    TempDir d("cli_dispatch");
    const auto r = invoke({"dispatch", "--case", fx("two_bus_congested"), "--out", d.path().string()});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("1800") != std::string::npos);
    std::ifstream in(d.path() / "lmp.csv");
    const auto t = io::read_lmps(in);
    CHECK(t.lmps(0, 0) == 10.0);
    CHECK(t.lmps(1, 0) == 30.0);
    CHECK(fs::exists(d.path() / "congestion.csv"));
    CHECK(fs::exists(d.path() / "generation.csv"));

    CHECK(invoke({"ptdf", "--case", fx("triangle_day"), "--out", d.path().string()}).code == cli::kOk);
    CHECK(fs::exists(d.path() / "ptdf.csv"));
}

TEST_CASE("output directory precedence")
{
    EnvGuard env;
    TempDir d("cli_env");
    const auto from_env = d.path() / "env";
    const auto from_flag = d.path() / "flag";
    ::setenv("BESSPLAN_OUTPUT_DIR", from_env.c_str(), 1);
    REQUIRE(invoke({"dispatch", "--case", fx("two_bus_congested")}).code == cli::kOk);
    CHECK(fs::exists(from_env / "lmp.csv"));
    REQUIRE(invoke({"dispatch", "--case", fx("two_bus_congested"), "--out", from_flag.string()}).code == cli::kOk);
    CHECK(fs::exists(from_flag / "lmp.csv"));

    // The environment also beats the config file.
    const auto cfg = d.write("c.json", "{\"case\": \"" + fx("two_bus_congested") + "\", \"output_dir\": \"" +
                                           (d.path() / "cfg").string() + "\"}");
    REQUIRE(invoke({"dispatch", "--config", cfg.string()}).code == cli::kOk);
    CHECK_FALSE(fs::exists(d.path() / "cfg"));
    ::unsetenv("BESSPLAN_OUTPUT_DIR");
    REQUIRE(invoke({"dispatch", "--config", cfg.string()}).code == cli::kOk);
    CHECK(fs::exists(d.path() / "cfg" / "lmp.csv"));
}

TEST_CASE("flags override the config file")
{
    EnvGuard env;
    TempDir d("cli_flags");
    const auto r = invoke({"aus", "--config", (testing::fixture("triangle_day") / "config.json").string(), "--out",
                        d.path().string(), "--max-iter", "1"});
    // One iteration cannot reach the settled prices the config allows 10 for.
    CHECK(r.code == cli::kNotConverged);
    CHECK(fs::exists(d.path() / "trace.json"));
    std::ifstream in(d.path() / "trace.json");
    CHECK(io::read_trace(in).report.iterations == 1);
}

TEST_CASE("exit codes")
{
    EnvGuard env;
    TempDir d("cli_codes");
    const auto out = d.path().string();
    SUBCASE("converged AUS run")
    {
        const auto r = invoke({"aus", "--config", (testing::fixture("triangle_day") / "config.json").string(), "--out", out});
        CHECK(r.code == cli::kOk);
        CHECK(fs::exists(d.path() / "schedule.csv"));
        CHECK(fs::exists(d.path() / "lmp.csv"));
    }
    SUBCASE("usage errors")
    {
        CHECK(invoke({}).code == cli::kInputError);
        CHECK(invoke({"frobnicate"}).code == cli::kInputError);
        CHECK(invoke({"dispatch", "--periods", "x"}).code == cli::kInputError);
        CHECK(invoke({"--help"}).code == cli::kOk);
    }
    SUBCASE("malformed case")
    {
        const auto r = invoke({"dispatch", "--case", fx("bad_unknown_bus"), "--out", out});
        CHECK(r.code == cli::kInputError);
        CHECK(r.err.find("9") != std::string::npos);
    }
    SUBCASE("infeasible dispatch")
    {
        TempDir c("cli_case");
        c.write("buses.csv", "bus_id,name\n1,a\n2,b\n");
        c.write("lines.csv", "line_id,from_bus,to_bus,reactance,flow_limit\n1,1,2,0.1,10\n");
        c.write("generators.csv", "gen_id,bus_id,marginal_cost,p_min,p_max\n1,1,10,0,100\n");
        c.write("loads.csv", "bus_id,period_index,load_mw\n2,0,50\n");
        const auto r = invoke({"dispatch", "--case", c.path().string(), "--out", out});
        CHECK(r.code == cli::kInfeasible);
    }
    SUBCASE("over-budget installation")
    {
        const auto r = invoke({"aus", "--case", fx("triangle_day"), "--out", out, "--capacity", "1=100", "--budget", "1000"});
        CHECK(r.code == cli::kInfeasible);
    }
    SUBCASE("search where every trial fails")
    {
        const auto r = invoke({"search", "--config", (testing::fixture("five_bus") / "config.json").string(), "--out", out,
                            "--budget", "10", "--trials", "2"});
        CHECK(r.code == cli::kInfeasible);
        CHECK(fs::exists(d.path() / "history.jsonl"));
    }
}

TEST_CASE("schedule command")
{
    EnvGuard env;
    TempDir d("cli_schedule");
    const auto r = invoke({"schedule", "--config", (testing::fixture("two_bus_day") / "config.json").string(), "--out",
                        d.path().string()});
    REQUIRE(r.code == cli::kOk);
    std::ifstream in(d.path() / "schedule.csv");
    CHECK_FALSE(io::read_schedule(in).empty());
    CHECK(fs::exists(d.path() / "schedule.json"));
}
