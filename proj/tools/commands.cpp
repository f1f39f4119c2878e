#include "commands.hpp"

#include "bessplan/artifacts.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace bessplan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path q(p);
    return q.is_absolute() || base.empty() ? q : base / q;
}

template <class T>
void read_if(const json& j, const char* key, T& dst)
{
    if (j.contains(key))
        dst = j.at(key).get<T>();
}

}  // namespace

void apply_config_json(RunConfig& cfg, const std::string& json_text, const fs::path& base_dir)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        if (j.contains("case"))
            cfg.case_dir = resolve(base_dir, j.at("case").get<std::string>());
        else if (cfg.case_dir.empty())
            cfg.case_dir = base_dir;
        if (j.contains("loads"))
            cfg.loads = resolve(base_dir, j.at("loads").get<std::string>());
        if (j.contains("catalog"))
            cfg.catalog = resolve(base_dir, j.at("catalog").get<std::string>());
        if (j.contains("output_dir"))
            cfg.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
        read_if(j, "period_hours", cfg.period_hours);
        read_if(j, "first_period", cfg.first_period);
        read_if(j, "periods", cfg.periods);
        read_if(j, "seed", cfg.seed);
        read_if(j, "threads", cfg.threads);
        read_if(j, "budget", cfg.budget);
        read_if(j, "fixed_price", cfg.fixed_price);
        if (j.contains("capacities"))
            for (const auto& [id, mwh] : j.at("capacities").items())
                cfg.capacities[std::stoi(id)] = mwh.get<double>();
        if (j.contains("aus")) {
            const auto& a = j.at("aus");
            read_if(a, "epsilon", cfg.aus.epsilon);
            read_if(a, "max_iter", cfg.aus.max_iter);
            read_if(a, "margin", cfg.margin);
        }
        if (j.contains("variant")) {
            const auto& v = j.at("variant");
            read_if(v, "zero_fixed_cost", cfg.aus.variant.zero_fixed_cost);
            read_if(v, "enforce_complementarity", cfg.aus.variant.enforce_complementarity);
        }
        if (j.contains("tolerances")) {
            const auto& t = j.at("tolerances");
            read_if(t, "feasibility", cfg.aus.tol.feasibility);
            read_if(t, "complementarity", cfg.aus.tol.complementarity);
            read_if(t, "gap", cfg.aus.tol.gap);
            read_if(t, "integrality", cfg.aus.tol.integrality);
        }
        if (j.contains("horizon")) {
            const auto& h = j.at("horizon");
            read_if(h, "day_hours", cfg.horizon.day_hours);
            read_if(h, "window_hours", cfg.horizon.window_hours);
            read_if(h, "years", cfg.horizon.years);
            read_if(h, "days_per_year", cfg.horizon.days_per_year);
            read_if(h, "discount_rate", cfg.horizon.discount_rate);
            read_if(h, "peak_fraction", cfg.horizon.peak_fraction);
        }
        if (j.contains("search")) {
            const auto& s = j.at("search");
            if (s.contains("method"))
                cfg.search.method = parse_method(s.at("method").get<std::string>());
            read_if(s, "trials", cfg.search.trials);
            read_if(s, "max_sites", cfg.max_sites);
            read_if(s, "capacity_levels", cfg.capacity_levels);
            read_if(s, "gamma", cfg.search.tpe.gamma);
            read_if(s, "n_startup", cfg.search.tpe.n_startup);
            read_if(s, "n_ei", cfg.search.tpe.n_ei);
            read_if(s, "prior_weight", cfg.search.tpe.prior_weight);
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg;
    apply_config_json(cfg, ss.str(), path.parent_path());
    return cfg;
}

namespace {

// Flag values; unset ones leave the config untouched.
struct Overrides {
    std::string config, case_dir, loads, catalog, out;
    std::optional<double> period_hours, budget, epsilon, margin, years, discount_rate, peak_fraction;
    std::optional<int> first_period, periods, threads, max_iter, trials, max_sites, capacity_levels, window_hours;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::vector<std::string> capacities;
    bool zero_fixed_cost = false, complementarity = false, fixed_price = false;
};

RunConfig assemble(const Overrides& o)
{
    RunConfig cfg;
    if (!o.config.empty())
        cfg = load_config(o.config);
    if (const char* env = std::getenv("BESSPLAN_OUTPUT_DIR"); env && *env)
        cfg.output_dir = env;
    if (!o.case_dir.empty())
        cfg.case_dir = o.case_dir;
    if (!o.loads.empty())
        cfg.loads = o.loads;
    if (!o.catalog.empty())
        cfg.catalog = o.catalog;
    if (!o.out.empty())
        cfg.output_dir = o.out;
    if (o.period_hours)
        cfg.period_hours = *o.period_hours;
    if (o.budget)
        cfg.budget = *o.budget;
    if (o.epsilon)
        cfg.aus.epsilon = *o.epsilon;
    if (o.margin)
        cfg.margin = *o.margin;
    if (o.years)
        cfg.horizon.years = *o.years;
    if (o.discount_rate)
        cfg.horizon.discount_rate = *o.discount_rate;
    if (o.peak_fraction)
        cfg.horizon.peak_fraction = *o.peak_fraction;
    if (o.first_period)
        cfg.first_period = *o.first_period;
    if (o.periods)
        cfg.periods = *o.periods;
    if (o.threads)
        cfg.threads = *o.threads;
    if (o.max_iter)
        cfg.aus.max_iter = *o.max_iter;
    if (o.trials)
        cfg.search.trials = *o.trials;
    if (o.max_sites)
        cfg.max_sites = *o.max_sites;
    if (o.capacity_levels)
        cfg.capacity_levels = *o.capacity_levels;
    if (o.window_hours)
        cfg.horizon.window_hours = *o.window_hours;
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.method)
        cfg.search.method = parse_method(*o.method);
    for (const auto& c : o.capacities) {
        const auto eq = c.find('=');
        if (eq == std::string::npos)
            throw InputError("--capacity expects ID=MWH, got '" + c + "'");
        try {
            cfg.capacities[std::stoi(c.substr(0, eq))] = std::stod(c.substr(eq + 1));
        } catch (const std::exception&) {
            throw InputError("--capacity expects ID=MWH, got '" + c + "'");
        }
    }
    if (o.zero_fixed_cost)
        cfg.aus.variant.zero_fixed_cost = true;
    if (o.complementarity)
        cfg.aus.variant.enforce_complementarity = true;
    if (o.fixed_price)
        cfg.fixed_price = true;
    if (cfg.case_dir.empty())
        throw InputError("no case directory given (--case or \"case\" in the config)");
    if (cfg.loads.empty())
        cfg.loads = cfg.case_dir / "loads.csv";
    if (cfg.catalog.empty())
        cfg.catalog = cfg.case_dir / "catalog.csv";
    if (cfg.threads <= 0)
        cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    cfg.aus.strategy = std::make_shared<MarginStrategy>(cfg.margin);
    return cfg;
}

struct LoadedCase {
    PowerNetwork net;
    BusLoads loads;
    PtdfMatrix ptdf;
};

LoadedCase load_inputs(const RunConfig& cfg)
{
    LoadedCase c;
    c.net = load_network(cfg.case_dir);
    c.loads = make_bus_loads(c.net, load_series(cfg.loads, c.net), cfg.period_hours);
    c.ptdf = compute_ptdf(c.net);
    return c;
}

std::pair<int, int> window(const RunConfig& cfg, const BusLoads& loads)
{
    const int T = loads.periods();
    int count = cfg.periods > 0 ? cfg.periods : std::min(cfg.horizon.day_hours, T - cfg.first_period);
    if (cfg.first_period < 0 || count <= 0 || cfg.first_period + count > T)
        throw InputError("window of " + std::to_string(count) + " periods from " + std::to_string(cfg.first_period) +
                         " does not fit the load horizon of " + std::to_string(T));
    return {cfg.first_period, count};
}

BessConfig config_from_capacities(const RunConfig& cfg, const std::vector<BessCandidate>& catalog)
{
    BessConfig bc;
    bc.budget = cfg.budget;
    bc.capacity.assign(catalog.size(), 0.0);
    for (const auto& [id, mwh] : cfg.capacities) {
        bool found = false;
        for (std::size_t i = 0; i < catalog.size(); ++i)
            if (catalog[i].id == id) {
                bc.capacity[i] = mwh;
                found = true;
            }
        if (!found)
            throw InputError("capacity given for unknown candidate " + std::to_string(id));
    }
    return bc;
}

std::ofstream open_output(const RunConfig& cfg, const std::string& name)
{
    fs::create_directories(cfg.output_dir);
    std::ofstream f(cfg.output_dir / name, std::ios::binary);
    if (!f)
        throw InputError("cannot write " + (cfg.output_dir / name).string());
    return f;
}

int cmd_ptdf(const RunConfig& cfg, std::ostream& out)
{
    const auto net = load_network(cfg.case_dir);
    const auto ptdf = compute_ptdf(net);
    auto f = open_output(cfg, "ptdf.csv");
    io::write_ptdf(f, net, ptdf);
    out << "wrote " << (cfg.output_dir / "ptdf.csv").string() << '\n';
    return kOk;
}

int cmd_dispatch(const RunConfig& cfg, std::ostream& out)
{
    const auto c = load_inputs(cfg);
    const auto [first, count] = window(cfg, c.loads);
    const auto sol = run_dispatch(c.net, c.ptdf, c.loads, BidSet{}, first, count, cfg.aus.tol);
    const auto lmps = extract_lmps(sol, c.ptdf);
    {
        auto f = open_output(cfg, "lmp.csv");
        io::write_lmps(f, c.net, lmps, first);
    }
    {
        auto f = open_output(cfg, "congestion.csv");
        io::write_congestion(f, c.net, congestion_score(sol, c.ptdf));
    }
    {
        auto f = open_output(cfg, "generation.csv");
        f << "gen_id,period_index,p_mw\n";
        for (std::size_t g = 0; g < c.net.generators.size(); ++g)
            for (int t = 0; t < count; ++t)
                f << c.net.generators[g].id << ',' << first + t << ','
                  << io::format_double(sol.generation(static_cast<Eigen::Index>(g), t)) << '\n';
    }
    out << "total cost " << io::format_double(sol.total_cost) << (sol.degenerate ? " (degenerate basis)" : "")
        << '\n';
    return kOk;
}

int cmd_schedule(const RunConfig& cfg, std::ostream& out)
{
    const auto c = load_inputs(cfg);
    const auto catalog = load_catalog(cfg.catalog);
    const auto [first, count] = window(cfg, c.loads);
    const auto base = run_dispatch(c.net, c.ptdf, c.loads, BidSet{}, first, count, cfg.aus.tol);
    const auto lmps = extract_lmps(base, c.ptdf);
    ScheduleInputs in;
    in.candidates = catalog;
    in.prices = candidate_prices(catalog, c.net, lmps);
    in.period_hours = cfg.period_hours;
    in.budget = cfg.budget;
    in.variant = cfg.aus.variant;
    if (!cfg.capacities.empty()) {
        const auto bc = config_from_capacities(cfg, catalog);
        for (double v : bc.capacity)
            in.fixed_capacity.emplace_back(v);
    }
    const auto sol = solve_schedule(build_schedule(in), cfg.aus.tol, cfg.aus.milp);
    if (!sol.optimal()) {
        out << "schedule " << lp::to_string(sol.status) << '\n';
        return kInfeasible;
    }
    {
        auto f = open_output(cfg, "schedule.csv");
        io::write_schedule(f, sol);
    }
    {
        json j;
        j["objective"] = sol.objective;
        j["investment"] = sol.investment;
        j["energy_cost"] = sol.energy_cost();
        j["node_limit_reached"] = sol.node_limit_reached;
        json units = json::array();
        for (std::size_t i = 0; i < catalog.size(); ++i)
            units.push_back({{"id", catalog[i].id}, {"installed", sol.installed[i] != 0},
                             {"capacity", sol.capacity[i]}});
        j["candidates"] = units;
        auto f = open_output(cfg, "schedule.json");
        f << j.dump(2) << '\n';
    }
    out << "objective " << io::format_double(sol.objective) << '\n';
    return kOk;
}

int cmd_aus(const RunConfig& cfg, std::ostream& out)
{
    const auto c = load_inputs(cfg);
    const auto catalog = load_catalog(cfg.catalog);
    const auto [first, count] = window(cfg, c.loads);
    const auto bc = config_from_capacities(cfg, catalog);
    MarketWindow w{c.net, c.ptdf, c.loads, first, count};
    const auto res = run_aus(w, catalog, bc, cfg.aus);
    {
        auto f = open_output(cfg, "trace.json");
        io::write_trace(f, c.net, res);
    }
    {
        auto f = open_output(cfg, "lmp.csv");
        io::write_lmps(f, c.net, res.lmps, first);
    }
    {
        auto f = open_output(cfg, "schedule.csv");
        io::write_schedule(f, res.schedule);
    }
    out << (res.report.converged ? "converged" : "not converged") << " after " << res.report.iterations
        << " iterations, final delta " << io::format_double(res.report.final_delta)
        << (res.report.oscillation ? " (oscillating)" : "") << '\n';
    return res.report.converged ? kOk : kNotConverged;
}

int cmd_search(const RunConfig& cfg, std::ostream& out)
{
    const auto c = load_inputs(cfg);
    const auto catalog = load_catalog(cfg.catalog);
    SearchSpace space;
    space.catalog = catalog;
    space.max_sites = cfg.max_sites;
    space.budget = cfg.budget;
    space.capacity_levels = cfg.capacity_levels;
    space.validate();

    const auto day_scores = daily_congestion(c.net, c.ptdf, c.loads, cfg.horizon, cfg.aus.tol);
    SimulationContext ctx{c.net, c.ptdf, c.loads, catalog, cfg.horizon, cfg.aus,
                          select_peak_days(day_scores, cfg.horizon.peak_fraction), cfg.threads};
    const auto base = base_congestion(c.net, c.ptdf, c.loads, cfg.horizon, ctx.days, cfg.aus.tol);
    auto weights = site_weights(space, c.net, base);

    SearchOptions opts = cfg.search;
    opts.seed = cfg.seed;
    auto history_file = open_output(cfg, "history.jsonl");
    auto summary_file = open_output(cfg, "summary.csv");
    io::write_summary_header(summary_file);
    const std::string method = to_string(opts.method);

    const auto history = run_search(
        space, opts, [&](const BessConfig& bc) { return evaluate_config(bc, ctx); }, weights,
        [&](const Trial& t) {
            if (!t.failed && t.s_cong.sum() > 0.0) {
                CongestionScore s;
                s.score = t.s_cong;
                weights = site_weights(space, c.net, s);
            }
            return weights;
        },
        [&](const Trial& t) {
            io::write_history_line(history_file, t, catalog, c.net, method);
            io::write_summary_line(summary_file, t, catalog);
            history_file.flush();
            summary_file.flush();
        });
    {
        auto f = open_output(cfg, "timings.csv");
        io::write_timings(f, history.trials);
    }
    if (history.best < 0) {
        out << "all " << history.trials.size() << " trials failed\n";
        return kInfeasible;
    }
    const auto& best = history.trials[history.best];
    out << "best trial " << best.index << " R " << io::format_double(best.R) << '\n';
    if (cfg.fixed_price) {
        const auto cmp = compare_lmp_impact(best.config, ctx);
        json j{{"trial", best.index},
               {"R_with_impact", cmp.R_with_impact},
               {"R_fixed_price", cmp.R_fixed_price}};
        auto f = open_output(cfg, "impact.json");
        f << j.dump(2) << '\n';
        out << "fixed-price R " << io::format_double(cmp.R_fixed_price) << " vs with-impact R "
            << io::format_double(cmp.R_with_impact) << '\n';
    }
    return kOk;
}

void add_common(CLI::App* sub, Overrides& o)
{
    sub->add_option("-c,--config", o.config, "JSON config file");
    sub->add_option("--case", o.case_dir, "case directory with buses/lines/generators CSVs");
    sub->add_option("--loads", o.loads, "loads CSV (default: <case>/loads.csv)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--period-hours", o.period_hours, "length of one period in hours");
    sub->add_option("--first-period", o.first_period, "first load period of the window");
    sub->add_option("--periods", o.periods, "number of periods in the window");
    sub->add_option("--threads", o.threads, "worker threads (default: all cores)");
}

void add_battery(CLI::App* sub, Overrides& o)
{
    sub->add_option("--catalog", o.catalog, "candidate catalog CSV (default: <case>/catalog.csv)");
    sub->add_option("--budget", o.budget, "investment budget in $");
    sub->add_option("--margin", o.margin, "bid margin of the default strategy");
    sub->add_option("--capacity", o.capacities, "installed capacity as ID=MWH (repeatable)");
    sub->add_flag("--zero-fixed-cost", o.zero_fixed_cost, "drop install binaries and fixed costs");
    sub->add_flag("--complementarity", o.complementarity, "forbid simultaneous charge and discharge");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Battery storage siting and market simulation"};
    app.require_subcommand(1);
    Overrides o;

    auto* ptdf = app.add_subcommand("ptdf", "write the shift-factor matrix");
    add_common(ptdf, o);
    auto* dispatch = app.add_subcommand("dispatch", "no-battery dispatch of one window; writes LMPs and scores");
    add_common(dispatch, o);
    auto* schedule = app.add_subcommand("schedule", "self-schedule the catalog against no-battery LMPs");
    add_common(schedule, o);
    add_battery(schedule, o);
    auto* aus = app.add_subcommand("aus", "alternate dispatch and self-scheduling until prices settle");
    add_common(aus, o);
    add_battery(aus, o);
    aus->add_option("--epsilon", o.epsilon, "stop when the LMP change norm drops below this");
    aus->add_option("--max-iter", o.max_iter, "iteration cap");
    auto* search = app.add_subcommand("search", "search battery sites and sizes");
    add_common(search, o);
    add_battery(search, o);
    search->add_option("--epsilon", o.epsilon, "AUS tolerance");
    search->add_option("--max-iter", o.max_iter, "AUS iteration cap");
    search->add_option("--method", o.method, "tpe or random");
    search->add_option("--trials", o.trials, "number of trials");
    search->add_option("--seed", o.seed, "random seed");
    search->add_option("--max-sites", o.max_sites, "most sites per configuration");
    search->add_option("--capacity-levels", o.capacity_levels, "capacity grid size (0: continuous)");
    search->add_option("--window-hours", o.window_hours, "simulated window per day (24 or 48)");
    search->add_option("--years", o.years, "horizon in years");
    search->add_option("--discount-rate", o.discount_rate, "annual discount rate");
    search->add_option("--peak-fraction", o.peak_fraction, "share of most congested days to simulate");
    search->add_flag("--fixed-price", o.fixed_price, "also price the best configuration without market feedback");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        const RunConfig cfg = assemble(o);
        if (ptdf->parsed())
            return cmd_ptdf(cfg, out);
        if (dispatch->parsed())
            return cmd_dispatch(cfg, out);
        if (schedule->parsed())
            return cmd_schedule(cfg, out);
        if (aus->parsed())
            return cmd_aus(cfg, out);
        return cmd_search(cfg, out);
    } catch (const DispatchInfeasible& e) {
        err << "error: " << e.what() << '\n';
        return kInfeasible;
    } catch (const AusError& e) {
        err << "error: " << e.what() << '\n';
        return kInfeasible;
    } catch (const BudgetInfeasible& e) {
        err << "error: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    std::vector<const char*> argv{"bessplan"};
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bessplan::cli
