#include "bessplan/planner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace bessplan {

void SearchSpace::validate() const
{
    if (catalog.empty())
        throw InputError("search space has an empty catalog");
    if (max_sites < 1 || max_sites > static_cast<int>(catalog.size()))
        throw InputError("max_sites must lie in [1, catalog size]");
    if (!(budget >= 0.0) || !std::isfinite(budget))
        throw InputError("budget must be a nonnegative number");
    if (capacity_levels < 0)
        throw InputError("capacity_levels must be nonnegative");
    for (const auto& c : catalog) {
        c.validate();
        if (!(c.unit_cost > 0.0))
            throw InputError("candidate " + std::to_string(c.id) + " needs a positive unit cost for search");
    }
}

std::vector<double> site_weights(const SearchSpace& space, const PowerNetwork& net, const CongestionScore& score)
{
    std::vector<double> w;
    for (const auto& c : space.catalog)
        w.push_back(score.score(net.bus_index(c.bus_id)));
    return w;
}

void HorizonSpec::validate() const
{
    if (day_hours < 1)
        throw InputError("day_hours must be positive");
    if (window_hours < day_hours)
        throw InputError("window_hours must cover at least one day");
    if (!(years > 0.0) || days_per_year < 1)
        throw InputError("horizon length must be positive");
    if (!(discount_rate >= 0.0))
        throw InputError("discount rate must be nonnegative");
    if (!(peak_fraction > 0.0 && peak_fraction <= 1.0))
        throw InputError("peak fraction must lie in (0, 1]");
}

void SearchHistory::append(Trial t)
{
    trials.push_back(std::move(t));
    best = best_index(trials);
}

bool SearchHistory::contains(const BessConfig& config) const
{
    return std::any_of(trials.begin(), trials.end(),
                       [&](const Trial& t) { return t.config.capacity == config.capacity; });
}

int SearchHistory::best_index(const std::vector<Trial>& trials)
{
    int best = -1;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (trials[i].failed)
            continue;
        if (best < 0 || trials[i].R > trials[best].R)
            best = static_cast<int>(i);
    }
    return best;
}

double npv(const std::vector<double>& daily_cashflows, double annual_rate, int days_per_year)
{
    if (!(annual_rate >= 0.0))
        throw InputError("discount rate must be nonnegative");
    if (days_per_year < 1)
        throw InputError("days per year must be positive");
    double total = 0.0;
    for (std::size_t d = 0; d < daily_cashflows.size(); ++d)
        total += daily_cashflows[d] / std::pow(1.0 + annual_rate, static_cast<double>(d) / days_per_year);
    return total;
}

std::vector<int> select_peak_days(const std::vector<double>& day_scores, double fraction)
{
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw InputError("peak fraction must lie in (0, 1]");
    const int D = static_cast<int>(day_scores.size());
    std::vector<int> order(D);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return day_scores[a] > day_scores[b]; });
    // Guard against ceil(0.25 * 8) landing on 2.0000000000000004.
    const int keep = std::min(D, static_cast<int>(std::ceil(fraction * D - 1e-9)));
    std::vector<int> out(order.begin(), order.begin() + keep);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

int count_days(const BusLoads& loads, const HorizonSpec& h)
{
    h.validate();
    const int T = loads.periods();
    if (T % h.day_hours != 0)
        throw InputError("load horizon of " + std::to_string(T) + " periods is not a whole number of " +
                         std::to_string(h.day_hours) + "-period days");
    return T / h.day_hours;
}

int window_length(const BusLoads& loads, const HorizonSpec& h, int day)
{
    return std::min(h.window_hours, loads.periods() - day * h.day_hours);
}

// Runs fn(k) for k in [0, n) on up to `threads` workers; results land by index.
template <class Fn>
void parallel_for(int n, int threads, Fn fn)
{
    const int workers = std::max(1, std::min(threads, n));
    if (workers == 1) {
        for (int k = 0; k < n; ++k)
            fn(k);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int k = next++; k < n; k = next++)
                fn(k);
        });
    for (auto& t : pool)
        t.join();
}

}  // namespace

int SimulationContext::base_days() const
{
    return count_days(loads, horizon);
}

std::vector<double> daily_congestion(const PowerNetwork& net, const PtdfMatrix& ptdf, const BusLoads& loads,
                                     const HorizonSpec& horizon, const lp::Tolerances& tol)
{
    const int D = count_days(loads, horizon);
    std::vector<double> out(D, 0.0);
    for (int d = 0; d < D; ++d) {
        const auto sol = run_dispatch(net, ptdf, loads, BidSet{}, d * horizon.day_hours, horizon.day_hours, tol);
        out[d] = congestion_score(sol, ptdf).score.sum();
    }
    return out;
}

CongestionScore base_congestion(const PowerNetwork& net, const PtdfMatrix& ptdf, const BusLoads& loads,
                                const HorizonSpec& horizon, const std::vector<int>& days, const lp::Tolerances& tol)
{
    count_days(loads, horizon);
    std::vector<Eigen::MatrixXd> up, lo;
    for (int d : days) {
        auto sol = run_dispatch(net, ptdf, loads, BidSet{}, d * horizon.day_hours, horizon.day_hours, tol);
        up.push_back(std::move(sol.pi_upper));
        lo.push_back(std::move(sol.pi_lower));
    }
    return congestion_score(up, lo, ptdf);
}

std::vector<double> calendar_cashflows(const std::vector<double>& day_cashflows, const HorizonSpec& horizon)
{
    horizon.validate();
    if (day_cashflows.empty())
        return {};
    const auto total = static_cast<std::size_t>(std::llround(horizon.years * horizon.days_per_year));
    std::vector<double> out(total);
    for (std::size_t n = 0; n < total; ++n)
        out[n] = day_cashflows[n % day_cashflows.size()];
    return out;
}

Trial evaluate_config(const BessConfig& config, const SimulationContext& ctx)
{
    Trial trial;
    trial.config = config;
    trial.sites = config.sites();
    trial.investment = config.investment(ctx.catalog);
    trial.s_cong = Eigen::VectorXd::Zero(ctx.net.num_buses());
    auto fail = [&](const std::string& why) {
        trial.failed = true;
        trial.R = -std::numeric_limits<double>::infinity();
        trial.error = why;
        return trial;
    };
    try {
        config.validate(ctx.catalog);
        count_days(ctx.loads, ctx.horizon);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    if (ctx.days.empty())
        return fail("no simulation days selected");

    const int n = static_cast<int>(ctx.days.size());
    std::vector<AusResult> results(n);
    std::vector<std::string> errors(n);
    parallel_for(n, ctx.threads, [&](int k) {
        const int d = ctx.days[k];
        try {
            MarketWindow w{ctx.net, ctx.ptdf, ctx.loads, d * ctx.horizon.day_hours,
                           window_length(ctx.loads, ctx.horizon, d)};
            results[k] = run_aus(w, ctx.catalog, config, ctx.aus);
        } catch (const std::exception& e) {
            errors[k] = "day " + std::to_string(d) + ": " + e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty())
            return fail(e);

    std::vector<double> cash;
    std::vector<Eigen::MatrixXd> up, lo;
    const int H = ctx.horizon.day_hours;
    for (int k = 0; k < n; ++k) {
        const auto& r = results[k];
        const auto& sol = r.dispatch;
        double receipts = 0.0;
        for (std::size_t i = 0; i < sol.battery_bus.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            for (int t = 0; t < H; ++t)
                receipts += r.lmps(sol.battery_bus[i], t) * (sol.discharge(row, t) - sol.charge(row, t));
        }
        receipts *= sol.period_hours;
        cash.push_back(receipts);
        trial.days.push_back({ctx.days[k], receipts, r.report.iterations, r.report.converged});
        up.push_back(sol.pi_upper.leftCols(H));
        lo.push_back(sol.pi_lower.leftCols(H));
    }
    trial.s_cong = congestion_score(up, lo, ctx.ptdf).score;
    trial.R = npv(calendar_cashflows(cash, ctx.horizon), ctx.horizon.discount_rate, ctx.horizon.days_per_year) -
              trial.investment;
    return trial;
}

ImpactComparison compare_lmp_impact(const BessConfig& config, const SimulationContext& ctx)
{
    ImpactComparison out;
    const Trial with = evaluate_config(config, ctx);
    if (with.failed)
        throw InputError("configuration evaluation failed: " + with.error);
    out.R_with_impact = with.R;

    const auto fleet = installed_fleet(ctx.catalog, config);
    const int H = ctx.horizon.day_hours;
    std::vector<double> cash(ctx.days.size(), 0.0);
    std::vector<std::string> errors(ctx.days.size());
    parallel_for(static_cast<int>(ctx.days.size()), ctx.threads, [&](int k) {
        const int d = ctx.days[k];
        if (fleet.units.empty())
            return;
        try {
            MarketWindow w{ctx.net, ctx.ptdf, ctx.loads, d * H, window_length(ctx.loads, ctx.horizon, d)};
            const auto lmps = extract_lmps(base_dispatch(w, ctx.aus.tol), ctx.ptdf);
            ScheduleInputs in;
            in.candidates = fleet.units;
            in.prices = candidate_prices(fleet.units, ctx.net, lmps);
            in.period_hours = ctx.loads.period_hours;
            in.budget = config.budget;
            in.variant = ctx.aus.variant;
            for (double c : fleet.capacity)
                in.fixed_capacity.emplace_back(c);
            const auto s = solve_schedule(build_schedule(in), ctx.aus.tol, ctx.aus.milp);
            if (!s.optimal())
                throw InputError("self-schedule is infeasible");
            cash[k] = -s.period_cost.leftCols(H).sum();
        } catch (const std::exception& e) {
            errors[k] = "day " + std::to_string(d) + ": " + e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty())
            throw InputError(e);
    out.R_fixed_price = npv(calendar_cashflows(cash, ctx.horizon), ctx.horizon.discount_rate,
                            ctx.horizon.days_per_year) -
                        config.investment(ctx.catalog);
    return out;
}

const char* to_string(SearchMethod m)
{
    return m == SearchMethod::Tpe ? "tpe" : "random";
}

SearchMethod parse_method(const std::string& s)
{
    if (s == "tpe")
        return SearchMethod::Tpe;
    if (s == "random")
        return SearchMethod::Random;
    throw InputError("unknown search method '" + s + "' (expected tpe or random)");
}

SearchHistory run_search(const SearchSpace& space, const SearchOptions& options, const Evaluator& evaluate,
                         std::vector<double> weights, const WeightUpdate& update_weights,
                         const std::function<void(const Trial&)>& on_trial)
{
    space.validate();
    if (options.trials < 1)
        throw InputError("trial budget must be at least 1");
    Rng rng(options.seed);
    SearchHistory history;
    for (int k = 0; k < options.trials; ++k) {
        BessConfig cfg;
        if (options.method == SearchMethod::Tpe) {
            cfg = tpe_suggest(history, space, weights, options.tpe, rng);
        } else {
            // Same no-repeat rule as the TPE proposals so the baseline is fair.
            cfg = random_suggest(space, rng);
            for (int attempt = 0; attempt < 64 && history.contains(cfg); ++attempt)
                cfg = random_suggest(space, rng);
        }
        const auto start = std::chrono::steady_clock::now();
        Trial t = evaluate(cfg);
        t.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        t.index = k;
        t.config = cfg;
        t.sites = cfg.sites();
        if (update_weights)
            weights = update_weights(t);
        history.append(std::move(t));
        if (on_trial)
            on_trial(history.trials.back());
    }
    return history;
}

}  // namespace bessplan
