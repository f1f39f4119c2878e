#include "bessplan/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bessplan {

double price_delta(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InputError("price_delta: shape mismatch");
    return (a - b).norm();
}

InstalledFleet installed_fleet(const std::vector<BessCandidate>& catalog, const BessConfig& config)
{
    InstalledFleet f;
    f.sites = config.sites();
    for (int i : f.sites) {
        f.units.push_back(catalog.at(i));
        f.capacity.push_back(config.capacity[i]);
    }
    return f;
}

DispatchSolution base_dispatch(const MarketWindow& w, const lp::Tolerances& tol)
{
    return run_dispatch(w.net, w.ptdf, w.loads, BidSet{}, w.first, w.count, tol);
}

double battery_cost(const DispatchSolution& sol, const Eigen::MatrixXd& lmps)
{
    double g = 0.0;
    for (std::size_t i = 0; i < sol.battery_bus.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        g += (lmps.row(sol.battery_bus[i]).array() * (sol.charge.row(r) - sol.discharge.row(r)).array()).sum();
    }
    return g * sol.period_hours;
}

AusStep aus_step(const MarketWindow& w, const InstalledFleet& fleet, double budget, const Eigen::MatrixXd& prices,
                 const AusParams& params)
{
    AusStep step;
    ScheduleInputs in;
    in.candidates = fleet.units;
    in.prices = candidate_prices(fleet.units, w.net, prices);
    in.period_hours = w.loads.period_hours;
    in.budget = budget;
    in.variant = params.variant;
    for (double c : fleet.capacity)
        in.fixed_capacity.emplace_back(c);
    if (!fleet.units.empty()) {
        step.schedule = solve_schedule(build_schedule(in), params.tol, params.milp);
        if (!step.schedule.optimal())
            throw InputError("self-schedule is infeasible for the installed fleet");
        step.bids = params.strategy->make_bids(step.schedule, in.prices);
    } else {
        step.schedule.status = lp::Status::Optimal;
        step.schedule.period_hours = in.period_hours;
        step.schedule.charge.resize(0, w.count);
        step.schedule.discharge.resize(0, w.count);
        step.schedule.soc.resize(0, w.count + 1);
        step.schedule.period_cost.resize(0, w.count);
    }
    const std::vector<int> ids = [&] {
        std::vector<int> v;
        for (const auto& u : fleet.units)
            v.push_back(u.id);
        return v;
    }();
    step.dispatch = solve_dispatch(build_dispatch(w.net, w.ptdf, w.loads, step.bids, w.first, w.count, &ids),
                                   params.tol);
    step.lmps = extract_lmps(step.dispatch, w.ptdf);
    return step;
}

namespace {

AusIteration summarize(int k, double delta, const AusStep& s)
{
    AusIteration it;
    it.k = k;
    it.delta = delta;
    it.iso_cost = s.dispatch.total_cost;
    it.battery_cost = battery_cost(s.dispatch, s.lmps);
    it.mean_lmp = s.lmps.rowwise().mean();
    it.min_lmp = s.lmps.minCoeff();
    it.max_lmp = s.lmps.maxCoeff();
    return it;
}

}  // namespace

AusResult run_aus(const MarketWindow& w, const std::vector<BessCandidate>& catalog, const BessConfig& config,
                  const AusParams& params)
{
    if (params.max_iter < 1)
        throw InputError("AUS needs at least one iteration");
    if (!(params.epsilon >= 0.0))
        throw InputError("AUS tolerance must be nonnegative");
    config.validate(catalog);
    const auto fleet = installed_fleet(catalog, config);

    AusResult out;
    out.sites = fleet.sites;
    try {
        out.base_lmps = extract_lmps(base_dispatch(w, params.tol), w.ptdf);
    } catch (const std::exception& e) {
        throw AusError(std::string("iteration 0: ") + e.what(), 0);
    }

    Eigen::MatrixXd prev = out.base_lmps;
    std::vector<AusStep> steps;
    for (int k = 1; k <= params.max_iter; ++k) {
        try {
            steps.push_back(aus_step(w, fleet, config.budget, prev, params));
        } catch (const AusError&) {
            throw;
        } catch (const std::exception& e) {
            throw AusError("iteration " + std::to_string(k) + ": " + e.what(), k);
        }
        const double delta = price_delta(steps.back().lmps, prev);
        out.trace.push_back(summarize(k, delta, steps.back()));
        prev = steps.back().lmps;
        const auto n = out.trace.size();
        if (n >= 3 && out.trace[n - 1].delta >= out.trace[n - 2].delta &&
            out.trace[n - 2].delta >= out.trace[n - 3].delta)
            out.report.oscillation = true;
        if (delta < params.epsilon) {
            out.report.converged = true;
            break;
        }
    }

    auto& rep = out.report;
    rep.iterations = static_cast<int>(out.trace.size());
    rep.final_delta = out.trace.back().delta;
    std::size_t pick = steps.size() - 1;
    if (!rep.converged) {
        for (std::size_t k = 0; k < out.trace.size(); ++k)
            if (out.trace[k].delta < out.trace[pick].delta)
                pick = k;
    }
    rep.returned_iteration = out.trace[pick].k;
    auto& s = steps[pick];
    out.lmps = std::move(s.lmps);
    out.dispatch = std::move(s.dispatch);
    out.schedule = std::move(s.schedule);
    out.bids = std::move(s.bids);
    return out;
}

std::vector<bool> pareto_check(const std::vector<AusIteration>& trace, double tol)
{
    std::vector<bool> flags;
    for (std::size_t k = 1; k < trace.size(); ++k)
        flags.push_back(trace[k].iso_cost < trace[k - 1].iso_cost - tol &&
                        trace[k].battery_cost < trace[k - 1].battery_cost - tol);
    return flags;
}

std::vector<DeviationPoint> bid_deviation_grid(const MarketWindow& w, const std::vector<BessCandidate>& catalog,
                                               const BessConfig& config, const AusResult& result, int points,
                                               const lp::Tolerances& tol, double improve_tol)
{
    const auto fleet = installed_fleet(catalog, config);
    if (points < 2)
        throw InputError("deviation grid needs at least two points");
    const double f0 = result.dispatch.total_cost;
    const double g0 = battery_cost(result.dispatch, result.lmps);
    std::vector<int> ids;
    for (const auto& b : result.bids.bids)
        ids.push_back(b.battery_id);
    std::vector<DeviationPoint> out;
    for (std::size_t i = 0; i < result.bids.bids.size(); ++i) {
        for (int p = 0; p < points; ++p) {
            const double s = 2.0 * p / (points - 1);
            BidSet bids = result.bids;
            auto& b = bids.bids[i];
            for (auto& a : b.charge_price)
                a *= s;
            for (auto& a : b.discharge_price)
                a *= s;
            const auto sol = solve_dispatch(build_dispatch(w.net, w.ptdf, w.loads, bids, w.first, w.count, &ids), tol);
            const auto lmps = extract_lmps(sol, w.ptdf);
            DeviationPoint d;
            d.battery = static_cast<int>(i);
            d.scale = s;
            d.iso_cost = sol.total_cost;
            d.battery_cost = battery_cost(sol, lmps);
            for (std::size_t u = 0; u < fleet.units.size(); ++u) {
                const auto r = static_cast<Eigen::Index>(u);
                const auto rep = replay_soc(fleet.units[u], fleet.capacity[u], sol.charge.row(r).transpose(),
                                            sol.discharge.row(r).transpose(), sol.period_hours);
                d.admissible = d.admissible && rep.feasible();
            }
            d.improves = d.admissible && d.battery_cost < g0 - improve_tol && d.iso_cost <= f0 + improve_tol;
            out.push_back(d);
        }
    }
    return out;
}

std::vector<ClearingViolation> clearing_rule_violations(const DispatchSolution& sol, const BidSet& bids,
                                                        const PowerNetwork& net, const Eigen::MatrixXd& lmps,
                                                        double power_tol, double price_tol)
{
    std::vector<ClearingViolation> out;
    for (std::size_t i = 0; i < bids.bids.size(); ++i) {
        const auto& b = bids.bids[i];
        const int bus = net.bus_index(b.bus_id);
        const auto r = static_cast<Eigen::Index>(i);
        for (int t = 0; t < sol.periods; ++t) {
            const double lam = lmps(bus, t);
            if (sol.discharge(r, t) > power_tol && b.discharge_price[t] > lam + price_tol)
                out.push_back({b.battery_id, t, "discharge cleared above the bus price"});
            if (sol.charge(r, t) > power_tol && -b.charge_price[t] < lam - price_tol)
                out.push_back({b.battery_id, t, "charge cleared below the bus price"});
        }
    }
    return out;
}

}  // namespace bessplan
