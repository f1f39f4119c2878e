#include "bessplan/scheduling.hpp"

#include "bessplan/csv.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bessplan {

void BessCandidate::validate() const
{
    const std::string tag = "candidate " + std::to_string(id);
    if (!(fixed_cost >= 0.0) || !(unit_cost >= 0.0))
        throw InputError(tag + ": costs must be nonnegative");
    if (!(charge_rate > 0.0) || !(discharge_rate > 0.0))
        throw InputError(tag + ": charge and discharge rates must be positive");
    if (!(soc_min >= 0.0 && soc_min < soc_max && soc_max <= 1.0))
        throw InputError(tag + ": SOC bounds must satisfy 0 <= min < max <= 1");
    if (!(eta_charge > 0.0 && eta_charge <= 1.0) || !(eta_discharge > 0.0 && eta_discharge <= 1.0))
        throw InputError(tag + ": efficiencies must lie in (0, 1]");
    if (initial_soc && !(*initial_soc >= 0.0 && *initial_soc <= 1.0))
        throw InputError(tag + ": initial SOC must lie in [0, 1]");
}

std::vector<BessCandidate> load_catalog(const std::filesystem::path& csv_path)
{
    const auto t = csv::read_file(csv_path);
    const int c_id = t.require_column("id");
    const int c_bus = t.require_column("bus_id");
    const int c_f = t.require_column("F");
    const int c_g = t.require_column("G");
    const int c_kc = t.require_column("kc");
    const int c_kd = t.require_column("kd");
    const int c_sl = t.require_column("Sl");
    const int c_su = t.require_column("Su");
    const int c_ec = t.require_column("etac");
    const int c_ed = t.require_column("etad");
    const int c_init = t.column("init_soc");
    std::vector<BessCandidate> out;
    std::set<int> ids;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        BessCandidate c;
        c.id = static_cast<int>(t.integer(r, c_id));
        c.bus_id = static_cast<int>(t.integer(r, c_bus));
        c.fixed_cost = t.number(r, c_f);
        c.unit_cost = t.number(r, c_g);
        c.charge_rate = t.number(r, c_kc);
        c.discharge_rate = t.number(r, c_kd);
        c.soc_min = t.number(r, c_sl);
        c.soc_max = t.number(r, c_su);
        c.eta_charge = t.number(r, c_ec);
        c.eta_discharge = t.number(r, c_ed);
        if (c_init >= 0 && !t.text(r, c_init).empty())
            c.initial_soc = t.number(r, c_init);
        if (!ids.insert(c.id).second)
            t.fail(r, "duplicate candidate id " + std::to_string(c.id));
        try {
            c.validate();
        } catch (const InputError& e) {
            t.fail(r, e.what());
        }
        out.push_back(c);
    }
    if (out.empty())
        throw InputError(csv_path.string() + ": catalog is empty");
    return out;
}

std::vector<int> BessConfig::sites() const
{
    std::vector<int> out;
    for (std::size_t i = 0; i < capacity.size(); ++i)
        if (capacity[i] > 0.0)
            out.push_back(static_cast<int>(i));
    return out;
}

double BessConfig::investment(const std::vector<BessCandidate>& catalog) const
{
    double total = 0.0;
    for (std::size_t i = 0; i < capacity.size() && i < catalog.size(); ++i)
        if (capacity[i] > 0.0)
            total += catalog[i].fixed_cost + catalog[i].unit_cost * capacity[i];
    return total;
}

void BessConfig::validate(const std::vector<BessCandidate>& catalog, double slack) const
{
    if (capacity.size() != catalog.size())
        throw InputError("configuration has " + std::to_string(capacity.size()) + " capacities for a catalog of " +
                         std::to_string(catalog.size()));
    for (std::size_t i = 0; i < capacity.size(); ++i)
        if (!(capacity[i] >= 0.0) || !std::isfinite(capacity[i]))
            throw InputError("candidate " + std::to_string(catalog[i].id) + " has an invalid capacity");
    const double cost = investment(catalog);
    if (cost > budget + slack)
        throw BudgetInfeasible("investment " + std::to_string(cost) + " exceeds budget " + std::to_string(budget));
}

ScheduleModel build_schedule(const ScheduleInputs& in)
{
    const int n = static_cast<int>(in.candidates.size());
    const int T = static_cast<int>(in.prices.cols());
    if (in.prices.rows() != n)
        throw InputError("price matrix needs one row per candidate");
    if (T <= 0)
        throw InputError("price horizon is empty");
    if (!(in.period_hours > 0.0))
        throw InputError("period length must be positive");
    if (!(in.budget >= 0.0))
        throw InputError("budget must be nonnegative");
    if (!in.fixed_capacity.empty() && static_cast<int>(in.fixed_capacity.size()) != n)
        throw InputError("fixed capacities need one entry per candidate");
    if (!in.prices.allFinite())
        throw InputError("prices must be finite");
    for (const auto& c : in.candidates)
        c.validate();

    ScheduleModel m;
    m.inputs = in;
    m.periods = T;
    m.big_m.assign(n, 0.0);
    m.install_var.assign(n, -1);
    m.capacity_var.assign(n, -1);
    m.charge_start.assign(n, -1);
    m.discharge_start.assign(n, -1);
    m.soc_start.assign(n, -1);
    m.mode_start.assign(n, -1);

    const bool zfc = in.variant.zero_fixed_cost;
    auto fixed = [&](int i) -> std::optional<double> {
        return in.fixed_capacity.empty() ? std::nullopt : in.fixed_capacity[i];
    };

    double forced_cost = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& c = in.candidates[i];
        if (auto f = fixed(i)) {
            if (!(*f >= 0.0) || !std::isfinite(*f))
                throw InputError("candidate " + std::to_string(c.id) + " has an invalid fixed capacity");
            m.big_m[i] = *f;
            if (*f > 0.0)
                forced_cost += (zfc ? 0.0 : c.fixed_cost) + c.unit_cost * *f;
        } else {
            if (!(c.unit_cost > 0.0))
                throw InputError("candidate " + std::to_string(c.id) +
                                 " needs a positive unit cost when its capacity is a decision");
            const double avail = zfc ? in.budget : in.budget - c.fixed_cost;
            m.big_m[i] = std::max(0.0, avail / c.unit_cost);
        }
    }
    if (forced_cost > in.budget * (1.0 + 1e-12) + 1e-9)
        throw BudgetInfeasible("fixed installations cost " + std::to_string(forced_cost) + " but the budget is " +
                               std::to_string(in.budget));

    auto& lp = m.milp.base;
    const double dt = in.period_hours;
    std::vector<lp::Coefficient> budget_row;
    bool budget_needed = false;

    for (int i = 0; i < n; ++i) {
        const auto& c = in.candidates[i];
        const std::string tag = std::to_string(c.id);
        const auto f = fixed(i);

        if (!zfc) {
            const double lo = f ? (*f > 0.0 ? 1.0 : 0.0) : 0.0;
            const double hi = f ? lo : (m.big_m[i] > 0.0 ? 1.0 : 0.0);
            m.install_var[i] = lp.add_variable(c.fixed_cost, lo, hi, "y_" + tag);
            m.milp.binary_vars.push_back(m.install_var[i]);
            budget_row.push_back({m.install_var[i], c.fixed_cost});
        }
        const double cap_lo = f ? *f : 0.0;
        const double cap_hi = f ? *f : m.big_m[i];
        m.capacity_var[i] = lp.add_variable(c.unit_cost, cap_lo, cap_hi, "c_" + tag);
        budget_row.push_back({m.capacity_var[i], c.unit_cost});
        if (!f)
            budget_needed = true;

        m.charge_start[i] = lp.num_vars();
        for (int t = 0; t < T; ++t)
            lp.add_variable(in.prices(i, t) * dt, 0.0, lp::kInf, "pc_" + tag + "_" + std::to_string(t));
        m.discharge_start[i] = lp.num_vars();
        for (int t = 0; t < T; ++t)
            lp.add_variable(-in.prices(i, t) * dt, 0.0, lp::kInf, "pd_" + tag + "_" + std::to_string(t));
        m.soc_start[i] = lp.num_vars();
        for (int t = 0; t <= T; ++t)
            lp.add_variable(0.0, 0.0, lp::kInf, "e_" + tag + "_" + std::to_string(t));
        if (in.variant.enforce_complementarity) {
            m.mode_start[i] = lp.num_vars();
            for (int t = 0; t < T; ++t) {
                const int z = lp.add_variable(0.0, 0.0, 1.0, "z_" + tag + "_" + std::to_string(t));
                m.milp.binary_vars.push_back(z);
            }
        }

        const int cap = m.capacity_var[i];
        for (int t = 0; t < T; ++t) {
            const int pc = m.charge_start[i] + t;
            const int pd = m.discharge_start[i] + t;
            const int e0 = m.soc_start[i] + t;
            lp.add_row(lp::RowKind::LessEqual, -lp::kInf, 0.0, {{pc, 1.0}, {cap, -c.charge_rate}});
            lp.add_row(lp::RowKind::LessEqual, -lp::kInf, 0.0, {{pd, 1.0}, {cap, -c.discharge_rate}});
            lp.add_row(lp::RowKind::Equal, 0.0, 0.0,
                       {{e0 + 1, 1.0}, {e0, -1.0}, {pc, -c.eta_charge * dt}, {pd, dt / c.eta_discharge}},
                       "soc_" + tag + "_" + std::to_string(t));
            if (in.variant.enforce_complementarity) {
                const int z = m.mode_start[i] + t;
                const double mc = c.charge_rate * m.big_m[i];
                const double md = c.discharge_rate * m.big_m[i];
                lp.add_row(lp::RowKind::LessEqual, -lp::kInf, 0.0, {{pc, 1.0}, {z, -mc}});
                lp.add_row(lp::RowKind::LessEqual, -lp::kInf, md, {{pd, 1.0}, {z, md}});
            }
        }
        for (int t = 0; t <= T; ++t) {
            const int e = m.soc_start[i] + t;
            lp.add_row(lp::RowKind::GreaterEqual, 0.0, lp::kInf, {{e, 1.0}, {cap, -c.soc_min}});
            lp.add_row(lp::RowKind::LessEqual, -lp::kInf, 0.0, {{e, 1.0}, {cap, -c.soc_max}});
        }
        const int e_first = m.soc_start[i];
        const int e_last = m.soc_start[i] + T;
        lp.add_row(lp::RowKind::Equal, 0.0, 0.0, {{e_first, 1.0}, {cap, -c.initial_fraction()}}, "soc_init_" + tag);
        lp.add_row(lp::RowKind::GreaterEqual, 0.0, lp::kInf, {{e_last, 1.0}, {e_first, -1.0}}, "soc_end_" + tag);
        if (!zfc && !f)
            lp.add_row(lp::RowKind::LessEqual, -lp::kInf, 0.0, {{cap, 1.0}, {m.install_var[i], -m.big_m[i]}},
                       "link_" + tag);
    }
    if (budget_needed) {
        // Fixed installations contribute constants; move them to the rhs.
        std::vector<lp::Coefficient> row;
        double rhs = in.budget;
        for (const auto& k : budget_row) {
            const auto& b = lp.var_bounds[k.col];
            if (b.lower == b.upper)
                rhs -= k.value * b.lower;
            else
                row.push_back(k);
        }
        lp.add_row(lp::RowKind::LessEqual, -lp::kInf, rhs, row, "budget");
    }
    return m;
}

ScheduleSolution solve_schedule(const ScheduleModel& m, const lp::Tolerances& tol, const lp::MilpOptions& opts)
{
    const auto& in = m.inputs;
    const int n = static_cast<int>(in.candidates.size());
    const int T = m.periods;
    ScheduleSolution s;
    s.period_hours = in.period_hours;
    for (const auto& c : in.candidates) {
        s.candidate_ids.push_back(c.id);
        s.bus_ids.push_back(c.bus_id);
    }

    const auto res = lp::solve_milp(m.milp, tol, opts);
    s.status = res.lp.status;
    s.nodes = res.nodes;
    s.node_limit_reached = res.node_limit_reached;
    s.relaxation_objective = res.relaxation_objective;
    s.installed.assign(n, 0);
    s.capacity.assign(n, 0.0);
    s.charge = Eigen::MatrixXd::Zero(n, T);
    s.discharge = Eigen::MatrixXd::Zero(n, T);
    s.soc = Eigen::MatrixXd::Zero(n, T + 1);
    s.period_cost = Eigen::MatrixXd::Zero(n, T);
    if (!s.optimal())
        return s;

    const auto& x = res.lp.primal;
    for (int i = 0; i < n; ++i) {
        const auto& c = in.candidates[i];
        const double cap = x[m.capacity_var[i]];
        s.capacity[i] = cap;
        s.installed[i] = m.install_var[i] >= 0 ? (x[m.install_var[i]] > 0.5 ? 1 : 0) : (cap > 0.0 ? 1 : 0);
        if (s.installed[i])
            s.investment += (in.variant.zero_fixed_cost ? 0.0 : c.fixed_cost) + c.unit_cost * cap;
        for (int t = 0; t < T; ++t) {
            s.charge(i, t) = x[m.charge_start[i] + t];
            s.discharge(i, t) = x[m.discharge_start[i] + t];
            s.period_cost(i, t) = in.prices(i, t) * in.period_hours * (s.charge(i, t) - s.discharge(i, t));
        }
        for (int t = 0; t <= T; ++t)
            s.soc(i, t) = x[m.soc_start[i] + t];
    }
    s.objective = res.lp.objective_value;
    return s;
}

double complementarity_violation(const ScheduleSolution& sol)
{
    return complementarity_violation(sol.charge, sol.discharge);
}

SocReplay replay_soc(const BessCandidate& unit, double capacity, const Eigen::VectorXd& charge,
                     const Eigen::VectorXd& discharge, double period_hours, double tol)
{
    if (charge.size() != discharge.size())
        throw InputError("charge and discharge series differ in length");
    SocReplay r;
    double e = unit.initial_fraction() * capacity;
    r.soc.push_back(e);
    const double lo = unit.soc_min * capacity - tol;
    const double hi = unit.soc_max * capacity + tol;
    for (Eigen::Index t = 0; t < charge.size(); ++t) {
        if (charge(t) > unit.charge_rate * capacity + tol || discharge(t) > unit.discharge_rate * capacity + tol)
            r.within_bounds = false;
        e += charge(t) * unit.eta_charge * period_hours - discharge(t) / unit.eta_discharge * period_hours;
        r.soc.push_back(e);
    }
    for (double v : r.soc)
        if (v < lo || v > hi)
            r.within_bounds = false;
    r.terminal_ok = r.soc.back() >= r.soc.front() - tol;
    return r;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> soc_interior(const ScheduleSolution& sol,
                                                                const std::vector<BessCandidate>& candidates)
{
    const auto n = sol.charge.rows();
    const auto T = sol.charge.cols();
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> out(n, T);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& c = candidates.at(i);
        const double cap = sol.capacity.at(i);
        const double lo = c.soc_min * cap + c.discharge_rate * cap / c.eta_discharge * sol.period_hours;
        const double hi = c.soc_max * cap - c.charge_rate * cap * c.eta_charge * sol.period_hours;
        for (Eigen::Index t = 0; t < T; ++t)
            out(i, t) = sol.soc(i, t) >= lo - 1e-9 && sol.soc(i, t) <= hi + 1e-9;
    }
    return out;
}

MarginStrategy::MarginStrategy(double margin) : margin_(margin)
{
    if (!(margin >= 0.0) || !std::isfinite(margin))
        throw InputError("bid margin must be a nonnegative number");
}

BidSet MarginStrategy::make_bids(const ScheduleSolution& schedule, const Eigen::MatrixXd& prices) const
{
    const auto n = static_cast<Eigen::Index>(schedule.candidate_ids.size());
    const auto T = schedule.charge.cols();
    if (prices.rows() != n || prices.cols() != T)
        throw InputError("bid prices do not match the schedule horizon");
    BidSet out;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!schedule.installed[i])
            continue;
        auto b = BatteryBid::empty(schedule.candidate_ids[i], schedule.bus_ids[i], static_cast<int>(T));
        for (Eigen::Index t = 0; t < T; ++t) {
            const double lam = prices(i, t);
            b.discharge_price[t] = std::max(0.0, lam * (1.0 - margin_));
            b.charge_price[t] = std::min(0.0, -lam * (1.0 + margin_));
            b.charge_max[t] = std::max(0.0, schedule.charge(i, t));
            b.discharge_max[t] = std::max(0.0, schedule.discharge(i, t));
        }
        out.bids.push_back(std::move(b));
    }
    return out;
}

BidSet make_bids(const ScheduleSolution& schedule, const Eigen::MatrixXd& prices, double margin)
{
    return MarginStrategy(margin).make_bids(schedule, prices);
}

Eigen::MatrixXd candidate_prices(const std::vector<BessCandidate>& candidates, const PowerNetwork& net,
                                 const Eigen::MatrixXd& lmps)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(candidates.size()), lmps.cols());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = lmps.row(net.bus_index(candidates[i].bus_id));
    return out;
}

}  // namespace bessplan
