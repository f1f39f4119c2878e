#include "bessplan/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace bessplan {

BatteryBid BatteryBid::empty(int battery_id, int bus_id, int periods)
{
    BatteryBid b;
    b.battery_id = battery_id;
    b.bus_id = bus_id;
    const auto n = static_cast<std::size_t>(periods);
    b.charge_price.assign(n, 0.0);
    b.discharge_price.assign(n, 0.0);
    b.charge_min.assign(n, 0.0);
    b.charge_max.assign(n, 0.0);
    b.discharge_min.assign(n, 0.0);
    b.discharge_max.assign(n, 0.0);
    return b;
}

void BidSet::validate(int periods) const
{
    std::set<int> ids;
    for (const auto& b : bids) {
        const std::string tag = "bid of battery " + std::to_string(b.battery_id);
        if (!ids.insert(b.battery_id).second)
            throw InputError("duplicate " + tag);
        const auto n = static_cast<std::size_t>(periods);
        for (const auto* v : {&b.charge_price, &b.discharge_price, &b.charge_min, &b.charge_max, &b.discharge_min,
                              &b.discharge_max})
            if (v->size() != n)
                throw InputError(tag + " covers " + std::to_string(v->size()) + " periods, expected " +
                                 std::to_string(periods));
        for (std::size_t t = 0; t < n; ++t) {
            const std::string at = tag + " period " + std::to_string(t);
            if (!(b.charge_min[t] >= 0.0 && b.charge_min[t] <= b.charge_max[t] && std::isfinite(b.charge_max[t])))
                throw InputError(at + ": charge bounds must satisfy 0 <= min <= max < inf");
            if (!(b.discharge_min[t] >= 0.0 && b.discharge_min[t] <= b.discharge_max[t] &&
                  std::isfinite(b.discharge_max[t])))
                throw InputError(at + ": discharge bounds must satisfy 0 <= min <= max < inf");
            if (!(b.charge_price[t] <= 0.0) || !std::isfinite(b.charge_price[t]))
                throw InputError(at + ": charge price must be <= 0");
            if (!(b.discharge_price[t] >= 0.0) || !std::isfinite(b.discharge_price[t]))
                throw InputError(at + ": discharge price must be >= 0");
        }
    }
}

namespace {

constexpr double kZeroFactor = 1e-14;

}  // namespace

DispatchModel build_dispatch(const PowerNetwork& net, const PtdfMatrix& ptdf, const BusLoads& loads,
                             const BidSet& bids, int first, int count, const std::vector<int>* installed)
{
    if (first < 0 || count <= 0 || first + count > loads.periods())
        throw lp::StructuralError("dispatch window [" + std::to_string(first) + ", " + std::to_string(first + count) +
                                  ") lies outside the load horizon of " + std::to_string(loads.periods()));
    if (ptdf.num_buses() != net.num_buses() || ptdf.num_lines() != net.num_lines() ||
        loads.mw.rows() != net.num_buses())
        throw lp::StructuralError("network, shift factors and loads disagree on dimensions");
    for (const auto& b : bids.bids) {
        if (!net.has_bus(b.bus_id))
            throw lp::StructuralError("bid of battery " + std::to_string(b.battery_id) + " names unknown bus " +
                                      std::to_string(b.bus_id));
        if (installed && std::find(installed->begin(), installed->end(), b.battery_id) == installed->end())
            throw lp::StructuralError("bid for unknown battery " + std::to_string(b.battery_id));
    }
    bids.validate(count);

    DispatchModel m;
    m.periods = count;
    m.first_period = first;
    m.period_hours = loads.period_hours;
    m.num_generators = static_cast<int>(net.generators.size());
    m.num_lines = net.num_lines();
    for (const auto& b : bids.bids) {
        m.battery_ids.push_back(b.battery_id);
        m.battery_bus.push_back(net.bus_index(b.bus_id));
    }

    auto& lp = m.lp;
    for (int g = 0; g < m.num_generators; ++g) {
        const auto& gen = net.generators[g];
        for (int t = 0; t < count; ++t)
            lp.add_variable(gen.marginal_cost, gen.p_min, gen.p_max,
                            "p_g" + std::to_string(gen.id) + "_t" + std::to_string(first + t));
    }
    for (const auto& b : bids.bids) {
        for (int t = 0; t < count; ++t)
            lp.add_variable(b.charge_price[t], b.charge_min[t], b.charge_max[t],
                            "pc_b" + std::to_string(b.battery_id) + "_t" + std::to_string(first + t));
        for (int t = 0; t < count; ++t)
            lp.add_variable(b.discharge_price[t], b.discharge_min[t], b.discharge_max[t],
                            "pd_b" + std::to_string(b.battery_id) + "_t" + std::to_string(first + t));
    }

    const int nb = static_cast<int>(bids.bids.size());
    for (int t = 0; t < count; ++t) {
        std::vector<lp::Coefficient> row;
        for (int g = 0; g < m.num_generators; ++g)
            row.push_back({m.gen_var(g, t), 1.0});
        for (int i = 0; i < nb; ++i) {
            row.push_back({m.charge_var(i, t), -1.0});
            row.push_back({m.discharge_var(i, t), 1.0});
        }
        const double demand = loads.mw.col(first + t).sum();
        lp.add_row(lp::RowKind::Equal, demand, demand, row, "balance_t" + std::to_string(first + t));
    }

    for (int l = 0; l < m.num_lines; ++l) {
        const auto& line = net.lines[l];
        for (int t = 0; t < count; ++t) {
            std::vector<lp::Coefficient> row;
            for (int g = 0; g < m.num_generators; ++g) {
                const double sf = ptdf(l, net.generators[g].bus);
                if (std::abs(sf) > kZeroFactor)
                    row.push_back({m.gen_var(g, t), sf});
            }
            for (int i = 0; i < nb; ++i) {
                const double sf = ptdf(l, m.battery_bus[i]);
                if (std::abs(sf) > kZeroFactor) {
                    row.push_back({m.charge_var(i, t), -sf});
                    row.push_back({m.discharge_var(i, t), sf});
                }
            }
            double load_flow = 0.0;
            for (int b = 0; b < net.num_buses(); ++b)
                load_flow += ptdf(l, b) * loads.mw(b, first + t);
            lp.add_row(lp::RowKind::Range, load_flow - line.flow_limit, load_flow + line.flow_limit, row,
                       "line" + std::to_string(line.id) + "_t" + std::to_string(first + t));
        }
    }
    return m;
}

namespace {

// Periods are not coupled in the dispatch LP, so each period's variables and
// rows form an independent sub-problem.
lp::LinearProgram period_slice(const DispatchModel& m, int t)
{
    const int nb = static_cast<int>(m.battery_ids.size());
    std::vector<int> cols;
    for (int g = 0; g < m.num_generators; ++g)
        cols.push_back(m.gen_var(g, t));
    for (int i = 0; i < nb; ++i) {
        cols.push_back(m.charge_var(i, t));
        cols.push_back(m.discharge_var(i, t));
    }
    std::vector<int> remap(m.lp.num_vars(), -1);
    lp::LinearProgram out;
    for (int j : cols) {
        remap[j] = out.add_variable(m.lp.objective[j], m.lp.var_bounds[j].lower, m.lp.var_bounds[j].upper);
    }
    std::vector<int> rows{m.balance_row(t)};
    for (int l = 0; l < m.num_lines; ++l)
        rows.push_back(m.line_row(l, t));
    for (int r : rows) {
        std::vector<lp::Coefficient> coeffs;
        for (auto k = m.lp.row_start[r]; k < m.lp.row_start[r + 1]; ++k)
            coeffs.push_back({remap[m.lp.col_index[k]], m.lp.values[k]});
        out.add_row(m.lp.row_kinds[r], m.lp.row_bounds[r].lower, m.lp.row_bounds[r].upper, coeffs);
    }
    return out;
}

}  // namespace

DispatchSolution solve_dispatch(const DispatchModel& m, const lp::Tolerances& tol)
{
    auto res = lp::solve_lp(m.lp, tol);
    if (res.status == lp::Status::Unbounded)
        throw lp::SolverFailure("dispatch LP reported unbounded");
    if (res.status == lp::Status::Infeasible) {
        std::vector<int> bad;
        for (int t = 0; t < m.periods; ++t)
            if (lp::solve_lp(period_slice(m, t), tol).status != lp::Status::Optimal)
                bad.push_back(m.first_period + t);
        if (bad.empty())
            for (int t = 0; t < m.periods; ++t)
                bad.push_back(m.first_period + t);
        std::ostringstream ss;
        ss << "dispatch infeasible in period";
        if (bad.size() > 1)
            ss << "s";
        for (std::size_t k = 0; k < bad.size(); ++k)
            ss << (k ? ", " : " ") << bad[k];
        throw DispatchInfeasible(ss.str(), bad);
    }

    DispatchSolution s;
    const int T = m.periods;
    const int nb = static_cast<int>(m.battery_ids.size());
    s.periods = T;
    s.first_period = m.first_period;
    s.period_hours = m.period_hours;
    s.battery_ids = m.battery_ids;
    s.battery_bus = m.battery_bus;
    s.generation.resize(m.num_generators, T);
    s.charge.resize(nb, T);
    s.discharge.resize(nb, T);
    s.balance_dual.resize(T);
    s.pi_upper.resize(m.num_lines, T);
    s.pi_lower.resize(m.num_lines, T);
    s.flows.resize(m.num_lines, T);
    double gen_cost = 0.0;
    for (int t = 0; t < T; ++t) {
        for (int g = 0; g < m.num_generators; ++g) {
            const int j = m.gen_var(g, t);
            s.generation(g, t) = res.primal[j];
            gen_cost += m.lp.objective[j] * res.primal[j];
        }
        for (int i = 0; i < nb; ++i) {
            s.charge(i, t) = res.primal[m.charge_var(i, t)];
            s.discharge(i, t) = res.primal[m.discharge_var(i, t)];
        }
        s.balance_dual(t) = res.row_duals[m.balance_row(t)];
        for (int l = 0; l < m.num_lines; ++l) {
            const int r = m.line_row(l, t);
            const double y = res.row_duals[r];
            s.pi_upper(l, t) = std::min(y, 0.0);
            s.pi_lower(l, t) = -std::max(y, 0.0);
            const auto& rb = m.lp.row_bounds[r];
            // Row activity is the generation-side flow; the load-side part is
            // the midpoint of the row bounds.
            s.flows(l, t) = res.row_activity[r] - 0.5 * (rb.lower + rb.upper);
        }
    }
    s.objective = res.objective_value;
    s.total_cost = res.objective_value * m.period_hours;
    s.generation_cost = gen_cost * m.period_hours;
    s.degenerate = res.degenerate;
    s.lp = std::move(res);
    return s;
}

DispatchSolution run_dispatch(const PowerNetwork& net, const PtdfMatrix& ptdf, const BusLoads& loads,
                              const BidSet& bids, int first, int count, const lp::Tolerances& tol)
{
    return solve_dispatch(build_dispatch(net, ptdf, loads, bids, first, count), tol);
}

Eigen::MatrixXd extract_lmps(const DispatchSolution& sol, const PtdfMatrix& ptdf)
{
    const Eigen::MatrixXd y = sol.pi_upper - sol.pi_lower;  // lines x periods
    Eigen::MatrixXd lambda = ptdf.factors.transpose() * y;   // buses x periods
    lambda.rowwise() += sol.balance_dual.transpose();
    return lambda;
}

CongestionScore congestion_score(const std::vector<Eigen::MatrixXd>& pi_upper,
                                 const std::vector<Eigen::MatrixXd>& pi_lower, const PtdfMatrix& ptdf)
{
    if (pi_upper.empty() || pi_upper.size() != pi_lower.size())
        throw InputError("congestion score needs at least one solved period");
    const Eigen::MatrixXd sf_pos = ptdf.factors.cwiseMax(0.0);
    const Eigen::MatrixXd sf_neg = (-ptdf.factors).cwiseMax(0.0);
    CongestionScore out;
    out.score = Eigen::VectorXd::Zero(ptdf.num_buses());
    for (std::size_t k = 0; k < pi_upper.size(); ++k) {
        const auto& up = pi_upper[k];
        const auto& lo = pi_lower[k];
        if (up.rows() != ptdf.num_lines() || lo.rows() != ptdf.num_lines() || up.cols() != lo.cols())
            throw InputError("line multiplier history does not match the shift-factor matrix");
        out.score += sf_pos.transpose() * up.cwiseAbs().rowwise().sum();
        out.score += sf_neg.transpose() * lo.cwiseAbs().rowwise().sum();
        out.periods += static_cast<int>(up.cols());
    }
    if (out.periods == 0)
        throw InputError("congestion score needs at least one solved period");
    out.score /= out.periods;
    return out;
}

CongestionScore congestion_score(const DispatchSolution& sol, const PtdfMatrix& ptdf)
{
    return congestion_score(std::vector<Eigen::MatrixXd>{sol.pi_upper}, std::vector<Eigen::MatrixXd>{sol.pi_lower},
                            ptdf);
}

double complementarity_violation(const Eigen::MatrixXd& charge, const Eigen::MatrixXd& discharge)
{
    if (charge.size() == 0)
        return 0.0;
    return std::max(0.0, charge.cwiseProduct(discharge).maxCoeff());
}

double complementarity_violation(const DispatchSolution& sol)
{
    return complementarity_violation(sol.charge, sol.discharge);
}

}  // namespace bessplan
