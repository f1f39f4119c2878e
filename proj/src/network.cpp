#include "bessplan/network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace bessplan {

int PowerNetwork::bus_index(int bus_id) const
{
    const auto it = index_.find(bus_id);
    if (it == index_.end())
        throw InputError("unknown bus " + std::to_string(bus_id));
    return it->second;
}

int PowerNetwork::add_bus(int id, std::string name)
{
    if (index_.count(id))
        throw InputError("duplicate bus id " + std::to_string(id));
    index_[id] = num_buses();
    buses.push_back({id, std::move(name)});
    return num_buses() - 1;
}

void PowerNetwork::add_line(int id, int from_bus_id, int to_bus_id, double reactance, double flow_limit)
{
    lines.push_back({id, bus_index(from_bus_id), bus_index(to_bus_id), reactance, flow_limit});
}

void PowerNetwork::add_generator(int id, int bus_id, double marginal_cost, double p_min, double p_max)
{
    generators.push_back({id, bus_index(bus_id), marginal_cost, p_min, p_max});
}

void PowerNetwork::set_default_slack()
{
    if (buses.empty())
        throw InputError("network has no buses");
    int best = -1;
    for (const auto& g : generators)
        if (best < 0 || buses[g.bus].id < buses[best].id)
            best = g.bus;
    if (best < 0) {
        best = 0;
        for (int b = 1; b < num_buses(); ++b)
            if (buses[b].id < buses[best].id)
                best = b;
    }
    slack = best;
}

std::vector<std::vector<int>> connected_components(const PowerNetwork& net)
{
    const int n = net.num_buses();
    std::vector<std::vector<int>> adj(n);
    for (const auto& l : net.lines) {
        adj[l.from].push_back(l.to);
        adj[l.to].push_back(l.from);
    }
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> out;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0)
            continue;
        out.emplace_back();
        std::queue<int> q;
        q.push(s);
        comp[s] = static_cast<int>(out.size()) - 1;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            out.back().push_back(u);
            for (int v : adj[u])
                if (comp[v] < 0) {
                    comp[v] = comp[s];
                    q.push(v);
                }
        }
        std::sort(out.back().begin(), out.back().end());
    }
    return out;
}

namespace {

std::string describe_buses(const PowerNetwork& net, const std::vector<int>& idx)
{
    std::ostringstream ss;
    for (std::size_t k = 0; k < idx.size(); ++k)
        ss << (k ? ", " : "") << net.buses[idx[k]].id;
    return ss.str();
}

void require_connected(const PowerNetwork& net)
{
    const auto comps = connected_components(net);
    if (comps.size() <= 1)
        return;
    for (const auto& c : comps) {
        if (std::find(c.begin(), c.end(), net.slack) != c.end())
            continue;
        throw InputError("network is disconnected: buses {" + describe_buses(net, c) +
                         "} are not connected to the slack bus " + std::to_string(net.buses[net.slack].id));
    }
}

}  // namespace

void PowerNetwork::validate() const
{
    if (buses.empty())
        throw InputError("network has no buses");
    if (slack < 0 || slack >= num_buses())
        throw InputError("slack bus index out of range");
    std::set<int> line_ids;
    for (const auto& l : lines) {
        const std::string tag = "line " + std::to_string(l.id);
        if (!line_ids.insert(l.id).second)
            throw InputError("duplicate " + tag);
        if (l.from == l.to)
            throw InputError(tag + " connects bus " + std::to_string(buses[l.from].id) + " to itself");
        if (!(l.reactance > 0.0) || !std::isfinite(l.reactance))
            throw InputError(tag + " has nonpositive reactance");
        if (!(l.flow_limit > 0.0))
            throw InputError(tag + " has nonpositive flow limit");
    }
    std::set<int> gen_ids;
    for (const auto& g : generators) {
        const std::string tag = "generator " + std::to_string(g.id);
        if (!gen_ids.insert(g.id).second)
            throw InputError("duplicate " + tag);
        if (!(g.p_min >= 0.0) || !(g.p_min <= g.p_max) || !std::isfinite(g.p_max))
            throw InputError(tag + " violates 0 <= p_min <= p_max");
        if (!std::isfinite(g.marginal_cost))
            throw InputError(tag + " has a non-finite marginal cost");
    }
    require_connected(*this);
}

int validate_series(const PowerNetwork& net, const std::vector<LoadSeries>& loads)
{
    if (loads.empty())
        throw InputError("no load series given");
    std::set<int> seen;
    for (const auto& s : loads) {
        if (!net.has_bus(s.bus_id))
            throw InputError("load series references unknown bus " + std::to_string(s.bus_id));
        if (!seen.insert(s.bus_id).second)
            throw InputError("duplicate load series for bus " + std::to_string(s.bus_id));
        for (double v : s.values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw InputError("negative or non-finite load at bus " + std::to_string(s.bus_id));
    }
    std::map<std::size_t, std::vector<int>> by_length;
    for (const auto& s : loads)
        by_length[s.values.size()].push_back(s.bus_id);
    if (by_length.size() > 1) {
        std::ostringstream ss;
        ss << "load series have mismatched horizons:";
        for (const auto& [len, ids] : by_length) {
            ss << " T=" << len << " at buses {";
            for (std::size_t k = 0; k < ids.size(); ++k)
                ss << (k ? ", " : "") << ids[k];
            ss << "}";
        }
        throw InputError(ss.str());
    }
    return static_cast<int>(loads.front().values.size());
}

BusLoads make_bus_loads(const PowerNetwork& net, const std::vector<LoadSeries>& loads, double period_hours)
{
    if (!(period_hours > 0.0))
        throw InputError("period length must be positive");
    const int T = validate_series(net, loads);
    BusLoads out;
    out.period_hours = period_hours;
    out.mw = Eigen::MatrixXd::Zero(net.num_buses(), T);
    for (const auto& s : loads) {
        const int b = net.bus_index(s.bus_id);
        for (int t = 0; t < T; ++t)
            out.mw(b, t) = s.values[t];
    }
    return out;
}

PowerNetwork load_network(const std::filesystem::path& dir)
{
    PowerNetwork net;
    std::optional<int> slack_id;

    const auto buses = csv::read_file(dir / "buses.csv");
    {
        const int c_id = buses.require_column("bus_id");
        const int c_name = buses.column("name");
        const int c_slack = buses.column("slack");
        for (std::size_t r = 0; r < buses.rows.size(); ++r) {
            const int id = static_cast<int>(buses.integer(r, c_id));
            try {
                net.add_bus(id, c_name >= 0 ? buses.text(r, c_name) : std::string{});
            } catch (const InputError& e) {
                buses.fail(r, e.what());
            }
            if (c_slack >= 0 && buses.integer(r, c_slack) != 0) {
                if (slack_id)
                    buses.fail(r, "more than one slack bus");
                slack_id = id;
            }
        }
    }

    const auto lines = csv::read_file(dir / "lines.csv");
    {
        const int c_id = lines.require_column("line_id");
        const int c_from = lines.require_column("from_bus");
        const int c_to = lines.require_column("to_bus");
        const int c_x = lines.require_column("reactance");
        const int c_lim = lines.require_column("flow_limit");
        for (std::size_t r = 0; r < lines.rows.size(); ++r) {
            const int id = static_cast<int>(lines.integer(r, c_id));
            const int from = static_cast<int>(lines.integer(r, c_from));
            const int to = static_cast<int>(lines.integer(r, c_to));
            const double x = lines.number(r, c_x);
            const double lim = lines.number(r, c_lim);
            for (int b : {from, to})
                if (!net.has_bus(b))
                    lines.fail(r, "line " + std::to_string(id) + " references undefined bus " + std::to_string(b));
            if (from == to)
                lines.fail(r, "line " + std::to_string(id) + " has identical endpoints");
            if (!(x > 0.0))
                lines.fail(r, "line " + std::to_string(id) + " has nonpositive reactance");
            if (!(lim > 0.0))
                lines.fail(r, "line " + std::to_string(id) + " has nonpositive flow limit");
            net.add_line(id, from, to, x, lim);
        }
    }

    const auto gens = csv::read_file(dir / "generators.csv");
    {
        const int c_id = gens.require_column("gen_id");
        const int c_bus = gens.require_column("bus_id");
        const int c_cost = gens.require_column("marginal_cost");
        const int c_min = gens.require_column("p_min");
        const int c_max = gens.require_column("p_max");
        for (std::size_t r = 0; r < gens.rows.size(); ++r) {
            const int id = static_cast<int>(gens.integer(r, c_id));
            const int bus = static_cast<int>(gens.integer(r, c_bus));
            if (!net.has_bus(bus))
                gens.fail(r, "generator " + std::to_string(id) + " references undefined bus " + std::to_string(bus));
            const double pmin = gens.number(r, c_min);
            const double pmax = gens.number(r, c_max);
            if (!(pmin >= 0.0 && pmin <= pmax))
                gens.fail(r, "generator " + std::to_string(id) + " violates 0 <= p_min <= p_max");
            net.add_generator(id, bus, gens.number(r, c_cost), pmin, pmax);
        }
    }

    if (slack_id)
        net.set_slack_bus(*slack_id);
    else
        net.set_default_slack();
    net.validate();
    return net;
}

std::vector<LoadSeries> load_series(const std::filesystem::path& loads_csv, const PowerNetwork& net)
{
    const auto t = csv::read_file(loads_csv);
    const int c_bus = t.require_column("bus_id");
    const int c_t = t.require_column("period_index");
    const int c_mw = t.require_column("load_mw");
    std::map<int, std::map<long, double>> by_bus;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int bus = static_cast<int>(t.integer(r, c_bus));
        const long period = t.integer(r, c_t);
        const double mw = t.number(r, c_mw);
        if (!net.has_bus(bus))
            t.fail(r, "load references undefined bus " + std::to_string(bus));
        if (period < 0)
            t.fail(r, "negative period index");
        if (mw < 0.0)
            t.fail(r, "negative load");
        if (!by_bus[bus].emplace(period, mw).second)
            t.fail(r, "duplicate load for bus " + std::to_string(bus) + " period " + std::to_string(period));
    }
    std::vector<LoadSeries> out;
    for (const auto& [bus, periods] : by_bus) {
        LoadSeries s;
        s.bus_id = bus;
        long expect = 0;
        for (const auto& [p, mw] : periods) {
            if (p != expect)
                throw InputError(loads_csv.string() + ": bus " + std::to_string(bus) + " is missing period " +
                                 std::to_string(expect));
            s.values.push_back(mw);
            ++expect;
        }
        out.push_back(std::move(s));
    }
    return out;
}

Case load_case(const std::filesystem::path& dir)
{
    Case c;
    c.network = load_network(dir);
    c.loads = load_series(dir / "loads.csv", c.network);
    validate_series(c.network, c.loads);
    return c;
}

PtdfMatrix compute_ptdf(const PowerNetwork& net)
{
    const int n = net.num_buses();
    const int L = net.num_lines();
    const int s = net.slack;
    if (s < 0 || s >= n)
        throw InputError("slack bus not designated");

    // Reduced susceptance matrix with the slack row and column removed.
    auto reduced = [s](int b) { return b < s ? b : b - 1; };
    Eigen::MatrixXd Br = Eigen::MatrixXd::Zero(n - 1, n - 1);
    for (const auto& l : net.lines) {
        const double y = 1.0 / l.reactance;
        if (l.from != s)
            Br(reduced(l.from), reduced(l.from)) += y;
        if (l.to != s)
            Br(reduced(l.to), reduced(l.to)) += y;
        if (l.from != s && l.to != s) {
            Br(reduced(l.from), reduced(l.to)) -= y;
            Br(reduced(l.to), reduced(l.from)) -= y;
        }
    }

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, n);
    if (n > 1) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Br);
        if (lu.rank() < n - 1) {
            const auto comps = connected_components(net);
            for (const auto& c : comps)
                if (std::find(c.begin(), c.end(), s) == c.end())
                    throw InputError("singular susceptance matrix: buses {" + describe_buses(net, c) +
                                     "} form a component without the slack bus");
            throw InputError("singular susceptance matrix");
        }
        const Eigen::MatrixXd Xr = lu.inverse();
        for (int a = 0; a < n; ++a) {
            if (a == s)
                continue;
            for (int b = 0; b < n; ++b) {
                if (b == s)
                    continue;
                X(a, b) = Xr(reduced(a), reduced(b));
            }
        }
    }

    PtdfMatrix out;
    out.slack = s;
    out.factors = Eigen::MatrixXd::Zero(L, n);
    for (int l = 0; l < L; ++l) {
        const auto& ln = net.lines[l];
        for (int b = 0; b < n; ++b)
            out.factors(l, b) = b == s ? 0.0 : (X(ln.from, b) - X(ln.to, b)) / ln.reactance;
    }
    return out;
}

Eigen::VectorXd line_flows(const PtdfMatrix& ptdf, const Eigen::VectorXd& injections)
{
    if (injections.size() != ptdf.num_buses())
        throw InputError("injection vector length does not match bus count");
    return ptdf.factors * injections;
}

}  // namespace bessplan
