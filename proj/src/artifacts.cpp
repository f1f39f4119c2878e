#include "bessplan/artifacts.hpp"

#include "bessplan/csv.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace bessplan::io {

using nlohmann::json;

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (v == 0.0)
        v = 0.0;  // drop the sign of negative zero
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s)
{
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw InputError("not a number: '" + s + "'");
    return v;
}

namespace {

double field(const csv::Table& t, std::size_t r, int c)
{
    try {
        return parse_double(t.text(r, c));
    } catch (const InputError& e) {
        t.fail(r, e.what());
    }
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    if (s.empty())
        return out;
    std::string part;
    std::istringstream ss(s);
    while (std::getline(ss, part, sep))
        out.push_back(part);
    return out;
}

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace

void write_lmps(std::ostream& out, const PowerNetwork& net, const Eigen::MatrixXd& lmps, int first_period)
{
    out << "bus_id,period_index,lmp\n";
    for (int b = 0; b < net.num_buses(); ++b)
        for (Eigen::Index t = 0; t < lmps.cols(); ++t)
            out << net.buses[b].id << ',' << first_period + t << ',' << format_double(lmps(b, t)) << '\n';
}

LmpTable read_lmps(std::istream& in, const std::string& source)
{
    const auto t = csv::read(in, source);
    const int cb = t.require_column("bus_id"), ct = t.require_column("period_index"), cl = t.require_column("lmp");
    std::map<int, std::map<long, double>> values;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        values[static_cast<int>(t.integer(r, cb))][t.integer(r, ct)] = field(t, r, cl);
    LmpTable out;
    if (values.empty())
        return out;
    const auto& first_row = values.begin()->second;
    out.first_period = static_cast<int>(first_row.begin()->first);
    const auto T = static_cast<Eigen::Index>(first_row.size());
    out.lmps.resize(static_cast<Eigen::Index>(values.size()), T);
    Eigen::Index row = 0;
    for (const auto& [bus, series] : values) {
        if (static_cast<Eigen::Index>(series.size()) != T)
            throw InputError(source + ": bus " + std::to_string(bus) + " has a different number of periods");
        out.bus_ids.push_back(bus);
        Eigen::Index k = 0;
        for (const auto& [p, v] : series) {
            if (p != out.first_period + k)
                throw InputError(source + ": bus " + std::to_string(bus) + " skips period " +
                                 std::to_string(out.first_period + k));
            out.lmps(row, k++) = v;
        }
        ++row;
    }
    return out;
}

void write_congestion(std::ostream& out, const PowerNetwork& net, const CongestionScore& score)
{
    out << "bus_id,score\n";
    for (int b = 0; b < net.num_buses(); ++b)
        out << net.buses[b].id << ',' << format_double(score.score(b)) << '\n';
}

std::vector<std::pair<int, double>> read_congestion(std::istream& in, const std::string& source)
{
    const auto t = csv::read(in, source);
    const int cb = t.require_column("bus_id"), cs = t.require_column("score");
    std::vector<std::pair<int, double>> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        out.emplace_back(static_cast<int>(t.integer(r, cb)), field(t, r, cs));
    return out;
}

void write_ptdf(std::ostream& out, const PowerNetwork& net, const PtdfMatrix& ptdf)
{
    out << "line_id,bus_id,factor\n";
    for (int l = 0; l < net.num_lines(); ++l)
        for (int b = 0; b < net.num_buses(); ++b)
            out << net.lines[l].id << ',' << net.buses[b].id << ',' << format_double(ptdf(l, b)) << '\n';
}

std::vector<PtdfEntry> read_ptdf(std::istream& in, const std::string& source)
{
    const auto t = csv::read(in, source);
    const int cl = t.require_column("line_id"), cb = t.require_column("bus_id"), cf = t.require_column("factor");
    std::vector<PtdfEntry> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        out.push_back({static_cast<int>(t.integer(r, cl)), static_cast<int>(t.integer(r, cb)), field(t, r, cf)});
    return out;
}

void write_schedule(std::ostream& out, const ScheduleSolution& sol, bool installed_only)
{
    out << "battery_id,t,pc,pd,e,cashflow\n";
    const auto cash = sol.cashflow();
    for (std::size_t i = 0; i < sol.candidate_ids.size(); ++i) {
        if (installed_only && !sol.installed.at(i))
            continue;
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index t = 0; t < sol.charge.cols(); ++t)
            out << sol.candidate_ids[i] << ',' << t << ',' << format_double(sol.charge(r, t)) << ','
                << format_double(sol.discharge(r, t)) << ',' << format_double(sol.soc(r, t)) << ','
                << format_double(cash(r, t)) << '\n';
    }
}

std::vector<ScheduleRow> read_schedule(std::istream& in, const std::string& source)
{
    const auto t = csv::read(in, source);
    const int ci = t.require_column("battery_id"), ct = t.require_column("t"), cc = t.require_column("pc"),
              cd = t.require_column("pd"), ce = t.require_column("e"), cf = t.require_column("cashflow");
    std::vector<ScheduleRow> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        out.push_back({static_cast<int>(t.integer(r, ci)), static_cast<int>(t.integer(r, ct)), field(t, r, cc),
                       field(t, r, cd), field(t, r, ce), field(t, r, cf)});
    return out;
}

void write_trace(std::ostream& out, const PowerNetwork& net, const AusResult& result)
{
    json doc;
    const auto& rep = result.report;
    doc["converged"] = rep.converged;
    doc["iterations"] = rep.iterations;
    doc["final_delta"] = number_or_null(rep.final_delta);
    doc["oscillation"] = rep.oscillation;
    doc["returned_iteration"] = rep.returned_iteration;
    json buses = json::array();
    for (const auto& b : net.buses)
        buses.push_back(b.id);
    doc["bus_ids"] = buses;
    json its = json::array();
    for (const auto& it : result.trace) {
        json j;
        j["k"] = it.k;
        j["delta"] = number_or_null(it.delta);
        j["f"] = number_or_null(it.iso_cost);
        j["g"] = number_or_null(it.battery_cost);
        json mean = json::array();
        for (Eigen::Index b = 0; b < it.mean_lmp.size(); ++b)
            mean.push_back(it.mean_lmp(b));
        j["lmp_mean"] = mean;
        j["lmp_min"] = it.min_lmp;
        j["lmp_max"] = it.max_lmp;
        its.push_back(j);
    }
    doc["trace"] = its;
    out << doc.dump(2) << '\n';
}

TraceDocument read_trace(std::istream& in)
{
    TraceDocument d;
    json doc;
    try {
        in >> doc;
        auto& rep = d.report;
        rep.converged = doc.at("converged").get<bool>();
        rep.iterations = doc.at("iterations").get<int>();
        rep.final_delta = doc.at("final_delta").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                           : doc.at("final_delta").get<double>();
        rep.oscillation = doc.at("oscillation").get<bool>();
        rep.returned_iteration = doc.at("returned_iteration").get<int>();
        d.bus_ids = doc.at("bus_ids").get<std::vector<int>>();
        for (const auto& j : doc.at("trace")) {
            AusIteration it;
            it.k = j.at("k").get<int>();
            it.delta = j.at("delta").get<double>();
            it.iso_cost = j.at("f").get<double>();
            it.battery_cost = j.at("g").get<double>();
            const auto mean = j.at("lmp_mean").get<std::vector<double>>();
            it.mean_lmp = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
            it.min_lmp = j.at("lmp_min").get<double>();
            it.max_lmp = j.at("lmp_max").get<double>();
            d.iterations.push_back(std::move(it));
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed trace: ") + e.what());
    }
    return d;
}

void write_history_line(std::ostream& out, const Trial& t, const std::vector<BessCandidate>& catalog,
                        const PowerNetwork& net, const std::string& method)
{
    json j;
    j["trial"] = t.index;
    j["method"] = method;
    json sites = json::array(), caps = json::array();
    for (int i : t.sites) {
        sites.push_back(catalog.at(i).id);
        caps.push_back(t.config.capacity.at(i));
    }
    j["sites"] = sites;
    j["capacities"] = caps;
    j["budget"] = t.config.budget;
    j["investment"] = t.investment;
    j["R"] = number_or_null(t.R);
    j["failed"] = t.failed;
    if (t.failed)
        j["error"] = t.error;
    // Dense bus order, matching the bus order of buses.csv.
    json scores = json::array();
    for (int b = 0; b < net.num_buses() && b < t.s_cong.size(); ++b)
        scores.push_back(t.s_cong(b));
    j["s_cong"] = scores;
    json days = json::array();
    for (const auto& d : t.days)
        days.push_back({{"day", d.day}, {"cashflow", d.cashflow}, {"iterations", d.iterations},
                        {"converged", d.converged}});
    j["days"] = days;
    out << j.dump() << '\n';
}

std::vector<Trial> read_history(std::istream& in, const std::vector<BessCandidate>& catalog, double budget)
{
    std::map<int, int> index_of;
    for (std::size_t i = 0; i < catalog.size(); ++i)
        index_of[catalog[i].id] = static_cast<int>(i);
    std::vector<Trial> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        try {
            const auto j = json::parse(line);
            Trial t;
            t.index = j.at("trial").get<int>();
            t.config.budget = j.contains("budget") ? j.at("budget").get<double>() : budget;
            t.config.capacity.assign(catalog.size(), 0.0);
            const auto ids = j.at("sites").get<std::vector<int>>();
            const auto caps = j.at("capacities").get<std::vector<double>>();
            if (ids.size() != caps.size())
                throw InputError("sites and capacities differ in length");
            for (std::size_t k = 0; k < ids.size(); ++k) {
                const auto it = index_of.find(ids[k]);
                if (it == index_of.end())
                    throw InputError("unknown candidate " + std::to_string(ids[k]));
                t.config.capacity[it->second] = caps[k];
            }
            t.sites = t.config.sites();
            t.investment = j.at("investment").get<double>();
            t.failed = j.at("failed").get<bool>();
            t.R = j.at("R").is_null() ? -std::numeric_limits<double>::infinity() : j.at("R").get<double>();
            if (j.contains("error"))
                t.error = j.at("error").get<std::string>();
            const auto sc = j.at("s_cong").get<std::vector<double>>();
            t.s_cong = Eigen::Map<const Eigen::VectorXd>(sc.data(), static_cast<Eigen::Index>(sc.size()));
            for (const auto& d : j.at("days"))
                t.days.push_back({d.at("day").get<int>(), d.at("cashflow").get<double>(),
                                  d.at("iterations").get<int>(), d.at("converged").get<bool>()});
            out.push_back(std::move(t));
        } catch (const std::exception& e) {
            throw InputError("history line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_summary_header(std::ostream& out)
{
    out << "trial,R,sites,capacities\n";
}

void write_summary_line(std::ostream& out, const Trial& t, const std::vector<BessCandidate>& catalog)
{
    out << t.index << ',' << format_double(t.R) << ',';
    for (std::size_t k = 0; k < t.sites.size(); ++k)
        out << (k ? ";" : "") << catalog.at(t.sites[k]).id;
    out << ',';
    for (std::size_t k = 0; k < t.sites.size(); ++k)
        out << (k ? ";" : "") << format_double(t.config.capacity.at(t.sites[k]));
    out << '\n';
}

std::vector<SummaryRow> read_summary(std::istream& in, const std::string& source)
{
    const auto t = csv::read(in, source);
    const int ct = t.require_column("trial"), cr = t.require_column("R"), cs = t.require_column("sites"),
              cc = t.require_column("capacities");
    std::vector<SummaryRow> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SummaryRow row{static_cast<int>(t.integer(r, ct)), field(t, r, cr), {}, {}};
        try {
            for (const auto& s : split(t.text(r, cs), ';'))
                row.sites.push_back(std::stoi(s));
            for (const auto& s : split(t.text(r, cc), ';'))
                row.capacities.push_back(parse_double(s));
        } catch (const std::exception& e) {
            t.fail(r, e.what());
        }
        if (row.sites.size() != row.capacities.size())
            t.fail(r, "sites and capacities differ in length");
        out.push_back(std::move(row));
    }
    return out;
}

void write_timings(std::ostream& out, const std::vector<Trial>& trials)
{
    out << "trial,wall_seconds\n";
    for (const auto& t : trials)
        out << t.index << ',' << format_double(t.wall_seconds) << '\n';
}

}  // namespace bessplan::io
