#pragma once

#include "bessplan/dispatch.hpp"
#include "bessplan/market.hpp"
#include "bessplan/network.hpp"
#include "bessplan/planner.hpp"
#include "bessplan/scheduling.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

// Writers and readers for every file the tools emit. Formats are documented in
// docs/formats.md; each reader accepts exactly what the matching writer emits.
namespace bessplan::io {

// Shortest text that parses back to the same double ("inf", "-inf", "nan" for
// non-finite values).
std::string format_double(double v);
double parse_double(const std::string& s);

// bus_id,period_index,lmp. Period indices are absolute (first + t).
void write_lmps(std::ostream& out, const PowerNetwork& net, const Eigen::MatrixXd& lmps, int first_period = 0);
struct LmpTable {
    std::vector<int> bus_ids;  // ascending
    int first_period = 0;
    Eigen::MatrixXd lmps;      // rows follow bus_ids
};
LmpTable read_lmps(std::istream& in, const std::string& source = "lmp.csv");

// bus_id,score
void write_congestion(std::ostream& out, const PowerNetwork& net, const CongestionScore& score);
std::vector<std::pair<int, double>> read_congestion(std::istream& in, const std::string& source = "congestion.csv");

// line_id,bus_id,factor
void write_ptdf(std::ostream& out, const PowerNetwork& net, const PtdfMatrix& ptdf);
struct PtdfEntry {
    int line_id;
    int bus_id;
    double factor;
};
std::vector<PtdfEntry> read_ptdf(std::istream& in, const std::string& source = "ptdf.csv");

// battery_id,t,pc,pd,e,cashflow; e is the SOC at the start of period t and
// cashflow is the owner's receipt lambda * hours * (pd - pc).
void write_schedule(std::ostream& out, const ScheduleSolution& sol, bool installed_only = true);
struct ScheduleRow {
    int battery_id;
    int t;
    double pc, pd, e, cashflow;
};
std::vector<ScheduleRow> read_schedule(std::istream& in, const std::string& source = "schedule.csv");

// Per-iteration AUS trace as a single JSON document.
void write_trace(std::ostream& out, const PowerNetwork& net, const AusResult& result);
struct TraceDocument {
    ConvergenceReport report;
    std::vector<AusIteration> iterations;
    std::vector<int> bus_ids;
};
TraceDocument read_trace(std::istream& in);

// One JSON object per line, in trial order. Wall time is left out so that the
// file depends only on the inputs and the seed.
void write_history_line(std::ostream& out, const Trial& t, const std::vector<BessCandidate>& catalog,
                        const PowerNetwork& net, const std::string& method);
std::vector<Trial> read_history(std::istream& in, const std::vector<BessCandidate>& catalog, double budget);

// trial,R,sites,capacities with ';'-joined candidate ids and capacities.
void write_summary_header(std::ostream& out);
void write_summary_line(std::ostream& out, const Trial& t, const std::vector<BessCandidate>& catalog);
struct SummaryRow {
    int trial;
    double R;
    std::vector<int> sites;
    std::vector<double> capacities;
};
std::vector<SummaryRow> read_summary(std::istream& in, const std::string& source = "summary.csv");

// trial,wall_seconds
void write_timings(std::ostream& out, const std::vector<Trial>& trials);

}  // namespace bessplan::io
