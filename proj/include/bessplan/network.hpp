#pragma once

#include "bessplan/csv.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bessplan {

struct Bus {
    int id = 0;
    std::string name;
};

// Endpoints are dense bus indices, not external ids.
struct Line {
    int id = 0;
    int from = 0;
    int to = 0;
    double reactance = 0.0;   // per unit
    double flow_limit = 0.0;  // MW
};

struct Generator {
    int id = 0;
    int bus = 0;  // dense bus index
    double marginal_cost = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;
};

struct PowerNetwork {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    int slack = 0;  // dense bus index

    int num_buses() const { return static_cast<int>(buses.size()); }
    int num_lines() const { return static_cast<int>(lines.size()); }

    // External bus id to dense index; throws InputError for unknown ids.
    int bus_index(int bus_id) const;
    bool has_bus(int bus_id) const { return index_.count(bus_id) > 0; }

    int add_bus(int id, std::string name = {});
    void add_line(int id, int from_bus_id, int to_bus_id, double reactance, double flow_limit);
    void add_generator(int id, int bus_id, double marginal_cost, double p_min, double p_max);
    // Lowest-id bus carrying a generator, or the lowest-id bus when there are none.
    void set_default_slack();
    void set_slack_bus(int bus_id) { slack = bus_index(bus_id); }

    // Throws InputError naming the offending element.
    void validate() const;

private:
    std::map<int, int> index_;
};

// Groups of dense bus indices that are connected through lines.
std::vector<std::vector<int>> connected_components(const PowerNetwork& net);

// Per-bus load series keyed by external bus id.
struct LoadSeries {
    int bus_id = 0;
    std::vector<double> values;  // MW per period
};

// Dense bus-index x period load matrix after validation.
struct BusLoads {
    Eigen::MatrixXd mw;
    double period_hours = 1.0;

    int periods() const { return static_cast<int>(mw.cols()); }
};

// Returns the common horizon T. Throws InputError for unknown buses, negative
// values or mismatched horizons (the message lists the offending buses).
int validate_series(const PowerNetwork& net, const std::vector<LoadSeries>& loads);

BusLoads make_bus_loads(const PowerNetwork& net, const std::vector<LoadSeries>& loads, double period_hours = 1.0);

struct Case {
    PowerNetwork network;
    std::vector<LoadSeries> loads;
};

// Reads buses.csv, lines.csv, generators.csv and loads.csv from a directory.
// Column layout is documented in docs/formats.md.
Case load_case(const std::filesystem::path& dir);
PowerNetwork load_network(const std::filesystem::path& dir);
std::vector<LoadSeries> load_series(const std::filesystem::path& loads_csv, const PowerNetwork& net);

// Line-by-bus shift factors: flow change on each line for a 1 MW injection at a
// bus withdrawn at the slack. The slack column is identically zero.
struct PtdfMatrix {
    Eigen::MatrixXd factors;  // lines x buses
    int slack = 0;

    double operator()(int line, int bus) const { return factors(line, bus); }
    int num_lines() const { return static_cast<int>(factors.rows()); }
    int num_buses() const { return static_cast<int>(factors.cols()); }
};

PtdfMatrix compute_ptdf(const PowerNetwork& net);

// Line flows for a balanced bus injection vector (MW, dense bus order).
Eigen::VectorXd line_flows(const PtdfMatrix& ptdf, const Eigen::VectorXd& injections);

}  // namespace bessplan
