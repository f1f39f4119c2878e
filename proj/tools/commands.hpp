#pragma once

#include "bessplan/market.hpp"
#include "bessplan/planner.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace bessplan::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 1,
    kInfeasible = 2,
    kNotConverged = 3,
};

// Everything a subcommand reads. Filled from the JSON config file, then from
// BESSPLAN_OUTPUT_DIR, then from flags (flags win).
struct RunConfig {
    std::filesystem::path case_dir;
    std::filesystem::path loads;    // defaults to case_dir / loads.csv
    std::filesystem::path catalog;  // defaults to case_dir / catalog.csv
    std::filesystem::path output_dir = "out";
    double period_hours = 1.0;
    int first_period = 0;
    int periods = 0;  // 0: one day (horizon.day_hours) or the whole series if shorter
    std::uint64_t seed = 1;
    int threads = 0;  // 0: hardware concurrency
    double budget = 0.0;
    std::map<int, double> capacities;  // candidate id -> MWh
    AusParams aus;
    double margin = 0.05;
    HorizonSpec horizon;
    SearchOptions search;
    int max_sites = 1;
    int capacity_levels = 0;
    bool fixed_price = false;
};

// Reads a JSON config; relative paths resolve against the file's directory.
RunConfig load_config(const std::filesystem::path& path);
void apply_config_json(RunConfig& cfg, const std::string& json_text, const std::filesystem::path& base_dir);

// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bessplan::cli
