#pragma once

#include "bessplan/dispatch.hpp"
#include "bessplan/lp.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bessplan {

struct BessCandidate {
    int id = 0;
    int bus_id = 0;
    double fixed_cost = 0.0;      // $ per installation
    double unit_cost = 0.0;       // $ per MWh of capacity
    double charge_rate = 1.0;     // MW per MWh
    double discharge_rate = 1.0;  // MW per MWh
    double soc_min = 0.0;         // fraction of capacity
    double soc_max = 1.0;
    double eta_charge = 1.0;
    double eta_discharge = 1.0;
    std::optional<double> initial_soc;  // fraction of capacity, defaults to soc_min

    double initial_fraction() const { return initial_soc.value_or(soc_min); }
    void validate() const;
};

std::vector<BessCandidate> load_catalog(const std::filesystem::path& csv_path);

// Installation decision over a catalog: capacity[i] > 0 means candidate i is built.
struct BessConfig {
    std::vector<double> capacity;  // MWh, one per catalog entry
    double budget = 0.0;

    bool installed(std::size_t i) const { return capacity.at(i) > 0.0; }
    std::vector<int> sites() const;
    double investment(const std::vector<BessCandidate>& catalog) const;
    // Throws InputError when sizes mismatch, capacities are negative, or the
    // investment exceeds the budget by more than `slack`.
    void validate(const std::vector<BessCandidate>& catalog, double slack = 1e-7) const;
};

struct VariantSpec {
    bool zero_fixed_cost = false;          // no install binaries, no fixed cost
    bool enforce_complementarity = false;  // no simultaneous charge and discharge
};

struct ScheduleInputs {
    std::vector<BessCandidate> candidates;
    Eigen::MatrixXd prices;  // candidates x periods, $/MWh at each candidate's bus
    double period_hours = 1.0;
    double budget = 0.0;
    VariantSpec variant;
    // Empty, or one entry per candidate; a value pins the capacity (and the
    // install decision to capacity > 0).
    std::vector<std::optional<double>> fixed_capacity;
};

class BudgetInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScheduleModel {
    lp::MilpProblem milp;
    ScheduleInputs inputs;
    int periods = 0;
    std::vector<double> big_m;  // capacity cap per candidate

    // Variable indices; -1 when a variable is not part of the model.
    std::vector<int> install_var;
    std::vector<int> capacity_var;
    std::vector<int> charge_start;     // + t
    std::vector<int> discharge_start;  // + t
    std::vector<int> soc_start;        // + t, t = 0..periods
    std::vector<int> mode_start;       // + t, complementarity binaries
};

ScheduleModel build_schedule(const ScheduleInputs& in);

struct ScheduleSolution {
    lp::Status status = lp::Status::Infeasible;
    std::vector<int> candidate_ids;
    std::vector<int> bus_ids;
    std::vector<int> installed;      // 0/1
    std::vector<double> capacity;    // MWh
    Eigen::MatrixXd charge;          // candidates x periods, MW
    Eigen::MatrixXd discharge;       // candidates x periods, MW
    Eigen::MatrixXd soc;             // candidates x (periods + 1), MWh at period start
    Eigen::MatrixXd period_cost;     // lambda * hours * (charge - discharge), $
    double objective = 0.0;          // investment + sum of period_cost
    double investment = 0.0;
    double relaxation_objective = 0.0;
    long nodes = 0;
    bool node_limit_reached = false;
    double period_hours = 1.0;

    bool optimal() const { return status == lp::Status::Optimal; }
    // Money received by the owner: -period_cost.
    Eigen::MatrixXd cashflow() const { return -period_cost; }
    double energy_cost() const { return period_cost.sum(); }
};

ScheduleSolution solve_schedule(const ScheduleModel& m, const lp::Tolerances& tol = {},
                                const lp::MilpOptions& opts = {});

double complementarity_violation(const ScheduleSolution& sol);

struct SocReplay {
    std::vector<double> soc;  // periods + 1 values starting at the initial SOC
    bool within_bounds = true;
    bool terminal_ok = true;  // final SOC >= initial SOC

    bool feasible() const { return within_bounds && terminal_ok; }
};

// Replays the SOC recursion for one unit from its initial SOC.
SocReplay replay_soc(const BessCandidate& unit, double capacity, const Eigen::VectorXd& charge,
                     const Eigen::VectorXd& discharge, double period_hours, double tol = 1e-6);

// Per (candidate, period): whether the SOC keeps a full period of charge and
// discharge headroom on both sides, the premise of the unique-equilibrium result.
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> soc_interior(const ScheduleSolution& sol,
                                                                const std::vector<BessCandidate>& candidates);

// Maps a schedule and the prices it was computed against to market offers.
class BiddingStrategy {
public:
    virtual ~BiddingStrategy() = default;
    virtual BidSet make_bids(const ScheduleSolution& schedule, const Eigen::MatrixXd& prices) const = 0;
};

// discharge price lambda (1 - margin) clipped at 0, charge price -lambda (1 + margin)
// clipped at 0, quantity caps equal to the scheduled power.
class MarginStrategy : public BiddingStrategy {
public:
    explicit MarginStrategy(double margin = 0.05);
    BidSet make_bids(const ScheduleSolution& schedule, const Eigen::MatrixXd& prices) const override;
    double margin() const { return margin_; }

private:
    double margin_;
};

BidSet make_bids(const ScheduleSolution& schedule, const Eigen::MatrixXd& prices, double margin = 0.05);

// Prices seen by each candidate: rows of the bus LMP matrix.
Eigen::MatrixXd candidate_prices(const std::vector<BessCandidate>& candidates, const PowerNetwork& net,
                                 const Eigen::MatrixXd& lmps);

}  // namespace bessplan
