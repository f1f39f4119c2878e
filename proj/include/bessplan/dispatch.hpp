#pragma once

#include "bessplan/lp.hpp"
#include "bessplan/network.hpp"

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace bessplan {

// Offer of one battery to the market, one entry per period of the dispatch
// window. Charging is priced with charge_price <= 0 (willingness to pay) and
// discharging with discharge_price >= 0.
struct BatteryBid {
    int battery_id = 0;
    int bus_id = 0;
    std::vector<double> charge_price;
    std::vector<double> discharge_price;
    std::vector<double> charge_min, charge_max;
    std::vector<double> discharge_min, discharge_max;

    // All-zero offer over T periods (battery present but unable to clear).
    static BatteryBid empty(int battery_id, int bus_id, int periods);
    int periods() const { return static_cast<int>(charge_price.size()); }
};

struct BidSet {
    std::vector<BatteryBid> bids;

    // Throws InputError on length mismatch, unordered or negative bounds, or
    // prices with the wrong sign.
    void validate(int periods) const;
};

struct DispatchModel {
    lp::LinearProgram lp;
    int periods = 0;
    int first_period = 0;
    double period_hours = 1.0;
    int num_generators = 0;
    int num_lines = 0;
    std::vector<int> battery_ids;
    std::vector<int> battery_bus;  // dense bus index

    int gen_var(int m, int t) const { return m * periods + t; }
    int charge_var(int i, int t) const { return (num_generators + 2 * i) * periods + t; }
    int discharge_var(int i, int t) const { return (num_generators + 2 * i + 1) * periods + t; }
    int balance_row(int t) const { return t; }
    int line_row(int l, int t) const { return periods + l * periods + t; }
};

// Builds the dispatch LP for load periods [first, first + count). Bid vectors
// are indexed by offset within the window. When `installed` is non-null every
// bid must name a battery in it.
DispatchModel build_dispatch(const PowerNetwork& net, const PtdfMatrix& ptdf, const BusLoads& loads,
                             const BidSet& bids, int first, int count,
                             const std::vector<int>* installed = nullptr);

class DispatchInfeasible : public std::runtime_error {
public:
    DispatchInfeasible(const std::string& what, std::vector<int> periods)
        : std::runtime_error(what), periods_(std::move(periods))
    {
    }
    // Absolute load period indices that are infeasible on their own.
    const std::vector<int>& periods() const { return periods_; }

private:
    std::vector<int> periods_;
};

struct DispatchSolution {
    int periods = 0;
    int first_period = 0;
    double period_hours = 1.0;
    Eigen::MatrixXd generation;  // generators x periods
    Eigen::MatrixXd charge;      // batteries x periods
    Eigen::MatrixXd discharge;   // batteries x periods
    std::vector<int> battery_ids;
    std::vector<int> battery_bus;
    Eigen::VectorXd balance_dual;  // mu_t
    // Line-limit multipliers, both <= 0. pi_upper is nonzero when the flow
    // sits at +limit, pi_lower when it sits at -limit.
    Eigen::MatrixXd pi_upper;  // lines x periods
    Eigen::MatrixXd pi_lower;  // lines x periods
    Eigen::MatrixXd flows;     // lines x periods
    double objective = 0.0;         // LP objective, $/h summed over periods
    double total_cost = 0.0;        // objective * period_hours, includes bid terms
    double generation_cost = 0.0;   // thermal part only, $
    bool degenerate = false;
    lp::LpSolution lp;
};

// Throws DispatchInfeasible naming the offending periods.
DispatchSolution solve_dispatch(const DispatchModel& model, const lp::Tolerances& tol = {});

// Convenience: build and solve in one go.
DispatchSolution run_dispatch(const PowerNetwork& net, const PtdfMatrix& ptdf, const BusLoads& loads,
                              const BidSet& bids, int first, int count, const lp::Tolerances& tol = {});

// lambda(b, t) = mu_t + sum_l SF(l, b) * (pi_upper - pi_lower)(l, t).
// A binding +limit raises the price at buses whose injection relieves it.
Eigen::MatrixXd extract_lmps(const DispatchSolution& sol, const PtdfMatrix& ptdf);

struct CongestionScore {
    Eigen::VectorXd score;  // per dense bus, >= 0
    int periods = 0;
};

// Mean over periods of sum_l [max(SF,0) |pi_upper| + max(-SF,0) |pi_lower|].
// Each history entry holds (lines x periods) multipliers; all entries are pooled.
CongestionScore congestion_score(const std::vector<Eigen::MatrixXd>& pi_upper,
                                 const std::vector<Eigen::MatrixXd>& pi_lower, const PtdfMatrix& ptdf);
CongestionScore congestion_score(const DispatchSolution& sol, const PtdfMatrix& ptdf);

// max over (battery, period) of charge * discharge.
double complementarity_violation(const Eigen::MatrixXd& charge, const Eigen::MatrixXd& discharge);
double complementarity_violation(const DispatchSolution& sol);

}  // namespace bessplan
