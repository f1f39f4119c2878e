#pragma once

#include "bessplan/dispatch.hpp"
#include "bessplan/scheduling.hpp"

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace bessplan {

// One simulated window: load periods [first, first + count).
struct MarketWindow {
    const PowerNetwork& net;
    const PtdfMatrix& ptdf;
    const BusLoads& loads;
    int first = 0;
    int count = 0;
};

struct AusParams {
    double epsilon = 1e-3;  // $/MWh, on the L2 norm of the LMP change
    int max_iter = 10;
    std::shared_ptr<const BiddingStrategy> strategy = std::make_shared<MarginStrategy>(0.05);
    VariantSpec variant;
    lp::Tolerances tol;
    lp::MilpOptions milp;
};

struct AusIteration {
    int k = 0;
    double delta = 0.0;
    double iso_cost = 0.0;      // f: dispatch cost including bid terms, $
    double battery_cost = 0.0;  // g: sum lambda * hours * (charge - discharge) over cleared power, $
    Eigen::VectorXd mean_lmp;   // per dense bus over the window
    double min_lmp = 0.0;
    double max_lmp = 0.0;
};

struct ConvergenceReport {
    bool converged = false;
    int iterations = 0;
    double final_delta = 0.0;
    bool oscillation = false;
    int returned_iteration = 0;  // k of the iterate handed back
};

struct AusResult {
    Eigen::MatrixXd base_lmps;  // no-battery prices, iteration 0
    Eigen::MatrixXd lmps;       // buses x periods of the returned iterate
    DispatchSolution dispatch;
    ScheduleSolution schedule;  // schedule whose bids produced `dispatch`
    BidSet bids;
    std::vector<AusIteration> trace;
    ConvergenceReport report;
    std::vector<int> sites;  // catalog indices of installed batteries
};

class AusError : public std::runtime_error {
public:
    AusError(const std::string& what, int iteration) : std::runtime_error(what), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

double price_delta(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Installed subset of a configuration in the form the scheduler consumes.
struct InstalledFleet {
    std::vector<int> sites;
    std::vector<BessCandidate> units;
    std::vector<double> capacity;
};
InstalledFleet installed_fleet(const std::vector<BessCandidate>& catalog, const BessConfig& config);

// No-battery dispatch of the window.
DispatchSolution base_dispatch(const MarketWindow& w, const lp::Tolerances& tol = {});

struct AusStep {
    ScheduleSolution schedule;
    BidSet bids;
    DispatchSolution dispatch;
    Eigen::MatrixXd lmps;
};

// One best-response round: schedule against `prices`, bid, re-dispatch.
AusStep aus_step(const MarketWindow& w, const InstalledFleet& fleet, double budget, const Eigen::MatrixXd& prices,
                 const AusParams& params);

// Battery cost g of a dispatch evaluated at the given bus prices.
double battery_cost(const DispatchSolution& sol, const Eigen::MatrixXd& lmps);

// Alternating dispatch / self-scheduling until the LMPs settle. Throws
// BudgetInfeasible for an over-budget configuration and AusError (carrying the
// iteration index) when a dispatch or schedule fails.
AusResult run_aus(const MarketWindow& w, const std::vector<BessCandidate>& catalog, const BessConfig& config,
                  const AusParams& params = {});

// One flag per transition k-1 -> k: true when both f and g decreased strictly.
std::vector<bool> pareto_check(const std::vector<AusIteration>& trace, double tol = 1e-6);

struct DeviationPoint {
    int battery = 0;  // index into result.bids
    double scale = 1.0;
    double iso_cost = 0.0;
    double battery_cost = 0.0;
    // The cleared power respects the unit's SOC limits; a deviation that
    // clears an unrealizable schedule is not a strategy the owner can play.
    bool admissible = true;
    bool improves = false;  // admissible, g strictly lower, f not higher
};

// Scales one battery's bid prices by each grid factor in [0, 2] (21 points by
// default), re-dispatches and compares f and g to the returned iterate.
std::vector<DeviationPoint> bid_deviation_grid(const MarketWindow& w, const std::vector<BessCandidate>& catalog,
                                               const BessConfig& config, const AusResult& result, int points = 21,
                                               const lp::Tolerances& tol = {}, double improve_tol = 1e-6);

struct ClearingViolation {
    int battery_id = 0;
    int period = 0;
    std::string what;
};

// Cleared discharge needs discharge price <= lambda, cleared charge needs
// |charge price| >= lambda at the battery bus.
std::vector<ClearingViolation> clearing_rule_violations(const DispatchSolution& sol, const BidSet& bids,
                                                        const PowerNetwork& net, const Eigen::MatrixXd& lmps,
                                                        double power_tol = 1e-7, double price_tol = 1e-6);

}  // namespace bessplan
