#pragma once

#include "bessplan/market.hpp"
#include "bessplan/scheduling.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bessplan {

using Rng = std::mt19937_64;

struct SearchSpace {
    std::vector<BessCandidate> catalog;
    int max_sites = 1;
    double budget = 0.0;
    // Number of capacity levels per site; 0 means continuous. Level j of n is the
    // fraction (j + 1) / n of the site's budget share.
    int capacity_levels = 0;

    void validate() const;
};

// A proposal: chosen catalog indices with a capacity fraction each. The
// fraction scales the site's share (A - sum F) / (|S| G_i) of the budget.
struct SiteChoice {
    std::vector<int> sites;         // sorted catalog indices
    std::vector<double> fractions;  // in (0, 1], aligned with sites
};

// Snaps a fraction to the capacity grid (down, at least the first level).
double snap_fraction(const SearchSpace& space, double fraction);

// Turns a site choice into capacities. Sites whose fixed costs break the budget
// are dropped, most expensive first; when even one site is unaffordable the
// cheapest chosen site is kept at its first level and the result is over budget.
BessConfig realize(const SearchSpace& space, const SiteChoice& choice);

// Recovers the site choice from a configuration (inverse of realize for
// configurations produced by it).
SiteChoice site_choice(const SearchSpace& space, const BessConfig& config);

// Samples configurations with sites drawn without replacement with probability
// proportional to `site_weights` (uniform when they sum to zero) and fractions
// drawn uniformly. `sites_per_config` of 0 draws the count uniformly from
// 1..max_sites. Throws InputError when the requested count exceeds the catalog.
std::vector<BessConfig> congestion_seed(const SearchSpace& space, const std::vector<double>& site_weights,
                                        int count, Rng& rng, int sites_per_config = 0);

// Per-candidate weights from per-bus congestion scores.
std::vector<double> site_weights(const SearchSpace& space, const PowerNetwork& net, const CongestionScore& score);

struct HorizonSpec {
    int day_hours = 24;
    int window_hours = 24;  // 24 or 48; the second day only shapes the schedule
    double years = 1.0;
    int days_per_year = 365;
    double discount_rate = 0.05;
    double peak_fraction = 1.0;

    void validate() const;
};

struct DayOutcome {
    int day = 0;
    double cashflow = 0.0;  // owner's receipts over the first day_hours periods, $
    int iterations = 0;
    bool converged = false;
};

struct Trial {
    int index = 0;
    BessConfig config;
    std::vector<int> sites;  // catalog indices
    double investment = 0.0;
    double R = 0.0;  // -inf when failed
    bool failed = false;
    std::string error;
    Eigen::VectorXd s_cong;  // per dense bus
    std::vector<DayOutcome> days;
    double wall_seconds = 0.0;  // not serialized into the history
};

struct SearchHistory {
    std::vector<Trial> trials;
    int best = -1;

    void append(Trial t);
    // True when some trial evaluated exactly these capacities.
    bool contains(const BessConfig& config) const;
    // Argmax of R with ties to the earliest trial; -1 when every trial failed.
    static int best_index(const std::vector<Trial>& trials);
};

double npv(const std::vector<double>& daily_cashflows, double annual_rate, int days_per_year);

// Top ceil(fraction * D) days by score, ties to the lower index; returned sorted.
std::vector<int> select_peak_days(const std::vector<double>& day_scores, double fraction);

// Everything a trial evaluation needs besides the configuration.
struct SimulationContext {
    const PowerNetwork& net;
    const PtdfMatrix& ptdf;
    const BusLoads& loads;
    const std::vector<BessCandidate>& catalog;
    HorizonSpec horizon;
    AusParams aus;
    std::vector<int> days;  // base day indices to simulate
    int threads = 1;

    int base_days() const;
};

// No-battery congestion score of each base day (sum over buses).
std::vector<double> daily_congestion(const PowerNetwork& net, const PtdfMatrix& ptdf, const BusLoads& loads,
                                     const HorizonSpec& horizon, const lp::Tolerances& tol = {});
// No-battery congestion score per bus pooled over the given days.
CongestionScore base_congestion(const PowerNetwork& net, const PtdfMatrix& ptdf, const BusLoads& loads,
                                const HorizonSpec& horizon, const std::vector<int>& days,
                                const lp::Tolerances& tol = {});

// Calendar cashflows: the simulated days repeat in order over years * days_per_year days.
std::vector<double> calendar_cashflows(const std::vector<double>& day_cashflows, const HorizonSpec& horizon);

Trial evaluate_config(const BessConfig& config, const SimulationContext& ctx);

struct ImpactComparison {
    double R_with_impact = 0.0;
    double R_fixed_price = 0.0;
};

ImpactComparison compare_lmp_impact(const BessConfig& config, const SimulationContext& ctx);

struct TpeSettings {
    double gamma = 0.15;
    int n_startup = 10;
    int n_ei = 24;
    double prior_weight = 1.0;  // Laplace smoothing
};

enum class SearchMethod { Tpe, Random };
const char* to_string(SearchMethod m);
SearchMethod parse_method(const std::string& s);

// Good/bad density-ratio proposal over past trials; below n_startup trials it
// falls back to congestion_seed with `site_weights`.
BessConfig tpe_suggest(const SearchHistory& history, const SearchSpace& space, const std::vector<double>& site_weights,
                       const TpeSettings& settings, Rng& rng);

BessConfig random_suggest(const SearchSpace& space, Rng& rng);

struct SearchOptions {
    SearchMethod method = SearchMethod::Tpe;
    int trials = 20;
    std::uint64_t seed = 1;
    TpeSettings tpe;
};

using Evaluator = std::function<Trial(const BessConfig&)>;
// Called with each trial and the refreshed site weights after it is appended.
using WeightUpdate = std::function<std::vector<double>(const Trial&)>;

SearchHistory run_search(const SearchSpace& space, const SearchOptions& options, const Evaluator& evaluate,
                         std::vector<double> site_weights, const WeightUpdate& update_weights = {},
                         const std::function<void(const Trial&)>& on_trial = {});

}  // namespace bessplan
