#include "bessplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bessplan {

double snap_fraction(const SearchSpace& space, double fraction)
{
    fraction = std::clamp(fraction, 0.0, 1.0);
    if (space.capacity_levels <= 0)
        return fraction > 0.0 ? fraction : std::numeric_limits<double>::min();
    const int n = space.capacity_levels;
    // Tolerate round-off right below a level boundary.
    const int level = std::clamp(static_cast<int>(std::floor(fraction * n + 1e-9)), 1, n);
    return static_cast<double>(level) / n;
}

BessConfig realize(const SearchSpace& space, const SiteChoice& choice)
{
    const auto n = space.catalog.size();
    BessConfig cfg;
    cfg.budget = space.budget;
    cfg.capacity.assign(n, 0.0);
    if (choice.sites.empty())
        return cfg;

    std::vector<std::pair<int, double>> picks;
    for (std::size_t k = 0; k < choice.sites.size(); ++k)
        picks.emplace_back(choice.sites[k], snap_fraction(space, choice.fractions.at(k)));
    std::sort(picks.begin(), picks.end());

    auto fixed_total = [&] {
        double s = 0.0;
        for (const auto& p : picks)
            s += space.catalog[p.first].fixed_cost;
        return s;
    };
    while (picks.size() > 1 && fixed_total() >= space.budget) {
        auto worst = std::max_element(picks.begin(), picks.end(), [&](const auto& a, const auto& b) {
            return space.catalog[a.first].fixed_cost < space.catalog[b.first].fixed_cost;
        });
        picks.erase(worst);
    }
    const double remaining = space.budget - fixed_total();
    const double m = static_cast<double>(picks.size());
    for (const auto& [i, frac] : picks) {
        const auto& c = space.catalog[i];
        // An unaffordable single site keeps a nominal size and fails the budget
        // check downstream.
        const double share = remaining > 0.0 ? remaining / m : space.budget;
        cfg.capacity[i] = std::max(frac * share / c.unit_cost, std::numeric_limits<double>::min());
    }
    return cfg;
}

SiteChoice site_choice(const SearchSpace& space, const BessConfig& config)
{
    SiteChoice out;
    out.sites = config.sites();
    double fixed = 0.0;
    for (int i : out.sites)
        fixed += space.catalog[i].fixed_cost;
    const double remaining = space.budget - fixed;
    const double m = static_cast<double>(out.sites.size());
    for (int i : out.sites) {
        const double share = remaining > 0.0 ? remaining / m : space.budget;
        const double f = share > 0.0 ? config.capacity[i] * space.catalog[i].unit_cost / share : 1.0;
        out.fractions.push_back(std::clamp(f, 0.0, 1.0));
    }
    return out;
}

namespace {

double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Weighted draw without replacement; falls back to uniform over the remaining
// items once no positive weight is left.
std::vector<int> draw_sites(std::vector<double> w, int k, Rng& rng)
{
    std::vector<int> out;
    const int n = static_cast<int>(w.size());
    std::vector<char> taken(n, 0);
    for (int r = 0; r < k; ++r) {
        double total = 0.0;
        for (int i = 0; i < n; ++i)
            if (!taken[i])
                total += w[i];
        int pick = -1;
        if (total > 0.0) {
            double u = uniform01(rng) * total;
            for (int i = 0; i < n; ++i) {
                if (taken[i] || w[i] <= 0.0)
                    continue;
                pick = i;
                if (u < w[i])
                    break;
                u -= w[i];
            }
        } else {
            std::vector<int> free;
            for (int i = 0; i < n; ++i)
                if (!taken[i])
                    free.push_back(i);
            pick = free[uniform_int(rng, 0, static_cast<int>(free.size()) - 1)];
        }
        taken[pick] = 1;
        out.push_back(pick);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double draw_fraction(const SearchSpace& space, Rng& rng)
{
    if (space.capacity_levels > 0)
        return static_cast<double>(uniform_int(rng, 1, space.capacity_levels)) / space.capacity_levels;
    // (0, 1]
    return 1.0 - uniform01(rng);
}

}  // namespace

std::vector<BessConfig> congestion_seed(const SearchSpace& space, const std::vector<double>& site_weights, int count,
                                        Rng& rng, int sites_per_config)
{
    space.validate();
    const int n = static_cast<int>(space.catalog.size());
    if (sites_per_config > n)
        throw InputError("cannot pick " + std::to_string(sites_per_config) + " sites from a catalog of " +
                         std::to_string(n));
    if (static_cast<int>(site_weights.size()) != n)
        throw InputError("site weights must cover every catalog entry");
    for (double v : site_weights)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InputError("site weights must be finite and nonnegative");
    std::vector<BessConfig> out;
    for (int c = 0; c < count; ++c) {
        const int k = sites_per_config > 0 ? sites_per_config : uniform_int(rng, 1, space.max_sites);
        SiteChoice choice;
        choice.sites = draw_sites(site_weights, k, rng);
        for (std::size_t j = 0; j < choice.sites.size(); ++j)
            choice.fractions.push_back(draw_fraction(space, rng));
        out.push_back(realize(space, choice));
    }
    return out;
}

BessConfig random_suggest(const SearchSpace& space, Rng& rng)
{
    space.validate();
    const int n = static_cast<int>(space.catalog.size());
    const int k = uniform_int(rng, 1, space.max_sites);
    SiteChoice choice;
    choice.sites = draw_sites(std::vector<double>(n, 1.0), k, rng);
    for (std::size_t j = 0; j < choice.sites.size(); ++j)
        choice.fractions.push_back(draw_fraction(space, rng));
    return realize(space, choice);
}

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kRedraws = 8;

// Parzen model of one group of trials.
struct GroupModel {
    std::vector<double> count_prob;  // index k - 1
    std::vector<double> inclusion;   // per site
    std::vector<double> level_prob;  // grid spaces
    std::vector<double> centers;     // continuous spaces
    double bandwidth = 0.2;
    double prior_mass = 1.0;

    double fraction_density(const SearchSpace& space, double f) const
    {
        if (space.capacity_levels > 0) {
            const int level = std::clamp(static_cast<int>(std::lround(f * space.capacity_levels)), 1,
                                         space.capacity_levels);
            return level_prob[level - 1];
        }
        // Uniform prior on [0, 1] plus Gaussian kernels renormalized to [0, 1].
        double d = prior_mass;
        for (double c : centers) {
            const double z = (f - c) / bandwidth;
            const double mass = 0.5 * (std::erf((1.0 - c) / (bandwidth * std::sqrt(2.0))) -
                                       std::erf((0.0 - c) / (bandwidth * std::sqrt(2.0))));
            d += std::exp(-0.5 * z * z) / (bandwidth * std::sqrt(2.0 * kPi)) / std::max(mass, 1e-12);
        }
        return d / (prior_mass + static_cast<double>(centers.size()));
    }

    double draw_fraction(const SearchSpace& space, Rng& rng) const
    {
        if (space.capacity_levels > 0) {
            std::discrete_distribution<int> pick(level_prob.begin(), level_prob.end());
            return static_cast<double>(pick(rng) + 1) / space.capacity_levels;
        }
        const double total = prior_mass + static_cast<double>(centers.size());
        const double u = uniform01(rng) * total;
        if (u < prior_mass || centers.empty())
            return 1.0 - uniform01(rng);
        const auto j = std::min(centers.size() - 1, static_cast<std::size_t>(u - prior_mass));
        std::normal_distribution<double> g(centers[j], bandwidth);
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double f = g(rng);
            if (f > 0.0 && f <= 1.0)
                return f;
        }
        return std::clamp(centers[j], 1e-6, 1.0);
    }

    double log_density(const SearchSpace& space, const SiteChoice& x) const
    {
        const int k = static_cast<int>(x.sites.size());
        double lp = std::log(count_prob[std::clamp(k, 1, space.max_sites) - 1]);
        std::vector<char> in(inclusion.size(), 0);
        for (int s : x.sites)
            in[s] = 1;
        for (std::size_t i = 0; i < inclusion.size(); ++i)
            lp += std::log(in[i] ? inclusion[i] : 1.0 - inclusion[i]);
        for (double f : x.fractions)
            lp += std::log(fraction_density(space, f));
        return lp;
    }

    SiteChoice draw(const SearchSpace& space, Rng& rng) const
    {
        std::discrete_distribution<int> pick_k(count_prob.begin(), count_prob.end());
        const int k = pick_k(rng) + 1;
        SiteChoice x;
        x.sites = draw_sites(inclusion, k, rng);
        for (std::size_t j = 0; j < x.sites.size(); ++j)
            x.fractions.push_back(draw_fraction(space, rng));
        return x;
    }
};

GroupModel fit_group(const SearchSpace& space, const std::vector<SiteChoice>& group, double prior)
{
    GroupModel m;
    const int n = static_cast<int>(space.catalog.size());
    const double g = static_cast<double>(group.size());
    m.prior_mass = prior;
    m.count_prob.assign(space.max_sites, prior);
    m.inclusion.assign(n, prior);
    std::vector<double> fractions;
    for (const auto& x : group) {
        const int k = std::clamp(static_cast<int>(x.sites.size()), 1, space.max_sites);
        m.count_prob[k - 1] += 1.0;
        for (int s : x.sites)
            m.inclusion[s] += 1.0;
        fractions.insert(fractions.end(), x.fractions.begin(), x.fractions.end());
    }
    const double ksum = std::accumulate(m.count_prob.begin(), m.count_prob.end(), 0.0);
    for (auto& p : m.count_prob)
        p /= ksum;
    for (auto& p : m.inclusion)
        p = std::clamp(p / (g + 2.0 * prior), 1e-6, 1.0 - 1e-6);

    if (space.capacity_levels > 0) {
        m.level_prob.assign(space.capacity_levels, prior);
        for (double f : fractions) {
            const int level = std::clamp(static_cast<int>(std::lround(f * space.capacity_levels)), 1,
                                         space.capacity_levels);
            m.level_prob[level - 1] += 1.0;
        }
        const double s = std::accumulate(m.level_prob.begin(), m.level_prob.end(), 0.0);
        for (auto& p : m.level_prob)
            p /= s;
    } else {
        m.centers = fractions;
        if (fractions.size() > 1) {
            const double mean = std::accumulate(fractions.begin(), fractions.end(), 0.0) / fractions.size();
            double var = 0.0;
            for (double f : fractions)
                var += (f - mean) * (f - mean);
            const double sd = std::sqrt(var / (fractions.size() - 1));
            m.bandwidth = std::clamp(1.06 * sd * std::pow(static_cast<double>(fractions.size()), -0.2), 0.02, 0.5);
        }
    }
    return m;
}

}  // namespace

BessConfig tpe_suggest(const SearchHistory& history, const SearchSpace& space, const std::vector<double>& site_weights,
                       const TpeSettings& settings, Rng& rng)
{
    space.validate();
    if (!(settings.gamma > 0.0 && settings.gamma < 1.0) || settings.n_ei < 1 || settings.prior_weight <= 0.0)
        throw InputError("invalid TPE settings");
    const auto& trials = history.trials;
    if (static_cast<int>(trials.size()) < std::max(1, settings.n_startup)) {
        BessConfig cfg = congestion_seed(space, site_weights, 1, rng).front();
        for (int attempt = 0; attempt < kRedraws && history.contains(cfg); ++attempt)
            cfg = congestion_seed(space, site_weights, 1, rng).front();
        return cfg;
    }

    std::vector<int> order(trials.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return trials[a].R > trials[b].R; });
    const int n_good = std::max(1, static_cast<int>(std::ceil(settings.gamma * static_cast<double>(trials.size()))));
    std::vector<SiteChoice> good, bad;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& t = trials[order[r]];
        auto x = site_choice(space, t.config);
        if (x.sites.empty())
            continue;
        (static_cast<int>(r) < n_good && !t.failed ? good : bad).push_back(std::move(x));
    }
    const auto l = fit_group(space, good, settings.prior_weight);
    const auto g = fit_group(space, bad, settings.prior_weight);

    // Evaluations are deterministic, so candidates that repeat a past trial are
    // only used when nothing new turns up.
    BessConfig best, best_seen;
    double best_score = -std::numeric_limits<double>::infinity(), best_seen_score = best_score;
    int fresh = 0;
    for (int c = 0; c < settings.n_ei * kRedraws && fresh < settings.n_ei; ++c) {
        const auto x = l.draw(space, rng);
        const double score = l.log_density(space, x) - g.log_density(space, x);
        BessConfig cfg = realize(space, x);
        if (history.contains(cfg)) {
            if (score > best_seen_score) {
                best_seen_score = score;
                best_seen = std::move(cfg);
            }
            continue;
        }
        ++fresh;
        if (score > best_score) {
            best_score = score;
            best = std::move(cfg);
        }
    }
    return fresh > 0 ? best : best_seen;
}

}  // namespace bessplan
