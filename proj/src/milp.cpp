#include "bessplan/lp.hpp"

#include <algorithm>
#include <cmath>

namespace bessplan::lp {

void MilpProblem::validate() const
{
    base.validate();
    for (int j : binary_vars) {
        if (j < 0 || j >= base.num_vars())
            throw StructuralError("binary index " + std::to_string(j) + " out of range");
        const auto& b = base.var_bounds[j];
        if (b.lower < 0.0 || b.upper > 1.0)
            throw StructuralError("binary variable " + std::to_string(j) + " has bounds outside [0, 1]");
    }
}

namespace {

struct Fixing {
    int var;
    double value;
};

struct Node {
    std::vector<Fixing> fixings;
    double bound;
    int depth;
};

}  // namespace

MilpSolution solve_milp(const MilpProblem& milp, const Tolerances& tol, const MilpOptions& opts)
{
    milp.validate();
    MilpSolution out;
    LinearProgram work = milp.base;

    auto solve_node = [&](const std::vector<Fixing>& fixings) {
        work.var_bounds = milp.base.var_bounds;
        for (const auto& f : fixings)
            work.var_bounds[f.var] = {f.value, f.value};
        ++out.lp_solves;
        return solve_lp(work, tol);
    };

    LpSolution root = solve_node({});
    if (root.status != Status::Optimal) {
        out.lp = std::move(root);
        return out;
    }
    out.relaxation_objective = root.objective_value;

    double incumbent_obj = kInf;
    auto accept = [&](LpSolution&& sol) {
        for (int j : milp.binary_vars)
            sol.primal[j] = std::round(sol.primal[j]);
        incumbent_obj = sol.objective_value;
        out.lp = std::move(sol);
        out.has_incumbent = true;
    };

    // Most fractional binary, or -1 when integral.
    auto branch_var = [&](const LpSolution& sol) {
        int best = -1;
        double best_frac = tol.integrality;
        for (int j : milp.binary_vars) {
            const double v = sol.primal[j];
            const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
            if (frac > best_frac) {
                best_frac = frac;
                best = j;
            }
        }
        return best;
    };

    std::vector<Node> open;
    auto expand = [&](const Node& node, LpSolution&& sol) {
        if (sol.objective_value >= incumbent_obj - tol.gap)
            return;
        const int j = branch_var(sol);
        if (j < 0) {
            accept(std::move(sol));
            return;
        }
        const double near = sol.primal[j] >= 0.5 ? 1.0 : 0.0;
        Node far_child{node.fixings, sol.objective_value, node.depth + 1};
        far_child.fixings.push_back({j, 1.0 - near});
        Node near_child{node.fixings, sol.objective_value, node.depth + 1};
        near_child.fixings.push_back({j, near});
        open.push_back(std::move(far_child));
        open.push_back(std::move(near_child));
    };

    // Rounding heuristic: fix every binary to its nearest value and re-solve.
    if (branch_var(root) >= 0) {
        std::vector<Fixing> rounded;
        for (int j : milp.binary_vars)
            rounded.push_back({j, root.primal[j] >= 0.5 ? 1.0 : 0.0});
        LpSolution h = solve_node(rounded);
        if (h.status == Status::Optimal)
            accept(std::move(h));
    }

    out.nodes = 1;
    expand(Node{{}, root.objective_value, 0}, std::move(root));

    while (!open.empty()) {
        if (out.nodes >= opts.node_limit) {
            out.node_limit_reached = true;
            break;
        }
        std::size_t pick = open.size() - 1;
        if (out.has_incumbent) {
            // Best bound once an incumbent exists; deeper node wins ties.
            for (std::size_t k = 0; k < open.size(); ++k) {
                const auto& a = open[k];
                const auto& b = open[pick];
                if (a.bound < b.bound - 1e-12 || (std::abs(a.bound - b.bound) <= 1e-12 && a.depth > b.depth))
                    pick = k;
            }
        }
        Node node = std::move(open[pick]);
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        if (node.bound >= incumbent_obj - tol.gap)
            continue;
        LpSolution sol = solve_node(node.fixings);
        ++out.nodes;
        if (sol.status != Status::Optimal)
            continue;
        expand(node, std::move(sol));
    }

    if (!out.has_incumbent) {
        out.lp = LpSolution{};
        out.lp.status = Status::Infeasible;
    }
    return out;
}

}  // namespace bessplan::lp
