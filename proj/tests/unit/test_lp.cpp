#include "test_support.hpp"

#include <doctest.h>

#include <sstream>

using namespace bessplan;
using namespace bessplan::lp;

namespace {

// min 10 p1 + 30 p2  s.t.  p1 + p2 = 100,  0 <= p1 <= 60,  p2 >= 0
LinearProgram two_generator_lp()
{
    LinearProgram prob;
    prob.add_variable(10.0, 0.0, 60.0, "p1");
    prob.add_variable(30.0, 0.0, kInf, "p2");
    prob.add_row(RowKind::Equal, 100.0, 100.0, {{0, 1.0}, {1, 1.0}}, "balance");
    return prob;
}

// Feasible by construction: the rows bracket A x0 for a point x0 in the box.
LinearProgram random_feasible_lp(std::mt19937_64& rng, int n, int m)
{
    using testing::uniform;
    LinearProgram prob;
    std::vector<double> x0(n);
    for (int j = 0; j < n; ++j) {
        const double lo = uniform(rng, -5, 5);
        const double hi = lo + uniform(rng, 0.5, 10);
        x0[j] = uniform(rng, lo, hi);
        prob.add_variable(uniform(rng, -10, 10), lo, hi);
    }
    for (int i = 0; i < m; ++i) {
        std::vector<Coefficient> row;
        double act = 0.0;
        for (int j = 0; j < n; ++j)
            if (uniform(rng, 0, 1) < 0.6) {
                const double a = uniform(rng, -3, 3);
                row.push_back({j, a});
                act += a * x0[j];
            }
        switch (testing::uniform_int(rng, 0, 3)) {
        case 0:
            prob.add_row(RowKind::Equal, act, act, row);
            break;
        case 1:
            prob.add_row(RowKind::LessEqual, -kInf, act + uniform(rng, 0, 2), row);
            break;
        case 2:
            prob.add_row(RowKind::GreaterEqual, act - uniform(rng, 0, 2), kInf, row);
            break;
        default:
            prob.add_row(RowKind::Range, act - uniform(rng, 0, 2), act + uniform(rng, 0, 2), row);
        }
    }
    return prob;
}

}  // namespace

TEST_CASE("two-generator dispatch LP")
{
    const auto prob = two_generator_lp();
    const auto sol = solve_lp(prob);
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.primal[0] == doctest::Approx(60.0));
    CHECK(sol.primal[1] == doctest::Approx(40.0));
    CHECK(sol.objective_value == doctest::Approx(1800.0));
    CHECK(sol.row_duals[0] == doctest::Approx(30.0));
    // p1 sits at its upper bound: cheaper still changes nothing, dearer than 30 does.
    const auto r = objective_sensitivity_range(prob, sol, 0);
    CHECK(r.coeff_low == -kInf);
    CHECK(r.coeff_high == doctest::Approx(30.0));
    CHECK(verify_certificate(prob, sol).ok);
}

TEST_CASE("status detection")
{
    SUBCASE("empty row with a nonzero requirement is infeasible")
    {
        LinearProgram prob;
        prob.add_variable(1.0, 0.0, 1.0);
        prob.add_row(RowKind::Equal, 1.0, 1.0, {});
        CHECK(solve_lp(prob).status == Status::Infeasible);
    }
    SUBCASE("conflicting rows are infeasible")
    {
        LinearProgram prob;
        prob.add_variable(0.0, 0.0, kInf);
        prob.add_row(RowKind::GreaterEqual, 5.0, kInf, {{0, 1.0}});
        prob.add_row(RowKind::LessEqual, -kInf, 3.0, {{0, 1.0}});
        CHECK(solve_lp(prob).status == Status::Infeasible);
    }
    SUBCASE("unbounded ray")
    {
        LinearProgram prob;
        prob.add_variable(-1.0, 0.0, kInf);
        prob.add_variable(1.0, 0.0, kInf);
        prob.add_row(RowKind::GreaterEqual, 0.0, kInf, {{0, 1.0}, {1, -1.0}});
        CHECK(solve_lp(prob).status == Status::Unbounded);
    }
    SUBCASE("free variable")
    {
        LinearProgram prob;
        prob.add_variable(1.0, -kInf, kInf);
        prob.add_row(RowKind::GreaterEqual, -4.0, kInf, {{0, 1.0}});
        const auto sol = solve_lp(prob);
        REQUIRE(sol.status == Status::Optimal);
        CHECK(sol.primal[0] == doctest::Approx(-4.0));
        CHECK(sol.row_duals[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("cycling-prone degenerate LP terminates")
{
    // Beale's example; textbook Dantzig pricing cycles on it.
    LinearProgram prob;
    prob.add_variable(-0.75, 0.0, kInf);
    prob.add_variable(20.0, 0.0, kInf);
    prob.add_variable(-0.5, 0.0, kInf);
    prob.add_variable(6.0, 0.0, kInf);
    prob.add_row(RowKind::LessEqual, -kInf, 0.0, {{0, 0.25}, {1, -8.0}, {2, -1.0}, {3, 9.0}});
    prob.add_row(RowKind::LessEqual, -kInf, 0.0, {{0, 0.5}, {1, -12.0}, {2, -0.5}, {3, 3.0}});
    prob.add_row(RowKind::LessEqual, -kInf, 1.0, {{2, 1.0}});
    const auto sol = solve_lp(prob);
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.objective_value == doctest::Approx(-1.25));
    CHECK(verify_certificate(prob, sol).ok);
}

TEST_CASE("dual signs follow the active bound")
{
    LinearProgram prob;
    prob.add_variable(1.0, 0.0, kInf);
    prob.add_variable(-1.0, 0.0, kInf);
    prob.add_row(RowKind::GreaterEqual, 2.0, kInf, {{0, 1.0}});
    prob.add_row(RowKind::LessEqual, -kInf, 3.0, {{1, 1.0}});
    const auto sol = solve_lp(prob);
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.row_duals[0] == doctest::Approx(1.0));   // binding lower bound: >= 0
    CHECK(sol.row_duals[1] == doctest::Approx(-1.0));  // binding upper bound: <= 0
}

TEST_CASE("structural errors")
{
    SUBCASE("inverted variable bounds")
    {
        LinearProgram prob;
        prob.add_variable(1.0, 2.0, 1.0);
        CHECK_THROWS_AS(prob.validate(), StructuralError);
        CHECK_THROWS_AS(solve_lp(prob), StructuralError);
    }
    SUBCASE("column out of range")
    {
        LinearProgram prob;
        prob.add_variable(1.0, 0.0, 1.0);
        prob.add_row(RowKind::Equal, 1.0, 1.0, {{3, 1.0}});
        CHECK_THROWS_AS(solve_lp(prob), StructuralError);
    }
    SUBCASE("non-finite cost")
    {
        LinearProgram prob;
        prob.add_variable(std::nan(""), 0.0, 1.0);
        CHECK_THROWS_AS(solve_lp(prob), StructuralError);
    }
}

TEST_CASE("LP text round trip")
{
    std::mt19937_64 rng(3);
    const auto prob = random_feasible_lp(rng, 6, 4);
    std::stringstream ss;
    write_lp_text(ss, prob);
    const auto back = read_lp_text(ss);
    CHECK(back.objective == prob.objective);
    CHECK(back.values == prob.values);
    CHECK(back.col_index == prob.col_index);
    CHECK(back.row_kinds == prob.row_kinds);
    CHECK(solve_lp(back).objective_value == doctest::Approx(solve_lp(prob).objective_value));

    std::istringstream bad("lp 1 0\nvar x 1 zero 1\n");
    CHECK_THROWS_AS(read_lp_text(bad), StructuralError);
}

TEST_CASE("property: random feasible LPs solve with a valid certificate")
{
    std::mt19937_64 rng(11);
    for (int k = 0; k < 60; ++k) {
        const int n = testing::uniform_int(rng, 1, 12), m = testing::uniform_int(rng, 0, 10);
        const auto prob = random_feasible_lp(rng, n, m);
        const auto sol = solve_lp(prob);
        INFO("instance " << k);
        REQUIRE(sol.status == Status::Optimal);
        const auto rep = verify_certificate(prob, sol);
        CHECK(rep.ok);
        CHECK(rep.gap <= 1e-6);
        for (int j = 0; j < n; ++j) {
            CHECK(sol.primal[j] >= prob.var_bounds[j].lower - 1e-7);
            CHECK(sol.primal[j] <= prob.var_bounds[j].upper + 1e-7);
        }
    }
}

TEST_CASE("property: sensitivity range keeps the primal")
{
    std::mt19937_64 rng(21);
    int tested = 0;
    for (int k = 0; k < 40; ++k) {
        const auto prob = random_feasible_lp(rng, 6, 5);
        const auto sol = solve_lp(prob);
        REQUIRE(sol.status == Status::Optimal);
        if (sol.degenerate)
            continue;
        const int j = testing::uniform_int(rng, 0, 5);
        const auto r = objective_sensitivity_range(prob, sol, j);
        CHECK(r.coeff_low <= prob.objective[j] + 1e-12);
        CHECK(r.coeff_high >= prob.objective[j] - 1e-12);
        for (double target : {r.coeff_low, r.coeff_high}) {
            if (!std::isfinite(target))
                continue;
            auto moved = prob;
            moved.objective[j] = 0.5 * (prob.objective[j] + target);
            const auto again = solve_lp(moved);
            // The old point stays optimal for the moved costs.
            CHECK(moved.objective_value(sol.primal) == doctest::Approx(again.objective_value).epsilon(1e-9));
        }
        ++tested;
    }
    CHECK(tested > 10);
}

TEST_CASE("branch and bound")
{
    SUBCASE("single binary")
    {
        MilpProblem milp;
        milp.base.add_variable(-1.0, 0.0, 1.0, "y");
        milp.binary_vars = {0};
        const auto sol = solve_milp(milp);
        REQUIRE(sol.lp.status == Status::Optimal);
        CHECK(sol.lp.primal[0] == doctest::Approx(1.0));
    }
    SUBCASE("knapsack against enumeration")
    {
        std::mt19937_64 rng(8);
        for (int k = 0; k < 15; ++k) {
            MilpProblem milp;
            const int n = testing::uniform_int(rng, 2, 9);
            std::vector<Coefficient> weight;
            for (int j = 0; j < n; ++j) {
                milp.base.add_variable(-testing::uniform(rng, 1, 10), 0.0, 1.0);
                weight.push_back({j, testing::uniform(rng, 1, 10)});
                milp.binary_vars.push_back(j);
            }
            milp.base.add_row(RowKind::LessEqual, -kInf, testing::uniform(rng, 5, 25), weight);
            const auto sol = solve_milp(milp);
            REQUIRE(sol.has_incumbent);
            CHECK(sol.lp.objective_value == doctest::Approx(testing::enumerate_binaries(milp)));
            CHECK(sol.relaxation_objective <= sol.lp.objective_value + 1e-9);
            for (int j : milp.binary_vars) {
                const double v = sol.lp.primal[j];
                CHECK(std::min(std::abs(v), std::abs(v - 1.0)) <= 1e-6);
            }
        }
    }
    SUBCASE("infeasible integer program")
    {
        MilpProblem milp;
        milp.base.add_variable(0.0, 0.0, 1.0);
        milp.base.add_row(RowKind::Equal, 0.5, 0.5, {{0, 1.0}});
        milp.binary_vars = {0};
        const auto sol = solve_milp(milp);
        CHECK_FALSE(sol.has_incumbent);
        CHECK(sol.lp.status == Status::Infeasible);
    }
}
