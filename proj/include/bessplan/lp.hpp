#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace bessplan::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Thrown for malformed problems (dimension mismatch, crossed bounds, NaN data).
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when the simplex exceeds its iteration cap or loses the basis.
// Distinct from an infeasible or unbounded verdict, which are statuses.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Tolerances {
    double feasibility = 1e-7;
    double complementarity = 1e-6;
    double gap = 1e-6;
    double integrality = 1e-6;
    double pivot = 1e-9;
    double optimality = 1e-9;
};

enum class RowKind { Equal, LessEqual, GreaterEqual, Range };

struct RowBounds {
    double lower = -kInf;
    double upper = kInf;
};

struct VarBounds {
    double lower = 0.0;
    double upper = kInf;
};

struct Coefficient {
    int col;
    double value;
};

// min c'x  s.t.  row_lower <= A x <= row_upper,  var_lower <= x <= var_upper.
// A is stored row-major (CSR).
struct LinearProgram {
    std::vector<double> objective;
    std::vector<VarBounds> var_bounds;
    std::vector<std::string> var_names;

    std::vector<RowKind> row_kinds;
    std::vector<RowBounds> row_bounds;
    std::vector<std::string> row_names;
    std::vector<std::int64_t> row_start{0};
    std::vector<int> col_index;
    std::vector<double> values;

    int num_vars() const { return static_cast<int>(objective.size()); }
    int num_rows() const { return static_cast<int>(row_kinds.size()); }

    int add_variable(double cost, double lower, double upper, std::string name = {});
    // For Equal rows pass rhs as `lower`; `upper` is ignored. LessEqual reads
    // `upper`, GreaterEqual reads `lower`, Range reads both.
    int add_row(RowKind kind, double lower, double upper, const std::vector<Coefficient>& coeffs,
                std::string name = {});

    double row_activity(int row, const std::vector<double>& x) const;
    double objective_value(const std::vector<double>& x) const;

    void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status s);

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

// Simplex basis over the extended variable space: structurals [0, n),
// row logicals [n, n+m), phase-1 artificials [n+m, n+m+k).
struct Basis {
    std::vector<int> header;
    std::vector<VarState> state;
    std::vector<int> artificial_row;
    std::vector<double> artificial_sign;
};

// Sign convention: row_duals[i] = d(optimal objective) / d(active bound of row i).
// Equality rows are unrestricted; a binding lower bound gives a dual >= 0 and a
// binding upper bound a dual <= 0. reduced_costs[j] = c_j - a_j' y, which is the
// same derivative with respect to the active bound of variable j.
struct LpSolution {
    Status status = Status::Infeasible;
    std::vector<double> primal;
    double objective_value = 0.0;
    std::vector<double> row_duals;
    std::vector<double> reduced_costs;
    std::vector<double> row_activity;
    int iterations = 0;
    bool degenerate = false;
    Basis basis;
};

struct SensitivityRange {
    int var_index = -1;
    double coeff_low = -kInf;
    double coeff_high = kInf;
    // Set when the basis is primal degenerate; the true range may be wider.
    bool conservative = false;
};

struct MilpProblem {
    LinearProgram base;
    std::vector<int> binary_vars;

    void validate() const;
};

struct MilpOptions {
    long node_limit = 200000;
};

struct MilpSolution {
    LpSolution lp;
    double relaxation_objective = 0.0;
    long nodes = 0;
    long lp_solves = 0;
    bool node_limit_reached = false;
    bool has_incumbent = false;
};

LpSolution solve_lp(const LinearProgram& lp, const Tolerances& tol = {});

MilpSolution solve_milp(const MilpProblem& milp, const Tolerances& tol = {}, const MilpOptions& opts = {});

SensitivityRange objective_sensitivity_range(const LinearProgram& lp, const LpSolution& sol, int var_index,
                                             const Tolerances& tol = {});

// Independent optimality certificate computed from the problem data alone.
struct CertificateReport {
    double primal_residual = 0.0;
    double dual_sign_residual = 0.0;
    double complementarity_residual = 0.0;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    bool ok = false;
};

CertificateReport verify_certificate(const LinearProgram& lp, const LpSolution& sol, const Tolerances& tol = {});

// Text dump, one row per line. See docs/formats.md.
void write_lp_text(std::ostream& out, const LinearProgram& lp);
LinearProgram read_lp_text(std::istream& in);

}  // namespace bessplan::lp
