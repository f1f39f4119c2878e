#include "bessplan/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace bessplan::lp {

int LinearProgram::add_variable(double cost, double lower, double upper, std::string name)
{
    objective.push_back(cost);
    var_bounds.push_back({lower, upper});
    var_names.push_back(std::move(name));
    return num_vars() - 1;
}

int LinearProgram::add_row(RowKind kind, double lower, double upper, const std::vector<Coefficient>& coeffs,
                           std::string name)
{
    RowBounds b;
    switch (kind) {
    case RowKind::Equal: b = {lower, lower}; break;
    case RowKind::LessEqual: b = {-kInf, upper}; break;
    case RowKind::GreaterEqual: b = {lower, kInf}; break;
    case RowKind::Range: b = {lower, upper}; break;
    }
    row_kinds.push_back(kind);
    row_bounds.push_back(b);
    row_names.push_back(std::move(name));
    for (const auto& c : coeffs) {
        col_index.push_back(c.col);
        values.push_back(c.value);
    }
    row_start.push_back(static_cast<std::int64_t>(col_index.size()));
    return num_rows() - 1;
}

double LinearProgram::row_activity(int row, const std::vector<double>& x) const
{
    double s = 0.0;
    for (auto k = row_start[row]; k < row_start[row + 1]; ++k)
        s += values[k] * x[col_index[k]];
    return s;
}

double LinearProgram::objective_value(const std::vector<double>& x) const
{
    double s = 0.0;
    for (int j = 0; j < num_vars(); ++j)
        s += objective[j] * x[j];
    return s;
}

void LinearProgram::validate() const
{
    const int n = num_vars();
    const int m = num_rows();
    if (var_bounds.size() != objective.size())
        throw StructuralError("variable bound count differs from objective length");
    if (!var_names.empty() && static_cast<int>(var_names.size()) != n)
        throw StructuralError("variable name count differs from objective length");
    if (row_bounds.size() != row_kinds.size())
        throw StructuralError("row bound count differs from row kind count");
    if (static_cast<int>(row_start.size()) != m + 1 || row_start.front() != 0)
        throw StructuralError("row start array has wrong length");
    if (col_index.size() != values.size() || row_start.back() != static_cast<std::int64_t>(values.size()))
        throw StructuralError("coefficient arrays are inconsistent");
    for (int i = 0; i < m; ++i)
        if (row_start[i + 1] < row_start[i])
            throw StructuralError("row start array is not monotone");
    for (std::size_t k = 0; k < col_index.size(); ++k) {
        if (col_index[k] < 0 || col_index[k] >= n)
            throw StructuralError("coefficient column " + std::to_string(col_index[k]) + " out of range");
        if (!std::isfinite(values[k]))
            throw StructuralError("non-finite constraint coefficient");
    }
    for (int j = 0; j < n; ++j) {
        const auto& b = var_bounds[j];
        if (!std::isfinite(objective[j]))
            throw StructuralError("non-finite objective coefficient for variable " + std::to_string(j));
        if (std::isnan(b.lower) || std::isnan(b.upper) || b.lower > b.upper || b.lower == kInf || b.upper == -kInf)
            throw StructuralError("invalid bounds for variable " + std::to_string(j));
    }
    for (int i = 0; i < m; ++i) {
        const auto& b = row_bounds[i];
        if (std::isnan(b.lower) || std::isnan(b.upper) || b.lower > b.upper || b.lower == kInf || b.upper == -kInf)
            throw StructuralError("invalid bounds for row " + std::to_string(i));
    }
}

const char* to_string(Status s)
{
    switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    }
    return "unknown";
}

namespace {

// Bounded-variable revised simplex on  A x - s + D a = 0  with s the row
// logicals and a the phase-1 artificials. The basis inverse is kept dense and
// updated in product form, with periodic refactorization.
class Simplex {
public:
    Simplex(const LinearProgram& lp, const Tolerances& tol) : lp_(lp), tol_(tol)
    {
        m_ = lp.num_rows();
        n_ = lp.num_vars();
        build_columns();
    }

    LpSolution solve()
    {
        cold_start();
        LpSolution sol;

        if (!art_row_.empty()) {
            set_phase_costs(true);
            iterate();
            double infeas = 0.0;
            for (int k = 0; k < num_art(); ++k)
                infeas += x_[n_ + m_ + k];
            if (infeas > tol_.feasibility) {
                sol.status = Status::Infeasible;
                sol.iterations = iterations_;
                return sol;
            }
            for (int k = 0; k < num_art(); ++k) {
                int j = n_ + m_ + k;
                ub_[j] = 0.0;
                if (state_[j] != VarState::Basic) {
                    state_[j] = VarState::AtLower;
                    x_[j] = 0.0;
                }
            }
            drive_out_artificials();
            refactor();
        }

        set_phase_costs(false);
        if (!iterate()) {
            sol.status = Status::Unbounded;
            sol.iterations = iterations_;
            return sol;
        }
        refactor();
        fill_solution(sol);
        return sol;
    }

    void load_basis(const Basis& basis)
    {
        art_row_ = basis.artificial_row;
        art_sign_ = basis.artificial_sign;
        const int total = n_ + m_ + num_art();
        if (static_cast<int>(basis.state.size()) != total || static_cast<int>(basis.header.size()) != m_)
            throw StructuralError("basis does not match problem dimensions");
        init_bounds();
        for (int k = 0; k < num_art(); ++k) {
            lb_[n_ + m_ + k] = 0.0;
            ub_[n_ + m_ + k] = 0.0;
        }
        state_ = basis.state;
        head_ = basis.header;
        pos_.assign(total, -1);
        for (int p = 0; p < m_; ++p)
            pos_[head_[p]] = p;
        x_.assign(total, 0.0);
        for (int j = 0; j < total; ++j) {
            if (state_[j] == VarState::AtLower)
                x_[j] = lb_[j];
            else if (state_[j] == VarState::AtUpper)
                x_[j] = ub_[j];
        }
        set_phase_costs(false);
        refactor();
    }

    SensitivityRange range(int j)
    {
        SensitivityRange r;
        r.var_index = j;
        const double c = lp_.objective[j];
        const Eigen::VectorXd y = duals();
        r.conservative = primal_degenerate();

        if (state_[j] != VarState::Basic) {
            const double d = cost_[j] - dot(y, j);
            if (lb_[j] == ub_[j]) {
                r.coeff_low = -kInf;
                r.coeff_high = kInf;
            } else if (state_[j] == VarState::AtLower) {
                r.coeff_low = c - std::max(d, 0.0);
                r.coeff_high = kInf;
            } else if (state_[j] == VarState::AtUpper) {
                r.coeff_low = -kInf;
                r.coeff_high = c - std::min(d, 0.0);
            } else {
                r.coeff_low = c;
                r.coeff_high = c;
                r.conservative = true;
            }
            return r;
        }

        const int p = pos_[j];
        const Eigen::RowVectorXd rho = binv_.row(p);
        double lo = -kInf, hi = kInf;
        const int total = n_ + m_ + num_art();
        for (int k = 0; k < total; ++k) {
            if (state_[k] == VarState::Basic || lb_[k] == ub_[k])
                continue;
            const double a = dot(rho.transpose(), k);
            if (std::abs(a) <= tol_.pivot)
                continue;
            const double d = cost_[k] - dot(y, k);
            // Need the reduced cost d - delta * a to keep its optimal sign.
            if (state_[k] == VarState::AtLower) {
                const double dd = std::max(d, 0.0);
                if (a > 0) hi = std::min(hi, dd / a);
                else lo = std::max(lo, dd / a);
            } else if (state_[k] == VarState::AtUpper) {
                const double dd = std::min(d, 0.0);
                if (a > 0) lo = std::max(lo, dd / a);
                else hi = std::min(hi, dd / a);
            } else {
                lo = std::max(lo, 0.0);
                hi = std::min(hi, 0.0);
            }
        }
        r.coeff_low = c + lo;
        r.coeff_high = c + hi;
        return r;
    }

private:
    int num_art() const { return static_cast<int>(art_row_.size()); }

    void build_columns()
    {
        col_start_.assign(n_ + 1, 0);
        for (std::size_t k = 0; k < lp_.col_index.size(); ++k)
            ++col_start_[lp_.col_index[k] + 1];
        for (int j = 0; j < n_; ++j)
            col_start_[j + 1] += col_start_[j];
        row_idx_.resize(lp_.col_index.size());
        col_val_.resize(lp_.col_index.size());
        std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
        for (int i = 0; i < m_; ++i) {
            for (auto k = lp_.row_start[i]; k < lp_.row_start[i + 1]; ++k) {
                const int j = lp_.col_index[k];
                row_idx_[fill[j]] = i;
                col_val_[fill[j]] = lp_.values[k];
                ++fill[j];
            }
        }
    }

    void init_bounds()
    {
        const int total = n_ + m_ + num_art();
        lb_.assign(total, 0.0);
        ub_.assign(total, kInf);
        for (int j = 0; j < n_; ++j) {
            lb_[j] = lp_.var_bounds[j].lower;
            ub_[j] = lp_.var_bounds[j].upper;
        }
        for (int i = 0; i < m_; ++i) {
            lb_[n_ + i] = lp_.row_bounds[i].lower;
            ub_[n_ + i] = lp_.row_bounds[i].upper;
        }
    }

    void cold_start()
    {
        art_row_.clear();
        art_sign_.clear();
        init_bounds();
        state_.assign(n_ + m_, VarState::AtLower);
        x_.assign(n_ + m_, 0.0);
        for (int j = 0; j < n_; ++j) {
            if (lb_[j] > -kInf) {
                x_[j] = lb_[j];
                state_[j] = VarState::AtLower;
            } else if (ub_[j] < kInf) {
                x_[j] = ub_[j];
                state_[j] = VarState::AtUpper;
            } else {
                x_[j] = 0.0;
                state_[j] = VarState::FreeZero;
            }
        }
        head_.assign(m_, -1);
        std::vector<double> diag(m_, -1.0);
        for (int i = 0; i < m_; ++i) {
            const double r = lp_.row_activity(i, x_);
            const int s = n_ + i;
            if (r >= lb_[s] - tol_.feasibility && r <= ub_[s] + tol_.feasibility) {
                x_[s] = r;
                state_[s] = VarState::Basic;
                head_[i] = s;
                continue;
            }
            const double v = r < lb_[s] ? lb_[s] : ub_[s];
            x_[s] = v;
            state_[s] = (v == lb_[s]) ? VarState::AtLower : VarState::AtUpper;
            art_row_.push_back(i);
            art_sign_.push_back(v - r > 0 ? 1.0 : -1.0);
            const int a = n_ + m_ + num_art() - 1;
            x_.push_back(std::abs(v - r));
            state_.push_back(VarState::Basic);
            head_[i] = a;
            diag[i] = art_sign_.back();
        }
        lb_.resize(x_.size(), 0.0);
        ub_.resize(x_.size(), kInf);
        pos_.assign(x_.size(), -1);
        for (int p = 0; p < m_; ++p)
            pos_[head_[p]] = p;
        binv_ = Eigen::MatrixXd::Zero(m_, m_);
        for (int i = 0; i < m_; ++i)
            binv_(i, i) = 1.0 / diag[i];
        updates_ = 0;
        iterations_ = 0;
    }

    void set_phase_costs(bool phase_one)
    {
        const int total = n_ + m_ + num_art();
        cost_.assign(total, 0.0);
        if (phase_one) {
            for (int k = 0; k < num_art(); ++k)
                cost_[n_ + m_ + k] = 1.0;
        } else {
            for (int j = 0; j < n_; ++j)
                cost_[j] = lp_.objective[j];
        }
    }

    double dot(const Eigen::VectorXd& y, int j) const
    {
        if (j < n_) {
            double s = 0.0;
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
                s += col_val_[k] * y[row_idx_[k]];
            return s;
        }
        if (j < n_ + m_)
            return -y[j - n_];
        const int a = j - n_ - m_;
        return art_sign_[a] * y[art_row_[a]];
    }

    void ftran(int j, Eigen::VectorXd& alpha) const
    {
        if (j < n_) {
            alpha.setZero(m_);
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
                alpha.noalias() += col_val_[k] * binv_.col(row_idx_[k]);
        } else if (j < n_ + m_) {
            alpha = -binv_.col(j - n_);
        } else {
            const int a = j - n_ - m_;
            alpha = art_sign_[a] * binv_.col(art_row_[a]);
        }
    }

    void dense_column(int j, Eigen::Ref<Eigen::VectorXd> out) const
    {
        out.setZero();
        if (j < n_) {
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
                out[row_idx_[k]] += col_val_[k];
        } else if (j < n_ + m_) {
            out[j - n_] = -1.0;
        } else {
            const int a = j - n_ - m_;
            out[art_row_[a]] = art_sign_[a];
        }
    }

    Eigen::VectorXd duals() const
    {
        Eigen::VectorXd cb(m_);
        for (int p = 0; p < m_; ++p)
            cb[p] = cost_[head_[p]];
        return binv_.transpose() * cb;
    }

    void refactor()
    {
        if (m_ == 0)
            return;
        Eigen::MatrixXd B(m_, m_);
        for (int p = 0; p < m_; ++p)
            dense_column(head_[p], B.col(p));
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (lu.rank() < m_)
            throw SolverFailure("simplex basis became singular");
        binv_ = lu.inverse();
        updates_ = 0;
        recompute_basic_values();
    }

    void recompute_basic_values()
    {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
        const int total = n_ + m_ + num_art();
        Eigen::VectorXd col(m_);
        for (int j = 0; j < total; ++j) {
            if (state_[j] == VarState::Basic || x_[j] == 0.0)
                continue;
            if (j < n_) {
                for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
                    rhs[row_idx_[k]] -= col_val_[k] * x_[j];
            } else if (j < n_ + m_) {
                rhs[j - n_] += x_[j];
            } else {
                const int a = j - n_ - m_;
                rhs[art_row_[a]] -= art_sign_[a] * x_[j];
            }
        }
        const Eigen::VectorXd xb = binv_ * rhs;
        for (int p = 0; p < m_; ++p)
            x_[head_[p]] = xb[p];
    }

    void pivot(int r, const Eigen::VectorXd& alpha)
    {
        const double piv = alpha[r];
        const Eigen::RowVectorXd rowr = binv_.row(r) / piv;
        binv_.noalias() -= alpha * rowr;
        binv_.row(r) = rowr;
        if (++updates_ >= kRefactorInterval)
            refactor();
    }

    bool primal_degenerate() const
    {
        for (int p = 0; p < m_; ++p) {
            const int j = head_[p];
            if (j >= n_ + m_)
                continue;
            if (std::abs(x_[j] - lb_[j]) <= tol_.feasibility || std::abs(x_[j] - ub_[j]) <= tol_.feasibility)
                return true;
        }
        return false;
    }

    // Returns false on unboundedness.
    bool iterate()
    {
        const int total = n_ + m_ + num_art();
        const long cap = 50L * (m_ + n_) + 5000;
        int stall = 0;
        bool bland = false;
        Eigen::VectorXd alpha(m_);

        for (;;) {
            if (iterations_ > cap)
                throw SolverFailure("simplex iteration cap exceeded (" + std::to_string(cap) + ")");

            const Eigen::VectorXd y = duals();
            int q = -1;
            int dir = 0;
            double best = 0.0;
            for (int j = 0; j < total; ++j) {
                const VarState st = state_[j];
                if (st == VarState::Basic || lb_[j] == ub_[j])
                    continue;
                const double d = cost_[j] - dot(y, j);
                int jdir = 0;
                if (st == VarState::AtLower && d < -tol_.optimality)
                    jdir = 1;
                else if (st == VarState::AtUpper && d > tol_.optimality)
                    jdir = -1;
                else if (st == VarState::FreeZero && std::abs(d) > tol_.optimality)
                    jdir = d < 0 ? 1 : -1;
                if (jdir == 0)
                    continue;
                if (bland) {
                    q = j;
                    dir = jdir;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    q = j;
                    dir = jdir;
                }
            }
            if (q < 0)
                return true;

            ftran(q, alpha);
            double theta = 0.0;
            int r = bland ? ratio_test_bland(alpha, dir, theta) : ratio_test_harris(alpha, dir, theta);
            const double flip = ub_[q] - lb_[q];
            bool do_flip = false;
            if (r < 0) {
                if (flip == kInf)
                    return false;
                do_flip = true;
                theta = flip;
            } else if (flip <= theta) {
                do_flip = true;
                theta = flip;
            }

            ++iterations_;
            if (theta > 1e-12) {
                stall = 0;
                bland = false;
            } else if (++stall > kStallLimit) {
                bland = true;
            }

            x_[q] += dir * theta;
            for (int p = 0; p < m_; ++p)
                x_[head_[p]] -= dir * theta * alpha[p];

            if (do_flip) {
                if (dir > 0) {
                    state_[q] = VarState::AtUpper;
                    x_[q] = ub_[q];
                } else {
                    state_[q] = VarState::AtLower;
                    x_[q] = lb_[q];
                }
                continue;
            }

            const int leave = head_[r];
            if (-dir * alpha[r] < 0) {
                state_[leave] = VarState::AtLower;
                x_[leave] = lb_[leave];
            } else {
                state_[leave] = VarState::AtUpper;
                x_[leave] = ub_[leave];
            }
            if (lb_[leave] == -kInf && ub_[leave] == kInf)
                state_[leave] = VarState::FreeZero;
            head_[r] = q;
            pos_[q] = r;
            pos_[leave] = -1;
            state_[q] = VarState::Basic;
            pivot(r, alpha);
        }
    }

    double exact_ratio(int p, double rate) const
    {
        const int j = head_[p];
        if (rate < 0)
            return std::max(0.0, (x_[j] - lb_[j]) / -rate);
        return std::max(0.0, (ub_[j] - x_[j]) / rate);
    }

    bool limits(int p, double rate) const
    {
        const int j = head_[p];
        if (rate < -tol_.pivot)
            return lb_[j] > -kInf;
        if (rate > tol_.pivot)
            return ub_[j] < kInf;
        return false;
    }

    int ratio_test_harris(const Eigen::VectorXd& alpha, int dir, double& theta) const
    {
        const double relax = kHarrisTol;
        double theta_max = kInf;
        for (int p = 0; p < m_; ++p) {
            const double rate = -dir * alpha[p];
            if (!limits(p, rate))
                continue;
            const int j = head_[p];
            const double t = rate < 0 ? (x_[j] - lb_[j] + relax) / -rate : (ub_[j] - x_[j] + relax) / rate;
            theta_max = std::min(theta_max, t);
        }
        if (theta_max == kInf)
            return -1;
        int best = -1;
        double best_rate = 0.0;
        for (int p = 0; p < m_; ++p) {
            const double rate = -dir * alpha[p];
            if (!limits(p, rate))
                continue;
            if (exact_ratio(p, rate) <= theta_max && std::abs(rate) > best_rate) {
                best_rate = std::abs(rate);
                best = p;
            }
        }
        theta = exact_ratio(best, -dir * alpha[best]);
        return best;
    }

    int ratio_test_bland(const Eigen::VectorXd& alpha, int dir, double& theta) const
    {
        double tmin = kInf;
        for (int p = 0; p < m_; ++p) {
            const double rate = -dir * alpha[p];
            if (limits(p, rate))
                tmin = std::min(tmin, exact_ratio(p, rate));
        }
        if (tmin == kInf)
            return -1;
        int best = -1;
        for (int p = 0; p < m_; ++p) {
            const double rate = -dir * alpha[p];
            if (!limits(p, rate))
                continue;
            if (exact_ratio(p, rate) <= tmin + 1e-12 && (best < 0 || head_[p] < head_[best]))
                best = p;
        }
        theta = tmin;
        return best;
    }

    void drive_out_artificials()
    {
        Eigen::VectorXd alpha(m_);
        const int total = n_ + m_ + num_art();
        for (int p = 0; p < m_; ++p) {
            if (head_[p] < n_ + m_)
                continue;
            const Eigen::VectorXd rho = binv_.row(p).transpose();
            int best = -1;
            double best_abs = 1e-7;
            bool best_fixed = true;
            for (int j = 0; j < n_ + m_; ++j) {
                if (state_[j] == VarState::Basic)
                    continue;
                const double a = std::abs(dot(rho, j));
                const bool fixed = lb_[j] == ub_[j];
                if (a <= 1e-7)
                    continue;
                if (best < 0 || (best_fixed && !fixed) || (fixed == best_fixed && a > best_abs)) {
                    best = j;
                    best_abs = a;
                    best_fixed = fixed;
                }
            }
            if (best < 0)
                continue;
            ftran(best, alpha);
            const int leave = head_[p];
            state_[leave] = VarState::AtLower;
            x_[leave] = 0.0;
            head_[p] = best;
            pos_[best] = p;
            pos_[leave] = -1;
            state_[best] = VarState::Basic;
            pivot(p, alpha);
        }
        (void)total;
    }

    void fill_solution(LpSolution& sol)
    {
        const Eigen::VectorXd y = duals();
        sol.status = Status::Optimal;
        sol.iterations = iterations_;
        sol.primal.assign(x_.begin(), x_.begin() + n_);
        // Snap tiny bound violations left by the relaxed ratio test.
        for (int j = 0; j < n_; ++j)
            sol.primal[j] = std::clamp(sol.primal[j], lb_[j], ub_[j]);
        sol.objective_value = lp_.objective_value(sol.primal);
        sol.row_duals.resize(m_);
        sol.row_activity.resize(m_);
        for (int i = 0; i < m_; ++i) {
            sol.row_duals[i] = y[i];
            sol.row_activity[i] = lp_.row_activity(i, sol.primal);
        }
        sol.reduced_costs.resize(n_);
        for (int j = 0; j < n_; ++j)
            sol.reduced_costs[j] = cost_[j] - dot(y, j);
        sol.degenerate = primal_degenerate();
        sol.basis.header = head_;
        sol.basis.state = state_;
        sol.basis.artificial_row = art_row_;
        sol.basis.artificial_sign = art_sign_;
    }

    static constexpr int kRefactorInterval = 64;
    static constexpr int kStallLimit = 50;
    static constexpr double kHarrisTol = 1e-9;

    const LinearProgram& lp_;
    Tolerances tol_;
    int m_ = 0;
    int n_ = 0;
    std::vector<int> col_start_;
    std::vector<int> row_idx_;
    std::vector<double> col_val_;
    std::vector<double> lb_, ub_, cost_, x_;
    std::vector<VarState> state_;
    std::vector<int> head_, pos_;
    std::vector<int> art_row_;
    std::vector<double> art_sign_;
    Eigen::MatrixXd binv_;
    int updates_ = 0;
    int iterations_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const Tolerances& tol)
{
    lp.validate();
    Simplex simplex(lp, tol);
    return simplex.solve();
}

SensitivityRange objective_sensitivity_range(const LinearProgram& lp, const LpSolution& sol, int var_index,
                                             const Tolerances& tol)
{
    if (sol.status != Status::Optimal)
        throw StructuralError("sensitivity ranging needs an optimal solution");
    if (var_index < 0 || var_index >= lp.num_vars())
        throw StructuralError("variable index out of range");
    lp.validate();
    Simplex simplex(lp, tol);
    simplex.load_basis(sol.basis);
    return simplex.range(var_index);
}

CertificateReport verify_certificate(const LinearProgram& lp, const LpSolution& sol, const Tolerances& tol)
{
    CertificateReport rep;
    if (sol.status != Status::Optimal)
        return rep;
    const int n = lp.num_vars();
    const int m = lp.num_rows();
    const auto& x = sol.primal;

    std::vector<double> d(lp.objective);
    for (int i = 0; i < m; ++i)
        for (auto k = lp.row_start[i]; k < lp.row_start[i + 1]; ++k)
            d[lp.col_index[k]] -= lp.values[k] * sol.row_duals[i];

    double dual_obj = 0.0;
    auto account = [&](double mult, double value, double lower, double upper) {
        rep.primal_residual = std::max({rep.primal_residual, lower - value, value - upper});
        if (mult > 0) {
            if (lower == -kInf) {
                rep.dual_sign_residual = std::max(rep.dual_sign_residual, mult);
            } else {
                dual_obj += mult * lower;
                rep.complementarity_residual = std::max(rep.complementarity_residual, std::abs(mult * (value - lower)));
            }
        } else if (mult < 0) {
            if (upper == kInf) {
                rep.dual_sign_residual = std::max(rep.dual_sign_residual, -mult);
            } else {
                dual_obj += mult * upper;
                rep.complementarity_residual = std::max(rep.complementarity_residual, std::abs(mult * (value - upper)));
            }
        }
    };
    for (int i = 0; i < m; ++i)
        account(sol.row_duals[i], lp.row_activity(i, x), lp.row_bounds[i].lower, lp.row_bounds[i].upper);
    for (int j = 0; j < n; ++j)
        account(d[j], x[j], lp.var_bounds[j].lower, lp.var_bounds[j].upper);

    rep.primal_objective = lp.objective_value(x);
    rep.dual_objective = dual_obj;
    rep.gap = std::abs(rep.primal_objective - rep.dual_objective);
    rep.ok = rep.primal_residual <= tol.feasibility && rep.dual_sign_residual <= tol.complementarity &&
             rep.complementarity_residual <= tol.complementarity && rep.gap <= tol.gap;
    return rep;
}

namespace {

const char* kind_code(RowKind k)
{
    switch (k) {
    case RowKind::Equal: return "E";
    case RowKind::LessEqual: return "L";
    case RowKind::GreaterEqual: return "G";
    case RowKind::Range: return "R";
    }
    return "?";
}

RowKind parse_kind(const std::string& s)
{
    if (s == "E") return RowKind::Equal;
    if (s == "L") return RowKind::LessEqual;
    if (s == "G") return RowKind::GreaterEqual;
    if (s == "R") return RowKind::Range;
    throw StructuralError("unknown row kind '" + s + "'");
}

std::string name_token(const std::vector<std::string>& names, int i)
{
    if (i < static_cast<int>(names.size()) && !names[i].empty())
        return names[i];
    return "-";
}

double parse_number(const std::string& s)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw StructuralError("bad number '" + s + "' in LP text");
    }
    if (used != s.size())
        throw StructuralError("bad number '" + s + "' in LP text");
    return v;
}

}  // namespace

void write_lp_text(std::ostream& out, const LinearProgram& lp)
{
    const auto old_prec = out.precision(std::numeric_limits<double>::max_digits10);
    out << "lp " << lp.num_vars() << ' ' << lp.num_rows() << '\n';
    for (int j = 0; j < lp.num_vars(); ++j)
        out << "var " << name_token(lp.var_names, j) << ' ' << lp.objective[j] << ' ' << lp.var_bounds[j].lower << ' '
            << lp.var_bounds[j].upper << '\n';
    for (int i = 0; i < lp.num_rows(); ++i) {
        out << "row " << name_token(lp.row_names, i) << ' ' << kind_code(lp.row_kinds[i]) << ' '
            << lp.row_bounds[i].lower << ' ' << lp.row_bounds[i].upper << ' ' << (lp.row_start[i + 1] - lp.row_start[i]);
        for (auto k = lp.row_start[i]; k < lp.row_start[i + 1]; ++k)
            out << ' ' << lp.col_index[k] << ':' << lp.values[k];
        out << '\n';
    }
    out.precision(old_prec);
}

LinearProgram read_lp_text(std::istream& in)
{
    LinearProgram lp;
    std::string line;
    int nvars = -1, nrows = -1;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        auto fail = [&](const std::string& what) {
            throw StructuralError("LP text line " + std::to_string(line_no) + ": " + what);
        };
        if (tag == "lp") {
            if (!(ss >> nvars >> nrows))
                fail("bad header");
        } else if (tag == "var") {
            std::string name, c, lo, hi;
            if (!(ss >> name >> c >> lo >> hi))
                fail("bad var record");
            lp.add_variable(parse_number(c), parse_number(lo), parse_number(hi), name == "-" ? "" : name);
        } else if (tag == "row") {
            std::string name, kind, lo, hi;
            long nnz = 0;
            if (!(ss >> name >> kind >> lo >> hi >> nnz))
                fail("bad row record");
            std::vector<Coefficient> coeffs;
            for (long k = 0; k < nnz; ++k) {
                std::string tok;
                if (!(ss >> tok))
                    fail("missing coefficient");
                const auto colon = tok.find(':');
                if (colon == std::string::npos)
                    fail("coefficient without ':'");
                coeffs.push_back({static_cast<int>(parse_number(tok.substr(0, colon))), parse_number(tok.substr(colon + 1))});
            }
            const RowKind rk = parse_kind(kind);
            lp.add_row(RowKind::Range, parse_number(lo), parse_number(hi), coeffs, name == "-" ? "" : name);
            lp.row_kinds.back() = rk;
        } else {
            fail("unknown record '" + tag + "'");
        }
    }
    if (nvars != lp.num_vars() || nrows != lp.num_rows())
        throw StructuralError("LP text header counts do not match records");
    lp.validate();
    return lp;
}

}  // namespace bessplan::lp
