#include "curbflow/lp.hpp"

#include "curbflow/errors.hpp"
#include "curbflow/log.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace curbflow {

std::string_view to_string(LpStatus s) {
    switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    }
    return "?";
}

void LpProblem::validate() const {
    const Eigen::Index n = c.size();
    if (n == 0) throw InputError("LP has no variables");
    if (a_eq.rows() != b_eq.size() || (a_eq.rows() > 0 && a_eq.cols() != n)) {
        throw InputError("LP equality block has inconsistent dimensions");
    }
    if (a_ub.rows() != b_ub.size() || (a_ub.rows() > 0 && a_ub.cols() != n)) {
        throw InputError("LP inequality block has inconsistent dimensions");
    }
    if (!c.allFinite() || !a_eq.allFinite() || !b_eq.allFinite() || !a_ub.allFinite() || !b_ub.allFinite()) {
        throw InputError("LP data must be finite");
    }
}

namespace {

// Standard form A z = b, z >= 0, b >= 0 over [x, slacks, artificials].
class Simplex {
public:
    Simplex(const LpProblem& p, const LpOptions& opt) : opt_(opt) {
        n_ = p.c.size();
        me_ = p.a_eq.rows();
        mu_ = p.a_ub.rows();
        m_ = me_ + mu_;
        const Eigen::Index structural = n_ + mu_;
        a_ = Eigen::MatrixXd::Zero(m_, structural + m_);
        b_.resize(m_);
        sign_.assign(static_cast<std::size_t>(m_), 1.0);
        if (me_ > 0) a_.block(0, 0, me_, n_) = p.a_eq;
        if (mu_ > 0) {
            a_.block(me_, 0, mu_, n_) = p.a_ub;
            a_.block(me_, n_, mu_, mu_).setIdentity();
        }
        if (me_ > 0) b_.head(me_) = p.b_eq;
        if (mu_ > 0) b_.tail(mu_) = p.b_ub;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (b_(i) < 0.0) {
                a_.row(i).head(structural) *= -1.0;
                b_(i) = -b_(i);
                sign_[static_cast<std::size_t>(i)] = -1.0;
            }
        }
        a_.block(0, structural, m_, m_).setIdentity();
        structural_ = structural;
        basis_.resize(static_cast<std::size_t>(m_));
        for (Eigen::Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = structural + i;
        active_.assign(static_cast<std::size_t>(m_), true);
        cost_ = Eigen::VectorXd::Zero(structural + m_);
        c_orig_ = p.c;
    }

    LpSolution run() {
        LpSolution sol;
        // Phase 1: minimise the artificial sum.
        cost_.setZero();
        cost_.tail(m_).setOnes();
        refactor();
        if (iterate(/*allow_artificial=*/true, sol.iterations) == LpStatus::unbounded) {
            throw NumericalError("LP phase 1 reported unbounded, which cannot happen for a bounded objective");
        }
        const double infeas = objective_value();
        if (infeas > 1e-8 * (1.0 + b_.lpNorm<Eigen::Infinity>())) {
            sol.status = LpStatus::infeasible;
            sol.x = Eigen::VectorXd::Zero(n_);
            return sol;
        }
        drive_out_artificials();

        // Phase 2.
        cost_.setZero();
        cost_.head(n_) = c_orig_;
        refactor();
        const LpStatus st = iterate(false, sol.iterations);
        if (st == LpStatus::unbounded) {
            sol.status = LpStatus::unbounded;
            sol.x = Eigen::VectorXd::Zero(n_);
            sol.objective = -std::numeric_limits<double>::infinity();
            return sol;
        }
        refactor();
        const Eigen::VectorXd z = primal();
        sol.status = LpStatus::optimal;
        sol.x = z.head(n_).cwiseMax(0.0);
        sol.objective = c_orig_.dot(sol.x);

        // Duals in terms of the caller's rows.
        const Eigen::VectorXd y = duals();
        sol.dual_eq.resize(me_);
        sol.dual_ub.resize(mu_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            const double v = active_[static_cast<std::size_t>(i)] ? y(i) * sign_[static_cast<std::size_t>(i)] : 0.0;
            if (i < me_) {
                sol.dual_eq(i) = v;
            } else {
                sol.dual_ub(i - me_) = v;
            }
        }
        certify(z, y);
        return sol;
    }

private:
    void refactor() {
        const auto rows = active_rows();
        const Eigen::Index k = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd bm(k, k);
        for (Eigen::Index r = 0; r < k; ++r) {
            for (Eigen::Index j = 0; j < k; ++j) bm(r, j) = a_(rows[static_cast<std::size_t>(r)], basis_[rows[static_cast<std::size_t>(j)]]);
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bm);
        const double rc = k > 0 ? lu.rcond() : 1.0;
        if (!(rc > 1e-13)) {
            std::ostringstream os;
            os << "LP basis is numerically singular (reciprocal condition estimate " << rc << ", size " << k << ")";
            throw NumericalError(os.str());
        }
        binv_ = lu.inverse();
        since_refactor_ = 0;
    }

    std::vector<Eigen::Index> active_rows() const {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (active_[static_cast<std::size_t>(i)]) rows.push_back(i);
        }
        return rows;
    }

    // Column j restricted to active rows.
    Eigen::VectorXd column(Eigen::Index j) const {
        const auto rows = active_rows();
        Eigen::VectorXd col(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) col(static_cast<Eigen::Index>(r)) = a_(rows[r], j);
        return col;
    }

    Eigen::VectorXd rhs() const {
        const auto rows = active_rows();
        Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) v(static_cast<Eigen::Index>(r)) = b_(rows[r]);
        return v;
    }

    Eigen::VectorXd basic_costs() const {
        const auto rows = active_rows();
        Eigen::VectorXd cb(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) cb(static_cast<Eigen::Index>(r)) = cost_(basis_[rows[r]]);
        return cb;
    }

    // Full-length primal vector over every standard-form column.
    Eigen::VectorXd primal() const {
        const auto rows = active_rows();
        const Eigen::VectorXd xb = binv_ * rhs();
        Eigen::VectorXd z = Eigen::VectorXd::Zero(a_.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) z(basis_[rows[r]]) = xb(static_cast<Eigen::Index>(r));
        return z;
    }

    // Multipliers per standard-form row (zero on dropped rows).
    Eigen::VectorXd duals() const {
        const auto rows = active_rows();
        const Eigen::VectorXd ya = binv_.transpose() * basic_costs();
        Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
        for (std::size_t r = 0; r < rows.size(); ++r) y(rows[r]) = ya(static_cast<Eigen::Index>(r));
        return y;
    }

    double objective_value() const { return cost_.dot(primal()); }

    bool is_basic(Eigen::Index j) const {
        for (std::size_t r = 0; r < basis_.size(); ++r) {
            if (active_[r] && basis_[r] == j) return true;
        }
        return false;
    }

    LpStatus iterate(bool allow_artificial, std::size_t& iterations) {
        const Eigen::Index limit = allow_artificial ? a_.cols() : structural_;
        for (;;) {
            if (iterations >= opt_.max_iterations) throw NumericalError("LP iteration limit reached");
            const auto rows = active_rows();
            const Eigen::VectorXd y = binv_.transpose() * basic_costs();

            // Bland: lowest-index column with negative reduced cost.
            Eigen::Index entering = -1;
            for (Eigen::Index j = 0; j < limit; ++j) {
                if (is_basic(j)) continue;
                double rc = cost_(j);
                for (std::size_t r = 0; r < rows.size(); ++r) rc -= y(static_cast<Eigen::Index>(r)) * a_(rows[r], j);
                if (rc < -opt_.tol) {
                    entering = j;
                    break;
                }
            }
            if (entering < 0) return LpStatus::optimal;

            const Eigen::VectorXd dir = binv_ * column(entering);
            const Eigen::VectorXd xb = binv_ * rhs();
            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < dir.size(); ++r) {
                if (dir(r) <= opt_.tol) continue;
                const double ratio = std::max(0.0, xb(r)) / dir(r);
                const Eigen::Index var = basis_[rows[static_cast<std::size_t>(r)]];
                if (ratio < best - 1e-12 ||
                    (std::abs(ratio - best) <= 1e-12 && leave >= 0 && var < basis_[rows[static_cast<std::size_t>(leave)]])) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave < 0) return LpStatus::unbounded;

            if (opt_.dump_tableau) {
                log::debug("simplex it=", iterations, " enter=", entering, " leave=",
                           basis_[rows[static_cast<std::size_t>(leave)]], " step=", best,
                           " obj=", objective_value());
            }
            pivot(rows, leave, entering, dir);
            ++iterations;
        }
    }

    void pivot(const std::vector<Eigen::Index>& rows, Eigen::Index leave, Eigen::Index entering,
               const Eigen::VectorXd& dir) {
        basis_[rows[static_cast<std::size_t>(leave)]] = entering;
        if (++since_refactor_ >= opt_.refactor_every) {
            refactor();
            return;
        }
        // Product-form update of the inverse.
        const double piv = dir(leave);
        const Eigen::RowVectorXd lrow = binv_.row(leave) / piv;
        for (Eigen::Index r = 0; r < binv_.rows(); ++r) {
            if (r == leave) continue;
            binv_.row(r) -= dir(r) * lrow;
        }
        binv_.row(leave) = lrow;
    }

    // After phase 1, swap zero-level artificials for structural columns, or
    // drop their rows when the constraint is redundant.
    void drive_out_artificials() {
        bool changed = true;
        while (changed) {
            changed = false;
            const auto rows = active_rows();
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const Eigen::Index var = basis_[rows[r]];
                if (var < structural_) continue;
                Eigen::Index swap = -1;
                Eigen::VectorXd dir;
                for (Eigen::Index j = 0; j < structural_ && swap < 0; ++j) {
                    if (is_basic(j)) continue;
                    dir = binv_ * column(j);
                    if (std::abs(dir(static_cast<Eigen::Index>(r))) > 1e-9) swap = j;
                }
                if (swap >= 0) {
                    pivot(rows, static_cast<Eigen::Index>(r), swap, dir);
                    refactor();
                } else {
                    active_[static_cast<std::size_t>(rows[r])] = false;
                    refactor();
                }
                changed = true;
                break;
            }
        }
    }

    void certify(const Eigen::VectorXd& z, const Eigen::VectorXd& y) const {
        const double scale = 1.0 + b_.lpNorm<Eigen::Infinity>();
        const Eigen::VectorXd s = z.head(structural_);
        const double resid = (a_.leftCols(structural_) * s - b_).lpNorm<Eigen::Infinity>();
        if (resid > 1e-8 * scale || s.minCoeff() < -1e-8 * scale) {
            throw NumericalError("LP solution failed the feasibility check (residual " + std::to_string(resid) + ")");
        }
        for (Eigen::Index j = 0; j < structural_; ++j) {
            const double rc = cost_(j) - y.dot(a_.col(j));
            if (rc < -1e-8 * (1.0 + cost_.lpNorm<Eigen::Infinity>())) {
                throw NumericalError("LP solution failed the optimality check (reduced cost " + std::to_string(rc) + ")");
            }
        }
    }

    LpOptions opt_;
    Eigen::Index n_ = 0, me_ = 0, mu_ = 0, m_ = 0, structural_ = 0;
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    Eigen::VectorXd cost_;
    Eigen::VectorXd c_orig_;
    std::vector<double> sign_;
    std::vector<Eigen::Index> basis_; // basic column per row
    std::vector<bool> active_;        // rows still in the problem
    Eigen::MatrixXd binv_;
    std::size_t since_refactor_ = 0;
};

} // namespace

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
    problem.validate();
    LpProblem p = problem;
    if (p.a_eq.rows() == 0) p.a_eq.resize(0, p.c.size());
    if (p.a_ub.rows() == 0) p.a_ub.resize(0, p.c.size());
    if (p.a_eq.rows() + p.a_ub.rows() == 0) {
        // No rows: optimal at zero unless some cost is negative.
        LpSolution sol;
        sol.x = Eigen::VectorXd::Zero(p.c.size());
        sol.status = (p.c.array() < 0.0).any() ? LpStatus::unbounded : LpStatus::optimal;
        sol.objective = sol.status == LpStatus::optimal ? 0.0 : -std::numeric_limits<double>::infinity();
        return sol;
    }
    Simplex s(p, options);
    return s.run();
}

} // namespace curbflow
