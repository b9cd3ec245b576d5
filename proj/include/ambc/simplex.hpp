#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace ambc::lp
{

/// maximize c^T x  subject to  A x <= b,  x >= 0.  Entries of b may be negative.
struct LinearProgram
{
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};

enum class LpStatus
{
    optimal,
    infeasible,
    unbounded,
    iteration_limit
};

struct LpSolution
{
    LpStatus status = LpStatus::infeasible;
    Eigen::VectorXd x;
    /// Dual multipliers of A x <= b (y >= 0, A^T y >= c, b^T y = c^T x at optimum).
    Eigen::VectorXd duals;
    double objective = 0.0;
    int iterations = 0;
};

struct SimplexOptions
{
    int max_iterations = 5000;
    double tolerance = 1e-10;
    /// Consecutive degenerate pivots tolerated before switching from Dantzig's rule to Bland's rule.
    int degenerate_limit = 50;
};

namespace detail
{

/// Dense two-phase tableau. Row 0 holds the reduced costs (z_j - c_j), last column the RHS.
class Tableau
{
public:
    Tableau(const LinearProgram& lp, const SimplexOptions& opt) : opt_(opt)
    {
        m_ = lp.A.rows();
        n_ = lp.A.cols();

        // Row equilibration; the scales are undone on the duals.
        scale_.resize(m_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            double s = std::abs(lp.b(i));
            if (n_ > 0) s = std::max(s, lp.A.row(i).cwiseAbs().maxCoeff());
            scale_(i) = s > 0.0 ? s : 1.0;
        }

        flipped_.assign(static_cast<std::size_t>(m_), false);
        Eigen::Index artificials = 0;
        for (Eigen::Index i = 0; i < m_; ++i)
            if (lp.b(i) < 0.0) {
                flipped_[static_cast<std::size_t>(i)] = true;
                ++artificials;
            }

        // columns: [x (n) | slack per row (m) | artificial per flipped row | rhs]
        cols_ = n_ + m_ + artificials;
        T_ = Eigen::MatrixXd::Zero(m_ + 1, cols_ + 1);
        basis_.resize(static_cast<std::size_t>(m_));
        Eigen::Index next_art = n_ + m_;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const double sign = flipped_[static_cast<std::size_t>(i)] ? -1.0 : 1.0;
            T_.row(i + 1).head(n_) = sign * lp.A.row(i) / scale_(i);
            T_(i + 1, n_ + i) = sign;
            T_(i + 1, cols_) = sign * lp.b(i) / scale_(i);
            if (flipped_[static_cast<std::size_t>(i)]) {
                T_(i + 1, next_art) = 1.0;
                basis_[static_cast<std::size_t>(i)] = next_art++;
            } else {
                basis_[static_cast<std::size_t>(i)] = n_ + i;
            }
        }
        first_artificial_ = n_ + m_;
        c_ = lp.c;
    }

    LpSolution solve()
    {
        LpSolution sol;
        if (first_artificial_ < cols_) {
            // phase 1: maximize -sum(artificials)
            T_.row(0).setZero();
            for (Eigen::Index i = 0; i < m_; ++i) {
                if (basis_[static_cast<std::size_t>(i)] < first_artificial_) continue;
                T_.row(0).head(first_artificial_) -= T_.row(i + 1).head(first_artificial_);
                T_(0, cols_) -= T_(i + 1, cols_);
            }
            const LpStatus st = iterate(cols_, sol.iterations);
            if (st == LpStatus::iteration_limit) {
                sol.status = st;
                return sol;
            }
            if (-T_(0, cols_) > opt_.tolerance * std::max<double>(1.0, static_cast<double>(m_))) {
                sol.status = LpStatus::infeasible;
                return sol;
            }
            drive_out_artificials();
        }

        // phase 2 on the original objective, artificial columns barred from entering
        T_.row(0).setZero();
        T_.row(0).head(n_) = -c_.transpose();
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
            const double r = T_(0, j);
            if (r != 0.0) T_.row(0) -= r * T_.row(i + 1);
        }
        sol.status = iterate(first_artificial_, sol.iterations);
        if (sol.status != LpStatus::optimal) return sol;

        sol.x = Eigen::VectorXd::Zero(n_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
            if (j < n_) sol.x(j) = std::max(0.0, T_(i + 1, cols_));
        }
        sol.duals.resize(m_);
        // the row flip and the slack sign cancel, leaving only the equilibration scale
        for (Eigen::Index i = 0; i < m_; ++i)
            sol.duals(i) = T_(0, n_ + i) / scale_(i);
        sol.objective = c_.dot(sol.x);
        return sol;
    }

private:
    LpStatus iterate(Eigen::Index entering_limit, int& iterations)
    {
        int degenerate_run = 0;
        while (true) {
            const bool bland = degenerate_run >= opt_.degenerate_limit;
            Eigen::Index enter = -1;
            double best = -opt_.tolerance;
            for (Eigen::Index j = 0; j < entering_limit; ++j) {
                if (T_(0, j) < best) {
                    enter = j;
                    if (bland) break;
                    best = T_(0, j);
                }
            }
            if (enter < 0) return LpStatus::optimal;
            if (iterations >= opt_.max_iterations) return LpStatus::iteration_limit;

            Eigen::Index leave = -1;
            double ratio = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double a = T_(i + 1, enter);
                if (a <= opt_.tolerance) continue;
                const double r = T_(i + 1, cols_) / a;
                if (r < ratio - opt_.tolerance ||
                    (r <= ratio + opt_.tolerance && leave >= 0 &&
                     basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                    ratio = std::min(ratio, r);
                    leave = i;
                }
            }
            if (leave < 0) return LpStatus::unbounded;

            degenerate_run = ratio <= opt_.tolerance ? degenerate_run + 1 : 0;
            pivot(leave, enter);
            ++iterations;
        }
    }

    void pivot(Eigen::Index row, Eigen::Index col)
    {
        T_.row(row + 1) /= T_(row + 1, col);
        for (Eigen::Index i = 0; i <= m_; ++i) {
            if (i == row + 1) continue;
            const double f = T_(i, col);
            if (f != 0.0) T_.row(i) -= f * T_.row(row + 1);
        }
        basis_[static_cast<std::size_t>(row)] = col;
    }

    void drive_out_artificials()
    {
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < first_artificial_) continue;
            for (Eigen::Index j = 0; j < first_artificial_; ++j) {
                if (std::abs(T_(i + 1, j)) > 1e-9) {
                    pivot(i, j);
                    break;
                }
            }
            // a row with no usable entry is redundant; its artificial stays basic at zero
        }
    }

    SimplexOptions opt_;
    Eigen::Index m_ = 0, n_ = 0, cols_ = 0, first_artificial_ = 0;
    Eigen::MatrixXd T_;
    Eigen::VectorXd scale_, c_;
    std::vector<bool> flipped_;
    std::vector<Eigen::Index> basis_;
};

} // namespace detail

inline LpSolution solve(const LinearProgram& lp, const SimplexOptions& opt = {})
{
    if (lp.A.rows() != lp.b.size() || lp.A.cols() != lp.c.size())
        throw std::invalid_argument("linear program dimensions are inconsistent");
    detail::Tableau tableau(lp, opt);
    return tableau.solve();
}

} // namespace ambc::lp
