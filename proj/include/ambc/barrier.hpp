#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace ambc::barrier
{

/// Local model of one smooth convex constraint  h(z) + aux_coef * w <= 0.
///
/// The Hessian of h is diag(hess_diag) + hess_weight * hess_vec hess_vec^T;
/// either part may be left empty.
struct ConstraintTerm
{
    double value = 0.0; ///< h(z) + aux_coef * w
    Eigen::VectorXd gradient;
    double aux_coef = 0.0;
    Eigen::VectorXd hess_diag;
    Eigen::VectorXd hess_vec;
    double hess_weight = 0.0;
};

/// Requirements on a constraint set handed to minimize_epigraph():
///
///   Eigen::Index dimension() const;
///   std::size_t constraint_count() const;
///   // g_i(z, w) for every constraint; false when z leaves the domain
///   bool evaluate(const Eigen::VectorXd& z, double w, Eigen::VectorXd& g) const;
///   void linearize(const Eigen::VectorXd& z, double w, std::vector<ConstraintTerm>& out) const;
template <class P>
concept ConstraintSet = requires(const P& p, const Eigen::VectorXd& z, double w, Eigen::VectorXd& g,
                                 std::vector<ConstraintTerm>& terms) {
    { p.dimension() } -> std::convertible_to<Eigen::Index>;
    { p.constraint_count() } -> std::convertible_to<std::size_t>;
    { p.evaluate(z, w, g) } -> std::convertible_to<bool>;
    p.linearize(z, w, terms);
};

struct Options
{
    double initial_weight = 10.0;
    double weight_growth = 10.0;
    double gap_tolerance = 1e-8;
    double newton_tolerance = 1e-10;
    int max_newton_steps = 3000;
    /// Newton steps per weight before the point is taken as centered; rounding
    /// can keep the line search creeping without progress at large weights.
    int max_centering_steps = 150;
    /// Stop as soon as the auxiliary variable drops below this value (phase-1 use).
    std::optional<double> stop_below;
};

enum class Outcome
{
    converged,    ///< duality-gap estimate below tolerance
    stopped_early, ///< stop_below reached
    stalled       ///< Newton budget exhausted or line search broke down
};

struct Result
{
    Eigen::VectorXd z;
    double w = 0.0;
    Outcome outcome = Outcome::stalled;
    int newton_steps = 0;
    double gap = std::numeric_limits<double>::infinity();
};

namespace detail
{

template <class P>
double barrier_value(const P& problem, const Eigen::VectorXd& z, double w, double weight, double sign,
                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, Eigen::VectorXd& g)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (((z - lower).array() <= 0.0).any() || ((upper - z).array() <= 0.0).any()) return inf;
    if (!problem.evaluate(z, w, g)) return inf;
    if (!g.allFinite() || (g.array() >= 0.0).any()) return inf;
    return weight * sign * w - (-g.array()).log().sum() - (z - lower).array().log().sum() -
           (upper - z).array().log().sum();
}

} // namespace detail

/// Log-barrier path following for
///
///   minimize sign * w  over (z, w)  s.t.  g_i(z, w) <= 0,  lower < z < upper,
///
/// with Newton steps that exploit the diagonal-plus-low-rank Hessian: only a
/// bordered system of size (low rank + 1) is factorized per step.
/// (z0, w0) must be strictly feasible.
template <ConstraintSet P>
Result minimize_epigraph(const P& problem, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                         Eigen::VectorXd z0, double w0, double sign, const Options& opt = {})
{
    const Eigen::Index n = problem.dimension();
    const auto count = static_cast<double>(problem.constraint_count()) + 2.0 * static_cast<double>(n);

    Result res;
    res.z = std::move(z0);
    res.w = w0;
    double weight = opt.initial_weight;

    std::vector<ConstraintTerm> terms;
    Eigen::VectorXd g(static_cast<Eigen::Index>(problem.constraint_count()));
    Eigen::VectorXd g_trial = g;

    double value = detail::barrier_value(problem, res.z, res.w, weight, sign, lower, upper, g);
    if (!std::isfinite(value)) {
        res.outcome = Outcome::stalled;
        return res;
    }

    while (true) {
        // centering at the current weight
        int flat_steps = 0;
        const int centering_start = res.newton_steps;
        while (true) {
            if (opt.stop_below && res.w < *opt.stop_below) {
                res.outcome = Outcome::stopped_early;
                return res;
            }
            if (res.newton_steps >= opt.max_newton_steps) {
                res.outcome = Outcome::stalled;
                return res;
            }
            terms.clear();
            problem.linearize(res.z, res.w, terms);

            const Eigen::ArrayXd lo_gap = (res.z - lower).array();
            const Eigen::ArrayXd hi_gap = (upper - res.z).array();
            Eigen::VectorXd grad_z = (1.0 / hi_gap - 1.0 / lo_gap).matrix();
            Eigen::ArrayXd diag = 1.0 / lo_gap.square() + 1.0 / hi_gap.square();
            double grad_w = weight * sign;

            std::vector<const Eigen::VectorXd*> cols;
            std::vector<double> inv_weight; // C^{-1}: slack^2 for gradients, slack/rho for curvature
            std::vector<double> aux;
            for (const auto& t : terms) {
                const double slack = -t.value;
                grad_z += t.gradient / slack;
                grad_w += t.aux_coef / slack;
                if (t.hess_diag.size() > 0) diag += t.hess_diag.array() / slack;
                cols.push_back(&t.gradient);
                inv_weight.push_back(slack * slack);
                aux.push_back(t.aux_coef);
                if (t.hess_vec.size() > 0 && t.hess_weight > 0.0) {
                    cols.push_back(&t.hess_vec);
                    inv_weight.push_back(slack / t.hess_weight);
                    aux.push_back(0.0);
                }
            }

            // Hessian = [D + U C U^T, U C a; a^T C U^T, a^T C a]. With lambda = C (U^T dz + a dw):
            //   dz = -D^{-1} (grad_z + U lambda)
            //   [U^T D^{-1} U + C^{-1}, -a; a^T, 0] [lambda; dw] = [-U^T D^{-1} grad_z; -grad_w]
            // which never forms the 1/slack^2 products that cancel near the boundary.
            const auto r = static_cast<Eigen::Index>(cols.size());
            const Eigen::ArrayXd dinv = 1.0 / diag;
            Eigen::MatrixXd U(n, r);
            for (Eigen::Index j = 0; j < r; ++j)
                U.col(j) = *cols[static_cast<std::size_t>(j)];
            const Eigen::MatrixXd DU = dinv.matrix().asDiagonal() * U;
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(r + 1, r + 1);
            kkt.topLeftCorner(r, r) = U.transpose() * DU;
            for (Eigen::Index j = 0; j < r; ++j) {
                const auto sj = static_cast<std::size_t>(j);
                kkt(j, j) += inv_weight[sj];
                kkt(j, r) = -aux[sj];
                kkt(r, j) = aux[sj];
            }
            Eigen::VectorXd rhs(r + 1);
            rhs.head(r) = -DU.transpose() * grad_z;
            rhs(r) = -grad_w;
            const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
            const double dw = sol(r);
            const Eigen::VectorXd dz = -(dinv * (grad_z + U * sol.head(r)).array()).matrix();
            if (!sol.allFinite()) {
                res.outcome = Outcome::stalled;
                return res;
            }
            const double decrement = -(grad_z.dot(dz) + grad_w * dw);
            if (!std::isfinite(decrement)) {
                res.outcome = Outcome::stalled;
                return res;
            }
            if (decrement / 2.0 <= opt.newton_tolerance) break;

            // largest step keeping z strictly inside the box, then Armijo backtracking
            double step = 1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (dz(i) < 0.0) step = std::min(step, 0.99 * lo_gap(i) / -dz(i));
                if (dz(i) > 0.0) step = std::min(step, 0.99 * hi_gap(i) / dz(i));
            }
            bool accepted = false;
            for (int bt = 0; bt < 80; ++bt, step *= 0.5) {
                const Eigen::VectorXd z_new = res.z + step * dz;
                const double w_new = res.w + step * dw;
                const double v_new =
                    detail::barrier_value(problem, z_new, w_new, weight, sign, lower, upper, g_trial);
                if (v_new <= value - 0.01 * step * decrement) {
                    // at large weights rounding swamps the decrease; a few such steps end centering
                    flat_steps = value - v_new <= 1e-13 * std::max(1.0, std::abs(value)) ? flat_steps + 1 : 0;
                    res.z = z_new;
                    res.w = w_new;
                    value = v_new;
                    g = g_trial;
                    accepted = true;
                    break;
                }
            }
            ++res.newton_steps;
            // no measurable progress: treat as centered
            if (!accepted || flat_steps >= 5 || res.newton_steps - centering_start >= opt.max_centering_steps) break;
        }

        res.gap = count / weight;
        if (res.gap <= opt.gap_tolerance) {
            res.outcome = Outcome::converged;
            return res;
        }
        weight *= opt.weight_growth;
        value = detail::barrier_value(problem, res.z, res.w, weight, sign, lower, upper, g);
    }
}

} // namespace ambc::barrier
