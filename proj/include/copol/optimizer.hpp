#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "copol/gop.hpp"
#include "copol/metrics.hpp"
#include "copol/parallel.hpp"
#include "copol/policy.hpp"
#include "copol/simplex.hpp"

namespace copol {

/// Occupation-measure linear program for the constrained chain:
///   maximize   sum phi(s,u) z(s,u)
///   subject to sum omega(s,u) z(s,u) >= delta          (delivery row)
///              inflow(s') = outflow(s') for every s'   (balance rows)
///              sum z = 1,  z >= 0
/// Variables are indexed 2*state + action. All |S| balance rows are kept in
/// the problem for inspection; one of them is redundant with the
/// normalization row and is dropped when the tableau is assembled.
struct LpProblem {
    int num_states = 0;
    int num_vars = 0;
    double delta = 0.0;
    Eigen::VectorXd objective;         ///< phi per variable (maximized)
    Eigen::VectorXd delivery;          ///< omega per variable
    Eigen::MatrixXd constraints;       ///< balance rows, then normalization, then delivery
    Eigen::VectorXd rhs;
    std::vector<lp::Relation> relations;
};

inline LpProblem build_lp(const GopChain& chain, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0))
        throw std::invalid_argument("build_lp: delta must lie in [0,1]");
    LpProblem p;
    p.num_states = chain.size();
    p.num_vars = 2 * p.num_states;
    p.delta = delta;
    p.objective.setZero(p.num_vars);
    p.delivery.setZero(p.num_vars);
    p.constraints.setZero(p.num_states + 2, p.num_vars);
    p.rhs.setZero(p.num_states + 2);
    p.relations.assign(static_cast<std::size_t>(p.num_states), lp::Relation::eq);

    for (int s = 0; s < p.num_states; ++s) {
        for (int u = 0; u <= 1; ++u) {
            const int v = 2 * s + u;
            p.objective(v) = chain.throughput_reward(s, u);
            p.delivery(v) = chain.delivery_reward(s, u);
            for (const Transition& t : chain.successors(s, u))
                p.constraints(t.next, v) += t.prob;
            p.constraints(s, v) -= 1.0;
            p.constraints(p.num_states, v) = 1.0;  // normalization
            p.constraints(p.num_states + 1, v) = chain.delivery_reward(s, u);
        }
    }
    p.rhs(p.num_states) = 1.0;
    p.relations.push_back(lp::Relation::eq);
    p.rhs(p.num_states + 1) = delta;
    p.relations.push_back(lp::Relation::ge);
    return p;
}

struct SolveOptions {
    double feas_tol = 1e-8;
    double opt_tol = 1e-9;
};

struct Residuals {
    double balance = 0.0;        ///< max violation over all balance rows
    double normalization = 0.0;  ///< |sum z - 1|
    double delivery_slack = 0.0; ///< sum omega z - delta
};

/// Result of one constrained solve. When infeasible, `delivery_ceiling`
/// reports the maximum achievable delivery rate (attained by the idle
/// policy, since interference never helps the LTE link).
struct OccupationSolution {
    bool feasible = false;
    std::vector<double> z;  ///< occupation measure, indexed 2*state + action
    double objective = std::numeric_limits<double>::quiet_NaN();
    double delivery = std::numeric_limits<double>::quiet_NaN();
    double delivery_ceiling = 0.0;
    Policy policy;
    Residuals residuals;
    long iterations = 0;
};

/// Maximum achievable LTE delivery rate: the idle policy's delivery rate.
inline double max_delivery_rate(const GopChain& chain) {
    const StationaryDistribution pi = stationary_distribution(chain, Policy::constant(0.0));
    double d = 0.0;
    for (int s = 0; s < chain.size(); ++s)
        d += pi.state[static_cast<std::size_t>(s)] * chain.delivery_reward(s, 0);
    return d;
}

/// Randomized stationary policy induced by an occupation measure:
/// mu(s) = z(s,1) / (z(s,0) + z(s,1)). States with no visit mass transmit
/// when the reference frame is already lost (interference there is free) and
/// stay idle otherwise.
inline Policy extract_policy(std::span<const double> z, const GopChain& chain) {
    constexpr double kVisitTol = 1e-12;
    if (static_cast<int>(z.size()) != 2 * chain.size())
        throw std::invalid_argument("extract_policy: measure size does not match the chain");
    std::vector<double> table(static_cast<std::size_t>(chain.size()));
    for (int s = 0; s < chain.size(); ++s) {
        const double z0 = z[static_cast<std::size_t>(2 * s)];
        const double z1 = z[static_cast<std::size_t>(2 * s + 1)];
        double p;
        if (z0 + z1 > kVisitTol)
            p = std::clamp(z1 / (z0 + z1), 0.0, 1.0);
        else
            p = chain.state(s).i_rx == 0 ? 1.0 : 0.0;
        table[static_cast<std::size_t>(s)] = p;
    }
    return Policy::tabular(std::move(table));
}

namespace detail {

/// Rebuilds the basic solution from the original constraint columns with a
/// fresh LU factorization, clearing the drift a long pivot sequence leaves in
/// the tableau.
inline std::vector<double> refresh_basic_solution(const LpProblem& p, double delta_eff,
                                                  const std::vector<int>& basis) {
    const int ns = p.num_states;
    const int m = ns + 1;  // balance rows minus the dropped one, normalization, delivery
    Eigen::MatrixXd basis_cols(m, m);
    for (int k = 0; k < m; ++k) {
        const int j = basis[static_cast<std::size_t>(k)];
        if (j < p.num_vars) {
            basis_cols.col(k).head(ns - 1) = p.constraints.col(j).head(ns - 1);
            basis_cols(ns - 1, k) = p.constraints(ns, j);
            basis_cols(ns, k) = p.constraints(ns + 1, j);
        } else {
            basis_cols.col(k).setZero();
            basis_cols(ns, k) = -1.0;  // surplus of the delivery row
        }
    }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b(ns - 1) = 1.0;
    b(ns) = delta_eff;
    const Eigen::VectorXd xb = Eigen::PartialPivLU<Eigen::MatrixXd>(basis_cols).solve(b);

    std::vector<double> z(static_cast<std::size_t>(p.num_vars), 0.0);
    for (int k = 0; k < m; ++k) {
        const int j = basis[static_cast<std::size_t>(k)];
        if (j < p.num_vars) z[static_cast<std::size_t>(j)] = std::max(xb(k), 0.0);
    }
    double total = 0.0;
    for (double v : z) total += v;
    if (!(total > 0.0)) throw NumericalError("solve: degenerate occupation measure", total);
    for (double& v : z) v /= total;
    return z;
}

}  // namespace detail

/// Solves the occupation-measure LP. Infeasibility is decided against the
/// delivery ceiling before any pivoting; feasible problems start phase 2
/// directly from the idle policy's basis, which is feasible for every
/// attainable delta.
inline OccupationSolution solve(const LpProblem& problem, const GopChain& chain,
                                const SolveOptions& opt = {}) {
    OccupationSolution out;

    const StationaryDistribution idle = stationary_distribution(chain, Policy::constant(0.0));
    double ceiling = 0.0;
    for (int s = 0; s < chain.size(); ++s)
        ceiling += idle.state[static_cast<std::size_t>(s)] * chain.delivery_reward(s, 0);
    out.delivery_ceiling = ceiling;

    if (problem.delta > ceiling + opt.feas_tol) return out;  // infeasible
    const double delta_eff = std::min(problem.delta, ceiling);

    const int ns = problem.num_states;
    const int m = ns + 1;
    Eigen::MatrixXd a(m, problem.num_vars);
    a.topRows(ns - 1) = problem.constraints.topRows(ns - 1);  // drop the last balance row
    a.row(ns - 1) = problem.constraints.row(ns);
    a.row(ns) = problem.constraints.row(ns + 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b(ns - 1) = 1.0;
    b(ns) = delta_eff;
    std::vector<lp::Relation> rel(static_cast<std::size_t>(ns), lp::Relation::eq);
    rel.push_back(lp::Relation::ge);

    std::vector<int> warm;
    warm.reserve(static_cast<std::size_t>(m));
    for (int s = 0; s < ns; ++s) warm.push_back(2 * s);  // idle action columns
    warm.push_back(problem.num_vars);                    // delivery surplus

    lp::Options lpopt;
    lpopt.cost_tol = opt.opt_tol;
    lpopt.feas_tol = opt.feas_tol;
    const lp::Result res =
        lp::solve(a, b, rel, Eigen::VectorXd(-problem.objective), lpopt, &warm);
    out.iterations = res.iterations;

    if (res.status == lp::Status::infeasible) return out;  // defensive; ceiling check rules this out
    if (res.status != lp::Status::optimal)
        throw NumericalError("solve: simplex did not converge", res.infeasibility);

    out.z = detail::refresh_basic_solution(problem, delta_eff, res.basis);
    out.objective = 0.0;
    out.delivery = 0.0;
    for (int v = 0; v < problem.num_vars; ++v) {
        out.objective += problem.objective(v) * out.z[static_cast<std::size_t>(v)];
        out.delivery += problem.delivery(v) * out.z[static_cast<std::size_t>(v)];
    }

    Eigen::Map<const Eigen::VectorXd> zv(out.z.data(), problem.num_vars);
    out.residuals.balance =
        (problem.constraints.topRows(ns) * zv).cwiseAbs().maxCoeff();
    out.residuals.normalization = std::abs(zv.sum() - 1.0);
    out.residuals.delivery_slack = out.delivery - problem.delta;
    if (out.residuals.balance > opt.feas_tol || out.residuals.normalization > opt.feas_tol)
        throw NumericalError("solve: solution residual above tolerance",
                             std::max(out.residuals.balance, out.residuals.normalization));

    out.policy = extract_policy(out.z, chain);
    out.feasible = true;
    return out;
}

inline OccupationSolution solve(const GopChain& chain, double delta,
                                const SolveOptions& opt = {}) {
    return solve(build_lp(chain, delta), chain, opt);
}

/// One row of a constraint sweep: optimal throughput and the visit-weighted
/// transmit probabilities of the three state classes (reference-frame slot,
/// differential frames with the reference frame received, differential
/// frames with it lost).
struct SweepPoint {
    double delta = 0.0;
    bool feasible = false;
    double t_d2d = std::numeric_limits<double>::quiet_NaN();
    double d_lte = std::numeric_limits<double>::quiet_NaN();
    double p_tx_iframe = std::numeric_limits<double>::quiet_NaN();
    double p_tx_dframe_irx1 = std::numeric_limits<double>::quiet_NaN();
    double p_tx_dframe_irx0 = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double class_transmit_prob(const GopChain& chain, const OccupationSolution& sol,
                                  int want_irx, bool iframe_class) {
    constexpr double kVisitTol = 1e-12;
    double on = 0.0, total = 0.0, fallback = 0.0;
    int count = 0;
    for (int s = 0; s < chain.size(); ++s) {
        const State& st = chain.state(s);
        const bool in_class = iframe_class ? st.is_iframe_slot()
                                           : (!st.is_iframe_slot() && st.i_rx == want_irx);
        if (!in_class) continue;
        on += sol.z[static_cast<std::size_t>(2 * s + 1)];
        total += sol.z[static_cast<std::size_t>(2 * s)] +
                 sol.z[static_cast<std::size_t>(2 * s + 1)];
        fallback += sol.policy.table()[static_cast<std::size_t>(s)];
        ++count;
    }
    if (total > kVisitTol) return on / total;
    return count > 0 ? fallback / count : std::numeric_limits<double>::quiet_NaN();
}

inline SweepPoint to_sweep_point(const GopChain& chain, double delta,
                                 const OccupationSolution& sol) {
    SweepPoint pt;
    pt.delta = delta;
    pt.feasible = sol.feasible;
    if (!sol.feasible) return pt;
    pt.t_d2d = sol.objective;
    pt.d_lte = sol.delivery;
    pt.p_tx_iframe = class_transmit_prob(chain, sol, 0, true);
    pt.p_tx_dframe_irx1 = class_transmit_prob(chain, sol, 1, false);
    pt.p_tx_dframe_irx0 = class_transmit_prob(chain, sol, 0, false);
    return pt;
}

}  // namespace detail

/// Solves the LP for each constraint level. Deltas must be ascending within
/// [0,1]; infeasible levels are marked rather than aborting the sweep. Solves
/// run on `jobs` threads (0 = hardware concurrency); results are ordered by
/// delta regardless of completion order. When `solutions` is non-null it is
/// resized and filled with the full per-delta solutions.
inline std::vector<SweepPoint> sweep_delta(const GopChain& chain, std::span<const double> deltas,
                                           const SolveOptions& opt = {}, int jobs = 0,
                                           std::vector<OccupationSolution>* solutions = nullptr) {
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] >= 0.0 && deltas[i] <= 1.0))
            throw std::invalid_argument("sweep_delta: deltas must lie in [0,1]");
        if (i > 0 && deltas[i] < deltas[i - 1])
            throw std::invalid_argument("sweep_delta: deltas must be sorted ascending");
    }
    std::vector<SweepPoint> points(deltas.size());
    if (solutions != nullptr) solutions->assign(deltas.size(), OccupationSolution{});

    detail::parallel_for(deltas.size(), jobs, [&](std::size_t i) {
        OccupationSolution sol = solve(chain, deltas[i], opt);
        points[i] = detail::to_sweep_point(chain, deltas[i], sol);
        if (solutions != nullptr) (*solutions)[i] = std::move(sol);
    });
    return points;
}

}  // namespace copol
