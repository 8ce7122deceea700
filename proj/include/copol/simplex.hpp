#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "copol/errors.hpp"

namespace copol::lp {

enum class Relation { eq, le, ge };
enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Options {
    double cost_tol = 1e-9;    ///< reduced-cost threshold for optimality
    double pivot_tol = 1e-11;  ///< smallest acceptable pivot magnitude
    double feas_tol = 1e-8;    ///< phase-1 objective treated as feasible
    long max_iterations = 0;   ///< 0 = 200 * (rows + cols)
    int bland_trigger = 64;    ///< stalled pivots before switching to Bland's rule
};

struct Result {
    Status status = Status::iteration_limit;
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> x;   ///< structural variables
    std::vector<int> basis;  ///< basic columns, standardized layout
    long iterations = 0;
    double infeasibility = 0.0;  ///< phase-1 objective when infeasible
};

namespace detail {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Full-tableau primal simplex. Pivot selection is deterministic: most
/// negative reduced cost with lowest-index tie break, falling back to Bland's
/// rule permanently once the objective stalls, which guarantees termination
/// under degeneracy. Column layout: structural variables first, then one
/// slack/surplus column per inequality row in row order, then (phase 1 only)
/// artificial columns; the right-hand side is the last tableau column.
class SimplexEngine {
public:
    SimplexEngine(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                  const std::vector<Relation>& rel, const Eigen::VectorXd& c,
                  const Options& opt)
        : opt_(opt), m_(static_cast<int>(a.rows())), nstruct_(static_cast<int>(a.cols())) {
        if (b.size() != m_ || static_cast<int>(rel.size()) != m_ || c.size() != nstruct_)
            throw std::invalid_argument("simplex: inconsistent problem dimensions");

        // Standardize: flip rows with negative rhs, add slack/surplus columns.
        rows_ = a;
        rhs_ = b;
        rel_ = rel;
        for (int i = 0; i < m_; ++i) {
            if (rhs_(i) < 0.0) {
                rows_.row(i) = -rows_.row(i);
                rhs_(i) = -rhs_(i);
                if (rel_[static_cast<std::size_t>(i)] == Relation::le)
                    rel_[static_cast<std::size_t>(i)] = Relation::ge;
                else if (rel_[static_cast<std::size_t>(i)] == Relation::ge)
                    rel_[static_cast<std::size_t>(i)] = Relation::le;
            }
        }
        slack_of_row_.assign(static_cast<std::size_t>(m_), -1);
        int nslack = 0;
        for (int i = 0; i < m_; ++i)
            if (rel_[static_cast<std::size_t>(i)] != Relation::eq)
                slack_of_row_[static_cast<std::size_t>(i)] = nstruct_ + nslack++;
        ncols_ = nstruct_ + nslack;
        cost_ = c;
    }

    int num_columns() const { return ncols_; }

    Result solve(const std::vector<int>* warm_basis) {
        if (warm_basis != nullptr && try_warm_start(*warm_basis)) {
            return run_phase2();
        }
        Result r = run_phase1();
        if (r.status != Status::optimal) return r;
        return run_phase2();
    }

private:
    bool try_warm_start(const std::vector<int>& warm) {
        if (static_cast<int>(warm.size()) != m_) return false;
        std::vector<int> cols = warm;
        std::sort(cols.begin(), cols.end());
        if (std::adjacent_find(cols.begin(), cols.end()) != cols.end()) return false;
        if (cols.front() < 0 || cols.back() >= ncols_) return false;

        build_tableau(/*artificial_rows=*/{});
        basis_.assign(static_cast<std::size_t>(m_), -1);
        std::vector<bool> row_done(static_cast<std::size_t>(m_), false);
        for (int col : cols) {
            int best_row = -1;
            double best = opt_.pivot_tol;
            for (int i = 0; i < m_; ++i) {
                if (row_done[static_cast<std::size_t>(i)]) continue;
                const double v = std::abs(t_(i, col));
                if (v > best) {
                    best = v;
                    best_row = i;
                }
            }
            if (best_row < 0) return false;  // singular warm basis
            pivot(best_row, col);
            row_done[static_cast<std::size_t>(best_row)] = true;
        }
        for (int i = 0; i < m_; ++i) {
            double& v = t_(i, ncols_total_);
            if (v < -opt_.feas_tol) return false;  // warm basis infeasible
            if (v < 0.0) v = 0.0;
        }
        return true;
    }

    Result run_phase1() {
        // Slack columns of <= rows can start basic; other rows get artificials.
        std::vector<int> artificial_rows;
        for (int i = 0; i < m_; ++i)
            if (rel_[static_cast<std::size_t>(i)] != Relation::le)
                artificial_rows.push_back(i);

        build_tableau(artificial_rows);
        basis_.assign(static_cast<std::size_t>(m_), -1);
        int next_art = ncols_;
        for (int i = 0; i < m_; ++i) {
            if (rel_[static_cast<std::size_t>(i)] == Relation::le)
                basis_[static_cast<std::size_t>(i)] = slack_of_row_[static_cast<std::size_t>(i)];
            else
                basis_[static_cast<std::size_t>(i)] = next_art++;
        }

        Result r;
        if (artificial_rows.empty()) {
            r.status = Status::optimal;
            return r;
        }

        Eigen::RowVectorXd phase1_cost = Eigen::RowVectorXd::Zero(ncols_total_);
        for (int j = ncols_; j < ncols_total_; ++j) phase1_cost(j) = 1.0;
        canonicalize_cost(phase1_cost);

        const Status st = iterate(/*limit_to_real_columns=*/false);
        r.iterations = iterations_;
        const double phase1_obj = -cost_row_(ncols_total_);
        if (st != Status::optimal) {
            r.status = st == Status::unbounded ? Status::iteration_limit : st;
            return r;
        }
        if (phase1_obj > opt_.feas_tol) {
            r.status = Status::infeasible;
            r.infeasibility = phase1_obj;
            return r;
        }

        // Pivot artificials out of the basis; rows that cannot pivot are
        // redundant and get dropped.
        std::vector<int> keep;
        for (int i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < ncols_) {
                keep.push_back(i);
                continue;
            }
            int col = -1;
            for (int j = 0; j < ncols_; ++j)
                if (std::abs(t_(i, j)) > opt_.pivot_tol) {
                    col = j;
                    break;
                }
            if (col >= 0) {
                pivot(i, col);
                keep.push_back(i);
            }
        }
        if (static_cast<int>(keep.size()) < m_) compact_rows(keep);
        drop_artificial_columns();
        r.status = Status::optimal;
        return r;
    }

    Result run_phase2() {
        Eigen::RowVectorXd c2 = Eigen::RowVectorXd::Zero(ncols_total_);
        c2.head(nstruct_) = cost_.transpose();
        canonicalize_cost(c2);

        Result r;
        r.status = iterate(/*limit_to_real_columns=*/true);
        r.iterations = iterations_;
        if (r.status == Status::optimal || r.status == Status::iteration_limit) {
            r.x.assign(static_cast<std::size_t>(nstruct_), 0.0);
            for (int i = 0; i < m_; ++i) {
                const int j = basis_[static_cast<std::size_t>(i)];
                if (j < nstruct_)
                    r.x[static_cast<std::size_t>(j)] = std::max(t_(i, ncols_total_), 0.0);
            }
            r.objective = 0.0;
            for (int j = 0; j < nstruct_; ++j)
                r.objective += cost_(j) * r.x[static_cast<std::size_t>(j)];
            r.basis = basis_;
        }
        return r;
    }

    void build_tableau(const std::vector<int>& artificial_rows) {
        const int nart = static_cast<int>(artificial_rows.size());
        ncols_total_ = ncols_ + nart;
        t_.setZero(m_, ncols_total_ + 1);
        t_.block(0, 0, m_, nstruct_) = rows_;
        for (int i = 0; i < m_; ++i) {
            const int sj = slack_of_row_[static_cast<std::size_t>(i)];
            if (sj >= 0)
                t_(i, sj) = rel_[static_cast<std::size_t>(i)] == Relation::le ? 1.0 : -1.0;
            t_(i, ncols_total_) = rhs_(i);
        }
        for (int k = 0; k < nart; ++k) t_(artificial_rows[static_cast<std::size_t>(k)], ncols_ + k) = 1.0;
        iterations_ = 0;
        bland_ = false;
        stalled_ = 0;
    }

    void canonicalize_cost(const Eigen::RowVectorXd& c_ext) {
        cost_row_ = Eigen::RowVectorXd::Zero(ncols_total_ + 1);
        cost_row_.head(ncols_total_) = c_ext;
        for (int i = 0; i < m_; ++i) {
            const double f = cost_row_(basis_[static_cast<std::size_t>(i)]);
            if (f != 0.0) cost_row_ -= f * t_.row(i);
        }
    }

    Status iterate(bool limit_to_real_columns) {
        const int jmax = limit_to_real_columns ? ncols_ : ncols_total_;
        const long cap = opt_.max_iterations > 0
                             ? opt_.max_iterations
                             : 200L * (m_ + ncols_total_);
        double prev_obj = -cost_row_(ncols_total_);
        while (true) {
            const int enter = pick_entering(jmax);
            if (enter < 0) return Status::optimal;
            const int leave = pick_leaving(enter);
            if (leave < 0) return Status::unbounded;
            pivot(leave, enter);
            if (++iterations_ > cap) return Status::iteration_limit;

            const double obj = -cost_row_(ncols_total_);
            if (obj < prev_obj - 1e-13 * (1.0 + std::abs(prev_obj))) {
                stalled_ = 0;
            } else if (!bland_ && ++stalled_ >= opt_.bland_trigger) {
                bland_ = true;
            }
            prev_obj = obj;
        }
    }

    int pick_entering(int jmax) const {
        if (bland_) {
            for (int j = 0; j < jmax; ++j)
                if (cost_row_(j) < -opt_.cost_tol) return j;
            return -1;
        }
        int best = -1;
        double best_cost = -opt_.cost_tol;
        for (int j = 0; j < jmax; ++j)
            if (cost_row_(j) < best_cost) {
                best_cost = cost_row_(j);
                best = j;
            }
        return best;
    }

    int pick_leaving(int enter) const {
        int best = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m_; ++i) {
            const double a = t_(i, enter);
            if (a <= opt_.pivot_tol) continue;
            const double ratio = std::max(t_(i, ncols_total_), 0.0) / a;
            if (ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 && best >= 0 &&
                 basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(best)])) {
                best_ratio = ratio;
                best = i;
            }
        }
        return best;
    }

    void pivot(int r, int j) {
        t_.row(r) /= t_(r, j);
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double f = t_(i, j);
            if (f != 0.0) t_.row(i) -= f * t_.row(r);
        }
        if (cost_row_.size() == ncols_total_ + 1) {
            const double f = cost_row_(j);
            if (f != 0.0) cost_row_ -= f * t_.row(r);
        }
        basis_[static_cast<std::size_t>(r)] = j;
    }

    void compact_rows(const std::vector<int>& keep) {
        Tableau nt(static_cast<int>(keep.size()), t_.cols());
        std::vector<int> nb;
        for (std::size_t k = 0; k < keep.size(); ++k) {
            nt.row(static_cast<int>(k)) = t_.row(keep[k]);
            nb.push_back(basis_[static_cast<std::size_t>(keep[k])]);
        }
        t_.swap(nt);
        basis_ = std::move(nb);
        m_ = static_cast<int>(keep.size());
    }

    void drop_artificial_columns() {
        if (ncols_total_ == ncols_) return;
        Tableau nt(m_, ncols_ + 1);
        nt.leftCols(ncols_) = t_.leftCols(ncols_);
        nt.col(ncols_) = t_.col(ncols_total_);
        t_.swap(nt);
        ncols_total_ = ncols_;
    }

    Options opt_;
    int m_;
    int nstruct_;
    int ncols_ = 0;        ///< structural + slack columns
    int ncols_total_ = 0;  ///< including artificials while they exist
    Eigen::MatrixXd rows_;
    Eigen::VectorXd rhs_;
    Eigen::VectorXd cost_;
    std::vector<Relation> rel_;
    std::vector<int> slack_of_row_;
    Tableau t_;
    Eigen::RowVectorXd cost_row_;
    std::vector<int> basis_;
    long iterations_ = 0;
    bool bland_ = false;
    int stalled_ = 0;
};

}  // namespace detail

/// Minimize c.x subject to A x (rel) b and x >= 0.
///
/// `warm_basis`, when given, lists m column indices (structural columns
/// first, then slack/surplus columns per inequality row in row order) that
/// form a feasible basis; phase 1 is then skipped. An unusable warm basis
/// silently falls back to the two-phase path.
inline Result solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const std::vector<Relation>& rel, const Eigen::VectorXd& c,
                    const Options& opt = {}, const std::vector<int>* warm_basis = nullptr) {
    detail::SimplexEngine engine(a, b, rel, c, opt);
    return engine.solve(warm_basis);
}

}  // namespace copol::lp
