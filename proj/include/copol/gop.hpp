#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copol/channel.hpp"
#include "copol/errors.hpp"

namespace copol {

/// GoP termination law. beta(i) is the probability that the GoP ends after the
/// i-th differential frame; beta(n_max) = 1 and beta(0) = 0 (the reference
/// frame slot never ends a GoP). A fixed-size GoP has beta(i) = 0 for
/// i < n_max, so every GoP spans exactly n_max + 1 slots.
struct GopConfig {
    int n_max = 1;             ///< maximum number of differential frames per GoP
    std::vector<double> beta;  ///< beta[i-1] = beta(i), size n_max

    static GopConfig fixed(int n) {
        GopConfig g;
        g.n_max = n;
        g.beta.assign(static_cast<std::size_t>(n > 0 ? n : 0), 0.0);
        if (n > 0) g.beta.back() = 1.0;
        return g;
    }

    /// beta(i) for i in 0..n_max.
    double beta_at(int i) const { return i <= 0 ? 0.0 : beta[static_cast<std::size_t>(i - 1)]; }

    /// GoP length in slots (differential frames plus the reference frame).
    int gop_length() const { return n_max + 1; }
};

inline void validate(const GopConfig& g) {
    if (g.n_max < 1) throw std::invalid_argument("GopConfig: n_max must be >= 1");
    if (g.beta.size() != static_cast<std::size_t>(g.n_max))
        throw std::invalid_argument("GopConfig: beta must have exactly n_max entries");
    for (double b : g.beta)
        if (!(b >= 0.0 && b <= 1.0))
            throw std::invalid_argument("GopConfig: beta entries must lie in [0,1]");
    if (std::abs(g.beta.back() - 1.0) > 1e-12)
        throw std::invalid_argument("GopConfig: beta(n_max) must equal 1");
}

/// Chain state. Either (0,0,0) -- the reference-frame slot -- or a
/// differential-frame slot with 1 <= n_tx <= n_max and 0 <= n_rx < n_tx.
/// i_rx says whether the current GoP's reference frame was decoded; n_tx is
/// the index of the differential frame sent in the current slot; n_rx counts
/// differential frames received before the current slot.
struct State {
    int i_rx = 0;
    int n_tx = 0;
    int n_rx = 0;

    bool is_iframe_slot() const { return n_tx == 0; }
    friend bool operator==(const State&, const State&) = default;
};

struct Transition {
    int next;     ///< successor state index
    double prob;  ///< transition probability, > 0
};

/// Enumerated Markov chain over GoP transmission progress: state list,
/// action-conditioned kernel, and the per-state-action rewards used by the
/// performance metrics (expected LTE frames credited, expected D2D packets).
/// States are ordered lexicographically by (i_rx, n_tx, n_rx); the indexing is
/// stable, so policy tables and occupation vectors are portable across runs.
/// Immutable after construction.
class GopChain {
public:
    GopChain(GopConfig gop, LinkFailureProbs probs) : gop_(std::move(gop)), probs_(probs) {
        validate(gop_);
        validate(probs_);
        enumerate_states();
        build_kernel_and_rewards();
    }

    int size() const { return static_cast<int>(states_.size()); }
    const std::vector<State>& states() const { return states_; }
    const State& state(int s) const { return states_[static_cast<std::size_t>(s)]; }
    const GopConfig& gop() const { return gop_; }
    const LinkFailureProbs& probs() const { return probs_; }

    /// Index of a valid state; throws on a tuple outside the state space.
    int index_of(const State& s) const {
        const int n = gop_.n_max;
        if (s.i_rx == 0 && s.n_tx == 0 && s.n_rx == 0) return 0;
        if ((s.i_rx != 0 && s.i_rx != 1) || s.n_tx < 1 || s.n_tx > n || s.n_rx < 0 ||
            s.n_rx >= s.n_tx)
            throw std::invalid_argument("GopChain: invalid state (" + std::to_string(s.i_rx) +
                                        "," + std::to_string(s.n_tx) + "," +
                                        std::to_string(s.n_rx) + ")");
        const int block = n * (n + 1) / 2;  // D-frame states per i_rx value
        return 1 + s.i_rx * block + (s.n_tx - 1) * s.n_tx / 2 + s.n_rx;
    }

    std::span<const Transition> successors(int s, int u) const {
        return next_[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
    }

    /// Dense kernel entry p(to | from, u); linear scan of the successor list.
    double kernel(int from, int u, int to) const {
        for (const Transition& t : successors(from, u))
            if (t.next == to) return t.prob;
        return 0.0;
    }

    /// Expected LTE frames credited in (s,u): nonzero only in
    /// differential-frame states where the GoP can terminate and the
    /// reference frame arrived.
    double delivery_reward(int s, int u) const {
        return delivery_[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
    }

    /// Expected D2D packets delivered in (s,u): u * (1 - rho_d1).
    double throughput_reward(int s, int u) const {
        return throughput_[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
    }

private:
    void enumerate_states() {
        states_.push_back(State{0, 0, 0});
        for (int i = 0; i <= 1; ++i)
            for (int n = 1; n <= gop_.n_max; ++n)
                for (int r = 0; r < n; ++r) states_.push_back(State{i, n, r});
    }

    void build_kernel_and_rewards() {
        const int count = size();
        next_.resize(static_cast<std::size_t>(count));
        delivery_.resize(static_cast<std::size_t>(count));
        throughput_.resize(static_cast<std::size_t>(count));

        for (int s = 0; s < count; ++s) {
            const State& st = states_[static_cast<std::size_t>(s)];
            for (int u = 0; u <= 1; ++u) {
                auto& succ = next_[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
                const double rho = probs_.rho_l(u);
                if (st.is_iframe_slot()) {
                    // reference frame decoded or lost; the first D-frame follows
                    add(succ, index_of(State{1, 1, 0}), 1.0 - rho);
                    add(succ, index_of(State{0, 1, 0}), rho);
                    delivery_[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] = 0.0;
                } else {
                    const double beta = gop_.beta_at(st.n_tx);
                    if (st.n_tx < gop_.n_max) {
                        add(succ, 0, beta);
                        add(succ, index_of(State{st.i_rx, st.n_tx + 1, st.n_rx + 1}),
                            (1.0 - beta) * (1.0 - rho));
                        add(succ, index_of(State{st.i_rx, st.n_tx + 1, st.n_rx}),
                            (1.0 - beta) * rho);
                    } else {
                        add(succ, 0, 1.0);
                    }
                    // Frames credited when the GoP ends here: the D-frames
                    // received so far, the one in flight, and the reference
                    // frame -- all voided if the reference frame was lost.
                    delivery_[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] =
                        beta * st.i_rx * (st.n_rx + st.i_rx + (1.0 - rho));
                }
                throughput_[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] =
                    u * (1.0 - probs_.rho_d1);
            }
        }
    }

    static void add(std::vector<Transition>& succ, int next, double prob) {
        if (prob > 0.0) succ.push_back(Transition{next, prob});
    }

    GopConfig gop_;
    LinkFailureProbs probs_;
    std::vector<State> states_;
    std::vector<std::array<std::vector<Transition>, 2>> next_;
    std::vector<std::array<double, 2>> delivery_;
    std::vector<std::array<double, 2>> throughput_;
};

inline GopChain build_chain(const GopConfig& gop, const LinkFailureProbs& probs) {
    return GopChain(gop, probs);
}

/// Joint state-action stationary distribution of a policy-induced chain.
struct StationaryDistribution {
    std::vector<double> state;                        ///< pi(s)
    std::vector<std::array<double, 2>> state_action;  ///< pi(s,u)
    double balance_residual = 0.0;  ///< max global-balance violation
};

constexpr double kStationaryTol = 1e-10;

/// Solves the global balance equations for the chain induced by the given
/// per-state transmit probabilities. The chain is unichain (the reference
/// slot recurs within n_max+1 slots under every policy), so the solution is
/// unique. Throws NumericalError if the residual exceeds kStationaryTol.
inline StationaryDistribution stationary_distribution(const GopChain& chain,
                                                      std::span<const double> transmit_prob) {
    const int n = chain.size();
    if (static_cast<int>(transmit_prob.size()) != n)
        throw std::invalid_argument("stationary_distribution: policy must cover every state");
    for (double p : transmit_prob)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("stationary_distribution: transmit probabilities must lie in [0,1]");

    // Policy-mixed kernel, transposed: A = P' - I with the last row replaced
    // by the normalization constraint.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        const double p = transmit_prob[static_cast<std::size_t>(s)];
        for (int u = 0; u <= 1; ++u) {
            const double w = u ? p : 1.0 - p;
            if (w == 0.0) continue;
            for (const Transition& t : chain.successors(s, u)) a(t.next, s) += w * t.prob;
        }
        a(s, s) -= 1.0;
    }
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;

    Eigen::VectorXd pi = Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(b);

    StationaryDistribution out;
    out.state.assign(static_cast<std::size_t>(n), 0.0);
    double total = 0.0;
    for (int s = 0; s < n; ++s) {
        const double v = pi(s) < 0.0 ? 0.0 : pi(s);
        out.state[static_cast<std::size_t>(s)] = v;
        total += v;
    }
    if (!(total > 0.0))
        throw NumericalError("stationary_distribution: degenerate solution", total);
    for (double& v : out.state) v /= total;

    // Residual of the original balance equations, checked on all states.
    double residual = 0.0;
    std::vector<double> inflow(static_cast<std::size_t>(n), 0.0);
    for (int s = 0; s < n; ++s) {
        const double p = transmit_prob[static_cast<std::size_t>(s)];
        const double mass = out.state[static_cast<std::size_t>(s)];
        for (int u = 0; u <= 1; ++u) {
            const double w = (u ? p : 1.0 - p) * mass;
            if (w == 0.0) continue;
            for (const Transition& t : chain.successors(s, u))
                inflow[static_cast<std::size_t>(t.next)] += w * t.prob;
        }
    }
    for (int s = 0; s < n; ++s)
        residual = std::max(residual,
                            std::abs(inflow[static_cast<std::size_t>(s)] -
                                     out.state[static_cast<std::size_t>(s)]));
    if (residual > kStationaryTol)
        throw NumericalError("stationary_distribution: balance residual above tolerance",
                             residual);
    out.balance_residual = residual;

    out.state_action.resize(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const double p = transmit_prob[static_cast<std::size_t>(s)];
        const double mass = out.state[static_cast<std::size_t>(s)];
        out.state_action[static_cast<std::size_t>(s)] = {mass * (1.0 - p), mass * p};
    }
    return out;
}

}  // namespace copol
