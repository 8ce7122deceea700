#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "copol/gop.hpp"

namespace copol {

enum class PolicyKind { tabular, constant, heuristic, heuristic_aggressive };

inline const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::tabular: return "tabular";
        case PolicyKind::constant: return "constant";
        case PolicyKind::heuristic: return "heuristic";
        case PolicyKind::heuristic_aggressive: return "heuristic-aggressive";
    }
    return "?";
}

/// Randomized stationary policy: a per-state probability of the D2D
/// transmitter being active. Three parametric families plus a tabular form:
///   constant             p_tx in every state
///   heuristic            0 in the reference-frame slot, p_tx elsewhere
///   heuristic-aggressive as heuristic, but 1 in differential-frame states
///                        whose reference frame was already lost
class Policy {
public:
    Policy() : Policy(constant(0.0)) {}

    static Policy constant(double p_tx) { return Policy(PolicyKind::constant, p_tx, {}); }
    static Policy heuristic(double p_tx) { return Policy(PolicyKind::heuristic, p_tx, {}); }
    static Policy heuristic_aggressive(double p_tx) {
        return Policy(PolicyKind::heuristic_aggressive, p_tx, {});
    }
    static Policy tabular(std::vector<double> table) {
        return Policy(PolicyKind::tabular, 0.0, std::move(table));
    }

    PolicyKind kind() const { return kind_; }
    double p_tx() const { return p_tx_; }
    const std::vector<double>& table() const { return table_; }

    /// P(transmit | state). For tabular policies the state index is used.
    double transmit_prob(const State& s, int index) const {
        switch (kind_) {
            case PolicyKind::constant:
                return p_tx_;
            case PolicyKind::heuristic:
                return s.is_iframe_slot() ? 0.0 : p_tx_;
            case PolicyKind::heuristic_aggressive:
                if (s.is_iframe_slot()) return 0.0;
                return s.i_rx == 0 ? 1.0 : p_tx_;
            case PolicyKind::tabular:
                if (index < 0 || static_cast<std::size_t>(index) >= table_.size())
                    throw std::invalid_argument("Policy: state index outside the table");
                return table_[static_cast<std::size_t>(index)];
        }
        return 0.0;
    }

    /// Per-state transmit probabilities in the chain's state order.
    std::vector<double> materialize(const GopChain& chain) const {
        if (kind_ == PolicyKind::tabular &&
            table_.size() != static_cast<std::size_t>(chain.size()))
            throw std::invalid_argument("Policy: table size " + std::to_string(table_.size()) +
                                        " does not match state count " +
                                        std::to_string(chain.size()));
        std::vector<double> out(static_cast<std::size_t>(chain.size()));
        for (int s = 0; s < chain.size(); ++s)
            out[static_cast<std::size_t>(s)] = transmit_prob(chain.state(s), s);
        return out;
    }

private:
    Policy(PolicyKind kind, double p_tx, std::vector<double> table)
        : kind_(kind), p_tx_(p_tx), table_(std::move(table)) {
        if (kind_ != PolicyKind::tabular) {
            check01(p_tx_, "p_tx");
        } else {
            for (double p : table_) check01(p, "table entry");
        }
    }

    static void check01(double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument(std::string("Policy: ") + what + " must lie in [0,1]");
    }

    PolicyKind kind_;
    double p_tx_;
    std::vector<double> table_;
};

inline StationaryDistribution stationary_distribution(const GopChain& chain,
                                                      const Policy& policy) {
    return stationary_distribution(chain, policy.materialize(chain));
}

}  // namespace copol
