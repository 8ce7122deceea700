#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "copol/channel.hpp"
#include "copol/gop.hpp"
#include "copol/metrics.hpp"
#include "copol/parallel.hpp"
#include "copol/policy.hpp"

namespace copol {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Reproducible substream: stream k of seed s drives an mt19937_64 seeded
/// with splitmix64(s ^ (k+1)*0x9E3779B97F4A7C15). Uniform doubles come from
/// the top 53 bits of the raw output, so streams are stable across standard
/// library implementations.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(splitmix64(seed ^ ((stream + 1) * 0x9E3779B97F4A7C15ULL))) {}

    double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool chance(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return u01() < p;
    }
    double exp1() { return -std::log1p(-u01()); }

private:
    std::mt19937_64 engine_;
};

namespace detail {

/// Per-slot link outcomes drawn directly from the failure probabilities.
struct BernoulliOutcomes {
    const LinkFailureProbs* probs;
    RngStream* rng;
    bool lte_ok(int u) { return rng->chance(1.0 - probs->rho_l(u)); }
    bool d2d_ok() { return rng->chance(1.0 - probs->rho_d1); }
};

/// Per-slot link outcomes from explicit unit-mean exponential fading draws
/// thresholded against the SINR requirement. Statistically identical to
/// BernoulliOutcomes; used to cross-check the closed-form probabilities.
struct FadingOutcomes {
    ChannelParams ch;
    RngStream* rng;
    bool lte_ok(int u) {
        const double own = ch.p_l * rng->exp1();
        const double interference = u ? ch.p_d * rng->exp1() : 0.0;
        return own >= ch.gamma * (ch.sigma2_l + interference);
    }
    bool d2d_ok() {
        const double own = ch.p_d * rng->exp1();
        const double interference = ch.p_l * rng->exp1();
        return own >= ch.gamma * (ch.sigma2_d + interference);
    }
};

struct SimTotals {
    long long slots = 0;
    double credited_frames = 0.0;
    long long d2d_delivered = 0;
};

/// Slot-level walk of the GoP process. Draw order within a slot is fixed:
/// action (only if 0 < p < 1), LTE outcome (skipped on forced-loss slots),
/// D2D outcome (only if transmitting), GoP termination (only if 0 < beta < 1).
/// With `complete_final_gop` the walk extends past `min_slots` to the next
/// GoP boundary so that frame credits cover whole GoPs only.
template <typename Outcomes, typename OnSlot>
SimTotals run_slots(const GopChain& chain, std::span<const double> table, long long min_slots,
                    bool complete_final_gop, Outcomes&& outcomes, RngStream& rng,
                    std::span<const long long> forced_losses, OnSlot&& on_slot) {
    const GopConfig& gop = chain.gop();
    SimTotals tot;
    int n_tx = 0;
    bool i_ok = false;
    int d_received = 0;
    long long gop_index = 1;
    std::size_t forced_cursor = 0;
    long long slot = 0;

    while (slot < min_slots || (complete_final_gop && n_tx != 0)) {
        ++slot;
        const bool iframe = n_tx == 0;
        const int sidx =
            iframe ? 0 : chain.index_of(State{i_ok ? 1 : 0, n_tx, d_received});
        const double p = table[static_cast<std::size_t>(sidx)];
        const int u = p <= 0.0 ? 0 : (p >= 1.0 ? 1 : (rng.u01() < p ? 1 : 0));

        bool forced = false;
        if (forced_cursor < forced_losses.size() && forced_losses[forced_cursor] == slot) {
            if (!iframe)
                throw std::invalid_argument("forced loss at frame " + std::to_string(slot) +
                                            " does not fall on a reference-frame slot");
            forced = true;
            ++forced_cursor;
        }
        const bool lte_ok = forced ? false : outcomes.lte_ok(u);
        const bool d2d_ok = u == 1 && outcomes.d2d_ok();
        const bool corrupted = iframe ? !lte_ok : (!i_ok || !lte_ok);

        on_slot(slot, iframe, gop_index, lte_ok, u, d2d_ok, corrupted);
        if (d2d_ok) ++tot.d2d_delivered;

        if (iframe) {
            i_ok = lte_ok;
            d_received = 0;
            n_tx = 1;
        } else {
            if (lte_ok) ++d_received;
            bool ends = n_tx == gop.n_max;
            if (!ends) {
                const double beta = gop.beta_at(n_tx);
                ends = beta >= 1.0 || (beta > 0.0 && rng.u01() < beta);
            }
            if (ends) {
                if (i_ok) tot.credited_frames += 1.0 + d_received;
                n_tx = 0;
                ++gop_index;
            } else {
                ++n_tx;
            }
        }
    }
    if (forced_cursor < forced_losses.size())
        throw std::invalid_argument("forced loss at frame " +
                                    std::to_string(forced_losses[forced_cursor]) +
                                    " lies beyond the simulated horizon");
    tot.slots = slot;
    return tot;
}

inline void mean_and_stderr(const std::vector<double>& xs, double& mean, double& se) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) {
        se = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0) /
                   static_cast<double>(xs.size()));
}

}  // namespace detail

struct SimConfig {
    long long slots = 100000;  ///< slots per replication (>= 1)
    std::uint64_t seed = 1;
    int replications = 1;      ///< independent substreams (>= 1)
    int jobs = 0;              ///< worker threads, 0 = hardware concurrency
};

inline void validate(const SimConfig& c) {
    if (c.slots < 1) throw std::invalid_argument("SimConfig: slots must be >= 1");
    if (c.replications < 1) throw std::invalid_argument("SimConfig: replications must be >= 1");
}

/// Empirical delivery rate and throughput, per replication and aggregated.
struct RunStats {
    std::vector<double> d_lte_reps;
    std::vector<double> t_d2d_reps;
    double d_lte_mean = 0.0, d_lte_stderr = 0.0;
    double t_d2d_mean = 0.0, t_d2d_stderr = 0.0;
    long long total_slots = 0;
};

namespace detail {

// Replications own their substream and result slot, so they parallelize
// freely; aggregation is a fold over the ordered per-replication results.
template <typename MakeOutcomes>
RunStats run_impl(const GopChain& chain, const Policy& policy, const SimConfig& cfg,
                  MakeOutcomes&& make_outcomes) {
    validate(cfg);
    const std::vector<double> table = policy.materialize(chain);
    RunStats stats;
    const std::size_t reps = static_cast<std::size_t>(cfg.replications);
    stats.d_lte_reps.assign(reps, 0.0);
    stats.t_d2d_reps.assign(reps, 0.0);
    std::vector<long long> slots(reps, 0);
    parallel_for(reps, cfg.jobs, [&](std::size_t rep) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(rep));
        auto outcomes = make_outcomes(rng);
        const SimTotals tot =
            run_slots(chain, table, cfg.slots, /*complete_final_gop=*/true, outcomes, rng,
                      {}, [](auto&&...) {});
        stats.d_lte_reps[rep] = tot.credited_frames / static_cast<double>(tot.slots);
        stats.t_d2d_reps[rep] =
            static_cast<double>(tot.d2d_delivered) / static_cast<double>(tot.slots);
        slots[rep] = tot.slots;
    });
    for (long long s : slots) stats.total_slots += s;
    mean_and_stderr(stats.d_lte_reps, stats.d_lte_mean, stats.d_lte_stderr);
    mean_and_stderr(stats.t_d2d_reps, stats.t_d2d_mean, stats.t_d2d_stderr);
    return stats;
}

}  // namespace detail

/// Monte Carlo estimate of (d_lte, t_d2d) with per-slot outcomes drawn from
/// the chain's failure probabilities. Deterministic given (seed, config);
/// each replication extends to the next GoP boundary so frame credits cover
/// whole GoPs.
inline RunStats run(const GopChain& chain, const Policy& policy, const SimConfig& cfg) {
    return detail::run_impl(chain, policy, cfg, [&](RngStream& rng) {
        return detail::BernoulliOutcomes{&chain.probs(), &rng};
    });
}

/// As run(), but thresholding explicitly sampled fading gains instead of
/// drawing Bernoulli outcomes from the closed-form probabilities.
inline RunStats run_with_fading(const GopConfig& gop, const ChannelParams& channel,
                                const Policy& policy, const SimConfig& cfg) {
    const GopChain chain(gop, failure_probs(channel));
    return detail::run_impl(chain, policy, cfg, [&](RngStream& rng) {
        return detail::FadingOutcomes{channel, &rng};
    });
}

/// One simulated frame slot. Corruption reflects loss propagation: a lost
/// reference frame corrupts every frame of its GoP, a lost differential frame
/// corrupts only itself.
struct TraceRecord {
    long long slot = 0;  ///< 1-based frame index
    char frame_kind = 'I';
    long long gop_index = 0;  ///< 1-based
    bool lte_delivered = false;
    int d2d_action = 0;
    bool d2d_delivered = false;
    bool frame_corrupted = false;
    double mse = 0.0;
};

/// Per-frame error-propagation trace over `frames` slots (one frame per
/// slot). `forced_i_frame_losses` lists 1-based frame indexes whose LTE
/// delivery is forced to fail; each must land on a reference-frame slot.
/// Clean frames carry the encoder distortion d_e, corrupted frames the
/// saturation level d_e + c*sigma_e. Uses substream 0 of the seed.
inline std::vector<TraceRecord> trace(const GopChain& chain, const Policy& policy,
                                      long long frames, std::uint64_t seed,
                                      const MseModelParams& mse,
                                      std::span<const long long> forced_i_frame_losses = {}) {
    if (frames < 1) throw std::invalid_argument("trace: frames must be >= 1");
    validate(mse);
    std::vector<long long> forced(forced_i_frame_losses.begin(), forced_i_frame_losses.end());
    std::sort(forced.begin(), forced.end());
    forced.erase(std::unique(forced.begin(), forced.end()), forced.end());
    if (!forced.empty() && (forced.front() < 1 || forced.back() > frames))
        throw std::invalid_argument("trace: forced loss index outside 1.." +
                                    std::to_string(frames));

    const std::vector<double> table = policy.materialize(chain);
    const double corrupted_mse = mse.d_e + mse.c * mse.sigma_e;
    std::vector<TraceRecord> records;
    records.reserve(static_cast<std::size_t>(frames));
    RngStream rng(seed, 0);
    detail::BernoulliOutcomes outcomes{&chain.probs(), &rng};
    detail::run_slots(chain, table, frames, /*complete_final_gop=*/false, outcomes, rng,
                      forced,
                      [&](long long slot, bool iframe, long long gop_index, bool lte_ok,
                          int action, bool d2d_ok, bool corrupted) {
                          records.push_back(TraceRecord{slot, iframe ? 'I' : 'D', gop_index,
                                                        lte_ok, action, d2d_ok, corrupted,
                                                        corrupted ? corrupted_mse : mse.d_e});
                      });
    return records;
}

/// One policy's point on the MSE-versus-throughput plane.
struct ScatterPoint {
    PolicyKind kind = PolicyKind::constant;
    double p_tx = 0.0;
    double t_d2d = 0.0;
    double mean_mse = 0.0;
    double stderr_mse = 0.0;
};

/// Simulated throughput and mean per-frame MSE for each policy. Policy i,
/// replication r uses substream i*replications + r of the seed; policies run
/// on `jobs` threads.
inline std::vector<ScatterPoint> mse_throughput_scatter(const GopChain& chain,
                                                        const std::vector<Policy>& policies,
                                                        const MseModelParams& mse,
                                                        long long slots, std::uint64_t seed,
                                                        int replications = 8, int jobs = 0) {
    if (slots < 1) throw std::invalid_argument("mse_throughput_scatter: slots must be >= 1");
    if (replications < 1)
        throw std::invalid_argument("mse_throughput_scatter: replications must be >= 1");
    validate(mse);
    const double corrupted_mse = mse.d_e + mse.c * mse.sigma_e;

    std::vector<ScatterPoint> points(policies.size());
    detail::parallel_for(policies.size(), jobs, [&](std::size_t i) {
        const std::vector<double> table = policies[i].materialize(chain);
        std::vector<double> t_reps, mse_reps;
        for (int rep = 0; rep < replications; ++rep) {
            RngStream rng(seed, i * static_cast<std::size_t>(replications) +
                                    static_cast<std::size_t>(rep));
            detail::BernoulliOutcomes outcomes{&chain.probs(), &rng};
            long long corrupted_count = 0;
            const detail::SimTotals tot = detail::run_slots(
                chain, table, slots, /*complete_final_gop=*/true, outcomes, rng, {},
                [&](long long, bool, long long, bool, int, bool, bool corrupted) {
                    if (corrupted) ++corrupted_count;
                });
            const double n = static_cast<double>(tot.slots);
            t_reps.push_back(static_cast<double>(tot.d2d_delivered) / n);
            mse_reps.push_back(mse.d_e + (corrupted_mse - mse.d_e) *
                                             (static_cast<double>(corrupted_count) / n));
        }
        ScatterPoint pt;
        pt.kind = policies[i].kind();
        pt.p_tx = policies[i].kind() == PolicyKind::tabular
                      ? std::numeric_limits<double>::quiet_NaN()
                      : policies[i].p_tx();
        double se_t = 0.0;
        detail::mean_and_stderr(t_reps, pt.t_d2d, se_t);
        detail::mean_and_stderr(mse_reps, pt.mean_mse, pt.stderr_mse);
        points[i] = pt;
    });
    return points;
}

/// Closed-form failure probabilities against an explicit fading-sampled
/// estimate over `draws` independent slots, with binomial standard errors.
struct FadingValidation {
    LinkFailureProbs closed_form{};
    LinkFailureProbs empirical{};
    LinkFailureProbs standard_error{};
    long long draws = 0;
};

inline FadingValidation validate_channel_by_sampling(const ChannelParams& ch, long long draws,
                                                     std::uint64_t seed) {
    if (draws < 1)
        throw std::invalid_argument("validate_channel_by_sampling: draws must be >= 1");
    validate(ch);
    RngStream rng(seed, 0);
    long long fail_l0 = 0, fail_l1 = 0, fail_d1 = 0;
    for (long long i = 0; i < draws; ++i) {
        const double lte_own = ch.p_l * rng.exp1();
        const double lte_interference = ch.p_d * rng.exp1();
        const double d2d_own = ch.p_d * rng.exp1();
        const double d2d_interference = ch.p_l * rng.exp1();
        if (lte_own < ch.gamma * ch.sigma2_l) ++fail_l0;
        if (lte_own < ch.gamma * (ch.sigma2_l + lte_interference)) ++fail_l1;
        if (d2d_own < ch.gamma * (ch.sigma2_d + d2d_interference)) ++fail_d1;
    }
    FadingValidation v;
    v.closed_form = failure_probs(ch);
    v.draws = draws;
    const double n = static_cast<double>(draws);
    auto est = [n](long long k) { return static_cast<double>(k) / n; };
    auto se = [n](double p) { return std::sqrt(p * (1.0 - p) / n); };
    v.empirical = LinkFailureProbs{est(fail_l0), est(fail_l1), est(fail_d1)};
    v.standard_error =
        LinkFailureProbs{se(v.empirical.rho_l0), se(v.empirical.rho_l1), se(v.empirical.rho_d1)};
    return v;
}

}  // namespace copol
