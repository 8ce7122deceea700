// copol -- content-aware coexistence policy toolkit.
//
// Subcommands: channel, solve, evaluate, simulate, trace, scatter.
// Exit codes: 0 success, 2 usage/config error, 3 infeasible constraint,
// 4 numerical failure.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "copol/channel.hpp"
#include "copol/errors.hpp"
#include "copol/gop.hpp"
#include "copol/io.hpp"
#include "copol/metrics.hpp"
#include "copol/optimizer.hpp"
#include "copol/policy.hpp"
#include "copol/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

std::string fmt(double v, int precision) { return copol::format_double(v, precision); }

/// "a:b:step" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double a = 0.0, b = 0.0, step = 0.0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(text);
        if (!(ss >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0))
            throw copol::ConfigError("invalid range \"" + text + "\" (want a:b:step)");
        for (double v = a; v <= b + step * 0.5; v += step) out.push_back(std::min(v, b));
        return out;
    }
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw copol::ConfigError("invalid number \"" + item + "\" in list");
        }
    }
    if (out.empty()) throw copol::ConfigError("empty value list \"" + text + "\"");
    return out;
}

std::vector<long long> parse_int_list(const std::string& text) {
    std::vector<long long> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoll(item));
        } catch (const std::exception&) {
            throw copol::ConfigError("invalid frame index \"" + item + "\"");
        }
    }
    return out;
}

/// Shared model options. Precedence: flags > config file > built-in defaults
/// (fixed 24-D-frame GoP with rho_l0=0.01, rho_l1=rho_d1=0.1).
struct ModelOpts {
    std::string config_path;
    std::optional<int> n;
    std::optional<int> gop;
    std::string beta_list;
    std::optional<double> rho_l0, rho_l1, rho_d1;
    std::optional<double> p_l, p_d, sigma2_l, sigma2_d, gamma;
    bool db = false;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--config", config_path,
                        "model config file (default: $COPOL_CONFIG if set)");
        auto* n_opt = cmd->add_option("--n", n, "differential frames per GoP (default 24)");
        cmd->add_option("--gop", gop, "GoP length including the reference frame (= n+1)")
            ->excludes(n_opt);
        cmd->add_option("--beta", beta_list,
                        "GoP termination probabilities beta(1..n), comma separated");
        cmd->add_option("--rho-l0", rho_l0, "LTE failure probability, D2D idle");
        cmd->add_option("--rho-l1", rho_l1, "LTE failure probability, D2D transmitting");
        cmd->add_option("--rho-d1", rho_d1, "D2D failure probability when transmitting");
        add_channel_flags(cmd);
    }

    void add_channel_flags(CLI::App* cmd) {
        cmd->add_option("--p-l", p_l, "LTE average received power");
        cmd->add_option("--p-d", p_d, "D2D average received power");
        cmd->add_option("--sigma2-l", sigma2_l, "noise variance at the LTE receiver");
        cmd->add_option("--sigma2-d", sigma2_d, "noise variance at the D2D receiver");
        cmd->add_option("--gamma", gamma, "SINR decoding threshold");
        cmd->add_flag("--db", db, "interpret channel parameters as dB values");
    }

    bool any_rho_flag() const { return rho_l0 || rho_l1 || rho_d1; }
    bool any_channel_flag() const { return p_l || p_d || sigma2_l || sigma2_d || gamma; }

    copol::ModelConfig resolve() const {
        copol::ModelConfig cfg;
        cfg.rho = copol::LinkFailureProbs{0.01, 0.1, 0.1};

        std::string path = config_path;
        if (path.empty()) {
            if (const char* env = std::getenv("COPOL_CONFIG"); env != nullptr && *env != '\0')
                path = env;
        }
        if (!path.empty()) cfg = copol::read_config(path);

        if (n && gop) throw copol::ConfigError("--n and --gop are mutually exclusive");
        if (n) cfg.n_max = *n;
        if (gop) {
            if (*gop < 2) throw copol::ConfigError("--gop must be >= 2");
            cfg.n_max = *gop - 1;
        }
        if (!beta_list.empty()) cfg.beta = parse_grid(beta_list);

        if (any_rho_flag() && any_channel_flag())
            throw copol::ConfigError("give either rho flags or channel flags, not both");
        if (any_rho_flag()) {
            copol::LinkFailureProbs rho = cfg.rho.value_or(copol::LinkFailureProbs{0.01, 0.1, 0.1});
            if (rho_l0) rho.rho_l0 = *rho_l0;
            if (rho_l1) rho.rho_l1 = *rho_l1;
            if (rho_d1) rho.rho_d1 = *rho_d1;
            cfg.rho = rho;
            cfg.channel.reset();
        } else if (any_channel_flag()) {
            copol::ChannelParams ch = cfg.channel.value_or(copol::ChannelParams{});
            auto set = [&](const std::optional<double>& v, double& field) {
                if (v) field = db ? copol::linear_from_db(*v) : *v;
            };
            set(p_l, ch.p_l);
            set(p_d, ch.p_d);
            set(sigma2_l, ch.sigma2_l);
            set(sigma2_d, ch.sigma2_d);
            set(gamma, ch.gamma);
            cfg.channel = ch;
            cfg.rho.reset();
        }
        return cfg;
    }

    copol::GopChain chain() const {
        const copol::ModelConfig cfg = resolve();
        return copol::GopChain(cfg.gop_config(), cfg.resolve_probs());
    }
};

/// Policy source shared by evaluate/simulate/trace.
struct PolicyOpts {
    std::string policy_path;
    std::optional<double> const_p, heuristic_p, heuristic_aggressive_p;

    void add_flags(CLI::App* cmd) {
        auto* f = cmd->add_option("--policy", policy_path, "policy file");
        auto* c = cmd->add_option("--const-p", const_p, "constant transmit probability");
        auto* h =
            cmd->add_option("--heuristic-p", heuristic_p,
                            "transmit probability outside the reference-frame slot");
        auto* ha = cmd->add_option("--heuristic-aggressive-p", heuristic_aggressive_p,
                                   "as --heuristic-p, transmitting always once the "
                                   "reference frame is lost");
        f->excludes(c)->excludes(h)->excludes(ha);
        c->excludes(h)->excludes(ha);
        h->excludes(ha);
    }

    int sources() const {
        return (policy_path.empty() ? 0 : 1) + (const_p ? 1 : 0) + (heuristic_p ? 1 : 0) +
               (heuristic_aggressive_p ? 1 : 0);
    }

    copol::Policy parametric() const {
        if (const_p) return copol::Policy::constant(*const_p);
        if (heuristic_p) return copol::Policy::heuristic(*heuristic_p);
        if (heuristic_aggressive_p)
            return copol::Policy::heuristic_aggressive(*heuristic_aggressive_p);
        throw copol::ConfigError("no policy source given");
    }
};

/// A policy file defines its own model; otherwise the model options apply.
struct ResolvedRun {
    copol::GopChain chain;
    copol::Policy policy;
};

ResolvedRun resolve_run(const ModelOpts& model, const PolicyOpts& policy) {
    if (policy.sources() == 0)
        throw copol::ConfigError(
            "a policy is required: --policy, --const-p, --heuristic-p or "
            "--heuristic-aggressive-p");
    if (!policy.policy_path.empty()) {
        const copol::PolicyFile f = copol::read_policy_file(policy.policy_path);
        return ResolvedRun{copol::GopChain(f.gop, f.probs), f.policy()};
    }
    return ResolvedRun{model.chain(), policy.parametric()};
}

struct MseOpts {
    copol::MseModelParams params;
    std::string convention = "paper";

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--d-e", params.d_e, "encoder distortion (MSE units)");
        cmd->add_option("--c", params.c, "distortion scaling constant");
        cmd->add_option("--sigma-e", params.sigma_e, "error sensitivity (MSE units)");
        cmd->add_option("--w", params.w, "bits per pixel");
        cmd->add_option("--psnr-convention", convention, "PSNR peak: paper (2^w) or standard")
            ->check(CLI::IsMember({"paper", "standard"}));
    }

    copol::PsnrConvention psnr_convention() const {
        return convention == "standard" ? copol::PsnrConvention::standard
                                        : copol::PsnrConvention::paper;
    }
};

/// Opens --out for CSV output; "-" or empty means stdout (summaries then go
/// to stderr so machine and human output never share a stream).
struct CsvSink {
    std::ofstream file;
    bool to_stdout = false;

    explicit CsvSink(const std::string& path) {
        if (path.empty() || path == "-") {
            to_stdout = true;
            return;
        }
        file.open(path, std::ios::binary);
        if (!file) throw copol::ConfigError("cannot write " + path);
    }
    std::ostream& stream() { return to_stdout ? std::cout : file; }
    std::ostream& summary() { return to_stdout ? std::cerr : std::cout; }
};

// ---------------------------------------------------------------------------

struct ChannelCmd {
    ModelOpts model;  // channel flags only
    long long draws = 0;
    std::uint64_t seed = 1;
    std::string write_config_path;
    int precision = 6;

    int run() const {
        const copol::ModelConfig cfg = model.resolve();
        if (!cfg.channel)
            throw copol::ConfigError(
                "channel: physical parameters required (--p-l --p-d --sigma2-l --sigma2-d "
                "--gamma, or a config file with a channel section)");
        const copol::LinkFailureProbs probs = copol::failure_probs(*cfg.channel);
        std::cout << "rho_l0=" << fmt(probs.rho_l0, precision) << '\n'
                  << "rho_l1=" << fmt(probs.rho_l1, precision) << '\n'
                  << "rho_d1=" << fmt(probs.rho_d1, precision) << '\n';

        if (draws > 0) {
            const copol::FadingValidation v =
                copol::validate_channel_by_sampling(*cfg.channel, draws, seed);
            auto line = [&](const char* name, double cf, double emp, double se) {
                const double z = se > 0.0 ? (emp - cf) / se : 0.0;
                std::cout << name << " closed_form=" << fmt(cf, precision)
                          << " sampled=" << fmt(emp, precision)
                          << " stderr=" << fmt(se, precision) << " z=" << fmt(z, precision)
                          << '\n';
            };
            line("rho_l0", v.closed_form.rho_l0, v.empirical.rho_l0, v.standard_error.rho_l0);
            line("rho_l1", v.closed_form.rho_l1, v.empirical.rho_l1, v.standard_error.rho_l1);
            line("rho_d1", v.closed_form.rho_d1, v.empirical.rho_d1, v.standard_error.rho_d1);
        }
        if (!write_config_path.empty()) {
            copol::ModelConfig out;
            out.n_max = cfg.n_max;
            out.beta = cfg.beta;
            out.rho = probs;
            copol::write_config(write_config_path, out);
            std::cerr << "wrote " << write_config_path << '\n';
        }
        return kExitOk;
    }
};

struct DescribeCmd {
    ModelOpts model;
    std::string out;
    int precision = 6;

    int run() const {
        const copol::GopChain chain = model.chain();
        CsvSink sink(out);
        sink.stream() << "index,i_rx,n_tx,n_rx\n";
        for (int s = 0; s < chain.size(); ++s) {
            const copol::State& st = chain.state(s);
            sink.stream() << s << ',' << st.i_rx << ',' << st.n_tx << ',' << st.n_rx << '\n';
        }
        sink.summary() << "states=" << chain.size() << '\n'
                       << "n_max=" << chain.gop().n_max << '\n'
                       << "gop_length=" << chain.gop().gop_length() << '\n'
                       << "rho_l0=" << fmt(chain.probs().rho_l0, precision) << '\n'
                       << "rho_l1=" << fmt(chain.probs().rho_l1, precision) << '\n'
                       << "rho_d1=" << fmt(chain.probs().rho_d1, precision) << '\n';
        return kExitOk;
    }
};

struct SolveCmd {
    ModelOpts model;
    std::optional<double> delta;
    std::string sweep;
    std::string out_policy;
    std::string out_curve;
    int jobs = 0;
    int precision = 6;

    int run() const {
        const copol::GopChain chain = model.chain();
        if (delta.has_value() == !sweep.empty())
            throw copol::ConfigError("solve: give exactly one of --delta or --sweep");

        if (delta) {
            const copol::OccupationSolution sol = copol::solve(chain, *delta);
            if (!sol.feasible) {
                std::cerr << "infeasible: delta=" << fmt(*delta, precision)
                          << " exceeds the maximum achievable delivery rate "
                          << fmt(sol.delivery_ceiling, precision) << '\n';
                return kExitInfeasible;
            }
            std::cout << "delta=" << fmt(*delta, precision) << '\n'
                      << "t_d2d=" << fmt(sol.objective, precision) << '\n'
                      << "d_lte_achieved=" << fmt(sol.delivery, precision) << '\n'
                      << "delivery_ceiling=" << fmt(sol.delivery_ceiling, precision) << '\n'
                      << "residual_balance=" << fmt(sol.residuals.balance, precision) << '\n'
                      << "residual_normalization="
                      << fmt(sol.residuals.normalization, precision) << '\n'
                      << "delivery_slack=" << fmt(sol.residuals.delivery_slack, precision)
                      << '\n'
                      << "iterations=" << sol.iterations << '\n';
            if (!out_policy.empty()) {
                copol::write_policy_file(out_policy, chain, sol.policy);
                std::cerr << "wrote " << out_policy << '\n';
            }
            return kExitOk;
        }

        const std::vector<double> deltas = parse_grid(sweep);
        std::vector<copol::OccupationSolution> solutions;
        const std::vector<copol::SweepPoint> points =
            copol::sweep_delta(chain, deltas, {}, jobs, &solutions);

        CsvSink sink(out_curve);
        copol::write_curve_csv(sink.stream(), points, precision);
        if (!out_policy.empty()) {
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (!points[i].feasible) continue;
                std::string path = out_policy;
                const std::size_t dot = path.rfind('.');
                const std::string suffix = ".d" + fmt(points[i].delta, precision);
                if (dot == std::string::npos)
                    path += suffix;
                else
                    path.insert(dot, suffix);
                copol::write_policy_file(path, chain, solutions[i].policy);
            }
        }
        int feasible = 0;
        for (const copol::SweepPoint& p : points) feasible += p.feasible ? 1 : 0;
        sink.summary() << "sweep: " << points.size() << " deltas, " << feasible
                       << " feasible, delivery ceiling "
                       << fmt(copol::max_delivery_rate(chain), precision) << '\n';
        return feasible > 0 ? kExitOk : kExitInfeasible;
    }
};

struct EvaluateCmd {
    ModelOpts model;
    PolicyOpts policy;
    MseOpts mse;
    int precision = 6;

    int run() const {
        const ResolvedRun rr = resolve_run(model, policy);
        const copol::MetricReport r = copol::evaluate(rr.chain, rr.policy);
        const double p_err = 1.0 - r.d_lte;
        const double mse_value = copol::mse_from_error_rate(p_err, mse.params);
        std::cout << "d_lte=" << fmt(r.d_lte, precision) << '\n'
                  << "t_d2d=" << fmt(r.t_d2d, precision) << '\n'
                  << "p_err=" << fmt(p_err, precision) << '\n'
                  << "mse=" << fmt(mse_value, precision) << '\n';
        if (mse_value > 0.0)
            std::cout << "psnr_db="
                      << fmt(copol::psnr_from_mse(mse_value, mse.params.w,
                                                  mse.psnr_convention()),
                             precision)
                      << '\n';
        return kExitOk;
    }
};

struct SimulateCmd {
    ModelOpts model;
    PolicyOpts policy;
    copol::SimConfig sim{1000000, 1, 10};
    bool sample_fading = false;
    std::string out_reps;
    int precision = 6;

    int run() const {
        copol::RunStats stats;
        if (sample_fading) {
            const copol::ModelConfig cfg = model.resolve();
            if (!cfg.channel)
                throw copol::ConfigError("--sample-fading requires channel parameters");
            if (policy.sources() == 0 || !policy.policy_path.empty())
                throw copol::ConfigError("--sample-fading requires a parametric policy");
            stats = copol::run_with_fading(cfg.gop_config(), *cfg.channel,
                                           policy.parametric(), sim);
        } else {
            const ResolvedRun rr = resolve_run(model, policy);
            stats = copol::run(rr.chain, rr.policy, sim);
        }
        std::cout << "d_lte_mean=" << fmt(stats.d_lte_mean, precision) << '\n'
                  << "d_lte_stderr=" << fmt(stats.d_lte_stderr, precision) << '\n'
                  << "t_d2d_mean=" << fmt(stats.t_d2d_mean, precision) << '\n'
                  << "t_d2d_stderr=" << fmt(stats.t_d2d_stderr, precision) << '\n'
                  << "replications=" << stats.d_lte_reps.size() << '\n'
                  << "slots_total=" << stats.total_slots << '\n';
        if (!out_reps.empty()) {
            std::ofstream out(out_reps, std::ios::binary);
            if (!out) throw copol::ConfigError("cannot write " + out_reps);
            out << "replication,d_lte,t_d2d\n";
            for (std::size_t i = 0; i < stats.d_lte_reps.size(); ++i)
                out << i << ',' << fmt(stats.d_lte_reps[i], precision) << ','
                    << fmt(stats.t_d2d_reps[i], precision) << '\n';
        }
        return kExitOk;
    }
};

struct TraceCmd {
    ModelOpts model;
    PolicyOpts policy;
    MseOpts mse;
    long long frames = 300;
    std::uint64_t seed = 1;
    std::string force_loss;
    bool no_channel_loss = false;
    std::string out;
    int precision = 6;

    int run() const {
        copol::GopChain chain = [&] {
            const copol::ModelConfig cfg = model.resolve();
            const copol::LinkFailureProbs probs =
                no_channel_loss ? copol::LinkFailureProbs{0.0, 0.0, 0.0} : cfg.resolve_probs();
            return copol::GopChain(cfg.gop_config(), probs);
        }();
        const copol::Policy pol =
            policy.sources() == 0 ? copol::Policy::constant(0.0) : [&] {
                if (!policy.policy_path.empty()) {
                    const copol::PolicyFile f = copol::read_policy_file(policy.policy_path);
                    return f.policy();
                }
                return policy.parametric();
            }();
        const std::vector<long long> forced = parse_int_list(force_loss);
        const std::vector<copol::TraceRecord> records =
            copol::trace(chain, pol, frames, seed, mse.params, forced);

        CsvSink sink(out);
        copol::write_trace_csv(sink.stream(), records, precision);
        long long corrupted = 0;
        for (const copol::TraceRecord& r : records) corrupted += r.frame_corrupted ? 1 : 0;
        sink.summary() << "trace: " << records.size() << " frames, " << corrupted
                       << " corrupted, " << records.back().gop_index << " GoPs\n";
        return kExitOk;
    }
};

struct ScatterCmd {
    ModelOpts model;
    MseOpts mse;
    std::string p_grid = "0.1:1.0:0.1";
    std::vector<std::string> families{"constant", "heuristic"};
    long long slots = 200000;
    int replications = 8;
    std::uint64_t seed = 1;
    int jobs = 0;
    std::string out;
    int precision = 6;

    int run() const {
        const copol::GopChain chain = model.chain();
        const std::vector<double> grid = parse_grid(p_grid);
        std::vector<copol::Policy> policies;
        for (const std::string& family : families) {
            for (double p : grid) {
                if (family == "constant")
                    policies.push_back(copol::Policy::constant(p));
                else if (family == "heuristic")
                    policies.push_back(copol::Policy::heuristic(p));
                else if (family == "heuristic-aggressive")
                    policies.push_back(copol::Policy::heuristic_aggressive(p));
                else
                    throw copol::ConfigError("unknown policy family \"" + family + "\"");
            }
        }
        const std::vector<copol::ScatterPoint> points = copol::mse_throughput_scatter(
            chain, policies, mse.params, slots, seed, replications, jobs);
        CsvSink sink(out);
        copol::write_scatter_csv(sink.stream(), points, precision);
        sink.summary() << "scatter: " << points.size() << " policies, " << slots
                       << " slots x " << replications << " replications\n";
        return kExitOk;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"content-aware coexistence policies for a D2D link under a video uplink"};
    app.require_subcommand(1);

    ChannelCmd channel_cmd;
    auto* channel = app.add_subcommand(
        "channel", "failure probabilities from physical-layer parameters");
    channel_cmd.model.add_flags(channel);
    channel->add_option("--draws", channel_cmd.draws,
                        "validate against this many fading-sampled slots");
    channel->add_option("--seed", channel_cmd.seed, "RNG seed for --draws");
    channel->add_option("--write-config", channel_cmd.write_config_path,
                        "write the resulting model config");
    channel->add_option("--precision", channel_cmd.precision, "significant digits");

    DescribeCmd describe_cmd;
    auto* describe = app.add_subcommand(
        "describe", "diagnostic listing of the chain's state index map");
    describe_cmd.model.add_flags(describe);
    describe->add_option("--out", describe_cmd.out, "listing CSV path (- = stdout)");
    describe->add_option("--precision", describe_cmd.precision, "significant digits");

    SolveCmd solve_cmd;
    auto* solve = app.add_subcommand("solve", "optimal policy for a delivery-rate constraint");
    solve_cmd.model.add_flags(solve);
    solve->add_option("--delta", solve_cmd.delta, "minimum LTE frame delivery rate");
    solve->add_option("--sweep", solve_cmd.sweep, "constraint sweep a:b:step or list");
    solve->add_option("--out-policy", solve_cmd.out_policy, "write the optimal policy here");
    solve->add_option("--out-curve", solve_cmd.out_curve, "write the sweep CSV here (- = stdout)");
    solve->add_option("--jobs", solve_cmd.jobs, "parallel solves in a sweep (0 = all cores)");
    solve->add_option("--precision", solve_cmd.precision, "significant digits");

    EvaluateCmd evaluate_cmd;
    auto* evaluate = app.add_subcommand("evaluate", "analytic metrics of a policy");
    evaluate_cmd.model.add_flags(evaluate);
    evaluate_cmd.policy.add_flags(evaluate);
    evaluate_cmd.mse.add_flags(evaluate);
    evaluate->add_option("--precision", evaluate_cmd.precision, "significant digits");

    SimulateCmd simulate_cmd;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of the metrics");
    simulate_cmd.model.add_flags(simulate);
    simulate_cmd.policy.add_flags(simulate);
    simulate->add_option("--slots", simulate_cmd.sim.slots, "slots per replication");
    simulate->add_option("--seed", simulate_cmd.sim.seed, "RNG seed");
    simulate->add_option("--replications", simulate_cmd.sim.replications,
                         "independent replications");
    simulate->add_option("--jobs", simulate_cmd.sim.jobs,
                         "parallel replications (0 = all cores)");
    simulate->add_flag("--sample-fading", simulate_cmd.sample_fading,
                       "draw explicit fading gains instead of Bernoulli outcomes");
    simulate->add_option("--out-reps", simulate_cmd.out_reps, "per-replication CSV");
    simulate->add_option("--precision", simulate_cmd.precision, "significant digits");

    TraceCmd trace_cmd;
    auto* trace = app.add_subcommand("trace", "per-frame error-propagation trace CSV");
    trace_cmd.model.add_flags(trace);
    trace_cmd.policy.add_flags(trace);
    trace_cmd.mse.add_flags(trace);
    trace->add_option("--frames", trace_cmd.frames, "number of frames to trace");
    trace->add_option("--seed", trace_cmd.seed, "RNG seed");
    trace->add_option("--force-loss", trace_cmd.force_loss,
                      "force these reference frames lost (1-based, comma separated)");
    trace->add_flag("--no-channel-loss", trace_cmd.no_channel_loss,
                    "disable random channel losses");
    trace->add_option("--out", trace_cmd.out, "trace CSV path (- = stdout)");
    trace->add_option("--precision", trace_cmd.precision, "significant digits");

    ScatterCmd scatter_cmd;
    auto* scatter = app.add_subcommand("scatter", "MSE versus throughput for policy families");
    scatter_cmd.model.add_flags(scatter);
    scatter_cmd.mse.add_flags(scatter);
    scatter->add_option("--p-grid", scatter_cmd.p_grid, "transmit probabilities a:b:step or list");
    scatter->add_option("--families", scatter_cmd.families,
                        "policy families: constant, heuristic, heuristic-aggressive")
        ->delimiter(',');
    scatter->add_option("--slots", scatter_cmd.slots, "slots per replication");
    scatter->add_option("--replications", scatter_cmd.replications, "independent replications");
    scatter->add_option("--seed", scatter_cmd.seed, "RNG seed");
    scatter->add_option("--jobs", scatter_cmd.jobs, "parallel policies (0 = all cores)");
    scatter->add_option("--out", scatter_cmd.out, "scatter CSV path (- = stdout)");
    scatter->add_option("--precision", scatter_cmd.precision, "significant digits");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand(channel)) return channel_cmd.run();
        if (app.got_subcommand(describe)) return describe_cmd.run();
        if (app.got_subcommand(solve)) return solve_cmd.run();
        if (app.got_subcommand(evaluate)) return evaluate_cmd.run();
        if (app.got_subcommand(simulate)) return simulate_cmd.run();
        if (app.got_subcommand(trace)) return trace_cmd.run();
        if (app.got_subcommand(scatter)) return scatter_cmd.run();
    } catch (const copol::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const copol::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
