#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "copol/channel.hpp"
#include "copol/errors.hpp"
#include "copol/gop.hpp"
#include "copol/optimizer.hpp"
#include "copol/policy.hpp"
#include "copol/simulator.hpp"

namespace copol {

/// Formats v with the given number of significant digits.
inline std::string format_double(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

namespace detail {

using json = nlohmann::ordered_json;

inline const json& require_field(const json& j, const char* key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(ctx + ": missing field \"" + key + "\"");
    return *it;
}

inline double require_number(const json& j, const char* key, const std::string& ctx) {
    const json& v = require_field(j, key, ctx);
    if (!v.is_number()) throw ConfigError(ctx + "." + key + ": expected a number");
    return v.get<double>();
}

inline int require_integer(const json& j, const char* key, const std::string& ctx) {
    const json& v = require_field(j, key, ctx);
    if (!v.is_number_integer()) throw ConfigError(ctx + "." + key + ": expected an integer");
    return v.get<int>();
}

inline json parse_text(const std::string& text, const std::string& ctx) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Policy files
// ---------------------------------------------------------------------------

/// Contents of a policy file: the model it was computed for plus the
/// per-state transmit probabilities.
struct PolicyFile {
    GopConfig gop;
    LinkFailureProbs probs{};
    std::vector<double> table;

    Policy policy() const { return Policy::tabular(table); }
};

/// Self-describing policy document: model parameters, then one entry per
/// state in the chain's stable order.
inline std::string policy_to_json(const GopChain& chain, const Policy& policy) {
    detail::json j;
    j["n_max"] = chain.gop().n_max;
    j["beta"] = chain.gop().beta;
    j["rho_l0"] = chain.probs().rho_l0;
    j["rho_l1"] = chain.probs().rho_l1;
    j["rho_d1"] = chain.probs().rho_d1;
    detail::json entries = detail::json::array();
    const std::vector<double> table = policy.materialize(chain);
    for (int s = 0; s < chain.size(); ++s) {
        const State& st = chain.state(s);
        entries.push_back({{"i_rx", st.i_rx},
                           {"n_tx", st.n_tx},
                           {"n_rx", st.n_rx},
                           {"p_transmit", table[static_cast<std::size_t>(s)]}});
    }
    j["policy"] = std::move(entries);
    return j.dump(2) + "\n";
}

inline void write_policy_file(const std::string& path, const GopChain& chain,
                              const Policy& policy) {
    detail::write_file(path, policy_to_json(chain, policy));
}

inline PolicyFile policy_from_json(const std::string& text, const std::string& ctx = "policy") {
    const detail::json j = detail::parse_text(text, ctx);
    if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");

    PolicyFile f;
    f.gop.n_max = detail::require_integer(j, "n_max", ctx);
    const detail::json& beta = detail::require_field(j, "beta", ctx);
    if (!beta.is_array()) throw ConfigError(ctx + ".beta: expected an array");
    for (const auto& b : beta) {
        if (!b.is_number()) throw ConfigError(ctx + ".beta: expected numbers");
        f.gop.beta.push_back(b.get<double>());
    }
    f.probs.rho_l0 = detail::require_number(j, "rho_l0", ctx);
    f.probs.rho_l1 = detail::require_number(j, "rho_l1", ctx);
    f.probs.rho_d1 = detail::require_number(j, "rho_d1", ctx);
    try {
        validate(f.gop);
        validate(f.probs);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }

    const GopChain chain(f.gop, f.probs);
    const detail::json& entries = detail::require_field(j, "policy", ctx);
    if (!entries.is_array()) throw ConfigError(ctx + ".policy: expected an array");
    if (static_cast<int>(entries.size()) != chain.size())
        throw ConfigError(ctx + ".policy: expected " + std::to_string(chain.size()) +
                          " states, found " + std::to_string(entries.size()));

    f.table.assign(static_cast<std::size_t>(chain.size()), -1.0);
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const std::string ectx = ctx + ".policy[" + std::to_string(k) + "]";
        const detail::json& e = entries[k];
        if (!e.is_object()) throw ConfigError(ectx + ": expected an object");
        State st;
        st.i_rx = detail::require_integer(e, "i_rx", ectx);
        st.n_tx = detail::require_integer(e, "n_tx", ectx);
        st.n_rx = detail::require_integer(e, "n_rx", ectx);
        const double p = detail::require_number(e, "p_transmit", ectx);
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError(ectx + ".p_transmit: must lie in [0,1]");
        int idx;
        try {
            idx = chain.index_of(st);
        } catch (const std::invalid_argument& e2) {
            throw ConfigError(ectx + ": " + e2.what());
        }
        if (f.table[static_cast<std::size_t>(idx)] >= 0.0)
            throw ConfigError(ectx + ": duplicate state");
        f.table[static_cast<std::size_t>(idx)] = p;
    }
    return f;
}

inline PolicyFile read_policy_file(const std::string& path) {
    return policy_from_json(detail::read_file(path), path);
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// Model section of a run configuration. The failure probabilities come from
/// exactly one of: the direct rho triple, or physical channel parameters.
/// A missing beta array means a fixed-size GoP.
struct ModelConfig {
    int n_max = 24;
    std::optional<std::vector<double>> beta;
    std::optional<LinkFailureProbs> rho;
    std::optional<ChannelParams> channel;

    GopConfig gop_config() const {
        GopConfig g = beta ? GopConfig{n_max, *beta} : GopConfig::fixed(n_max);
        validate(g);
        return g;
    }

    LinkFailureProbs resolve_probs() const {
        if (rho.has_value() == channel.has_value())
            throw ConfigError(
                "model: exactly one of {rho_l0, rho_l1, rho_d1} or channel must be given");
        if (rho) {
            validate(*rho);
            return *rho;
        }
        return failure_probs(*channel);
    }
};

inline ModelConfig model_from_json(const std::string& text, const std::string& ctx = "config") {
    const detail::json root = detail::parse_text(text, ctx);
    if (!root.is_object()) throw ConfigError(ctx + ": expected a JSON object");
    const detail::json& m = detail::require_field(root, "model", ctx);
    const std::string mctx = ctx + ".model";
    if (!m.is_object()) throw ConfigError(mctx + ": expected an object");

    ModelConfig cfg;
    cfg.n_max = detail::require_integer(m, "n_max", mctx);
    if (auto it = m.find("beta"); it != m.end() && !it->is_null()) {
        if (it->is_string()) {
            if (it->get<std::string>() != "fixed")
                throw ConfigError(mctx + ".beta: expected an array or \"fixed\"");
        } else if (it->is_array()) {
            std::vector<double> beta;
            for (const auto& b : *it) {
                if (!b.is_number()) throw ConfigError(mctx + ".beta: expected numbers");
                beta.push_back(b.get<double>());
            }
            cfg.beta = std::move(beta);
        } else {
            throw ConfigError(mctx + ".beta: expected an array or \"fixed\"");
        }
    }
    const bool has_rho = m.contains("rho_l0") || m.contains("rho_l1") || m.contains("rho_d1");
    if (has_rho) {
        LinkFailureProbs rho{};
        rho.rho_l0 = detail::require_number(m, "rho_l0", mctx);
        rho.rho_l1 = detail::require_number(m, "rho_l1", mctx);
        rho.rho_d1 = detail::require_number(m, "rho_d1", mctx);
        cfg.rho = rho;
    }
    if (auto it = m.find("channel"); it != m.end()) {
        const std::string cctx = mctx + ".channel";
        if (!it->is_object()) throw ConfigError(cctx + ": expected an object");
        ChannelParams ch{};
        ch.p_l = detail::require_number(*it, "p_l", cctx);
        ch.p_d = detail::require_number(*it, "p_d", cctx);
        ch.sigma2_l = detail::require_number(*it, "sigma2_l", cctx);
        ch.sigma2_d = detail::require_number(*it, "sigma2_d", cctx);
        ch.gamma = detail::require_number(*it, "gamma", cctx);
        cfg.channel = ch;
    }
    if (cfg.rho.has_value() == cfg.channel.has_value())
        throw ConfigError(mctx +
                          ": exactly one of {rho_l0, rho_l1, rho_d1} or channel must be given");
    try {
        (void)cfg.gop_config();
        (void)cfg.resolve_probs();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(mctx + ": " + e.what());
    }
    return cfg;
}

inline std::string model_to_json(const ModelConfig& cfg) {
    detail::json m;
    m["n_max"] = cfg.n_max;
    if (cfg.beta)
        m["beta"] = *cfg.beta;
    else
        m["beta"] = "fixed";
    if (cfg.rho) {
        m["rho_l0"] = cfg.rho->rho_l0;
        m["rho_l1"] = cfg.rho->rho_l1;
        m["rho_d1"] = cfg.rho->rho_d1;
    }
    if (cfg.channel) {
        m["channel"] = {{"p_l", cfg.channel->p_l},
                        {"p_d", cfg.channel->p_d},
                        {"sigma2_l", cfg.channel->sigma2_l},
                        {"sigma2_d", cfg.channel->sigma2_d},
                        {"gamma", cfg.channel->gamma}};
    }
    detail::json root;
    root["model"] = std::move(m);
    return root.dump(2) + "\n";
}

inline ModelConfig read_config(const std::string& path) {
    return model_from_json(detail::read_file(path), path);
}

inline void write_config(const std::string& path, const ModelConfig& cfg) {
    detail::write_file(path, model_to_json(cfg));
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

inline void write_curve_csv(std::ostream& out, std::span<const SweepPoint> points,
                            int precision = 6) {
    out << "delta,t_d2d,d_lte_achieved,p_tx_iframe,p_tx_dframe_irx1,p_tx_dframe_irx0,feasible\n";
    for (const SweepPoint& p : points) {
        out << format_double(p.delta, precision) << ',' << format_double(p.t_d2d, precision)
            << ',' << format_double(p.d_lte, precision) << ','
            << format_double(p.p_tx_iframe, precision) << ','
            << format_double(p.p_tx_dframe_irx1, precision) << ','
            << format_double(p.p_tx_dframe_irx0, precision) << ',' << (p.feasible ? 1 : 0)
            << '\n';
    }
}

inline void write_trace_csv(std::ostream& out, std::span<const TraceRecord> records,
                            int precision = 6) {
    out << "slot,frame_kind,gop_index,lte_delivered,d2d_action,d2d_delivered,"
           "frame_corrupted,mse\n";
    for (const TraceRecord& r : records) {
        out << r.slot << ',' << r.frame_kind << ',' << r.gop_index << ','
            << (r.lte_delivered ? 1 : 0) << ',' << r.d2d_action << ','
            << (r.d2d_delivered ? 1 : 0) << ',' << (r.frame_corrupted ? 1 : 0) << ','
            << format_double(r.mse, precision) << '\n';
    }
}

inline void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points,
                              int precision = 6) {
    out << "policy_kind,p_tx,t_d2d,mean_mse,stderr_mse\n";
    for (const ScatterPoint& p : points) {
        out << to_string(p.kind) << ',' << format_double(p.p_tx, precision) << ','
            << format_double(p.t_d2d, precision) << ',' << format_double(p.mean_mse, precision)
            << ',' << format_double(p.stderr_mse, precision) << '\n';
    }
}

}  // namespace copol
