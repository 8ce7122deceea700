#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace copol {

/// Physical-layer parameters of the two coexisting links. All quantities are
/// linear scale (use linear_from_db at user-facing boundaries). Fading on
/// every path is unit-mean exponential in power, i.i.d. across slots.
struct ChannelParams {
    double p_l;       ///< average received power of the LTE signal, > 0
    double p_d;       ///< average received power of the D2D signal, > 0
    double sigma2_l;  ///< noise variance at the LTE receiver, >= 0
    double sigma2_d;  ///< noise variance at the D2D receiver, >= 0
    double gamma;     ///< per-packet SINR decoding threshold, > 0
};

inline void validate(const ChannelParams& p) {
    if (!(p.p_l > 0.0)) throw std::invalid_argument("ChannelParams: p_l must be > 0");
    if (!(p.p_d > 0.0)) throw std::invalid_argument("ChannelParams: p_d must be > 0");
    if (!(p.gamma > 0.0)) throw std::invalid_argument("ChannelParams: gamma must be > 0");
    if (!(p.sigma2_l >= 0.0)) throw std::invalid_argument("ChannelParams: sigma2_l must be >= 0");
    if (!(p.sigma2_d >= 0.0)) throw std::invalid_argument("ChannelParams: sigma2_d must be >= 0");
}

/// Per-slot packet failure probabilities conditioned on the D2D action.
/// rho_d(0) = 0 by convention: an idle D2D transmitter has no packet to lose.
struct LinkFailureProbs {
    double rho_l0;  ///< LTE packet failure probability, D2D idle
    double rho_l1;  ///< LTE packet failure probability, D2D transmitting
    double rho_d1;  ///< D2D packet failure probability when transmitting

    double rho_l(int action) const { return action ? rho_l1 : rho_l0; }
};

inline void validate(const LinkFailureProbs& p) {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(p.rho_l0) || !in01(p.rho_l1) || !in01(p.rho_d1))
        throw std::invalid_argument("LinkFailureProbs: probabilities must lie in [0,1]");
    if (p.rho_l0 > p.rho_l1)
        throw std::invalid_argument("LinkFailureProbs: rho_l0 must not exceed rho_l1 "
                                    "(interference cannot help the LTE link)");
}

/// P(SINR >= gamma) for a link with own average power p_x, interferer average
/// power p_y, noise variance sigma2 and unit-mean exponential fading on both
/// paths: exp(-gamma*sigma2/p_x) / (1 + gamma*p_y/p_x). Always in (0,1].
inline double success_probability(double gamma, double sigma2, double p_x, double p_y) {
    if (!(gamma > 0.0)) throw std::invalid_argument("success_probability: gamma must be > 0");
    if (!(p_x > 0.0)) throw std::invalid_argument("success_probability: p_x must be > 0");
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("success_probability: sigma2 must be >= 0");
    if (!(p_y >= 0.0)) throw std::invalid_argument("success_probability: p_y must be >= 0");
    return std::exp(-gamma * sigma2 / p_x) / (1.0 + gamma * p_y / p_x);
}

/// Failure probabilities of both links under each D2D action.
inline LinkFailureProbs failure_probs(const ChannelParams& p) {
    validate(p);
    return LinkFailureProbs{
        1.0 - success_probability(p.gamma, p.sigma2_l, p.p_l, 0.0),
        1.0 - success_probability(p.gamma, p.sigma2_l, p.p_l, p.p_d),
        1.0 - success_probability(p.gamma, p.sigma2_d, p.p_d, p.p_l),
    };
}

inline double linear_from_db(double db) { return std::pow(10.0, db / 10.0); }
inline double db_from_linear(double v) { return 10.0 * std::log10(v); }

}  // namespace copol
