#pragma once

#include <cmath>
#include <stdexcept>

#include "copol/gop.hpp"
#include "copol/policy.hpp"

namespace copol {

/// Analytic long-run performance of a policy: LTE frame delivery rate and
/// normalized D2D throughput, both per slot, together with the stationary
/// distribution they were computed from.
struct MetricReport {
    double d_lte = 0.0;
    double t_d2d = 0.0;
    StationaryDistribution pi;
};

/// Expected rewards under the stationary state-action distribution.
inline MetricReport evaluate(const GopChain& chain, const Policy& policy) {
    MetricReport r;
    r.pi = stationary_distribution(chain, policy);
    for (int s = 0; s < chain.size(); ++s)
        for (int u = 0; u <= 1; ++u) {
            const double mass = r.pi.state_action[static_cast<std::size_t>(s)]
                                                 [static_cast<std::size_t>(u)];
            r.d_lte += mass * chain.delivery_reward(s, u);
            r.t_d2d += mass * chain.throughput_reward(s, u);
        }
    return r;
}

/// Closed-form LTE frame delivery rate of the constant-probability policy on
/// a fixed-size GoP with n differential frames:
///   (1-rho)(n(1-rho)+1)/(n+1),  rho = rho1*p_tx + rho0*(1-p_tx).
inline double baseline_delivery_rate(int n, double rho0, double rho1, double p_tx) {
    if (n < 1) throw std::invalid_argument("baseline_delivery_rate: n must be >= 1");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(rho0) || !in01(rho1) || !in01(p_tx))
        throw std::invalid_argument("baseline_delivery_rate: probabilities must lie in [0,1]");
    const double rho = rho1 * p_tx + rho0 * (1.0 - p_tx);
    return (1.0 - rho) * (n * (1.0 - rho) + 1.0) / (n + 1.0);
}

/// Closed-form D2D throughput of the constant-probability policy.
inline double baseline_throughput(double rho_d1, double p_tx) {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(rho_d1) || !in01(p_tx))
        throw std::invalid_argument("baseline_throughput: probabilities must lie in [0,1]");
    return p_tx * (1.0 - rho_d1);
}

/// Constants of the affine frame-error-to-distortion model. The distortion of
/// a received video is d_e (encoder distortion, present regardless of losses)
/// plus c * p_err * sigma_e (decoder distortion from residual frame errors).
struct MseModelParams {
    double d_e = 1.0;      ///< encoder distortion, MSE units
    double c = 1.0;        ///< scaling constant
    double sigma_e = 1.0;  ///< error sensitivity, MSE units
    int w = 8;             ///< bits per pixel
};

inline void validate(const MseModelParams& m) {
    if (!(m.d_e >= 0.0)) throw std::invalid_argument("MseModelParams: d_e must be >= 0");
    if (!(m.c >= 0.0)) throw std::invalid_argument("MseModelParams: c must be >= 0");
    if (!(m.sigma_e >= 0.0)) throw std::invalid_argument("MseModelParams: sigma_e must be >= 0");
    if (m.w < 1) throw std::invalid_argument("MseModelParams: w must be >= 1");
}

/// Mean MSE at a given frame error rate. p_err is the complement of the frame
/// delivery rate (1 - d_lte) when derived from a policy evaluation.
inline double mse_from_error_rate(double p_err, const MseModelParams& m) {
    if (!(p_err >= 0.0 && p_err <= 1.0))
        throw std::invalid_argument("mse_from_error_rate: p_err must lie in [0,1]");
    validate(m);
    return m.d_e + m.c * p_err * m.sigma_e;
}

/// Peak definition for the PSNR. `paper` uses 2^w; `standard` uses the
/// conventional squared peak (2^w - 1)^2.
enum class PsnrConvention { paper, standard };

inline double psnr_from_mse(double mse, int w, PsnrConvention conv = PsnrConvention::paper) {
    if (!(mse > 0.0)) throw std::domain_error("psnr_from_mse: mse must be > 0");
    if (w < 1) throw std::invalid_argument("psnr_from_mse: w must be >= 1");
    const double peak = conv == PsnrConvention::paper
                            ? std::exp2(static_cast<double>(w))
                            : std::pow(std::exp2(static_cast<double>(w)) - 1.0, 2.0);
    return 10.0 * std::log10(peak / mse);
}

}  // namespace copol
