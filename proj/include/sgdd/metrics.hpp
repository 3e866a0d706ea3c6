#pragma once

#include <cmath>
#include <limits>

#include "sgdd/pmf.hpp"
#include "sgdd/state_space.hpp"

namespace sgdd {

/// sqrt(1/2 * sum (sqrt(p_i) - sqrt(q_i))^2), in [0, 1].
inline double hellinger(const Pmf& p, const Pmf& q) {
    require_same_support(p, q, "hellinger");
    const double s = (p.p.sqrt() - q.p.sqrt()).square().sum();
    return std::sqrt(0.5 * s);
}

/// 1/2 * sum |p_i - q_i|, in [0, 1].
inline double total_variation(const Pmf& p, const Pmf& q) {
    require_same_support(p, q, "total_variation");
    return 0.5 * (p.p - q.p).abs().sum();
}

/// KL(mu || pi) = sum mu_i log(mu_i / pi_i), with 0 log 0 = 0. Returns the
/// +infinity sentinel (and sets the flag when given) where mu puts mass
/// outside pi's support.
inline double kl_divergence(const Pmf& mu, const Pmf& pi,
                            bool* abs_continuity_violated = nullptr) {
    require_same_support(mu, pi, "kl_divergence");
    if (abs_continuity_violated) *abs_continuity_violated = false;
    double kl = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        if (mu.p[i] == 0.0) continue;
        if (pi.p[i] == 0.0) {
            if (abs_continuity_violated) *abs_continuity_violated = true;
            return std::numeric_limits<double>::infinity();
        }
        kl += mu.p[i] * std::log(mu.p[i] / pi.p[i]);
    }
    return kl;
}

/// PSNR in dB for binary sequences: 10 log10(1/MSE), MSE = hamming/D.
/// Exact match reports the 99 dB cap.
inline double psnr_binary(const TokenSequence& x, const TokenSequence& ref) {
    constexpr double kPsnrCapDb = 99.0;
    const int d = hamming_distance(x, ref);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 1 || ref[i] > 1) throw DomainError("psnr_binary: non-binary token");
    if (d == 0) return kPsnrCapDb;
    const double mse = static_cast<double>(d) / static_cast<double>(x.size());
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace sgdd
