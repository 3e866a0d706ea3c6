#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sgdd/errors.hpp"

namespace sgdd {

/// Geometric noise schedule sigma(t) = sigma_min^(1-t) * sigma_max^t on t in [0,1].
struct NoiseSchedule {
    double sigma_min = 1e-4;
    double sigma_max = 20.0;

    NoiseSchedule() = default;
    NoiseSchedule(double smin, double smax) : sigma_min(smin), sigma_max(smax) {
        if (!(smin > 0.0) || !(smax > 0.0))
            throw DomainError("NoiseSchedule: sigma bounds must be positive");
        if (!(smin < smax))
            throw DomainError("NoiseSchedule: sigma_min must be < sigma_max");
    }

    double operator()(double t) const {
        if (!(t >= 0.0) || !(t <= 1.0))
            throw DomainError("NoiseSchedule: t outside [0,1]: " + std::to_string(t));
        return std::pow(sigma_min, 1.0 - t) * std::pow(sigma_max, t);
    }
};

/// Decreasing regularization levels eta_k = eta_min^(k/K) * eta_max^(1-k/K),
/// k = 0..K-1, or a constant level for ablations.
struct AnnealingSchedule {
    std::vector<double> eta;
    double eta_min = 1e-4;
    double eta_max = 20.0;

    static AnnealingSchedule geometric(double eta_min, double eta_max, int K) {
        if (!(eta_min > 0.0) || !(eta_max > 0.0) || !(eta_min <= eta_max))
            throw DomainError("AnnealingSchedule: need 0 < eta_min <= eta_max");
        if (K < 1) throw ConfigError("AnnealingSchedule: K must be >= 1");
        AnnealingSchedule s;
        s.eta_min = eta_min;
        s.eta_max = eta_max;
        s.eta.resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            const double frac = static_cast<double>(k) / static_cast<double>(K);
            s.eta[static_cast<std::size_t>(k)] = std::pow(eta_min, frac) * std::pow(eta_max, 1.0 - frac);
        }
        return s;
    }

    static AnnealingSchedule fixed(double eta_value, int K) {
        if (!(eta_value > 0.0)) throw DomainError("AnnealingSchedule: eta must be positive");
        if (K < 1) throw ConfigError("AnnealingSchedule: K must be >= 1");
        AnnealingSchedule s;
        s.eta_min = s.eta_max = eta_value;
        s.eta.assign(static_cast<std::size_t>(K), eta_value);
        return s;
    }

    int iterations() const { return static_cast<int>(eta.size()); }
};

} // namespace sgdd
