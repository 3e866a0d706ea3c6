#pragma once

#include <cmath>

#include "sgdd/errors.hpp"
#include "sgdd/state_space.hpp"

namespace sgdd {

/// Per-unit-Hamming coupling coefficient
///   c(eta, N) = log[(1 + (N-1) e^-eta) / ((N-1)(1 - e^-eta))].
/// Strictly decreasing in eta and divergent as eta -> 0+; may be negative for
/// large eta when N > 2. exp(-c) equals the uniform kernel's odds of the whole
/// wrong-token mass against keeping the token at noise level eta.
inline double coupling_coefficient(double eta, int N) {
    if (!(eta > 0.0)) throw DomainError("coupling_coefficient: eta must be > 0");
    if (N < 2) throw DomainError("coupling_coefficient: N must be >= 2");
    const double e = std::exp(-eta);
    return std::log1p(static_cast<double>(N - 1) * e) -
           std::log(static_cast<double>(N - 1)) - std::log(-std::expm1(-eta));
}

/// Coupling potential d(x,z) * c(eta, N).
inline double potential(const TokenSequence& x, const TokenSequence& z, double eta, int N) {
    return static_cast<double>(hamming_distance(x, z)) * coupling_coefficient(eta, N);
}

/// Per-token normalized coupling, coupling_coefficient + log(N-1):
///   c_norm(eta, N) = log[(1 + (N-1) e^-eta) / (1 - e^-eta)].
/// exp(-c_norm) is the heat kernel's odds of one specific wrong token against
/// keeping the token, so exp(-c_norm * d(x,z)) ∝ heat_kernel(z | x) at noise
/// level eta. The sampler targets and the augmented-distribution oracles use
/// this coefficient: it makes the prior conditional exactly the partial
/// reverse diffusion started at sigma = eta, and the two Gibbs conditionals
/// consistent with one augmented distribution. Identical to
/// coupling_coefficient for N = 2; always positive; same divergence as
/// eta -> 0+.
inline double normalized_coupling(double eta, int N) {
    if (!(eta > 0.0)) throw DomainError("normalized_coupling: eta must be > 0");
    if (N < 2) throw DomainError("normalized_coupling: N must be >= 2");
    return std::log1p(static_cast<double>(N - 1) * std::exp(-eta)) - std::log(-std::expm1(-eta));
}

} // namespace sgdd
