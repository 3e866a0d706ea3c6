#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "sgdd/errors.hpp"

namespace sgdd {

constexpr double kPmfNormTol = 1e-12;

/// Normalized probability table over an explicit finite support. The support
/// is the index set itself; callers agree on the enumeration convention
/// (mixed-radix state indices for product spaces, x0*N + x1 for pair marginals).
struct Pmf {
    Eigen::ArrayXd p;

    Pmf() = default;
    explicit Pmf(Eigen::ArrayXd probs) : p(std::move(probs)) {
        if (p.size() == 0) throw DimensionError("Pmf: empty support");
        if ((p < 0.0).any()) throw DomainError("Pmf: negative entry");
        if (std::abs(p.sum() - 1.0) > kPmfNormTol)
            throw DomainError("Pmf: not normalized, sum = " + std::to_string(p.sum()));
    }

    Eigen::Index size() const { return p.size(); }
    double operator[](Eigen::Index i) const { return p[i]; }
};

/// Normalize nonnegative weights into a Pmf.
inline Pmf normalized_pmf(const Eigen::ArrayXd& w) {
    if (w.size() == 0) throw DimensionError("normalized_pmf: empty support");
    if ((w < 0.0).any()) throw DomainError("normalized_pmf: negative weight");
    const double total = w.sum();
    if (!(total > 0.0) || !std::isfinite(total))
        throw NumericError("normalized_pmf: weight sum not positive finite");
    return Pmf(w / total);
}

/// Normalize log-weights via logsumexp; safe for exponents far below -700.
inline Pmf pmf_from_log_weights(const Eigen::ArrayXd& lw) {
    if (lw.size() == 0) throw DimensionError("pmf_from_log_weights: empty support");
    const double m = lw.maxCoeff();
    if (!std::isfinite(m)) throw NumericError("pmf_from_log_weights: no finite log weight");
    Eigen::ArrayXd w = (lw - m).exp();
    return Pmf(w / w.sum());
}

inline void require_same_support(const Pmf& a, const Pmf& b, const char* who) {
    if (a.size() != b.size())
        throw DimensionError(std::string(who) + ": support mismatch (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
}

} // namespace sgdd
