#pragma once

#include <functional>
#include <utility>

#include "sgdd/state_space.hpp"

namespace sgdd {

/// Negative log likelihood f(z; y) = -log p(y|z), up to an additive constant.
/// Deterministic and finite everywhere (hard constraints are encoded as
/// large-but-finite potentials so MH stays ergodic).
struct LikelihoodPotential {
    enum class Kind { inverse_problem, reward };

    std::function<double(const TokenSequence&)> eval;
    Kind kind = Kind::inverse_problem;
    double sigma_y = 0.0; // inverse problems
    double beta = 0.0;    // reward weighting

    double operator()(const TokenSequence& z) const { return eval(z); }

    static LikelihoodPotential flat() {
        LikelihoodPotential f;
        f.eval = [](const TokenSequence&) { return 0.0; };
        return f;
    }
};

} // namespace sgdd
