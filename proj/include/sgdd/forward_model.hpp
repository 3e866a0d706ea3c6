#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sgdd/likelihood.hpp"
#include "sgdd/state_space.hpp"

namespace sgdd {

/// Deterministic measurement operator G.
struct ForwardModel {
    enum class Kind { l1_sum, xor_pairs, and_pairs, mask };

    Kind kind = Kind::l1_sum;
    Eigen::ArrayXd value_map;               // l1_sum: token -> coordinate value
    std::vector<std::pair<int, int>> pairs; // xor/and position pairs
    std::vector<int> keep;                  // mask: kept indices, distinct

    void validate(const StateSpace& space) const;
};

/// G(x): a scalar for l1_sum, a bit/token vector otherwise.
struct MeasurementValue {
    bool is_scalar = false;
    double scalar = 0.0;
    std::vector<Token> bits;
};

struct Measurement {
    MeasurementValue value;
    double sigma_y = 0.1;
};

MeasurementValue apply_forward(const ForwardModel& model, const TokenSequence& x);

/// f(z;y) = ||G(z) - y|| / sigma_y with |.| for scalars and the l0 mismatch
/// count for token vectors.
LikelihoodPotential make_likelihood(const ForwardModel& model, const Measurement& y);

struct RewardFunction {
    enum class Kind { linear_token_score, motif_count };

    Kind kind = Kind::linear_token_score;
    Eigen::ArrayXd token_scores;  // linear: r(x) = sum_d token_scores[x_d]
    std::vector<Token> motif;     // motif_count: overlapping occurrences

    double eval(const TokenSequence& x) const;
};

/// f(z) = -beta * r(z), the reward-shaped posterior exp(beta r) p0 in
/// potential form.
LikelihoodPotential make_reward_likelihood(const RewardFunction& r, double beta);

} // namespace sgdd
