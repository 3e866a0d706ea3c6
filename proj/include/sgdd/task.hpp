#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "sgdd/forward_model.hpp"
#include "sgdd/prior.hpp"

namespace sgdd {

/// A fully specified problem instance: prior + likelihood + recorded ground
/// truth, reconstructable bit-exactly from its text serialization. Instance
/// randomness (pairs, mask, ground truth draw) comes from the task seed, kept
/// separate from chain seeds so every method sees the same problem.
struct TaskInstance {
    std::string kind; // synthetic | xor | and | mask | reward
    StateSpace space;
    std::uint64_t task_seed = 0;
    TabularPrior prior = TabularPrior::uniform(StateSpace(2, 1));

    // Inverse problems.
    std::optional<ForwardModel> model;
    Measurement measurement;
    TokenSequence x_true;

    // Reward guidance.
    std::optional<RewardFunction> reward;
    double beta = 1.0;

    // Synthetic extras, echoed for reproducibility.
    double sigma_prior = 1.0;
    double grid_min = -3.0;
    double grid_max = 3.0;

    bool is_reward() const { return kind == "reward"; }
    LikelihoodPotential likelihood() const;

    std::string serialize() const;
    static TaskInstance parse(const std::string& text);
};

/// FNV-1a of the canonical serialization; identical across methods compared on
/// one instance.
std::uint64_t task_hash(const TaskInstance& task);

/// Token -> coordinate map of N equally spaced grid points on [lo, hi].
Eigen::ArrayXd coordinate_grid(int N, double lo, double hi);

/// Factorized prior with every dimension an N-point discretization of
/// N(0, sigma_prior^2) on [grid_min, grid_max].
TabularPrior discretized_gaussian_prior(int N, int D, double sigma_prior, double grid_min,
                                        double grid_max);

TaskInstance make_synthetic_task(int N, int D, std::uint64_t seed, double sigma_prior = 1.0,
                                 double grid_min = -3.0, double grid_max = 3.0,
                                 double sigma_y = 1.0);

/// XOR/AND parity tasks on binary sequences: floor(gamma*D) random position
/// pairs, biased per-dimension Bernoulli prior, y = G(x_true) with x_true
/// drawn from the prior.
TaskInstance make_parity_task(const std::string& kind, int D, double gamma, std::uint64_t seed,
                              double sigma_y = 0.1);

TaskInstance make_mask_task(int D, double keep_frac, std::uint64_t seed, double sigma_y = 0.1);

/// Reward task; reward_kind in {popcount, linear, motif}. popcount and linear
/// default to the uniform prior, flip biased_prior for the profile prior.
TaskInstance make_reward_task(int D, const std::string& reward_kind, double beta,
                              std::uint64_t seed, bool biased_prior = false);

} // namespace sgdd
