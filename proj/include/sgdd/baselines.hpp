#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

#include "sgdd/diffusion.hpp"
#include "sgdd/likelihood.hpp"

namespace sgdd {

struct ValueEstimateConfig {
    int mc_samples = 3;         // rollouts averaged per value estimate
    int euler_steps_for_x0 = 4; // Euler steps per quick rollout

    void validate() const {
        if (mc_samples < 1) throw ConfigError("ValueEstimateConfig: mc_samples must be >= 1");
        if (euler_steps_for_x0 < 1)
            throw ConfigError("ValueEstimateConfig: euler_steps_for_x0 must be >= 1");
    }
};

struct ReverseRunOptions {
    double sigma_max = 20.0;
    ReverseEulerOptions euler;
};

struct ParticleSet {
    std::vector<TokenSequence> particles;
    Eigen::ArrayXd weights; // normalized
    bool degeneracy = false;
    int resample_count = 0;
};

struct SmcOptions {
    enum class Resampling { systematic, multinomial };
    Resampling resampling = Resampling::systematic;
    double ess_threshold_frac = 0.5; // resample when ESS < frac * M
    ValueEstimateConfig value;
    ReverseRunOptions run;
};

struct SvddOptions {
    // Candidate selection weight exp(selection_beta * value); infinity is the
    // evaluated configuration (pure argmax, ties to the lowest index).
    double selection_beta = std::numeric_limits<double>::infinity();
    ReverseRunOptions run;
};

/// Particle selection along the reverse chain: at every grid step draw M
/// candidate next-states from the unconditional transition, score each by the
/// Monte Carlo estimate of -f(x0_hat), and keep the argmax (or a softmax draw
/// under a finite selection beta).
TokenSequence run_svdd_pm(const ConcreteScoreProvider& score, const LikelihoodPotential& f, int M,
                          int steps, const ValueEstimateConfig& vcfg, RngStream& rng,
                          const SvddOptions& opts = {});

/// Particle filter with the unconditional reverse step as proposal and
/// tempered incremental weights [p_hat(y|x_t)/p_hat(y|x_{t+1})]^temper_beta.
/// Resamples when ESS drops below the configured fraction of M; all-zero
/// weights fall back to uniform resampling and set the degeneracy flag.
ParticleSet run_smc(const ConcreteScoreProvider& score, const LikelihoodPotential& f, int M,
                    int steps, double temper_beta, RngStream& rng, const SmcOptions& opts = {});

TokenSequence draw_particle(const ParticleSet& set, RngStream& rng);

/// Reverse chain with rates tilted by the guidance ratio
/// p_hat(y|neighbor)/p_hat(y|current), every estimate through quick rollouts.
/// Refuses when (N-1)*D neighbor evaluations per step exceed the budget
/// (N*D <= 4096).
TokenSequence run_discrete_dps(const ConcreteScoreProvider& score, const LikelihoodPotential& f,
                               int steps, const ValueEstimateConfig& vcfg, RngStream& rng,
                               const ReverseRunOptions& opts = {});

/// Plain Metropolis-Hastings on exp(-f) with the single-site uniform proposal;
/// the no-prior control with the same proposal budget as the split sampler's
/// likelihood steps.
TokenSequence run_mcmc_no_prior(const LikelihoodPotential& f, const StateSpace& space, int sweeps,
                                RngStream& rng);

} // namespace sgdd
