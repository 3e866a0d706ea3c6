#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "sgdd/diffusion.hpp"
#include "sgdd/likelihood.hpp"
#include "sgdd/potential.hpp"
#include "sgdd/schedule.hpp"

namespace sgdd {

enum class MhProposal {
    single_site_uniform, // uniform position, uniform replacement token
    single_site_kernel,  // replacement tilted toward the anchor's token (Hastings-corrected)
};

struct GibbsConfig {
    int iterations = 10;  // K
    int mh_sweeps = 10;   // T_mh, sweeps of D proposals each
    int euler_steps = 20; // H
    AnnealingSchedule annealing = AnnealingSchedule::geometric(1e-4, 20.0, 10);
    MhProposal proposal = MhProposal::single_site_uniform;
    ReverseEulerOptions euler;

    void validate() const;
};

struct GibbsIterationRecord {
    int k = 0;
    double eta = 0.0;
    TokenSequence x; // state entering iteration k
    TokenSequence z;
    double f_value = 0.0; // f(z^(k); y)
    double accept_rate = 0.0;
};

using GibbsTrace = std::vector<GibbsIterationRecord>;

struct SgddResult {
    TokenSequence sample;
    GibbsTrace trace;
};

/// Unnormalized log target of the likelihood step anchored at x_anchor:
/// log pi(z) = -f(z) - c_norm(eta, N) * d(x_anchor, z), i.e.
/// pi(z) ∝ exp(-f(z)) * heat_kernel(z | x_anchor; eta). The dense-kernel
/// theory checks build their transition matrices from this same callable.
std::function<double(const TokenSequence&)>
mh_target_logpdf(TokenSequence x_anchor, const LikelihoodPotential& f, double eta, int N);

/// T_mh Metropolis-Hastings sweeps on pi(z) ∝ exp(-f(z) - c*d(x_k, z)),
/// initialized at z = x_k. A non-finite f at a proposal counts as a rejection.
/// Returns the final state and the mean acceptance rate.
std::pair<TokenSequence, double>
likelihood_step(const TokenSequence& x_k, const LikelihoodPotential& f, double eta, int mh_sweeps,
                int vocab_size, RngStream& rng,
                MhProposal proposal = MhProposal::single_site_uniform);

/// Sample x ~ pi(x | z = z_k; eta) by reverse diffusion from sigma = eta.
TokenSequence prior_step(const ConcreteScoreProvider& score, const TokenSequence& z_k, double eta,
                         int euler_steps, RngStream& rng, const ReverseEulerOptions& opts = {});

/// Annealed split Gibbs posterior sampling: x^(0) uniform over the state
/// space, then K alternations of likelihood_step(eta_k) and prior_step(eta_k).
SgddResult run_sgdd(const ConcreteScoreProvider& score, const LikelihoodPotential& f,
                    const GibbsConfig& cfg, RngStream& rng);

} // namespace sgdd
