#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "sgdd/likelihood.hpp"
#include "sgdd/pmf.hpp"
#include "sgdd/prior.hpp"
#include "sgdd/state_space.hpp"

namespace sgdd {

/// Expand a prior into an explicit table over all N^D states.
Pmf enumerate_prior(const TabularPrior& prior, std::uint64_t budget = kDefaultEnumerationBudget);

/// Normalized exp(logpdf) over the full enumeration.
Pmf pmf_from_logpdf(const StateSpace& space, const std::function<double(const TokenSequence&)>& logpdf,
                    std::uint64_t budget = kDefaultEnumerationBudget);

/// Exact posterior p(x|y) ∝ p0(x) exp(-f(x)) by full enumeration.
Pmf exact_posterior_enumerate(const TabularPrior& prior, const LikelihoodPotential& f,
                              std::uint64_t budget = kDefaultEnumerationBudget);

inline Eigen::Index pair_index(Token x0, Token x1, int N) {
    return static_cast<Eigen::Index>(x0) * N + x1;
}

/// Marginal of dimensions (0,1) of a full-space Pmf, indexed x0*N + x1.
Pmf marginal_first_two(const Pmf& joint, const StateSpace& space);

/// Raw frequency map of dimensions (0,1) over samples; no smoothing.
Pmf empirical_first_two(const std::vector<TokenSequence>& samples, int N);

/// Empirical table over the full (small) state space.
Pmf empirical_pmf(const std::vector<TokenSequence>& samples, const StateSpace& space,
                  std::uint64_t budget = kDefaultEnumerationBudget);

/// Exact posterior of dims (0,1) for the absolute-value-sum forward model
/// G(x) = sum_d |value[x_d]| with likelihood exp(-|G-y|/sigma_y): convolve the
/// lattice-valued per-dimension |value| pmfs of dims 2..D-1 by dynamic
/// programming, then weight the (x0,x1) grid. Values must be lattice-aligned;
/// otherwise falls back to enumeration when N^D fits the budget and refuses
/// beyond it.
Pmf exact_posterior_marginal_dp(const TabularPrior& prior, const Eigen::ArrayXd& value_map,
                                double y, double sigma_y,
                                std::uint64_t budget = kDefaultEnumerationBudget);

/// Per-proposal probability q(x -> x[pos]=to | pos chosen); the position itself
/// is uniform over D. Returning a constant 1/(N-1) reproduces the uniform
/// single-site proposal.
using SiteProposalProb = std::function<double(const TokenSequence& from, int pos, Token to)>;

/// Dense row-stochastic Metropolis-Hastings kernel (one proposal) on an
/// enumerable space, mirroring likelihood_step's acceptance rule. The
/// `invert_acceptance` switch deliberately breaks detailed balance and exists
/// as a negative control for the verification battery.
Eigen::MatrixXd mh_transition_matrix(const StateSpace& space,
                                     const std::function<double(const TokenSequence&)>& logpdf,
                                     const SiteProposalProb& proposal = {},
                                     bool invert_acceptance = false,
                                     std::uint64_t budget = kDefaultEnumerationBudget);

/// q(from -> from[pos]=to) of the single_site_kernel proposal used by
/// likelihood_step, exposed so dense kernels mirror the sampler exactly.
SiteProposalProb kernel_site_proposal(TokenSequence anchor, double eta, int N);

/// Exact augmented distribution pi(x,z;eta) ∝ p0(x) exp(-f(z)) exp(-c_norm d),
/// equivalently p0(x) heat_kernel(z|x;eta) exp(-f(z)); indexed a = ix * S + iz.
Pmf augmented_joint(const TabularPrior& prior, const LikelihoodPotential& f, double eta,
                    std::uint64_t budget = kDefaultEnumerationBudget);

/// Exact x-marginal pi^X(x;eta) of the augmented distribution.
Pmf augmented_x_marginal(const TabularPrior& prior, const LikelihoodPotential& f, double eta,
                         std::uint64_t budget = kDefaultEnumerationBudget);

/// Row-stochastic kernel of one exact-conditional sweep on the augmented
/// space: resample z' ~ pi(z|x) then x' ~ pi(x|z'). Stationarity of
/// augmented_joint under this kernel is the Gibbs-structure check.
Eigen::MatrixXd exact_sweep_kernel(const TabularPrior& prior, const LikelihoodPotential& f,
                                   double eta, std::uint64_t budget = kDefaultEnumerationBudget);

} // namespace sgdd
