#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "sgdd/prior.hpp"
#include "sgdd/rng.hpp"
#include "sgdd/state_space.hpp"

namespace sgdd {

// Ratios are kept linear but clamped: sigma_max = 20 produces e^-20 factors
// that underflow in naive products.
constexpr double kRatioClampLo = 1e-30;
constexpr double kRatioClampHi = 1e30;

/// Corruption level beta(sigma) = (N-1)/N * (1 - e^-sigma) of the uniform
/// kernel: the per-position probability that a token has been resampled away
/// from its clean value.
inline double beta_of_sigma(double sigma, int N) {
    if (!(sigma >= 0.0)) throw DomainError("beta_of_sigma: sigma must be >= 0");
    if (N < 2) throw DomainError("beta_of_sigma: N must be >= 2");
    const double frac = static_cast<double>(N - 1) / static_cast<double>(N);
    return frac * (-std::expm1(-sigma));
}

/// Exact normalized log p(x_t | x_0) under the per-dimension uniform kernel:
/// d*log(beta/(N-1)) + (D-d)*log(1-beta), d = hamming(x_t, x_0). The wrong-token
/// mass beta splits evenly over the N-1 alternatives.
inline double heat_kernel_logpmf(const TokenSequence& xt, const TokenSequence& x0,
                                 double sigma, int N) {
    const int d = hamming_distance(xt, x0);
    const double beta = beta_of_sigma(sigma, N);
    const int D = static_cast<int>(xt.size());
    double lp = static_cast<double>(D - d) * std::log1p(-beta);
    if (d > 0) {
        if (beta == 0.0) return -std::numeric_limits<double>::infinity();
        lp += static_cast<double>(d) * std::log(beta / static_cast<double>(N - 1));
    }
    return lp;
}

/// Noise the prior to level sigma: factorized marginals mix toward uniform,
/// q_sigma = e^-sigma q_0 + (1 - e^-sigma)/N; joint tables apply the
/// per-dimension kernel along each axis (the kernel factorizes over dims).
TabularPrior marginal_at_sigma(const TabularPrior& prior, double sigma);

/// One forward draw x_sigma ~ p(.|x_0): each position keeps its token with
/// probability 1-beta, else resamples uniformly over the other N-1.
TokenSequence forward_noise_sample(const TokenSequence& x0, double sigma, int N, RngStream& rng);

/// Score interface: fills `ratios` (N x D) with p_sigma(x with pos d set to v)
/// / p_sigma(x); entry (x_d, d) is 1 by construction. One call = one score
/// evaluation (the NFE unit).
class ConcreteScoreProvider {
public:
    virtual ~ConcreteScoreProvider() = default;
    virtual const StateSpace& space() const = 0;
    virtual void concrete_score(const TokenSequence& x, double sigma, Eigen::ArrayXXd& ratios) const = 0;
};

/// Exact scores from a TabularPrior. Noised tables are memoized per sigma
/// (read-mostly cache guarded by a shared mutex), so a provider can be shared
/// by many chains running the same sigma grid.
class TabularScoreProvider final : public ConcreteScoreProvider {
public:
    explicit TabularScoreProvider(TabularPrior prior);

    const StateSpace& space() const override { return prior_.space(); }
    const TabularPrior& prior() const { return prior_; }

    void concrete_score(const TokenSequence& x, double sigma, Eigen::ArrayXXd& ratios) const override;

private:
    using FactorizedTable = Eigen::ArrayXXd; // N x D noised marginals
    using JointTable = Eigen::ArrayXd;       // N^D noised probabilities

    std::shared_ptr<const FactorizedTable> factorized_table(double sigma) const;
    std::shared_ptr<const JointTable> joint_table(double sigma) const;

    TabularPrior prior_;
    mutable std::shared_mutex mutex_;
    mutable std::map<std::uint64_t, std::shared_ptr<const FactorizedTable>> fact_cache_;
    mutable std::map<std::uint64_t, std::shared_ptr<const JointTable>> joint_cache_;
};

struct ReverseEulerOptions {
    enum class Grid { geometric, linear };
    double sigma_floor = 1e-5; // scores are singular at exactly 0 for joint priors
    Grid grid = Grid::geometric;
};

/// sigma_hi = grid[0] > ... > grid[steps] = sigma_lo.
std::vector<double> sigma_grid(double sigma_hi, double sigma_lo, int steps,
                               ReverseEulerOptions::Grid kind = ReverseEulerOptions::Grid::geometric);

/// One tau-leaping sub-step of the reverse chain over a sigma-width `dsig`:
/// per position, jump masses m_v = dsig * ratio(v,d)/N for v != x_d, rescaled
/// by 1/sum when the sum exceeds 1 so the categorical stays valid. All
/// positions update simultaneously. Mutates x in place.
void euler_substep(const Eigen::ArrayXXd& ratios, TokenSequence& x, double dsig, RngStream& rng);

/// Simulate the reverse chain from sigma_start down to (effectively) zero in
/// `steps` Euler sub-steps. The floor is pulled below sigma_start when the
/// caller starts lower than the configured floor.
TokenSequence reverse_euler_sample(const ConcreteScoreProvider& score, TokenSequence start,
                                   double sigma_start, int steps, RngStream& rng,
                                   const ReverseEulerOptions& opts = {});

} // namespace sgdd
