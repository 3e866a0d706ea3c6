#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sgdd/pmf.hpp"

namespace sgdd {

/// Relative Fisher information
///   FI_Q(mu || pi) = sum_{i != j} pi(x_i) Q[j,i] (f_j - f_i - f_i log(f_j/f_i)),
/// with f = mu/pi. Nonnegative for any valid Q; zero iff mu = pi when Q is
/// irreducible. pi must be strictly positive.
double relative_fisher_information(const Pmf& mu, const Pmf& pi, const Eigen::MatrixXd& Q);

/// Push both distributions through one row-stochastic kernel and report
/// KL(pi||mu) before and after; the data-processing inequality says after is
/// never larger. Rows must sum to 1 within 1e-12.
std::pair<double, double> verify_mh_dpi(const Pmf& pi, const Pmf& mu, const Eigen::MatrixXd& kernel);

/// Check the exact KL decay identity along two generators: evolve pi_t under Q
/// and mu_t under Qtilde, compare the central finite difference of
/// d/dt KL(pi_t||mu_t) at step `dt` against
///   -FI_Qtilde(pi_t||mu_t) - (log(pi_t/mu_t))^T (Qtilde - Q) pi_t
/// at every grid point, and return the maximum absolute residual. The residual
/// is O(dt^2); halving dt should shrink it by ~4x. Retries once at dt/10 if the
/// evaluation overflows on a stiff system.
double verify_kl_decay_identity(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Qtilde,
                                const Pmf& pi0, const Pmf& mu0, const std::vector<double>& t_grid,
                                double dt);

} // namespace sgdd
