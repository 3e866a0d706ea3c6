#pragma once

#include <Eigen/Dense>

#include "sgdd/prior.hpp"
#include "sgdd/state_space.hpp"

namespace sgdd {

// Exact matrix exponentials are reserved for theory checks on small systems.
constexpr Eigen::Index kMaxExpmStates = 64;

/// Forward-Kolmogorov convention throughout: dp/dt = Q p, so off-diagonals are
/// >= 0 and every column sums to zero.
bool is_valid_rate_matrix(const Eigen::MatrixXd& Q, double tol = 1e-9);
void require_valid_rate_matrix(const Eigen::MatrixXd& Q, double tol = 1e-9);

/// exp(A) by scaling-and-squaring with the Taylor series truncated at machine
/// precision. Dimension capped at kMaxExpmStates.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A);

/// Forward generator of the per-dimension uniform kernel on the enumerated
/// product space (rate 1/N per single-site flip, in sigma time units).
Eigen::MatrixXd uniform_sequence_generator(const StateSpace& space,
                                           std::uint64_t budget = kDefaultEnumerationBudget);

/// Reverse-chain generator at noise level sigma for an exact tabular prior:
/// Q[j,i] = (1/N) * p_sigma(x_j)/p_sigma(x_i) for single-site flips j != i.
Eigen::MatrixXd reverse_generator(const TabularPrior& prior, double sigma,
                                  std::uint64_t budget = kDefaultEnumerationBudget);

/// Dense generator with iid uniform off-diagonal rates in [0, scale]; columns
/// balanced to sum to zero.
Eigen::MatrixXd random_rate_matrix(int n, RngStream& rng, double scale = 1.0);

} // namespace sgdd
