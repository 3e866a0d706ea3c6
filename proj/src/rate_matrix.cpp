#include "sgdd/rate_matrix.hpp"

#include <cmath>

#include "sgdd/diffusion.hpp"
#include "sgdd/oracles.hpp"

namespace sgdd {

bool is_valid_rate_matrix(const Eigen::MatrixXd& Q, double tol) {
    if (Q.rows() != Q.cols() || Q.rows() == 0) return false;
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
        double col = 0.0;
        for (Eigen::Index i = 0; i < Q.rows(); ++i) {
            if (i != j && Q(i, j) < -tol) return false;
            col += Q(i, j);
        }
        if (std::abs(col) > tol * std::max(1.0, Q.col(j).cwiseAbs().maxCoeff())) return false;
    }
    return true;
}

void require_valid_rate_matrix(const Eigen::MatrixXd& Q, double tol) {
    if (!is_valid_rate_matrix(Q, tol))
        throw DomainError("rate matrix invalid (negative off-diagonal or nonzero column sum)");
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw DimensionError("matrix_exponential: square matrix required");
    if (A.rows() > kMaxExpmStates)
        throw BudgetError("matrix_exponential: capped at 64 states for exact theory checks");
    const double norm = A.cwiseAbs().rowwise().sum().maxCoeff(); // inf-norm
    int squarings = 0;
    double scale = 1.0;
    while (norm * scale > 0.5) {
        scale *= 0.5;
        ++squarings;
    }
    const Eigen::MatrixXd B = A * scale;
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    Eigen::MatrixXd sum = term;
    for (int k = 1; k <= 40; ++k) {
        term = (term * B) / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18 * sum.cwiseAbs().maxCoeff()) break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

Eigen::MatrixXd uniform_sequence_generator(const StateSpace& space, std::uint64_t budget) {
    const std::uint64_t S = state_count_checked(space, budget);
    const int N = space.vocab_size;
    const int D = space.seq_len;
    const double rate = 1.0 / static_cast<double>(N);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    for (std::uint64_t i = 0; i < S; ++i) {
        const TokenSequence x = state_from_index(space, i);
        std::uint64_t stride = 1;
        for (int d = 0; d < D; ++d) {
            const std::uint64_t cur = x[static_cast<std::size_t>(d)];
            for (std::uint64_t v = 0; v < static_cast<std::uint64_t>(N); ++v) {
                if (v == cur) continue;
                const std::uint64_t j = i - cur * stride + v * stride;
                Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += rate;
                Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= rate;
            }
            stride *= static_cast<std::uint64_t>(N);
        }
    }
    return Q;
}

Eigen::MatrixXd reverse_generator(const TabularPrior& prior, double sigma, std::uint64_t budget) {
    const StateSpace& space = prior.space();
    const std::uint64_t S = state_count_checked(space, budget);
    const Pmf p_sigma = enumerate_prior(marginal_at_sigma(prior, sigma), budget);
    const int N = space.vocab_size;
    const double rate = 1.0 / static_cast<double>(N);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    for (std::uint64_t i = 0; i < S; ++i) {
        const TokenSequence x = state_from_index(space, i);
        const double pi_i = p_sigma[static_cast<Eigen::Index>(i)];
        if (!(pi_i > 0.0)) throw DegenerateStateError("reverse_generator: zero-mass state");
        std::uint64_t stride = 1;
        for (int d = 0; d < space.seq_len; ++d) {
            const std::uint64_t cur = x[static_cast<std::size_t>(d)];
            for (std::uint64_t v = 0; v < static_cast<std::uint64_t>(N); ++v) {
                if (v == cur) continue;
                const std::uint64_t j = i - cur * stride + v * stride;
                const double r = rate * p_sigma[static_cast<Eigen::Index>(j)] / pi_i;
                Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += r;
                Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= r;
            }
            stride *= static_cast<std::uint64_t>(N);
        }
    }
    return Q;
}

Eigen::MatrixXd random_rate_matrix(int n, RngStream& rng, double scale) {
    if (n < 2) throw DimensionError("random_rate_matrix: need n >= 2");
    Eigen::MatrixXd Q(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double col = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == j) continue;
            Q(i, j) = scale * rng.next_double();
            col += Q(i, j);
        }
        Q(j, j) = -col;
    }
    return Q;
}

} // namespace sgdd
