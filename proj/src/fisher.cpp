#include "sgdd/fisher.hpp"

#include <cmath>
#include <limits>

#include "sgdd/metrics.hpp"
#include "sgdd/rate_matrix.hpp"

namespace sgdd {

double relative_fisher_information(const Pmf& mu, const Pmf& pi, const Eigen::MatrixXd& Q) {
    require_same_support(mu, pi, "relative_fisher_information");
    if (Q.rows() != pi.size() || Q.cols() != pi.size())
        throw DimensionError("relative_fisher_information: Q size mismatch");
    if ((pi.p <= 0.0).any()) throw DomainError("relative_fisher_information: pi must be positive");
    const Eigen::ArrayXd f = mu.p / pi.p;
    double fi = 0.0;
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        for (Eigen::Index j = 0; j < pi.size(); ++j) {
            if (i == j) continue;
            const double w = pi.p[i] * Q(j, i);
            if (w == 0.0) continue;
            const double a = f[j];
            const double b = f[i];
            double term;
            if (b == 0.0) {
                term = a; // lim_{b->0} b log(a/b) = 0
            } else if (a == 0.0) {
                term = std::numeric_limits<double>::infinity();
            } else {
                term = a - b - b * std::log(a / b);
            }
            fi += w * term;
        }
    }
    return fi;
}

std::pair<double, double> verify_mh_dpi(const Pmf& pi, const Pmf& mu, const Eigen::MatrixXd& kernel) {
    require_same_support(pi, mu, "verify_mh_dpi");
    if (kernel.rows() != kernel.cols() || kernel.rows() != pi.size())
        throw DimensionError("verify_mh_dpi: kernel size mismatch");
    for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
        if (std::abs(kernel.row(i).sum() - 1.0) > 1e-12)
            throw DomainError("verify_mh_dpi: kernel row " + std::to_string(i) + " does not sum to 1");
        if ((kernel.row(i).array() < -1e-15).any())
            throw DomainError("verify_mh_dpi: kernel has a negative entry");
    }
    const double before = kl_divergence(pi, mu);
    const Eigen::ArrayXd pi_after = (kernel.transpose() * pi.p.matrix()).array();
    const Eigen::ArrayXd mu_after = (kernel.transpose() * mu.p.matrix()).array();
    const double after = kl_divergence(normalized_pmf(pi_after), normalized_pmf(mu_after));
    return {before, after};
}

namespace {

double kl_at(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Qt, const Pmf& pi0, const Pmf& mu0,
             double t) {
    const Eigen::ArrayXd pi_t = (matrix_exponential(t * Q) * pi0.p.matrix()).array();
    const Eigen::ArrayXd mu_t = (matrix_exponential(t * Qt) * mu0.p.matrix()).array();
    return kl_divergence(normalized_pmf(pi_t), normalized_pmf(mu_t));
}

double max_residual_once(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Qt, const Pmf& pi0,
                         const Pmf& mu0, const std::vector<double>& t_grid, double dt) {
    double worst = 0.0;
    for (double t : t_grid) {
        if (!(t - dt > 0.0)) throw DomainError("verify_kl_decay_identity: grid point too close to 0");
        const Eigen::ArrayXd pi_t = (matrix_exponential(t * Q) * pi0.p.matrix()).array();
        const Eigen::ArrayXd mu_t = (matrix_exponential(t * Qt) * mu0.p.matrix()).array();
        const Pmf pi_pmf = normalized_pmf(pi_t);
        const Pmf mu_pmf = normalized_pmf(mu_t);

        const double fd =
            (kl_at(Q, Qt, pi0, mu0, t + dt) - kl_at(Q, Qt, pi0, mu0, t - dt)) / (2.0 * dt);
        const Eigen::ArrayXd log_ratio = (pi_pmf.p / mu_pmf.p).log();
        const double error_term =
            (log_ratio.matrix().transpose() * ((Qt - Q) * pi_pmf.p.matrix()))(0, 0);
        const double rhs = -relative_fisher_information(pi_pmf, mu_pmf, Qt) - error_term;
        const double resid = std::abs(fd - rhs);
        if (!std::isfinite(resid)) throw NumericError("verify_kl_decay_identity: non-finite residual");
        worst = std::max(worst, resid);
    }
    return worst;
}

} // namespace

double verify_kl_decay_identity(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Qtilde,
                                const Pmf& pi0, const Pmf& mu0, const std::vector<double>& t_grid,
                                double dt) {
    require_valid_rate_matrix(Q);
    require_valid_rate_matrix(Qtilde);
    if (t_grid.empty()) throw DomainError("verify_kl_decay_identity: empty time grid");
    try {
        return max_residual_once(Q, Qtilde, pi0, mu0, t_grid, dt);
    } catch (const NumericError&) {
        return max_residual_once(Q, Qtilde, pi0, mu0, t_grid, dt / 10.0);
    }
}

} // namespace sgdd
