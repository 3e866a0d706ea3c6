#include <cmath>

#include "sgdd/fisher.hpp"
#include "sgdd/harness.hpp"
#include "sgdd/io.hpp"
#include "sgdd/metrics.hpp"
#include "sgdd/oracles.hpp"
#include "sgdd/potential.hpp"
#include "sgdd/rate_matrix.hpp"

namespace sgdd {

namespace {

Eigen::ArrayXd random_f_table(std::uint64_t states, RngStream& rng, double scale = 3.0) {
    Eigen::ArrayXd f(static_cast<Eigen::Index>(states));
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = scale * rng.next_double();
    return f;
}

LikelihoodPotential table_potential(const StateSpace& space, Eigen::ArrayXd table) {
    LikelihoodPotential f;
    f.eval = [space, table = std::move(table)](const TokenSequence& z) {
        return table[static_cast<Eigen::Index>(index_from_state(space, z))];
    };
    return f;
}

Pmf random_pmf(int n, RngStream& rng) {
    Eigen::ArrayXd w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.05 + rng.next_double();
    return normalized_pmf(w);
}

double invariance_error(const StateSpace& space, const std::function<double(const TokenSequence&)>& logpdf,
                        const SiteProposalProb& proposal, bool invert) {
    const Eigen::MatrixXd T = mh_transition_matrix(space, logpdf, proposal, invert);
    const Pmf pi = pmf_from_logpdf(space, logpdf);
    const Eigen::VectorXd pushed = T.transpose() * pi.p.matrix();
    return (pushed.array() - pi.p).abs().sum();
}

} // namespace

std::vector<TheoryCheck> run_theory_battery(bool inject_bug, std::uint64_t seed) {
    std::vector<TheoryCheck> checks;
    RngStream rng(seed, 0);

    { // MH invariance: ||pi T - pi||_1 on N=2, D <= 4, both proposals
        double worst = 0.0;
        std::string where;
        for (int D : {2, 3, 4}) {
            const StateSpace space(2, D);
            const std::uint64_t S = state_count_checked(space);
            for (double eta : {2.0, 0.5, 0.05}) {
                const LikelihoodPotential f = table_potential(space, random_f_table(S, rng));
                const TokenSequence anchor = uniform_random_sequence(space, rng);
                const auto logpdf = mh_target_logpdf(anchor, f, eta, 2);
                const double e_uniform = invariance_error(space, logpdf, {}, inject_bug);
                const double e_kernel = invariance_error(
                    space, logpdf, kernel_site_proposal(anchor, eta, 2), inject_bug);
                if (std::max(e_uniform, e_kernel) > worst) {
                    worst = std::max(e_uniform, e_kernel);
                    where = "D=" + std::to_string(D) + " eta=" + format_double(eta);
                }
            }
        }
        checks.push_back({"mh_exact_invariance", worst <= 1e-12, worst, 1e-12, "worst at " + where});
    }

    { // DPI: 100 random (pi, mu) pairs through MH kernels
        const StateSpace space(2, 4);
        const std::uint64_t S = state_count_checked(space);
        double worst_gap = -1e300;
        for (int trial = 0; trial < 100; ++trial) {
            const LikelihoodPotential f = table_potential(space, random_f_table(S, rng));
            const TokenSequence anchor = uniform_random_sequence(space, rng);
            const double eta = 0.05 + 2.0 * rng.next_double();
            const Eigen::MatrixXd T =
                mh_transition_matrix(space, mh_target_logpdf(anchor, f, eta, 2), {}, inject_bug);
            const Pmf pi = random_pmf(static_cast<int>(S), rng);
            const Pmf mu = random_pmf(static_cast<int>(S), rng);
            const auto [before, after] = verify_mh_dpi(pi, mu, T);
            worst_gap = std::max(worst_gap, after - before);
        }
        checks.push_back({"dpi_battery", worst_gap <= 1e-12, worst_gap, 1e-12,
                          "max KL increase over 100 trials"});
    }

    { // KL decay identity, matched generators: pure Fisher decay
        const Eigen::MatrixXd Q = random_rate_matrix(8, rng, 1.0);
        const Pmf pi0 = random_pmf(8, rng);
        const Pmf mu0 = random_pmf(8, rng);
        const double resid = verify_kl_decay_identity(Q, Q, pi0, mu0, {0.3, 0.6, 1.0}, 1e-4);
        checks.push_back({"kl_decay_matched", resid <= 1e-6, resid, 1e-6, "Q == Qtilde, dt = 1e-4"});
    }

    { // KL decay identity, second-order convergence under dt halving
        const Eigen::MatrixXd Q = random_rate_matrix(4, rng, 1.0);
        const Eigen::MatrixXd Qt = random_rate_matrix(4, rng, 1.0);
        const Pmf pi0 = random_pmf(4, rng);
        const Pmf mu0 = random_pmf(4, rng);
        const std::vector<double> grid{0.5};
        const double r_coarse = verify_kl_decay_identity(Q, Qt, pi0, mu0, grid, 2e-3);
        const double r_fine = verify_kl_decay_identity(Q, Qt, pi0, mu0, grid, 1e-3);
        const double ratio = r_coarse / r_fine;
        checks.push_back({"kl_decay_order", ratio >= 3.5 && ratio <= 4.5, ratio, 4.0,
                          "residual " + format_double(r_coarse) + " -> " + format_double(r_fine)});
    }

    { // exact-conditional sweep preserves the augmented distribution
        const StateSpace space(2, 3);
        const std::uint64_t S = state_count_checked(space);
        double worst = 0.0;
        for (double eta : {1.0, 0.1}) {
            const LikelihoodPotential f = table_potential(space, random_f_table(S, rng));
            const TabularPrior prior =
                TabularPrior::joint(space, random_pmf(static_cast<int>(S), rng).p);
            const Eigen::MatrixXd K = exact_sweep_kernel(prior, f, eta);
            const Pmf pi = augmented_joint(prior, f, eta);
            const Eigen::VectorXd pushed = K.transpose() * pi.p.matrix();
            worst = std::max(worst, (pushed.array() - pi.p).abs().maxCoeff());
        }
        checks.push_back({"sweep_stationarity", worst <= 1e-10, worst, 1e-10, "N=2 D=3 battery"});
    }

    { // x-marginal of the augmented distribution approaches the posterior as eta drops
        const StateSpace space(2, 3);
        const std::uint64_t S = state_count_checked(space);
        const LikelihoodPotential f = table_potential(space, random_f_table(S, rng));
        const TabularPrior prior = TabularPrior::joint(space, random_pmf(static_cast<int>(S), rng).p);
        const Pmf posterior = exact_posterior_enumerate(prior, f);
        const double tv1 = total_variation(augmented_x_marginal(prior, f, 1.0), posterior);
        const double tv2 = total_variation(augmented_x_marginal(prior, f, 0.1), posterior);
        const double tv3 = total_variation(augmented_x_marginal(prior, f, 0.01), posterior);
        const double tv_limit = total_variation(augmented_x_marginal(prior, f, 1e-4), posterior);
        const bool monotone = tv1 > tv2 && tv2 > tv3;
        checks.push_back({"annealed_limit_monotone", monotone, tv3,
                          tv2, "tv(1)=" + format_double(tv1) + " tv(0.1)=" + format_double(tv2) +
                                   " tv(0.01)=" + format_double(tv3)});
        checks.push_back({"annealed_limit_small_eta", tv_limit <= 1e-3, tv_limit, 1e-3,
                          "tv at eta = 1e-4"});
    }

    return checks;
}

} // namespace sgdd
