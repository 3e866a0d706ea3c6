#include "sgdd/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "sgdd/potential.hpp"

namespace sgdd {

Pmf enumerate_prior(const TabularPrior& prior, std::uint64_t budget) {
    const StateSpace& sp = prior.space();
    const std::uint64_t S = state_count_checked(sp, budget);
    if (prior.form() == TabularPrior::Form::joint) return Pmf(prior.joint_probs());
    Eigen::ArrayXd p(static_cast<Eigen::Index>(S));
    for (std::uint64_t i = 0; i < S; ++i) {
        const TokenSequence x = state_from_index(sp, i);
        double prod = 1.0;
        for (int d = 0; d < sp.seq_len; ++d)
            prod *= prior.marginals()[static_cast<std::size_t>(d)][x[static_cast<std::size_t>(d)]];
        p[static_cast<Eigen::Index>(i)] = prod;
    }
    return Pmf(std::move(p));
}

Pmf pmf_from_logpdf(const StateSpace& space, const std::function<double(const TokenSequence&)>& logpdf,
                    std::uint64_t budget) {
    const std::uint64_t S = state_count_checked(space, budget);
    Eigen::ArrayXd lw(static_cast<Eigen::Index>(S));
    for (std::uint64_t i = 0; i < S; ++i)
        lw[static_cast<Eigen::Index>(i)] = logpdf(state_from_index(space, i));
    return pmf_from_log_weights(lw);
}

Pmf exact_posterior_enumerate(const TabularPrior& prior, const LikelihoodPotential& f,
                              std::uint64_t budget) {
    return pmf_from_logpdf(prior.space(),
                           [&](const TokenSequence& x) { return prior.log_prob(x) - f(x); }, budget);
}

Pmf marginal_first_two(const Pmf& joint, const StateSpace& space) {
    const int N = space.vocab_size;
    if (space.seq_len < 2) throw DimensionError("marginal_first_two: need D >= 2");
    Eigen::ArrayXd m = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(N) * N);
    const std::uint64_t S = static_cast<std::uint64_t>(joint.size());
    for (std::uint64_t i = 0; i < S; ++i) {
        const Token x0 = static_cast<Token>(i % static_cast<std::uint64_t>(N));
        const Token x1 = static_cast<Token>((i / static_cast<std::uint64_t>(N)) % static_cast<std::uint64_t>(N));
        m[pair_index(x0, x1, N)] += joint[static_cast<Eigen::Index>(i)];
    }
    return Pmf(std::move(m));
}

Pmf empirical_first_two(const std::vector<TokenSequence>& samples, int N) {
    if (samples.empty()) throw DimensionError("empirical_first_two: no samples");
    Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(N) * N);
    for (const auto& x : samples) {
        if (x.size() < 2) throw DimensionError("empirical_first_two: need D >= 2");
        counts[pair_index(x[0], x[1], N)] += 1.0;
    }
    return Pmf(counts / static_cast<double>(samples.size()));
}

Pmf empirical_pmf(const std::vector<TokenSequence>& samples, const StateSpace& space,
                  std::uint64_t budget) {
    if (samples.empty()) throw DimensionError("empirical_pmf: no samples");
    const std::uint64_t S = state_count_checked(space, budget);
    Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(S));
    for (const auto& x : samples) counts[static_cast<Eigen::Index>(index_from_state(space, x))] += 1.0;
    return Pmf(counts / static_cast<double>(samples.size()));
}

namespace {

// Approximate GCD of nonnegative reals; returns 0 when no common lattice is
// found above tol.
double float_gcd(double a, double b, double tol) {
    a = std::abs(a);
    b = std::abs(b);
    if (a < b) std::swap(a, b);
    while (b > tol) {
        double r = std::fmod(a, b);
        if (r > b - tol) r = 0.0;
        a = b;
        b = r;
    }
    return a;
}

} // namespace

Pmf exact_posterior_marginal_dp(const TabularPrior& prior, const Eigen::ArrayXd& value_map,
                                double y, double sigma_y, std::uint64_t budget) {
    if (prior.form() != TabularPrior::Form::factorized)
        throw DomainError("exact_posterior_marginal_dp: factorized prior required");
    const StateSpace& sp = prior.space();
    if (value_map.size() != sp.vocab_size)
        throw DimensionError("exact_posterior_marginal_dp: value_map size != N");
    if (!(sigma_y > 0.0)) throw DomainError("exact_posterior_marginal_dp: sigma_y must be > 0");
    if (sp.seq_len < 2) throw DimensionError("exact_posterior_marginal_dp: need D >= 2");

    const Eigen::ArrayXd vabs = value_map.abs();
    const double vmax = vabs.maxCoeff();
    const double tol = 1e-9 * std::max(1.0, vmax);
    double delta = 0.0;
    for (Eigen::Index i = 0; i < vabs.size(); ++i)
        if (vabs[i] > tol) delta = float_gcd(delta, vabs[i], tol);

    // A lattice below 1e-6 of the value scale is numerical noise from the
    // gcd of incommensurable values, not a real grid.
    bool lattice_ok = delta > 1e-6 * std::max(1.0, vmax);
    std::vector<long> units(static_cast<std::size_t>(sp.vocab_size), 0);
    if (lattice_ok) {
        for (Eigen::Index i = 0; i < vabs.size(); ++i) {
            const long n = std::lround(vabs[i] / delta);
            if (std::abs(vabs[i] - static_cast<double>(n) * delta) > tol) {
                lattice_ok = false;
                break;
            }
            units[static_cast<std::size_t>(i)] = n;
        }
    }
    if (!lattice_ok) {
        // Enumeration fallback keeps the contract on small spaces; refuses beyond it.
        LikelihoodPotential f;
        f.sigma_y = sigma_y;
        f.eval = [vabs, y, sigma_y](const TokenSequence& z) {
            double g = 0.0;
            for (Token t : z) g += vabs[t];
            return std::abs(g - y) / sigma_y;
        };
        return marginal_first_two(exact_posterior_enumerate(prior, f, budget), sp);
    }

    // Distribution of the unit-valued sum over dims 2..D-1.
    const long max_unit = *std::max_element(units.begin(), units.end());
    std::vector<double> conv{1.0};
    for (int d = 2; d < sp.seq_len; ++d) {
        std::vector<double> next(conv.size() + static_cast<std::size_t>(max_unit), 0.0);
        const auto& q = prior.marginals()[static_cast<std::size_t>(d)];
        for (std::size_t s = 0; s < conv.size(); ++s) {
            if (conv[s] == 0.0) continue;
            for (int t = 0; t < sp.vocab_size; ++t)
                next[s + static_cast<std::size_t>(units[static_cast<std::size_t>(t)])] += conv[s] * q[t];
        }
        conv.swap(next);
    }

    const auto& q0 = prior.marginals()[0];
    const auto& q1 = prior.marginals()[1];
    const int N = sp.vocab_size;
    Eigen::ArrayXd w(static_cast<Eigen::Index>(N) * N);
    for (int a = 0; a < N; ++a) {
        for (int b = 0; b < N; ++b) {
            const long pair_units = units[static_cast<std::size_t>(a)] + units[static_cast<std::size_t>(b)];
            double lik = 0.0;
            for (std::size_t s = 0; s < conv.size(); ++s) {
                if (conv[s] == 0.0) continue;
                const double g = static_cast<double>(pair_units + static_cast<long>(s)) * delta;
                lik += conv[s] * std::exp(-std::abs(g - y) / sigma_y);
            }
            w[pair_index(static_cast<Token>(a), static_cast<Token>(b), N)] = q0[a] * q1[b] * lik;
        }
    }
    return normalized_pmf(w);
}

Eigen::MatrixXd mh_transition_matrix(const StateSpace& space,
                                     const std::function<double(const TokenSequence&)>& logpdf,
                                     const SiteProposalProb& proposal, bool invert_acceptance,
                                     std::uint64_t budget) {
    const std::uint64_t S = state_count_checked(space, budget);
    const int N = space.vocab_size;
    const int D = space.seq_len;
    Eigen::ArrayXd lp(static_cast<Eigen::Index>(S));
    for (std::uint64_t i = 0; i < S; ++i) lp[static_cast<Eigen::Index>(i)] = logpdf(state_from_index(space, i));

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    const double site_prob = 1.0 / static_cast<double>(D);
    const double uniform_q = 1.0 / static_cast<double>(N - 1);
    for (std::uint64_t i = 0; i < S; ++i) {
        TokenSequence x = state_from_index(space, i);
        double stay = 1.0;
        std::uint64_t stride = 1;
        for (int d = 0; d < D; ++d) {
            const Token cur = x[static_cast<std::size_t>(d)];
            for (int v = 0; v < N; ++v) {
                if (v == static_cast<int>(cur)) continue;
                const std::uint64_t j =
                    i - static_cast<std::uint64_t>(cur) * stride + static_cast<std::uint64_t>(v) * stride;
                const double q_fwd = proposal ? proposal(x, d, static_cast<Token>(v)) : uniform_q;
                double q_bwd = uniform_q;
                if (proposal) {
                    TokenSequence xj = x;
                    xj[static_cast<std::size_t>(d)] = static_cast<Token>(v);
                    q_bwd = proposal(xj, d, cur);
                }
                double log_alpha = lp[static_cast<Eigen::Index>(j)] - lp[static_cast<Eigen::Index>(i)] +
                                   std::log(q_bwd) - std::log(q_fwd);
                if (invert_acceptance) log_alpha = -log_alpha;
                const double alpha = std::min(1.0, std::exp(log_alpha));
                const double prob = site_prob * q_fwd * alpha;
                T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = prob;
                stay -= prob;
            }
            stride *= static_cast<std::uint64_t>(N);
        }
        T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = stay;
    }
    return T;
}

SiteProposalProb kernel_site_proposal(TokenSequence anchor, double eta, int N) {
    const double wrong = std::exp(-normalized_coupling(eta, N));
    return [anchor = std::move(anchor), wrong, N](const TokenSequence& from, int pos, Token to) {
        const Token cur = from[static_cast<std::size_t>(pos)];
        const Token a = anchor[static_cast<std::size_t>(pos)];
        if (to == cur) return 0.0;
        const double norm = (cur == a) ? static_cast<double>(N - 1) * wrong
                                       : 1.0 + static_cast<double>(N - 2) * wrong;
        return ((to == a) ? 1.0 : wrong) / norm;
    };
}

namespace {

Eigen::ArrayXd augmented_log_weights(const TabularPrior& prior, const LikelihoodPotential& f,
                                     double eta, std::uint64_t budget, std::uint64_t& S_out) {
    const StateSpace& sp = prior.space();
    const std::uint64_t S = state_count_checked(sp, budget);
    if (S > budget / S) throw BudgetError("augmented space S^2 exceeds budget");
    S_out = S;
    const double c = normalized_coupling(eta, sp.vocab_size);
    std::vector<TokenSequence> states(static_cast<std::size_t>(S));
    Eigen::ArrayXd logp0(static_cast<Eigen::Index>(S)), negf(static_cast<Eigen::Index>(S));
    for (std::uint64_t i = 0; i < S; ++i) {
        states[static_cast<std::size_t>(i)] = state_from_index(sp, i);
        logp0[static_cast<Eigen::Index>(i)] = prior.log_prob(states[static_cast<std::size_t>(i)]);
        negf[static_cast<Eigen::Index>(i)] = -f(states[static_cast<std::size_t>(i)]);
    }
    Eigen::ArrayXd lw(static_cast<Eigen::Index>(S * S));
    for (std::uint64_t ix = 0; ix < S; ++ix)
        for (std::uint64_t iz = 0; iz < S; ++iz)
            lw[static_cast<Eigen::Index>(ix * S + iz)] =
                logp0[static_cast<Eigen::Index>(ix)] + negf[static_cast<Eigen::Index>(iz)] -
                c * hamming_distance(states[static_cast<std::size_t>(ix)], states[static_cast<std::size_t>(iz)]);
    return lw;
}

} // namespace

Pmf augmented_joint(const TabularPrior& prior, const LikelihoodPotential& f, double eta,
                    std::uint64_t budget) {
    std::uint64_t S = 0;
    return pmf_from_log_weights(augmented_log_weights(prior, f, eta, budget, S));
}

Pmf augmented_x_marginal(const TabularPrior& prior, const LikelihoodPotential& f, double eta,
                         std::uint64_t budget) {
    std::uint64_t S = 0;
    const Pmf joint = pmf_from_log_weights(augmented_log_weights(prior, f, eta, budget, S));
    Eigen::ArrayXd m = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(S));
    for (std::uint64_t ix = 0; ix < S; ++ix)
        for (std::uint64_t iz = 0; iz < S; ++iz)
            m[static_cast<Eigen::Index>(ix)] += joint[static_cast<Eigen::Index>(ix * S + iz)];
    return Pmf(std::move(m));
}

Eigen::MatrixXd exact_sweep_kernel(const TabularPrior& prior, const LikelihoodPotential& f,
                                   double eta, std::uint64_t budget) {
    const StateSpace& sp = prior.space();
    const std::uint64_t S = state_count_checked(sp, budget);
    if (S > budget / S) throw BudgetError("augmented space S^2 exceeds budget");
    const double c = normalized_coupling(eta, sp.vocab_size);
    std::vector<TokenSequence> states(static_cast<std::size_t>(S));
    for (std::uint64_t i = 0; i < S; ++i) states[static_cast<std::size_t>(i)] = state_from_index(sp, i);

    Eigen::MatrixXd hamming_mat(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    for (std::uint64_t a = 0; a < S; ++a)
        for (std::uint64_t b = 0; b < S; ++b)
            hamming_mat(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                hamming_distance(states[static_cast<std::size_t>(a)], states[static_cast<std::size_t>(b)]);

    // cond_z(x, z') ∝ exp(-f(z') - c d(x,z'));  cond_x(z, x') ∝ p0(x') exp(-c d(x',z))
    Eigen::MatrixXd cond_z(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    Eigen::MatrixXd cond_x(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    for (std::uint64_t i = 0; i < S; ++i) {
        Eigen::ArrayXd lw_z(static_cast<Eigen::Index>(S)), lw_x(static_cast<Eigen::Index>(S));
        for (std::uint64_t j = 0; j < S; ++j) {
            const double d = hamming_mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            lw_z[static_cast<Eigen::Index>(j)] = -f(states[static_cast<std::size_t>(j)]) - c * d;
            lw_x[static_cast<Eigen::Index>(j)] = prior.log_prob(states[static_cast<std::size_t>(j)]) - c * d;
        }
        cond_z.row(static_cast<Eigen::Index>(i)) = pmf_from_log_weights(lw_z).p.matrix().transpose();
        cond_x.row(static_cast<Eigen::Index>(i)) = pmf_from_log_weights(lw_x).p.matrix().transpose();
    }

    // Augmented index a = ix * S + iz. Step 1: (x,z) -> (x,z') with prob cond_z(x,z').
    // Step 2: (x,z') -> (x',z') with prob cond_x(z',x').
    const Eigen::Index A = static_cast<Eigen::Index>(S * S);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(A, A);
    for (std::uint64_t ix = 0; ix < S; ++ix)
        for (std::uint64_t iz = 0; iz < S; ++iz) {
            const Eigen::Index from = static_cast<Eigen::Index>(ix * S + iz);
            for (std::uint64_t jz = 0; jz < S; ++jz) {
                const double pz = cond_z(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(jz));
                if (pz == 0.0) continue;
                for (std::uint64_t jx = 0; jx < S; ++jx) {
                    const double px = cond_x(static_cast<Eigen::Index>(jz), static_cast<Eigen::Index>(jx));
                    if (px == 0.0) continue;
                    K(from, static_cast<Eigen::Index>(jx * S + jz)) += pz * px;
                }
            }
        }
    return K;
}

} // namespace sgdd
