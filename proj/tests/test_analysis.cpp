#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sgdd/diffusion.hpp"
#include "sgdd/fisher.hpp"
#include "sgdd/metrics.hpp"
#include "sgdd/oracles.hpp"
#include "sgdd/rate_matrix.hpp"
#include "sgdd/task.hpp"
#include "test_support.hpp"

using namespace sgdd;
using test::seq;

namespace {

Pmf two(double a, double b) {
    Eigen::ArrayXd p(2);
    p << a, b;
    return Pmf(p);
}

} // namespace

TEST_CASE("distance metrics: worked values") {
    CHECK(hellinger(two(0.3, 0.7), two(0.3, 0.7)) == 0.0);
    CHECK(total_variation(two(0.3, 0.7), two(0.3, 0.7)) == 0.0);
    CHECK(hellinger(two(1.0, 0.0), two(0.0, 1.0)) == doctest::Approx(1.0));
    CHECK(total_variation(two(1.0, 0.0), two(0.0, 1.0)) == doctest::Approx(1.0));
    CHECK(hellinger(two(0.5, 0.5), two(1.0, 0.0)) == doctest::Approx(0.5411961).epsilon(1e-6));
    CHECK(total_variation(two(0.7, 0.3), two(0.5, 0.5)) == doctest::Approx(0.2).epsilon(1e-12));

    Eigen::ArrayXd p3 = Eigen::ArrayXd::Constant(3, 1.0 / 3.0);
    CHECK_THROWS_AS(hellinger(Pmf(p3), two(0.5, 0.5)), DimensionError);
}

TEST_CASE("metric inequality chain on random pairs") {
    RngStream rng(71, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Pmf p = test::random_pmf(6, rng, 0.0001);
        const Pmf q = test::random_pmf(6, rng, 0.0001);
        const double h = hellinger(p, q);
        const double tv = total_variation(p, q);
        CHECK(h * h <= tv + 1e-12);
        CHECK(tv <= h * std::sqrt(2.0) + 1e-12);
    }
}

TEST_CASE("KL divergence values and sentinel") {
    CHECK(kl_divergence(two(0.5, 0.5), two(0.5, 0.5)) == 0.0);
    CHECK(kl_divergence(two(1.0, 0.0), two(0.5, 0.5)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(kl_divergence(two(0.9, 0.1), two(0.5, 0.5)) == doctest::Approx(0.3680642).epsilon(1e-6));
    bool violated = false;
    CHECK(std::isinf(kl_divergence(two(0.5, 0.5), two(1.0, 0.0), &violated)));
    CHECK(violated);
}

TEST_CASE("binary PSNR values") {
    const TokenSequence ref(100, 0);
    CHECK(psnr_binary(ref, ref) == 99.0);
    TokenSequence one_off = ref;
    one_off[7] = 1;
    CHECK(psnr_binary(one_off, ref) == doctest::Approx(20.0).epsilon(1e-12));
    TokenSequence big(1024, 0);
    TokenSequence big_ref(1024, 0);
    for (int i = 0; i < 64; ++i) big[static_cast<std::size_t>(i * 16)] = 1;
    CHECK(psnr_binary(big, big_ref) == doctest::Approx(12.0411998).epsilon(1e-6));
}

TEST_CASE("relative Fisher information: oracle, nonnegativity, zero iff equal") {
    RngStream rng(72, 0);
    // independent double-sum oracle on 3 states
    for (int trial = 0; trial < 50; ++trial) {
        const Pmf mu = test::random_pmf(3, rng);
        const Pmf pi = test::random_pmf(3, rng);
        const Eigen::MatrixXd Q = random_rate_matrix(3, rng);
        double oracle = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                if (i == j) continue;
                const double fi = mu.p[i] / pi.p[i];
                const double fj = mu.p[j] / pi.p[j];
                oracle += pi.p[i] * Q(j, i) * (fj - fi - fi * std::log(fj / fi));
            }
        }
        CHECK(relative_fisher_information(mu, pi, Q) == doctest::Approx(oracle).epsilon(1e-12));
    }
    // nonnegativity on 1k random instances
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(5));
        const Pmf mu = test::random_pmf(n, rng);
        const Pmf pi = test::random_pmf(n, rng);
        CHECK(relative_fisher_information(mu, pi, random_rate_matrix(n, rng)) >= 0.0);
    }
    // zero iff equal (irreducible Q)
    const Pmf pi = test::random_pmf(4, rng);
    const Eigen::MatrixXd Q = random_rate_matrix(4, rng, 1.0);
    CHECK(relative_fisher_information(pi, pi, Q) <= 1e-12);
    Eigen::ArrayXd bumped = pi.p;
    bumped[0] += 0.01;
    bumped /= bumped.sum();
    CHECK(relative_fisher_information(Pmf(bumped), pi, Q) > 1e-8);
    // zero pi entry rejected
    Eigen::ArrayXd degenerate(3);
    degenerate << 0.5, 0.5, 0.0;
    CHECK_THROWS_AS(relative_fisher_information(test::random_pmf(3, rng), Pmf(degenerate), Q.topLeftCorner(3, 3)),
                    DomainError);
}

TEST_CASE("matrix exponential: generator gives a stochastic matrix") {
    RngStream rng(73, 0);
    const Eigen::MatrixXd Q = random_rate_matrix(6, rng, 2.0);
    const Eigen::MatrixXd P = matrix_exponential(Q);
    const Eigen::MatrixXd P_oracle = test::expm_series(Q);
    CHECK((P - P_oracle).cwiseAbs().maxCoeff() <= 1e-13);
    for (int j = 0; j < 6; ++j) CHECK(P.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((P.array() >= -1e-15).all());
    CHECK_THROWS_AS(matrix_exponential(Eigen::MatrixXd::Zero(65, 65)), BudgetError);

    CHECK(is_valid_rate_matrix(Q));
    Eigen::MatrixXd bad = Q;
    bad(0, 1) = -0.5;
    CHECK_FALSE(is_valid_rate_matrix(bad));
}

TEST_CASE("uniform and reverse generators are valid and consistent") {
    const StateSpace space(3, 2);
    const Eigen::MatrixXd Q = uniform_sequence_generator(space);
    CHECK(is_valid_rate_matrix(Q, 1e-12));
    // exp(sigma Q) applied to a tabular prior equals the closed-form noising
    RngStream rng(74, 0);
    const TabularPrior prior = TabularPrior::joint(space, test::random_pmf(9, rng).p);
    const double sigma = 0.9;
    const Eigen::ArrayXd via_expm = (matrix_exponential(sigma * Q) * prior.joint_probs().matrix()).array();
    const Eigen::ArrayXd closed = marginal_at_sigma(prior, sigma).joint_probs();
    CHECK((via_expm - closed).abs().maxCoeff() <= 1e-12);

    const Eigen::MatrixXd R = reverse_generator(prior, 0.5);
    CHECK(is_valid_rate_matrix(R, 1e-12));
    // reverse rates transport the marginal backwards: R p_sigma = -Q p_sigma
    const Pmf p_sigma = enumerate_prior(marginal_at_sigma(prior, 0.5));
    CHECK(((R + Q) * p_sigma.p.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("data processing inequality through MH kernels") {
    RngStream rng(75, 0);
    const StateSpace space(2, 4);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::ArrayXd f_table(16);
        for (Eigen::Index i = 0; i < 16; ++i) f_table[i] = 3.0 * rng.next_double();
        const auto logpdf = [&space, &f_table](const TokenSequence& z) {
            return -f_table[static_cast<Eigen::Index>(index_from_state(space, z))];
        };
        const Eigen::MatrixXd T = mh_transition_matrix(space, logpdf);
        const Pmf pi = test::random_pmf(16, rng);
        const Pmf mu = test::random_pmf(16, rng);
        const auto [before, after] = verify_mh_dpi(pi, mu, T);
        CHECK(after <= before + 1e-12);
    }
    // identity kernel keeps the divergence
    const Pmf pi = test::random_pmf(16, rng);
    const Pmf mu = test::random_pmf(16, rng);
    const auto [before, after] = verify_mh_dpi(pi, mu, Eigen::MatrixXd::Identity(16, 16));
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
    const auto [same_before, same_after] = verify_mh_dpi(pi, pi, Eigen::MatrixXd::Identity(16, 16));
    CHECK(same_before == 0.0);
    CHECK(same_after <= 1e-15);
    // invalid kernels rejected
    Eigen::MatrixXd broken = Eigen::MatrixXd::Identity(16, 16);
    broken(0, 0) = 0.9;
    CHECK_THROWS_AS(verify_mh_dpi(pi, mu, broken), DomainError);
}

TEST_CASE("KL decay identity: matched generators and finite-difference order") {
    RngStream rng(76, 0);
    const Eigen::MatrixXd Q = random_rate_matrix(8, rng);
    const Pmf pi0 = test::random_pmf(8, rng);
    const Pmf mu0 = test::random_pmf(8, rng);
    // matched generators: pure Fisher decay, residual only from the FD stencil
    CHECK(verify_kl_decay_identity(Q, Q, pi0, mu0, {0.3, 0.6, 1.0}, 1e-4) <= 1e-6);

    const Eigen::MatrixXd Q4 = random_rate_matrix(4, rng);
    const Eigen::MatrixXd Qt4 = random_rate_matrix(4, rng);
    const Pmf pi4 = test::random_pmf(4, rng);
    const Pmf mu4 = test::random_pmf(4, rng);
    const double coarse = verify_kl_decay_identity(Q4, Qt4, pi4, mu4, {0.5}, 2e-3);
    const double fine = verify_kl_decay_identity(Q4, Qt4, pi4, mu4, {0.5}, 1e-3);
    CHECK(coarse / fine >= 3.5);
    CHECK(coarse / fine <= 4.5);
}

TEST_CASE("KL starts at zero and grows only under mismatched generators") {
    RngStream rng(77, 0);
    const Eigen::MatrixXd Q = random_rate_matrix(4, rng);
    const Eigen::MatrixXd Qt = random_rate_matrix(4, rng);
    const Pmf p0 = test::random_pmf(4, rng);
    auto kl_at_t = [&](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double t) {
        const Eigen::ArrayXd a = (matrix_exponential(t * A) * p0.p.matrix()).array();
        const Eigen::ArrayXd b = (matrix_exponential(t * B) * p0.p.matrix()).array();
        return kl_divergence(normalized_pmf(a), normalized_pmf(b));
    };
    CHECK(kl_at_t(Q, Q, 0.7) <= 1e-14);
    CHECK(kl_at_t(Q, Qt, 0.7) > 1e-6);
}

TEST_CASE("exact posterior enumeration: flat and sharp limits") {
    RngStream rng(78, 0);
    const StateSpace space(3, 3);
    const TabularPrior prior = TabularPrior::joint(space, test::random_pmf(27, rng).p);
    const Pmf prior_table = enumerate_prior(prior);

    CHECK(total_variation(exact_posterior_enumerate(prior, LikelihoodPotential::flat()), prior_table) <= 1e-14);

    // zero-temperature sweep toward a point mass
    const TokenSequence target = seq({2, 0, 1});
    double prev_tv = 1.0;
    for (double sigma_y : {1.0, 0.1, 1e-2, 1e-4}) {
        LikelihoodPotential f;
        f.eval = [&target, sigma_y](const TokenSequence& z) {
            return static_cast<double>(hamming_distance(z, target)) / sigma_y;
        };
        Eigen::ArrayXd delta = Eigen::ArrayXd::Zero(27);
        delta[static_cast<Eigen::Index>(index_from_state(space, target))] = 1.0;
        const double tv = total_variation(exact_posterior_enumerate(prior, f), Pmf(delta));
        CHECK(tv <= prev_tv + 1e-15);
        prev_tv = tv;
    }
    CHECK(prev_tv <= 1e-6);

    CHECK_THROWS_AS(exact_posterior_enumerate(prior, LikelihoodPotential::flat(), 10), BudgetError);
}

TEST_CASE("XOR posterior concentrates on the parity-consistent coset") {
    const TaskInstance task = make_parity_task("xor", 16, 2.0, 3, 0.05);
    const LikelihoodPotential f = task.likelihood();
    const Pmf posterior = exact_posterior_enumerate(task.prior, f);

    // Independent oracle: union-find with parity over the constraint graph.
    std::vector<int> parent(16), rank_(16, 0), parity(16, 0);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::pair<int, int>(int)> find = [&](int v) -> std::pair<int, int> {
        if (parent[static_cast<std::size_t>(v)] == v) return {v, 0};
        auto [root, p] = find(parent[static_cast<std::size_t>(v)]);
        parent[static_cast<std::size_t>(v)] = root;
        parity[static_cast<std::size_t>(v)] ^= p;
        return {root, parity[static_cast<std::size_t>(v)]};
    };
    auto unite = [&](int a, int b, int rel) {
        auto [ra, pa] = find(a);
        auto [rb, pb] = find(b);
        if (ra == rb) return;
        parent[static_cast<std::size_t>(rb)] = ra;
        parity[static_cast<std::size_t>(rb)] = pa ^ pb ^ rel;
    };
    const auto& pairs = task.model->pairs;
    for (std::size_t p = 0; p < pairs.size(); ++p)
        unite(pairs[p].first, pairs[p].second, task.measurement.value.bits[p]);

    auto consistent = [&](std::uint64_t state) {
        TokenSequence x = state_from_index(task.space, state);
        for (int v = 0; v < 16; ++v) {
            auto [root, p] = find(v);
            if (((x[static_cast<std::size_t>(v)] ^ x[static_cast<std::size_t>(root)]) & 1) != p) return false;
        }
        return true;
    };

    double coset_mass = 0.0;
    int coset_size = 0;
    for (std::uint64_t s = 0; s < 65536; ++s) {
        if (consistent(s)) {
            coset_mass += posterior[static_cast<Eigen::Index>(s)];
            ++coset_size;
        }
    }
    // the ground truth satisfies its own measurement, so the coset is non-empty
    CHECK(consistent(index_from_state(task.space, task.x_true)));
    CHECK(coset_size >= 1);
    CHECK(coset_mass >= 1.0 - 1e-6);
    // within the coset the posterior is the renormalized prior
    const Pmf prior_table = enumerate_prior(task.prior);
    std::uint64_t first = 0;
    while (!consistent(first)) ++first;
    const double ratio0 = posterior[static_cast<Eigen::Index>(first)] / prior_table[static_cast<Eigen::Index>(first)];
    for (std::uint64_t s = first + 1; s < 65536; ++s) {
        if (!consistent(s)) continue;
        const double r = posterior[static_cast<Eigen::Index>(s)] / prior_table[static_cast<Eigen::Index>(s)];
        CHECK(r == doctest::Approx(ratio0).epsilon(1e-9));
    }
}

TEST_CASE("pair-marginal DP: reduction, toy agreement, lattice fallback") {
    // D = 2: DP is a direct two-dimensional enumeration
    {
        const TaskInstance task = make_synthetic_task(50, 2, 7);
        const Pmf dp = exact_posterior_marginal_dp(task.prior, task.model->value_map,
                                                   task.measurement.value.scalar, task.measurement.sigma_y);
        const Pmf pair =
            marginal_first_two(exact_posterior_enumerate(task.prior, task.likelihood()), task.space);
        CHECK((dp.p - pair.p).abs().maxCoeff() <= 1e-14);
    }
    // D = 3, N = 4 toy vs enumeration
    {
        const TaskInstance task = make_synthetic_task(4, 3, 5);
        const Pmf dp = exact_posterior_marginal_dp(task.prior, task.model->value_map,
                                                   task.measurement.value.scalar, task.measurement.sigma_y);
        const Pmf pair =
            marginal_first_two(exact_posterior_enumerate(task.prior, task.likelihood()), task.space);
        CHECK((dp.p - pair.p).abs().maxCoeff() <= 1e-12);
    }
    // D = 10, N = 50 reference cross-checked against enumeration at D = 4, 5
    for (int D : {4, 5}) {
        const TaskInstance task = make_synthetic_task(6, D, 7);
        const Pmf dp = exact_posterior_marginal_dp(task.prior, task.model->value_map,
                                                   task.measurement.value.scalar, task.measurement.sigma_y);
        const Pmf pair =
            marginal_first_two(exact_posterior_enumerate(task.prior, task.likelihood()), task.space);
        CHECK((dp.p - pair.p).abs().maxCoeff() <= 1e-12);
    }
    {
        const TaskInstance big = make_synthetic_task(50, 10, 7);
        CHECK_NOTHROW(exact_posterior_marginal_dp(big.prior, big.model->value_map,
                                                  big.measurement.value.scalar,
                                                  big.measurement.sigma_y));
    }
    // non-lattice values: fallback to enumeration where feasible, refusal beyond
    {
        const StateSpace space(3, 2);
        std::vector<Eigen::ArrayXd> m(2, Eigen::ArrayXd::Constant(3, 1.0 / 3.0));
        const TabularPrior prior = TabularPrior::factorized(space, m);
        Eigen::ArrayXd values(3);
        values << 0.0, 1.0, std::sqrt(2.0); // incommensurable
        const Pmf dp = exact_posterior_marginal_dp(prior, values, 1.3, 0.5);
        LikelihoodPotential f;
        f.eval = [&values](const TokenSequence& z) {
            double g = 0.0;
            for (Token t : z) g += values[t];
            return std::abs(g - 1.3) / 0.5;
        };
        const Pmf pair = marginal_first_two(exact_posterior_enumerate(prior, f), space);
        CHECK((dp.p - pair.p).abs().maxCoeff() <= 1e-14);

        std::vector<Eigen::ArrayXd> mb(30, Eigen::ArrayXd::Constant(3, 1.0 / 3.0));
        const TabularPrior big_prior = TabularPrior::factorized(StateSpace(3, 30), mb);
        CHECK_THROWS_AS(exact_posterior_marginal_dp(big_prior, values, 1.3, 0.5), BudgetError);
    }
}

TEST_CASE("augmented x-marginal approaches the posterior as eta vanishes") {
    RngStream rng(79, 0);
    const StateSpace space(2, 3);
    const TabularPrior prior = TabularPrior::joint(space, test::random_pmf(8, rng).p);
    Eigen::ArrayXd f_table(8);
    for (Eigen::Index i = 0; i < 8; ++i) f_table[i] = 2.0 * rng.next_double();
    LikelihoodPotential f;
    f.eval = [space, f_table](const TokenSequence& z) {
        return f_table[static_cast<Eigen::Index>(index_from_state(space, z))];
    };
    const Pmf posterior = exact_posterior_enumerate(prior, f);
    const double tv1 = total_variation(augmented_x_marginal(prior, f, 1.0), posterior);
    const double tv01 = total_variation(augmented_x_marginal(prior, f, 0.1), posterior);
    const double tv001 = total_variation(augmented_x_marginal(prior, f, 0.01), posterior);
    CHECK(tv1 > tv01);
    CHECK(tv01 > tv001);
    CHECK(total_variation(augmented_x_marginal(prior, f, 1e-4), posterior) <= 1e-3);
}

TEST_CASE("empirical pair marginal has no smoothing") {
    std::vector<TokenSequence> samples{seq({0, 1, 0}), seq({0, 1, 1}), seq({1, 1, 0}), seq({0, 1, 1})};
    const Pmf emp = empirical_first_two(samples, 2);
    CHECK(emp[pair_index(0, 1, 2)] == doctest::Approx(0.75));
    CHECK(emp[pair_index(1, 1, 2)] == doctest::Approx(0.25));
    CHECK(emp[pair_index(0, 0, 2)] == 0.0);
    CHECK(emp[pair_index(1, 0, 2)] == 0.0);
}
