#include <doctest.h>

#include <cmath>

#include "sgdd/diffusion.hpp"
#include "sgdd/metrics.hpp"
#include "sgdd/oracles.hpp"
#include "test_support.hpp"

using namespace sgdd;
using test::seq;

TEST_CASE("corruption level") {
    CHECK(beta_of_sigma(0.0, 2) == 0.0);
    CHECK(beta_of_sigma(0.0, 50) == 0.0);
    CHECK(beta_of_sigma(50.0, 2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(beta_of_sigma(std::log(2.0), 2) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(beta_of_sigma(-0.1, 2), DomainError);
}

TEST_CASE("heat kernel log pmf endpoints") {
    CHECK(heat_kernel_logpmf(seq({1, 2, 3}), seq({1, 2, 3}), 0.0, 5) == 0.0);
    // single binary token at stationarity
    CHECK(heat_kernel_logpmf(seq({0}), seq({0}), 60.0, 2) == doctest::Approx(std::log(0.5)).epsilon(1e-9));
    CHECK(heat_kernel_logpmf(seq({1}), seq({0}), 60.0, 2) == doctest::Approx(std::log(0.5)).epsilon(1e-9));
    CHECK(heat_kernel_logpmf(seq({1}), seq({0}), 0.0, 2) == -std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(heat_kernel_logpmf(seq({0}), seq({0}), -1.0, 2), DomainError);
    CHECK_THROWS_AS(heat_kernel_logpmf(seq({0, 1}), seq({0}), 1.0, 2), DimensionError);
}

TEST_CASE("heat kernel matches the one-dimensional matrix exponential") {
    // Oracle: truncated-series exponential of the 5x5 uniform generator,
    // applied independently per dimension.
    const int N = 5;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Constant(N, N, 1.0 / N);
    Q -= Eigen::MatrixXd::Identity(N, N);
    const double sigma = 0.7;
    const Eigen::MatrixXd P = test::expm_series(sigma * Q);

    const StateSpace space(N, 3);
    RngStream rng(11, 0);
    const TokenSequence x0 = uniform_random_sequence(space, rng);
    for (std::uint64_t i = 0; i < state_count_checked(space); ++i) {
        const TokenSequence xt = state_from_index(space, i);
        double expected = 1.0;
        for (int d = 0; d < 3; ++d) expected *= P(xt[static_cast<std::size_t>(d)], x0[static_cast<std::size_t>(d)]);
        CHECK(std::exp(heat_kernel_logpmf(xt, x0, sigma, N)) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("heat kernel normalizes over the state space") {
    const StateSpace space(3, 3);
    RngStream rng(4, 0);
    const TokenSequence x0 = uniform_random_sequence(space, rng);
    for (double sigma : {0.05, 0.7, 3.0}) {
        double total = 0.0;
        for (std::uint64_t i = 0; i < state_count_checked(space); ++i)
            total += std::exp(heat_kernel_logpmf(state_from_index(space, i), x0, sigma, 3));
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("noised marginals: endpoints and the worked example") {
    Eigen::ArrayXd q0(2);
    q0 << 0.9, 0.1;
    const TabularPrior prior = TabularPrior::factorized(StateSpace(2, 1), {q0});

    const TabularPrior same = marginal_at_sigma(prior, 0.0);
    CHECK(same.marginals()[0][0] == doctest::Approx(0.9).epsilon(1e-15));

    const TabularPrior half = marginal_at_sigma(prior, std::log(2.0));
    CHECK(half.marginals()[0][0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(half.marginals()[0][1] == doctest::Approx(0.3).epsilon(1e-12));

    const TabularPrior flat = marginal_at_sigma(prior, 50.0);
    CHECK(std::abs(flat.marginals()[0][0] - 0.5) + std::abs(flat.marginals()[0][1] - 0.5) < 1e-9);
}

TEST_CASE("joint noising equals the heat-kernel convolution") {
    const StateSpace space(3, 2);
    RngStream rng(21, 0);
    const TabularPrior prior = TabularPrior::joint(space, test::random_pmf(9, rng).p);
    const double sigma = 0.8;
    const TabularPrior noised = marginal_at_sigma(prior, sigma);
    for (std::uint64_t i = 0; i < 9; ++i) {
        const TokenSequence xt = state_from_index(space, i);
        double expected = 0.0;
        for (std::uint64_t j = 0; j < 9; ++j)
            expected += prior.joint_probs()[static_cast<Eigen::Index>(j)] *
                        std::exp(heat_kernel_logpmf(xt, state_from_index(space, j), sigma, 3));
        CHECK(noised.joint_probs()[static_cast<Eigen::Index>(i)] ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("noising composes along sigma") {
    RngStream rng(31, 0);
    const TabularPrior prior = TabularPrior::factorized(StateSpace(7, 1), {test::random_pmf(7, rng).p});
    for (double sigma1 : {0.2, 1.0}) {
        for (double sigma2 : {1.5, 4.0}) {
            const TabularPrior direct = marginal_at_sigma(prior, sigma2);
            const TabularPrior chained =
                marginal_at_sigma(marginal_at_sigma(prior, sigma1), sigma2 - sigma1);
            const double err = (direct.marginals()[0] - chained.marginals()[0]).abs().maxCoeff();
            CHECK(err <= 1e-12);
        }
    }
}

TEST_CASE("concrete scores: uniform prior gives unit ratios") {
    const StateSpace space(4, 3);
    const TabularScoreProvider provider(TabularPrior::uniform(space));
    RngStream rng(3, 0);
    Eigen::ArrayXXd ratios;
    provider.concrete_score(uniform_random_sequence(space, rng), 0.9, ratios);
    CHECK(((ratios - 1.0).abs() < 1e-14).all());
}

TEST_CASE("concrete scores: factorized clean-data ratio") {
    Eigen::ArrayXd q0(2);
    q0 << 0.9, 0.1;
    const TabularScoreProvider provider(TabularPrior::factorized(StateSpace(2, 1), {q0}));
    Eigen::ArrayXXd ratios;
    provider.concrete_score(seq({0}), 0.0, ratios);
    CHECK(ratios(1, 0) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
    CHECK(ratios(0, 0) == 1.0);
}

TEST_CASE("concrete scores: joint prior matches the exhaustive table") {
    const StateSpace space(3, 2);
    RngStream rng(77, 0);
    const TabularPrior prior = TabularPrior::joint(space, test::random_pmf(9, rng).p);
    const TabularScoreProvider provider(prior);
    const double sigma = 0.5;
    const Pmf table = enumerate_prior(marginal_at_sigma(prior, sigma));

    Eigen::ArrayXXd ratios;
    for (std::uint64_t i = 0; i < 9; ++i) {
        const TokenSequence x = state_from_index(space, i);
        provider.concrete_score(x, sigma, ratios);
        for (int d = 0; d < 2; ++d) {
            for (int v = 0; v < 3; ++v) {
                TokenSequence flipped = x;
                flipped[static_cast<std::size_t>(d)] = static_cast<Token>(v);
                const double expected = table[static_cast<Eigen::Index>(index_from_state(space, flipped))] /
                                        table[static_cast<Eigen::Index>(i)];
                CHECK(ratios(v, d) == doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("concrete scores: joint product prior agrees with factorized") {
    const StateSpace space(3, 2);
    RngStream rng(78, 0);
    const Eigen::ArrayXd qa = test::random_pmf(3, rng).p;
    const Eigen::ArrayXd qb = test::random_pmf(3, rng).p;
    Eigen::ArrayXd joint(9);
    for (std::uint64_t i = 0; i < 9; ++i) {
        const TokenSequence x = state_from_index(space, i);
        joint[static_cast<Eigen::Index>(i)] = qa[x[0]] * qb[x[1]];
    }
    const TabularScoreProvider fact(TabularPrior::factorized(space, {qa, qb}));
    const TabularScoreProvider jnt(TabularPrior::joint(space, joint));
    Eigen::ArrayXXd r1, r2;
    for (std::uint64_t i = 0; i < 9; ++i) {
        const TokenSequence x = state_from_index(space, i);
        for (double sigma : {0.05, 0.8, 5.0}) {
            fact.concrete_score(x, sigma, r1);
            jnt.concrete_score(x, sigma, r2);
            CHECK(((r1 - r2).abs() < 1e-12).all());
        }
    }
}

TEST_CASE("concrete scores: zero-mass joint state is degenerate at sigma 0") {
    const StateSpace space(2, 2);
    Eigen::ArrayXd joint(4);
    joint << 0.5, 0.5, 0.0, 0.0;
    const TabularScoreProvider provider(TabularPrior::joint(space, joint));
    Eigen::ArrayXXd ratios;
    CHECK_THROWS_AS(provider.concrete_score(seq({0, 1}), 0.0, ratios), DegenerateStateError);
    // any positive noise restores full support
    CHECK_NOTHROW(provider.concrete_score(seq({0, 1}), 0.01, ratios));
}

TEST_CASE("forward noising: identity at zero, kernel flip rate") {
    const StateSpace space(2, 1000);
    RngStream rng(9, 0);
    const TokenSequence x0 = uniform_random_sequence(space, rng);
    CHECK(forward_noise_sample(x0, 0.0, 2, rng) == x0);

    const TokenSequence noisy = forward_noise_sample(x0, std::log(2.0), 2, rng);
    const double flip_frac = hamming_distance(noisy, x0) / 1000.0;
    CHECK(flip_frac >= 0.22);
    CHECK(flip_frac <= 0.28);

    // stationary limit: per-position marginal uniform
    const TokenSequence y0(2000, 3);
    const TokenSequence far = forward_noise_sample(y0, 40.0, 5, rng);
    Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(5);
    for (Token t : far) counts[t] += 1.0;
    const double p = test::chi_square_pvalue(
        test::chi_square_stat(counts, Eigen::ArrayXd::Constant(5, 0.2)), 4);
    CHECK(p > 0.001);
}

TEST_CASE("reverse sampler: uniform prior stays uniform") {
    const StateSpace space(3, 2);
    const TabularScoreProvider provider(TabularPrior::uniform(space));
    RngStream rng(13, 0);
    Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(9);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const TokenSequence out =
            reverse_euler_sample(provider, uniform_random_sequence(space, rng), 20.0, 16, rng);
        counts[static_cast<Eigen::Index>(index_from_state(space, out))] += 1.0;
    }
    const double p = test::chi_square_pvalue(
        test::chi_square_stat(counts, Eigen::ArrayXd::Constant(9, 1.0 / 9.0)), 8);
    CHECK(p > 0.01);
}

TEST_CASE("reverse sampler: recovers a skewed binary marginal from stationarity") {
    Eigen::ArrayXd q0(2);
    q0 << 0.99, 0.01;
    const StateSpace space(2, 1);
    const TabularScoreProvider provider(TabularPrior::factorized(space, {q0}));
    RngStream rng(23, 0);
    const int n = 50000;
    int zeros = 0;
    for (int i = 0; i < n; ++i) {
        const TokenSequence out =
            reverse_euler_sample(provider, uniform_random_sequence(space, rng), 20.0, 20, rng);
        zeros += (out[0] == 0);
    }
    const double p0_hat = static_cast<double>(zeros) / n;
    CHECK(p0_hat >= 0.98);
    CHECK(p0_hat <= 1.0);
}

TEST_CASE("reverse sampler: discretization error shrinks with more steps") {
    const StateSpace space(3, 2);
    RngStream prior_rng(55, 0);
    const TabularPrior prior = TabularPrior::joint(space, test::random_pmf(9, prior_rng).p);
    const TabularScoreProvider provider(prior);
    const Pmf p0 = enumerate_prior(prior);

    const int n = 20000;
    std::vector<int> step_counts{1, 4, 16, 64, 256};
    std::vector<double> tv;
    RngStream rng(56, 0);
    for (int H : step_counts) {
        std::vector<TokenSequence> outs;
        outs.reserve(n);
        for (int i = 0; i < n; ++i)
            outs.push_back(reverse_euler_sample(provider, uniform_random_sequence(space, rng), 20.0, H, rng));
        tv.push_back(total_variation(empirical_pmf(outs, space), p0));
    }
    const double noise = std::sqrt(9.0 / n);
    for (std::size_t i = 1; i < tv.size(); ++i) CHECK(tv[i] <= tv[i - 1] + 2.0 * noise);
    CHECK(tv.back() < tv.front());
    // with exact scores and many steps the prior is recovered to sampling noise
    CHECK(tv.back() <= noise);
}

TEST_CASE("reverse sampler argument validation") {
    const StateSpace space(2, 2);
    const TabularScoreProvider provider(TabularPrior::uniform(space));
    RngStream rng(1, 0);
    CHECK_THROWS_AS(reverse_euler_sample(provider, seq({0, 0}), 0.0, 4, rng), DomainError);
    CHECK_THROWS_AS(reverse_euler_sample(provider, seq({0, 0}), 1.0, 0, rng), ConfigError);
    CHECK_THROWS_AS(reverse_euler_sample(provider, seq({0}), 1.0, 4, rng), DimensionError);
    // starting below the configured floor pulls the grid under sigma_start
    CHECK_NOTHROW(reverse_euler_sample(provider, seq({0, 0}), 1e-6, 4, rng));
}

TEST_CASE("sigma grids are monotone with exact endpoints") {
    const auto geo = sigma_grid(20.0, 1e-5, 10);
    CHECK(geo.front() == 20.0);
    CHECK(geo.back() == 1e-5);
    for (std::size_t i = 1; i < geo.size(); ++i) CHECK(geo[i] < geo[i - 1]);
    const auto lin = sigma_grid(2.0, 0.5, 5, ReverseEulerOptions::Grid::linear);
    CHECK(lin[1] == doctest::Approx(1.7).epsilon(1e-12));
}
