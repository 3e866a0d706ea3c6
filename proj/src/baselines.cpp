#include "sgdd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgdd {

namespace {

constexpr double kGuidanceLogClamp = 69.0; // e^69 ~ 1e30, same clamp window as score ratios

/// Mean of -f over quick rollouts (SVDD's value).
double value_estimate(const ConcreteScoreProvider& score, const LikelihoodPotential& f,
                      const TokenSequence& x, double sigma, const ValueEstimateConfig& vcfg,
                      RngStream& rng, const ReverseEulerOptions& euler) {
    double acc = 0.0;
    for (int i = 0; i < vcfg.mc_samples; ++i)
        acc += -f(reverse_euler_sample(score, x, sigma, vcfg.euler_steps_for_x0, rng, euler));
    return acc / static_cast<double>(vcfg.mc_samples);
}

/// log of the Monte Carlo estimate of p(y|x) = E[exp(-f(x0_hat))].
double log_likelihood_estimate(const ConcreteScoreProvider& score, const LikelihoodPotential& f,
                               const TokenSequence& x, double sigma, const ValueEstimateConfig& vcfg,
                               RngStream& rng, const ReverseEulerOptions& euler) {
    thread_local std::vector<double> terms;
    terms.resize(static_cast<std::size_t>(vcfg.mc_samples));
    double max_term = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < vcfg.mc_samples; ++i) {
        terms[static_cast<std::size_t>(i)] =
            -f(reverse_euler_sample(score, x, sigma, vcfg.euler_steps_for_x0, rng, euler));
        max_term = std::max(max_term, terms[static_cast<std::size_t>(i)]);
    }
    if (!std::isfinite(max_term)) return -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - max_term);
    return max_term + std::log(sum / static_cast<double>(vcfg.mc_samples));
}

double logsumexp(const Eigen::ArrayXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v - m).exp().sum());
}

std::vector<int> resample_indices(const Eigen::ArrayXd& weights, int M, RngStream& rng,
                                  SmcOptions::Resampling kind) {
    std::vector<int> idx(static_cast<std::size_t>(M));
    if (kind == SmcOptions::Resampling::systematic) {
        const double step = 1.0 / static_cast<double>(M);
        double u = rng.next_double() * step;
        double cum = weights[0];
        int i = 0;
        for (int m = 0; m < M; ++m) {
            while (u > cum && i + 1 < static_cast<int>(weights.size())) cum += weights[++i];
            idx[static_cast<std::size_t>(m)] = i;
            u += step;
        }
    } else {
        for (int m = 0; m < M; ++m) {
            double u = rng.next_double();
            int i = 0;
            while (u >= weights[i] && i + 1 < static_cast<int>(weights.size())) u -= weights[i++];
            idx[static_cast<std::size_t>(m)] = i;
        }
    }
    return idx;
}

} // namespace

TokenSequence run_svdd_pm(const ConcreteScoreProvider& score, const LikelihoodPotential& f, int M,
                          int steps, const ValueEstimateConfig& vcfg, RngStream& rng,
                          const SvddOptions& opts) {
    if (M < 1) throw ConfigError("run_svdd_pm: M must be >= 1");
    if (steps < 1) throw ConfigError("run_svdd_pm: steps must be >= 1");
    if (!(opts.selection_beta > 0.0)) throw ConfigError("run_svdd_pm: selection_beta must be > 0");
    vcfg.validate();
    const ReverseRunOptions& run = opts.run;
    const bool argmax = std::isinf(opts.selection_beta);
    const auto grid = sigma_grid(run.sigma_max, run.euler.sigma_floor, steps, run.euler.grid);

    TokenSequence x = uniform_random_sequence(score.space(), rng);
    Eigen::ArrayXXd ratios;
    std::vector<TokenSequence> candidates(static_cast<std::size_t>(M));
    Eigen::ArrayXd values(M);
    for (int h = 0; h < steps; ++h) {
        const double dsig = grid[static_cast<std::size_t>(h)] - grid[static_cast<std::size_t>(h) + 1];
        score.concrete_score(x, grid[static_cast<std::size_t>(h)], ratios);
        for (int m = 0; m < M; ++m) {
            TokenSequence& cand = candidates[static_cast<std::size_t>(m)];
            cand = x;
            euler_substep(ratios, cand, dsig, rng);
            values[m] = value_estimate(score, f, cand, grid[static_cast<std::size_t>(h) + 1], vcfg,
                                       rng, run.euler);
        }
        int pick = 0;
        if (argmax) {
            for (int m = 1; m < M; ++m)
                if (values[m] > values[pick]) pick = m;
        } else {
            const Eigen::ArrayXd w = (opts.selection_beta * (values - values.maxCoeff())).exp();
            double u = rng.next_double() * w.sum();
            for (int m = 0; m < M; ++m) {
                if (u < w[m]) {
                    pick = m;
                    break;
                }
                u -= w[m];
                pick = m;
            }
        }
        x = candidates[static_cast<std::size_t>(pick)];
    }
    return x;
}

ParticleSet run_smc(const ConcreteScoreProvider& score, const LikelihoodPotential& f, int M,
                    int steps, double temper_beta, RngStream& rng, const SmcOptions& opts) {
    if (M < 2) throw ConfigError("run_smc: M must be >= 2");
    if (steps < 1) throw ConfigError("run_smc: steps must be >= 1");
    if (temper_beta < 0.0) throw DomainError("run_smc: temper_beta must be >= 0");
    opts.value.validate();
    const auto grid = sigma_grid(opts.run.sigma_max, opts.run.euler.sigma_floor, steps, opts.run.euler.grid);

    ParticleSet set;
    set.particles.resize(static_cast<std::size_t>(M));
    Eigen::ArrayXd logw = Eigen::ArrayXd::Zero(M);
    Eigen::ArrayXd lp_old(M);
    for (int m = 0; m < M; ++m) {
        set.particles[static_cast<std::size_t>(m)] = uniform_random_sequence(score.space(), rng);
        lp_old[m] = log_likelihood_estimate(score, f, set.particles[static_cast<std::size_t>(m)],
                                            grid[0], opts.value, rng, opts.run.euler);
    }

    Eigen::ArrayXXd ratios;
    Eigen::ArrayXd weights(M);
    for (int h = 0; h < steps; ++h) {
        const double sigma_next = grid[static_cast<std::size_t>(h) + 1];
        const double dsig = grid[static_cast<std::size_t>(h)] - sigma_next;
        for (int m = 0; m < M; ++m) {
            TokenSequence& p = set.particles[static_cast<std::size_t>(m)];
            score.concrete_score(p, grid[static_cast<std::size_t>(h)], ratios);
            euler_substep(ratios, p, dsig, rng);
            const double lp_new =
                log_likelihood_estimate(score, f, p, sigma_next, opts.value, rng, opts.run.euler);
            logw[m] += temper_beta * (lp_new - lp_old[m]);
            lp_old[m] = lp_new;
        }

        const double lse = logsumexp(logw);
        if (!std::isfinite(lse)) {
            set.degeneracy = true;
            logw.setZero();
            weights.setConstant(1.0 / static_cast<double>(M));
        } else {
            weights = (logw - lse).exp();
            weights /= weights.sum();
        }
        const double ess = 1.0 / weights.square().sum();
        if (ess < opts.ess_threshold_frac * static_cast<double>(M)) {
            const auto idx = resample_indices(weights, M, rng, opts.resampling);
            std::vector<TokenSequence> next(static_cast<std::size_t>(M));
            Eigen::ArrayXd lp_next(M);
            for (int m = 0; m < M; ++m) {
                next[static_cast<std::size_t>(m)] = set.particles[static_cast<std::size_t>(idx[static_cast<std::size_t>(m)])];
                lp_next[m] = lp_old[idx[static_cast<std::size_t>(m)]];
            }
            set.particles.swap(next);
            lp_old = lp_next;
            logw.setZero();
            ++set.resample_count;
        }
    }

    const double lse = logsumexp(logw);
    if (!std::isfinite(lse)) {
        set.degeneracy = true;
        set.weights = Eigen::ArrayXd::Constant(M, 1.0 / static_cast<double>(M));
    } else {
        set.weights = (logw - lse).exp();
        set.weights /= set.weights.sum();
    }
    return set;
}

TokenSequence draw_particle(const ParticleSet& set, RngStream& rng) {
    if (set.particles.empty()) throw DimensionError("draw_particle: empty particle set");
    double u = rng.next_double();
    for (std::size_t m = 0; m < set.particles.size(); ++m) {
        const double w = set.weights[static_cast<Eigen::Index>(m)];
        if (u < w) return set.particles[m];
        u -= w;
    }
    return set.particles.back();
}

TokenSequence run_discrete_dps(const ConcreteScoreProvider& score, const LikelihoodPotential& f,
                               int steps, const ValueEstimateConfig& vcfg, RngStream& rng,
                               const ReverseRunOptions& opts) {
    if (steps < 1) throw ConfigError("run_discrete_dps: steps must be >= 1");
    vcfg.validate();
    const StateSpace& sp = score.space();
    if (static_cast<long>(sp.vocab_size) * sp.seq_len > 4096)
        throw BudgetError("run_discrete_dps: N*D exceeds the 4096 neighbor-evaluation budget");
    const auto grid = sigma_grid(opts.sigma_max, opts.euler.sigma_floor, steps, opts.euler.grid);

    TokenSequence x = uniform_random_sequence(sp, rng);
    Eigen::ArrayXXd ratios;
    TokenSequence neighbor;
    for (int h = 0; h < steps; ++h) {
        const double sigma = grid[static_cast<std::size_t>(h)];
        const double dsig = sigma - grid[static_cast<std::size_t>(h) + 1];
        score.concrete_score(x, sigma, ratios);
        const double lp_cur = log_likelihood_estimate(score, f, x, sigma, vcfg, rng, opts.euler);
        for (int d = 0; d < sp.seq_len; ++d) {
            neighbor = x;
            for (int v = 0; v < sp.vocab_size; ++v) {
                if (v == x[static_cast<std::size_t>(d)]) continue;
                neighbor[static_cast<std::size_t>(d)] = static_cast<Token>(v);
                const double lp_n =
                    log_likelihood_estimate(score, f, neighbor, sigma, vcfg, rng, opts.euler);
                const double tilt = std::clamp(lp_n - lp_cur, -kGuidanceLogClamp, kGuidanceLogClamp);
                ratios(v, d) *= std::exp(tilt);
            }
            neighbor[static_cast<std::size_t>(d)] = x[static_cast<std::size_t>(d)];
        }
        euler_substep(ratios, x, dsig, rng);
    }
    return x;
}

TokenSequence run_mcmc_no_prior(const LikelihoodPotential& f, const StateSpace& space, int sweeps,
                                RngStream& rng) {
    if (sweeps < 1) throw ConfigError("run_mcmc_no_prior: sweeps must be >= 1");
    TokenSequence z = uniform_random_sequence(space, rng);
    double f_cur = f(z);
    if (!std::isfinite(f_cur)) throw NumericError("run_mcmc_no_prior: f not finite at start");
    const long total = static_cast<long>(sweeps) * space.seq_len;
    for (long step = 0; step < total; ++step) {
        const int p = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(space.seq_len)));
        const Token cur = z[static_cast<std::size_t>(p)];
        Token v = static_cast<Token>(rng.next_below(static_cast<std::uint32_t>(space.vocab_size - 1)));
        if (v >= cur) ++v;
        z[static_cast<std::size_t>(p)] = v;
        const double f_new = f(z);
        bool accept = false;
        if (std::isfinite(f_new)) {
            const double log_alpha = -(f_new - f_cur);
            accept = log_alpha >= 0.0 || std::log(rng.next_double()) < log_alpha;
        }
        if (accept)
            f_cur = f_new;
        else
            z[static_cast<std::size_t>(p)] = cur;
    }
    return z;
}

} // namespace sgdd
