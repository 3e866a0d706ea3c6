#include "sgdd/split_gibbs.hpp"

#include <cmath>

namespace sgdd {

void GibbsConfig::validate() const {
    if (iterations < 1) throw ConfigError("GibbsConfig: iterations must be >= 1");
    if (mh_sweeps < 1) throw ConfigError("GibbsConfig: mh_sweeps must be >= 1");
    if (euler_steps < 1) throw ConfigError("GibbsConfig: euler_steps must be >= 1");
    if (annealing.iterations() != iterations)
        throw ConfigError("GibbsConfig: annealing length != iterations");
}

std::function<double(const TokenSequence&)>
mh_target_logpdf(TokenSequence x_anchor, const LikelihoodPotential& f, double eta, int N) {
    const double c = normalized_coupling(eta, N);
    return [anchor = std::move(x_anchor), &f, c](const TokenSequence& z) {
        return -f(z) - c * static_cast<double>(hamming_distance(anchor, z));
    };
}

namespace {

struct KernelProposal {
    // Replacement-token weights relative to the anchor token: w(anchor)=1,
    // w(other)=e^-c. Bounded both ways: e^-c <= N-1 for any eta.
    double wrong_weight;

    double norm(Token current, Token anchor, int N) const {
        return current == anchor ? static_cast<double>(N - 1) * wrong_weight
                                 : 1.0 + static_cast<double>(N - 2) * wrong_weight;
    }

    Token sample(Token current, Token anchor, int N, RngStream& rng) const {
        double u = rng.next_double() * norm(current, anchor, N);
        for (int v = 0; v < N; ++v) {
            if (v == current) continue;
            const double w = (static_cast<Token>(v) == anchor) ? 1.0 : wrong_weight;
            if (u < w) return static_cast<Token>(v);
            u -= w;
        }
        return anchor == current ? static_cast<Token>((current + 1) % N) : anchor; // fp slack
    }

    double log_weight(Token v, Token anchor) const {
        return v == anchor ? 0.0 : std::log(wrong_weight);
    }
};

} // namespace

std::pair<TokenSequence, double>
likelihood_step(const TokenSequence& x_k, const LikelihoodPotential& f, double eta, int mh_sweeps,
                int vocab_size, RngStream& rng, MhProposal proposal) {
    if (mh_sweeps < 1) throw ConfigError("likelihood_step: mh_sweeps must be >= 1");
    const int N = vocab_size;
    const int D = static_cast<int>(x_k.size());
    const double c = normalized_coupling(eta, N);
    const KernelProposal kernel{std::exp(-c)};

    TokenSequence z = x_k;
    double f_cur = f(z);
    if (!std::isfinite(f_cur)) throw NumericError("likelihood_step: f not finite at the initial state");
    int d_cur = 0;

    const long total_proposals = static_cast<long>(mh_sweeps) * D;
    long accepted = 0;
    for (long step = 0; step < total_proposals; ++step) {
        const int p = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(D)));
        const Token cur = z[static_cast<std::size_t>(p)];
        const Token anchor = x_k[static_cast<std::size_t>(p)];

        Token v;
        double log_hastings = 0.0;
        if (proposal == MhProposal::single_site_uniform) {
            v = static_cast<Token>(rng.next_below(static_cast<std::uint32_t>(N - 1)));
            if (v >= cur) ++v;
        } else {
            v = kernel.sample(cur, anchor, N, rng);
            log_hastings = kernel.log_weight(cur, anchor) - std::log(kernel.norm(v, anchor, N)) -
                           kernel.log_weight(v, anchor) + std::log(kernel.norm(cur, anchor, N));
        }

        const int d_new = d_cur - (cur != anchor) + (v != anchor);
        z[static_cast<std::size_t>(p)] = v;
        const double f_new = f(z);
        bool accept = false;
        if (std::isfinite(f_new)) {
            const double log_alpha =
                -(f_new - f_cur) - c * static_cast<double>(d_new - d_cur) + log_hastings;
            accept = log_alpha >= 0.0 || std::log(rng.next_double()) < log_alpha;
        }
        if (accept) {
            f_cur = f_new;
            d_cur = d_new;
            ++accepted;
        } else {
            z[static_cast<std::size_t>(p)] = cur;
        }
    }
    return {std::move(z), static_cast<double>(accepted) / static_cast<double>(total_proposals)};
}

TokenSequence prior_step(const ConcreteScoreProvider& score, const TokenSequence& z_k, double eta,
                         int euler_steps, RngStream& rng, const ReverseEulerOptions& opts) {
    return reverse_euler_sample(score, z_k, eta, euler_steps, rng, opts);
}

SgddResult run_sgdd(const ConcreteScoreProvider& score, const LikelihoodPotential& f,
                    const GibbsConfig& cfg, RngStream& rng) {
    cfg.validate();
    const StateSpace& sp = score.space();
    TokenSequence x = uniform_random_sequence(sp, rng);
    GibbsTrace trace;
    trace.reserve(static_cast<std::size_t>(cfg.iterations));
    for (int k = 0; k < cfg.iterations; ++k) {
        const double eta = cfg.annealing.eta[static_cast<std::size_t>(k)];
        auto [z, accept_rate] =
            likelihood_step(x, f, eta, cfg.mh_sweeps, sp.vocab_size, rng, cfg.proposal);
        trace.push_back({k, eta, x, z, f(z), accept_rate});
        x = prior_step(score, z, eta, cfg.euler_steps, rng, cfg.euler);
    }
    return {std::move(x), std::move(trace)};
}

} // namespace sgdd
