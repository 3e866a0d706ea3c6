#include "sgdd/diffusion.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>

namespace sgdd {

namespace {

std::uint64_t sigma_key(double sigma) {
    std::uint64_t k;
    static_assert(sizeof(k) == sizeof(sigma));
    std::memcpy(&k, &sigma, sizeof(k));
    return k;
}

double clamp_ratio(double r) {
    if (!std::isfinite(r)) throw NumericError("concrete score ratio is not finite");
    return std::clamp(r, kRatioClampLo, kRatioClampHi);
}

/// Apply e^-sigma * I + (1 - e^-sigma)/N * 11^T along every axis of a joint table.
Eigen::ArrayXd noise_joint_table(const Eigen::ArrayXd& p0, const StateSpace& space, double sigma) {
    const double keep = std::exp(-sigma);
    const double mix = -std::expm1(-sigma) / static_cast<double>(space.vocab_size);
    Eigen::ArrayXd p = p0;
    const std::uint64_t S = static_cast<std::uint64_t>(p.size());
    const std::uint64_t N = static_cast<std::uint64_t>(space.vocab_size);
    std::uint64_t stride = 1;
    Eigen::ArrayXd sums(static_cast<Eigen::Index>(S / N));
    for (int d = 0; d < space.seq_len; ++d) {
        sums.setZero();
        // Group index: collapse digit d out of the mixed-radix index.
        for (std::uint64_t i = 0; i < S; ++i) {
            const std::uint64_t group = (i / (stride * N)) * stride + (i % stride);
            sums[static_cast<Eigen::Index>(group)] += p[static_cast<Eigen::Index>(i)];
        }
        for (std::uint64_t i = 0; i < S; ++i) {
            const std::uint64_t group = (i / (stride * N)) * stride + (i % stride);
            p[static_cast<Eigen::Index>(i)] =
                keep * p[static_cast<Eigen::Index>(i)] + mix * sums[static_cast<Eigen::Index>(group)];
        }
        stride *= N;
    }
    return p;
}

} // namespace

TabularPrior marginal_at_sigma(const TabularPrior& prior, double sigma) {
    if (!(sigma >= 0.0)) throw DomainError("marginal_at_sigma: sigma must be >= 0");
    const StateSpace& space = prior.space();
    if (prior.form() == TabularPrior::Form::factorized) {
        const double keep = std::exp(-sigma);
        const double mix = -std::expm1(-sigma) / static_cast<double>(space.vocab_size);
        std::vector<Eigen::ArrayXd> noised;
        noised.reserve(prior.marginals().size());
        for (const auto& q : prior.marginals()) noised.push_back(keep * q + mix);
        return TabularPrior::factorized(space, std::move(noised));
    }
    return TabularPrior::joint(space, noise_joint_table(prior.joint_probs(), space, sigma));
}

TokenSequence forward_noise_sample(const TokenSequence& x0, double sigma, int N, RngStream& rng) {
    const double beta = beta_of_sigma(sigma, N);
    TokenSequence x = x0;
    for (auto& t : x) {
        if (rng.next_double() < beta) {
            Token v = static_cast<Token>(rng.next_below(static_cast<std::uint32_t>(N - 1)));
            if (v >= t) ++v; // uniform over the N-1 wrong tokens
            t = v;
        }
    }
    return x;
}

TabularScoreProvider::TabularScoreProvider(TabularPrior prior) : prior_(std::move(prior)) {}

std::shared_ptr<const TabularScoreProvider::FactorizedTable>
TabularScoreProvider::factorized_table(double sigma) const {
    const std::uint64_t key = sigma_key(sigma);
    {
        std::shared_lock lock(mutex_);
        auto it = fact_cache_.find(key);
        if (it != fact_cache_.end()) return it->second;
    }
    const StateSpace& sp = prior_.space();
    auto table = std::make_shared<FactorizedTable>(sp.vocab_size, sp.seq_len);
    const double keep = std::exp(-sigma);
    const double mix = -std::expm1(-sigma) / static_cast<double>(sp.vocab_size);
    for (int d = 0; d < sp.seq_len; ++d)
        table->col(d) = keep * prior_.marginals()[static_cast<std::size_t>(d)] + mix;
    std::unique_lock lock(mutex_);
    return fact_cache_.try_emplace(key, std::move(table)).first->second;
}

std::shared_ptr<const TabularScoreProvider::JointTable>
TabularScoreProvider::joint_table(double sigma) const {
    const std::uint64_t key = sigma_key(sigma);
    {
        std::shared_lock lock(mutex_);
        auto it = joint_cache_.find(key);
        if (it != joint_cache_.end()) return it->second;
    }
    auto table = std::make_shared<JointTable>(noise_joint_table(prior_.joint_probs(), prior_.space(), sigma));
    std::unique_lock lock(mutex_);
    return joint_cache_.try_emplace(key, std::move(table)).first->second;
}

void TabularScoreProvider::concrete_score(const TokenSequence& x, double sigma,
                                          Eigen::ArrayXXd& ratios) const {
    if (!(sigma >= 0.0)) throw DomainError("concrete_score: sigma must be >= 0");
    const StateSpace& sp = prior_.space();
    ratios.resize(sp.vocab_size, sp.seq_len);
    if (prior_.form() == TabularPrior::Form::factorized) {
        const auto table = factorized_table(sigma);
        for (int d = 0; d < sp.seq_len; ++d) {
            const double qx = (*table)(x[static_cast<std::size_t>(d)], d);
            if (!(qx > 0.0))
                throw DegenerateStateError("concrete_score: zero-mass token at position " +
                                           std::to_string(d));
            for (int v = 0; v < sp.vocab_size; ++v)
                ratios(v, d) = (v == x[static_cast<std::size_t>(d)]) ? 1.0
                                                                     : clamp_ratio((*table)(v, d) / qx);
        }
        return;
    }
    const auto table = joint_table(sigma);
    const std::uint64_t N = static_cast<std::uint64_t>(sp.vocab_size);
    const std::uint64_t idx = index_from_state(sp, x);
    const double px = (*table)[static_cast<Eigen::Index>(idx)];
    if (!(px > 0.0)) throw DegenerateStateError("concrete_score: current state has zero mass");
    std::uint64_t stride = 1;
    for (int d = 0; d < sp.seq_len; ++d) {
        const std::uint64_t base = idx - x[static_cast<std::size_t>(d)] * stride;
        for (int v = 0; v < sp.vocab_size; ++v) {
            if (v == x[static_cast<std::size_t>(d)]) {
                ratios(v, d) = 1.0;
            } else {
                const double pv = (*table)[static_cast<Eigen::Index>(base + static_cast<std::uint64_t>(v) * stride)];
                ratios(v, d) = clamp_ratio(pv / px);
            }
        }
        stride *= N;
    }
}

std::vector<double> sigma_grid(double sigma_hi, double sigma_lo, int steps,
                               ReverseEulerOptions::Grid kind) {
    if (!(sigma_hi > sigma_lo) || !(sigma_lo > 0.0))
        throw DomainError("sigma_grid: need sigma_hi > sigma_lo > 0");
    if (steps < 1) throw ConfigError("sigma_grid: steps must be >= 1");
    std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
    for (int h = 0; h <= steps; ++h) {
        const double frac = static_cast<double>(h) / static_cast<double>(steps);
        grid[static_cast<std::size_t>(h)] =
            kind == ReverseEulerOptions::Grid::geometric
                ? sigma_hi * std::pow(sigma_lo / sigma_hi, frac)
                : sigma_hi + frac * (sigma_lo - sigma_hi);
    }
    grid.front() = sigma_hi;
    grid.back() = sigma_lo;
    return grid;
}

void euler_substep(const Eigen::ArrayXXd& ratios, TokenSequence& x, double dsig, RngStream& rng) {
    const int N = static_cast<int>(ratios.rows());
    const int D = static_cast<int>(ratios.cols());
    const double base = dsig / static_cast<double>(N);
    for (int d = 0; d < D; ++d) {
        const Token cur = x[static_cast<std::size_t>(d)];
        double total = 0.0;
        for (int v = 0; v < N; ++v)
            if (v != cur) total += base * ratios(v, d);
        const double scale = total > 1.0 ? 1.0 / total : 1.0;
        double u = rng.next_double();
        if (u >= total * scale) continue; // stay
        for (int v = 0; v < N; ++v) {
            if (v == cur) continue;
            const double m = base * ratios(v, d) * scale;
            if (u < m) {
                x[static_cast<std::size_t>(d)] = static_cast<Token>(v);
                break;
            }
            u -= m;
        }
    }
}

TokenSequence reverse_euler_sample(const ConcreteScoreProvider& score, TokenSequence start,
                                   double sigma_start, int steps, RngStream& rng,
                                   const ReverseEulerOptions& opts) {
    if (!(sigma_start > 0.0)) throw DomainError("reverse_euler_sample: sigma_start must be > 0");
    if (steps < 1) throw ConfigError("reverse_euler_sample: steps must be >= 1");
    validate_sequence(start, score.space());
    const double floor = std::min(opts.sigma_floor, 0.1 * sigma_start);
    // Grid points computed on the fly; this sits inside value-estimate rollout
    // loops, so no per-call allocation.
    const bool geometric = opts.grid == ReverseEulerOptions::Grid::geometric;
    const double factor = geometric ? std::pow(floor / sigma_start, 1.0 / steps) : 0.0;
    const double dstep = geometric ? 0.0 : (sigma_start - floor) / steps;
    thread_local Eigen::ArrayXXd ratios;
    double sigma = sigma_start;
    for (int h = 0; h < steps; ++h) {
        const double sigma_next = (h + 1 == steps) ? floor : (geometric ? sigma * factor : sigma - dstep);
        score.concrete_score(start, sigma, ratios);
        euler_substep(ratios, start, sigma - sigma_next, rng);
        sigma = sigma_next;
    }
    return start;
}

} // namespace sgdd
