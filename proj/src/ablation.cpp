#include <cmath>

#include "sgdd/harness.hpp"
#include "sgdd/io.hpp"
#include "sgdd/metrics.hpp"
#include "sgdd/oracles.hpp"

namespace sgdd {

namespace {

struct QualityScorer {
    bool use_psnr = false;
    TokenSequence x_true;
    std::optional<Pmf> oracle;
    int vocab_size = 2;

    static QualityScorer make(const TaskInstance& task, std::uint64_t budget) {
        QualityScorer q;
        q.vocab_size = task.space.vocab_size;
        if (task.space.vocab_size == 2 && !task.x_true.empty()) {
            q.use_psnr = true;
            q.x_true = task.x_true;
            return q;
        }
        q.oracle = oracle_pair_marginal(task, budget);
        if (!q.oracle)
            throw ConfigError("ablation: task has neither a ground-truth sequence nor a feasible oracle");
        return q;
    }

    // Mean PSNR across chains, or negative Hellinger of the pooled empirical
    // pair marginal; both orient "higher is better".
    double operator()(const std::vector<TokenSequence>& states) const {
        if (use_psnr) {
            double acc = 0.0;
            for (const auto& x : states) acc += psnr_binary(x, x_true);
            return acc / static_cast<double>(states.size());
        }
        return -hellinger(empirical_first_two(states, vocab_size), *oracle);
    }

    double chain_value(const TokenSequence& x) const {
        return use_psnr ? psnr_binary(x, x_true) : 0.0;
    }
};

} // namespace

std::vector<ScheduleTrace> run_schedule_ablation(const TaskInstance& task,
                                                 const ExperimentConfig& cfg_in,
                                                 const std::vector<double>& fixed_etas, int chains) {
    ExperimentConfig cfg = cfg_in;
    cfg.apply_task_defaults(task);
    if (chains < 2) throw ConfigError("run_schedule_ablation: need at least 2 chains");
    const QualityScorer scorer = QualityScorer::make(task, cfg.budget);
    const TabularScoreProvider provider(task.prior);
    const LikelihoodPotential f = task.likelihood();

    std::vector<std::pair<std::string, AnnealingSchedule>> schedules;
    schedules.emplace_back("annealed", AnnealingSchedule::geometric(cfg.eta_min, cfg.eta_max, cfg.K));
    for (double eta : fixed_etas) {
        char label[32];
        std::snprintf(label, sizeof(label), "fixed:%.6g", eta);
        schedules.emplace_back(label, AnnealingSchedule::fixed(eta, cfg.K));
    }

    std::vector<ScheduleTrace> out;
    for (auto& [label, annealing] : schedules) {
        GibbsConfig gibbs = cfg.gibbs_config();
        gibbs.annealing = annealing;

        std::vector<GibbsTrace> traces(static_cast<std::size_t>(chains));
        std::vector<TokenSequence> finals(static_cast<std::size_t>(chains));
        parallel_chains(chains, cfg.threads, [&](int i) {
            RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
            SgddResult res = run_sgdd(provider, f, gibbs, rng);
            traces[static_cast<std::size_t>(i)] = std::move(res.trace);
            finals[static_cast<std::size_t>(i)] = std::move(res.sample);
        });

        ScheduleTrace trace;
        trace.label = label;
        trace.eta = annealing.eta;
        std::vector<TokenSequence> at_k(static_cast<std::size_t>(chains));
        for (int k = 0; k < cfg.K; ++k) {
            for (int i = 0; i < chains; ++i)
                at_k[static_cast<std::size_t>(i)] = traces[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].x;
            trace.quality.push_back(scorer(at_k));
        }
        trace.quality.push_back(scorer(finals)); // x^(K)
        out.push_back(std::move(trace));
    }
    return out;
}

std::vector<NfeAblationPoint> run_nfe_ablation(const TaskInstance& task,
                                               const ExperimentConfig& cfg_in,
                                               const std::vector<std::array<int, 2>>& kh_configs,
                                               int chains) {
    ExperimentConfig cfg = cfg_in;
    cfg.apply_task_defaults(task);
    if (chains < 2) throw ConfigError("run_nfe_ablation: need at least 2 chains");
    const QualityScorer scorer = QualityScorer::make(task, cfg.budget);
    const TabularScoreProvider provider(task.prior);
    const LikelihoodPotential f = task.likelihood();

    std::vector<NfeAblationPoint> points;
    for (const auto& [K, H] : kh_configs) {
        GibbsConfig gibbs = cfg.gibbs_config();
        gibbs.iterations = K;
        gibbs.euler_steps = H;
        gibbs.annealing = AnnealingSchedule::geometric(cfg.eta_min, cfg.eta_max, K);

        std::vector<TokenSequence> finals(static_cast<std::size_t>(chains));
        parallel_chains(chains, cfg.threads, [&](int i) {
            RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
            finals[static_cast<std::size_t>(i)] = run_sgdd(provider, f, gibbs, rng).sample;
        });

        NfeAblationPoint pt;
        pt.K = K;
        pt.H = H;
        pt.nfe = static_cast<long>(K) * H;
        pt.label = "sgdd-" + std::to_string(pt.nfe);
        pt.quality_mean = scorer(finals);
        if (scorer.use_psnr) {
            double var = 0.0;
            for (const auto& x : finals) {
                const double dq = scorer.chain_value(x) - pt.quality_mean;
                var += dq * dq;
            }
            var /= static_cast<double>(chains - 1);
            pt.quality_se = std::sqrt(var / static_cast<double>(chains));
        }
        points.push_back(std::move(pt));
    }
    return points;
}

} // namespace sgdd
