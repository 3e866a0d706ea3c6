#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgdd/baselines.hpp"
#include "sgdd/pmf.hpp"
#include "sgdd/split_gibbs.hpp"
#include "sgdd/task.hpp"

namespace sgdd {

enum class Method { sgdd, svdd_pm, smc, dps, mcmc_no_prior };

Method method_from_string(const std::string& s);
std::string method_to_string(Method m);

/// Flat run configuration; every field validated before any compute, unknown
/// keys rejected at parse time. Zeros mean "use the task-kind default".
struct ExperimentConfig {
    std::string task_path;
    Method method = Method::sgdd;
    int n_samples = 0;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir;

    // split Gibbs
    int K = 0;
    int T_mh = 0;
    int H = 0;
    double eta_min = 1e-4;
    double eta_max = 20.0;
    std::string proposal = "single_site_uniform";
    std::string euler_grid = "geometric";
    double sigma_floor = 1e-5;

    // baselines
    int steps = 100;
    int M = 20;
    double temper_beta = 0.5;
    int mc_samples = 3;
    int euler_steps_for_x0 = 4;
    std::string resampling = "systematic";
    double svdd_beta = 0.0;  // selection softmax weight; 0 = argmax
    double ess_frac = 0.5;   // SMC resampling threshold as a fraction of M
    double sigma_max = 20.0;
    int sweeps = 0; // mcmc_no_prior; 0 = K*T_mh budget parity

    std::uint64_t budget = kDefaultEnumerationBudget;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_text(const std::string& text);
    void validate() const;

    /// Fill zero-valued split-Gibbs budgets with per-kind defaults (per-sweep
    /// proposal counts scale the reference tables by 1/D).
    void apply_task_defaults(const TaskInstance& task);

    GibbsConfig gibbs_config() const;
    ReverseEulerOptions euler_options() const;
    std::string echo(const TaskInstance& task) const;
};

struct NfeCount {
    long total = 0;
    long sequential = 0;
};

NfeCount nfe_accounting(Method m, const ExperimentConfig& cfg, const StateSpace& space);

struct RunMetrics {
    std::string method;
    std::string task_hash;
    int n_samples = 0;
    std::optional<double> hellinger;
    std::optional<double> tv;
    std::optional<double> psnr;
    std::optional<double> mean_reward;
    double runtime_s = 0.0;
    long nfe_total = 0;
    long nfe_sequential = 0;
    std::vector<std::string> warnings;
};

struct RunReport {
    RunMetrics metrics;
    std::vector<TokenSequence> samples;
    std::vector<GibbsTrace> traces; // sgdd chains only
};

/// Draw n_samples independent chains (sharded over threads, one RngStream per
/// chain index, results merged in chain order) and score them against the
/// exact oracle where feasible.
RunReport run_experiment(const ExperimentConfig& cfg, const TaskInstance& task);

/// samples.csv, trace.csv, metrics.json, config.echo and a task copy, all
/// written atomically into cfg.out_dir.
void write_run_report(const ExperimentConfig& cfg, const TaskInstance& task, const RunReport& report);

/// Exact first-two-dimensions posterior marginal when the task admits one
/// (DP for the scalar-sum model, enumeration otherwise); nullopt with a
/// warning string when over budget.
std::optional<Pmf> oracle_pair_marginal(const TaskInstance& task, std::uint64_t budget,
                                        std::vector<std::string>* warnings = nullptr);

RunMetrics compute_metrics(const ExperimentConfig& cfg, const TaskInstance& task,
                           const std::vector<TokenSequence>& samples, double runtime_s);

/// --- ablations ---

struct ScheduleTrace {
    std::string label;   // "annealed" or "fixed:<eta>"
    std::vector<double> eta;       // per iteration
    std::vector<double> quality;   // mean quality of x^(k), k = 0..K
};

std::vector<ScheduleTrace> run_schedule_ablation(const TaskInstance& task,
                                                 const ExperimentConfig& cfg,
                                                 const std::vector<double>& fixed_etas, int chains);

struct NfeAblationPoint {
    std::string label;
    int K = 0;
    int H = 0;
    long nfe = 0;
    double quality_mean = 0.0;
    double quality_se = 0.0;
};

std::vector<NfeAblationPoint> run_nfe_ablation(const TaskInstance& task, const ExperimentConfig& cfg,
                                               const std::vector<std::array<int, 2>>& kh_configs,
                                               int chains);

/// --- theory battery ---

struct TheoryCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// MH invariance, DPI battery, KL-decay identity (matched generators and
/// second-order convergence), augmented-sweep stationarity, and the vanishing-
/// regularization limit. `inject_bug` inverts the MH acceptance ratio as a
/// negative control.
std::vector<TheoryCheck> run_theory_battery(bool inject_bug, std::uint64_t seed);

/// --- reports ---

/// Combined comparison table; throws ConfigError when task hashes differ.
std::string report_compare(const std::vector<std::string>& run_dirs);

/// Recompute metrics from the stored samples/task of a run directory and
/// check them against metrics.json within 1e-12.
void report_check(const std::string& run_dir);

void parallel_chains(int n, int threads, const std::function<void(int)>& body);

} // namespace sgdd
