#include "sgdd/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sgdd/io.hpp"
#include "sgdd/metrics.hpp"
#include "sgdd/oracles.hpp"

#ifndef SGDD_BUILD_FINGERPRINT
#define SGDD_BUILD_FINGERPRINT "gcc " __VERSION__ " " __DATE__ " " __TIME__
#endif

namespace sgdd {

Method method_from_string(const std::string& s) {
    if (s == "sgdd") return Method::sgdd;
    if (s == "svdd_pm") return Method::svdd_pm;
    if (s == "smc") return Method::smc;
    if (s == "dps") return Method::dps;
    if (s == "mcmc_no_prior") return Method::mcmc_no_prior;
    throw ConfigError("unknown method '" + s + "'");
}

std::string method_to_string(Method m) {
    switch (m) {
        case Method::sgdd: return "sgdd";
        case Method::svdd_pm: return "svdd_pm";
        case Method::smc: return "smc";
        case Method::dps: return "dps";
        case Method::mcmc_no_prior: return "mcmc_no_prior";
    }
    throw Error("unreachable");
}

namespace {

const std::set<std::string> kConfigKeys = {
    "task",    "method",      "n_samples",   "seed",        "threads",
    "out",     "K",           "T_mh",        "H",           "eta_min",
    "eta_max", "proposal",    "euler_grid",  "sigma_floor", "steps",
    "M",       "temper_beta", "mc_samples",  "euler_steps_for_x0",
    "resampling", "sigma_max", "sweeps",     "budget",
    "svdd_beta", "ess_frac"};

struct KindDefaults {
    int K;
    int T_mh; // sweeps; reference proposal counts divided by the reference D
    int H;
};

KindDefaults defaults_for_kind(const std::string& kind) {
    if (kind == "synthetic") return {10, 5, 20};
    if (kind == "xor") return {50, 2, 20};
    if (kind == "and") return {100, 5, 20};
    if (kind == "mask") return {100, 5, 20};
    if (kind == "reward") return {50, 1, 20};
    throw ConfigError("no defaults for task kind '" + kind + "'");
}

} // namespace

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    KeyValueFile kv = KeyValueFile::parse_string(text);
    kv.reject_unknown_keys(kConfigKeys, "");
    ExperimentConfig cfg;
    cfg.task_path = kv.get_string("task");
    cfg.method = method_from_string(kv.get_string("method"));
    cfg.n_samples = kv.get_int("n_samples");
    if (kv.has("seed")) cfg.seed = kv.get_uint64("seed");
    if (kv.has("threads")) cfg.threads = kv.get_int("threads");
    cfg.out_dir = kv.get_string_or("out", "");
    if (kv.has("K")) cfg.K = kv.get_int("K");
    if (kv.has("T_mh")) cfg.T_mh = kv.get_int("T_mh");
    if (kv.has("H")) cfg.H = kv.get_int("H");
    cfg.eta_min = kv.get_double_or("eta_min", cfg.eta_min);
    cfg.eta_max = kv.get_double_or("eta_max", cfg.eta_max);
    cfg.proposal = kv.get_string_or("proposal", cfg.proposal);
    cfg.euler_grid = kv.get_string_or("euler_grid", cfg.euler_grid);
    cfg.sigma_floor = kv.get_double_or("sigma_floor", cfg.sigma_floor);
    if (kv.has("steps")) cfg.steps = kv.get_int("steps");
    if (kv.has("M")) cfg.M = kv.get_int("M");
    cfg.temper_beta = kv.get_double_or("temper_beta", cfg.temper_beta);
    if (kv.has("mc_samples")) cfg.mc_samples = kv.get_int("mc_samples");
    if (kv.has("euler_steps_for_x0")) cfg.euler_steps_for_x0 = kv.get_int("euler_steps_for_x0");
    cfg.resampling = kv.get_string_or("resampling", cfg.resampling);
    cfg.svdd_beta = kv.get_double_or("svdd_beta", cfg.svdd_beta);
    cfg.ess_frac = kv.get_double_or("ess_frac", cfg.ess_frac);
    cfg.sigma_max = kv.get_double_or("sigma_max", cfg.sigma_max);
    if (kv.has("sweeps")) cfg.sweeps = kv.get_int("sweeps");
    if (kv.has("budget")) cfg.budget = kv.get_uint64("budget");
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_text(read_file(path));
}

void ExperimentConfig::validate() const {
    if (task_path.empty()) throw ConfigError("config: task path missing");
    if (n_samples < 1) throw ConfigError("config: n_samples must be >= 1");
    if (threads < 0) throw ConfigError("config: threads must be >= 0");
    if (K < 1 || T_mh < 1 || H < 1) throw ConfigError("config: K, T_mh, H must be >= 1");
    if (!(eta_min > 0.0) || !(eta_max >= eta_min)) throw ConfigError("config: bad eta range");
    if (proposal != "single_site_uniform" && proposal != "single_site_kernel")
        throw ConfigError("config: unknown proposal '" + proposal + "'");
    if (euler_grid != "geometric" && euler_grid != "linear")
        throw ConfigError("config: unknown euler_grid '" + euler_grid + "'");
    if (!(sigma_floor > 0.0)) throw ConfigError("config: sigma_floor must be > 0");
    if (steps < 1) throw ConfigError("config: steps must be >= 1");
    if (M < 1) throw ConfigError("config: M must be >= 1");
    if (temper_beta < 0.0) throw ConfigError("config: temper_beta must be >= 0");
    if (mc_samples < 1 || euler_steps_for_x0 < 1)
        throw ConfigError("config: value-estimate settings must be >= 1");
    if (resampling != "systematic" && resampling != "multinomial")
        throw ConfigError("config: unknown resampling '" + resampling + "'");
    if (svdd_beta < 0.0) throw ConfigError("config: svdd_beta must be >= 0 (0 = argmax)");
    if (!(ess_frac > 0.0) || ess_frac > 1.0) throw ConfigError("config: ess_frac must be in (0, 1]");
    if (!(sigma_max > sigma_floor)) throw ConfigError("config: sigma_max must exceed sigma_floor");
    if (sweeps < 0) throw ConfigError("config: sweeps must be >= 0");
}

void ExperimentConfig::apply_task_defaults(const TaskInstance& task) {
    const KindDefaults d = defaults_for_kind(task.kind);
    if (K == 0) K = d.K;
    if (T_mh == 0) T_mh = d.T_mh;
    if (H == 0) H = d.H;
}

GibbsConfig ExperimentConfig::gibbs_config() const {
    GibbsConfig g;
    g.iterations = K;
    g.mh_sweeps = T_mh;
    g.euler_steps = H;
    g.annealing = AnnealingSchedule::geometric(eta_min, eta_max, K);
    g.proposal = proposal == "single_site_kernel" ? MhProposal::single_site_kernel
                                                  : MhProposal::single_site_uniform;
    g.euler = euler_options();
    return g;
}

ReverseEulerOptions ExperimentConfig::euler_options() const {
    ReverseEulerOptions opts;
    opts.sigma_floor = sigma_floor;
    opts.grid = euler_grid == "linear" ? ReverseEulerOptions::Grid::linear
                                       : ReverseEulerOptions::Grid::geometric;
    return opts;
}

std::string ExperimentConfig::echo(const TaskInstance& task) const {
    std::ostringstream os;
    os << "# effective configuration\n";
    os << "# build: " << SGDD_BUILD_FINGERPRINT << "\n";
    os << "task = task.txt\n";
    os << "# original_task_path: " << task_path << "\n";
    os << "method = " << method_to_string(method) << "\n";
    os << "n_samples = " << n_samples << "\n";
    os << "seed = " << seed << "\n";
    os << "threads = " << threads << "\n";
    os << "K = " << K << "\n";
    os << "T_mh = " << T_mh << "\n";
    os << "H = " << H << "\n";
    os << "eta_min = " << format_double(eta_min) << "\n";
    os << "eta_max = " << format_double(eta_max) << "\n";
    os << "proposal = " << proposal << "\n";
    os << "euler_grid = " << euler_grid << "\n";
    os << "sigma_floor = " << format_double(sigma_floor) << "\n";
    os << "steps = " << steps << "\n";
    os << "M = " << M << "\n";
    os << "temper_beta = " << format_double(temper_beta) << "\n";
    os << "mc_samples = " << mc_samples << "\n";
    os << "euler_steps_for_x0 = " << euler_steps_for_x0 << "\n";
    os << "resampling = " << resampling << "\n";
    os << "svdd_beta = " << format_double(svdd_beta) << "\n";
    os << "ess_frac = " << format_double(ess_frac) << "\n";
    os << "sigma_max = " << format_double(sigma_max) << "\n";
    os << "sweeps = " << sweeps << "\n";
    os << "budget = " << budget << "\n";
    os << "# task_hash: " << hex64(task_hash(task)) << "\n";
    return os.str();
}

NfeCount nfe_accounting(Method m, const ExperimentConfig& cfg, const StateSpace& space) {
    NfeCount n;
    const long mc = cfg.mc_samples;
    const long h0 = cfg.euler_steps_for_x0;
    switch (m) {
        case Method::sgdd:
            n.total = static_cast<long>(cfg.K) * cfg.H;
            n.sequential = n.total;
            break;
        case Method::svdd_pm:
        case Method::smc:
            n.total = static_cast<long>(cfg.steps) * cfg.M * (1 + mc * h0);
            n.sequential = static_cast<long>(cfg.steps) * (1 + h0);
            break;
        case Method::dps:
            n.total = static_cast<long>(cfg.steps) * (space.vocab_size - 1) * space.seq_len * mc * h0;
            n.sequential = static_cast<long>(cfg.steps) * (1 + h0);
            break;
        case Method::mcmc_no_prior:
            n.total = 0; // no score evaluations at all
            n.sequential = 0;
            break;
    }
    return n;
}

void parallel_chains(int n, int threads, const std::function<void(int)>& body) {
    if (threads == 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min(threads, n);
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::optional<Pmf> oracle_pair_marginal(const TaskInstance& task, std::uint64_t budget,
                                        std::vector<std::string>* warnings) {
    if (task.space.seq_len < 2) {
        if (warnings) warnings->push_back("pair-marginal oracle needs D >= 2");
        return std::nullopt;
    }
    try {
        if (task.model && task.model->kind == ForwardModel::Kind::l1_sum)
            return exact_posterior_marginal_dp(task.prior, task.model->value_map,
                                               task.measurement.value.scalar,
                                               task.measurement.sigma_y, budget);
        return marginal_first_two(exact_posterior_enumerate(task.prior, task.likelihood(), budget),
                                  task.space);
    } catch (const BudgetError& e) {
        if (warnings) warnings->push_back(std::string("oracle infeasible: ") + e.what());
        return std::nullopt;
    }
}

RunMetrics compute_metrics(const ExperimentConfig& cfg, const TaskInstance& task,
                           const std::vector<TokenSequence>& samples, double runtime_s) {
    RunMetrics m;
    m.method = method_to_string(cfg.method);
    m.task_hash = hex64(task_hash(task));
    m.n_samples = static_cast<int>(samples.size());
    m.runtime_s = runtime_s;
    const NfeCount nfe = nfe_accounting(cfg.method, cfg, task.space);
    m.nfe_total = nfe.total;
    m.nfe_sequential = nfe.sequential;

    if (const auto oracle = oracle_pair_marginal(task, cfg.budget, &m.warnings)) {
        const Pmf empirical = empirical_first_two(samples, task.space.vocab_size);
        m.hellinger = hellinger(empirical, *oracle);
        m.tv = total_variation(empirical, *oracle);
    }
    if (task.space.vocab_size == 2 && !task.x_true.empty()) {
        double acc = 0.0;
        for (const auto& x : samples) acc += psnr_binary(x, task.x_true);
        m.psnr = acc / static_cast<double>(samples.size());
    }
    if (task.is_reward() && task.reward) {
        double acc = 0.0;
        for (const auto& x : samples) acc += task.reward->eval(x);
        m.mean_reward = acc / static_cast<double>(samples.size());
    }
    return m;
}

RunReport run_experiment(const ExperimentConfig& cfg_in, const TaskInstance& task) {
    ExperimentConfig cfg = cfg_in;
    cfg.apply_task_defaults(task);
    cfg.validate();

    const TabularScoreProvider provider(task.prior);
    const LikelihoodPotential f = task.likelihood();
    const int n = cfg.n_samples;

    RunReport report;
    report.samples.resize(static_cast<std::size_t>(n));
    if (cfg.method == Method::sgdd) report.traces.resize(static_cast<std::size_t>(n));

    ValueEstimateConfig vcfg{cfg.mc_samples, cfg.euler_steps_for_x0};
    ReverseRunOptions ropts;
    ropts.sigma_max = cfg.sigma_max;
    ropts.euler = cfg.euler_options();
    SmcOptions smc_opts;
    smc_opts.resampling = cfg.resampling == "multinomial" ? SmcOptions::Resampling::multinomial
                                                          : SmcOptions::Resampling::systematic;
    smc_opts.value = vcfg;
    smc_opts.run = ropts;
    smc_opts.ess_threshold_frac = cfg.ess_frac;
    SvddOptions svdd_opts;
    svdd_opts.run = ropts;
    if (cfg.svdd_beta > 0.0) svdd_opts.selection_beta = cfg.svdd_beta;
    const GibbsConfig gibbs = cfg.gibbs_config();
    const int mcmc_sweeps = cfg.sweeps > 0 ? cfg.sweeps : cfg.K * cfg.T_mh;

    std::atomic<long> degenerate_runs{0};
    const auto t0 = std::chrono::steady_clock::now();
    parallel_chains(n, cfg.threads, [&](int i) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
        switch (cfg.method) {
            case Method::sgdd: {
                SgddResult res = run_sgdd(provider, f, gibbs, rng);
                report.samples[static_cast<std::size_t>(i)] = std::move(res.sample);
                report.traces[static_cast<std::size_t>(i)] = std::move(res.trace);
                break;
            }
            case Method::svdd_pm:
                report.samples[static_cast<std::size_t>(i)] =
                    run_svdd_pm(provider, f, cfg.M, cfg.steps, vcfg, rng, svdd_opts);
                break;
            case Method::smc: {
                ParticleSet set = run_smc(provider, f, cfg.M, cfg.steps, cfg.temper_beta, rng, smc_opts);
                if (set.degeneracy) degenerate_runs.fetch_add(1);
                report.samples[static_cast<std::size_t>(i)] = draw_particle(set, rng);
                break;
            }
            case Method::dps:
                report.samples[static_cast<std::size_t>(i)] =
                    run_discrete_dps(provider, f, cfg.steps, vcfg, rng, ropts);
                break;
            case Method::mcmc_no_prior:
                report.samples[static_cast<std::size_t>(i)] =
                    run_mcmc_no_prior(f, task.space, mcmc_sweeps, rng);
                break;
        }
    });
    const double runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    report.metrics = compute_metrics(cfg, task, report.samples, runtime_s);
    if (degenerate_runs.load() > 0)
        report.metrics.warnings.push_back("smc: " + std::to_string(degenerate_runs.load()) + " of " +
                                          std::to_string(n) + " runs hit weight degeneracy");
    return report;
}

namespace {

std::string samples_csv(const ExperimentConfig& cfg, const TaskInstance& task,
                        const std::vector<TokenSequence>& samples) {
    std::ostringstream os;
    os << "# task_hash = " << hex64(task_hash(task)) << "\n";
    os << "# method = " << method_to_string(cfg.method) << "\n";
    os << "# seed = " << cfg.seed << "\n";
    for (int d = 0; d < task.space.seq_len; ++d) os << (d ? "," : "") << "x" << d;
    os << "\n";
    for (const auto& x : samples) {
        for (std::size_t d = 0; d < x.size(); ++d) os << (d ? "," : "") << x[d];
        os << "\n";
    }
    return os.str();
}

std::string trace_csv(const std::vector<GibbsTrace>& traces) {
    std::ostringstream os;
    os << "chain,k,eta,f_value,accept_rate\n";
    for (std::size_t c = 0; c < traces.size(); ++c)
        for (const auto& rec : traces[c])
            os << c << "," << rec.k << "," << format_double(rec.eta) << ","
               << format_double(rec.f_value) << "," << format_double(rec.accept_rate) << "\n";
    return os.str();
}

nlohmann::ordered_json metrics_json(const RunMetrics& m) {
    nlohmann::ordered_json j;
    j["method"] = m.method;
    j["task_hash"] = m.task_hash;
    j["n_samples"] = m.n_samples;
    if (m.hellinger) j["hellinger"] = *m.hellinger;
    if (m.tv) j["tv"] = *m.tv;
    if (m.psnr) j["psnr"] = *m.psnr;
    if (m.mean_reward) j["mean_reward"] = *m.mean_reward;
    j["runtime_s"] = m.runtime_s;
    j["nfe_total"] = m.nfe_total;
    j["nfe_sequential"] = m.nfe_sequential;
    j["warnings"] = m.warnings;
    return j;
}

} // namespace

void write_run_report(const ExperimentConfig& cfg_in, const TaskInstance& task,
                      const RunReport& report) {
    ExperimentConfig cfg = cfg_in;
    cfg.apply_task_defaults(task);
    if (cfg.out_dir.empty()) throw ConfigError("write_run_report: out directory missing");
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);
    write_file_atomic((out / "task.txt").string(), task.serialize());
    write_file_atomic((out / "samples.csv").string(), samples_csv(cfg, task, report.samples));
    if (!report.traces.empty()) write_file_atomic((out / "trace.csv").string(), trace_csv(report.traces));
    write_file_atomic((out / "metrics.json").string(), metrics_json(report.metrics).dump(2) + "\n");
    write_file_atomic((out / "config.echo").string(), cfg.echo(task));
}

namespace {

std::vector<TokenSequence> load_samples_csv(const std::string& path) {
    const std::string text = read_file(path);
    std::istringstream is(text);
    std::string line;
    std::vector<TokenSequence> samples;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true; // column names
            continue;
        }
        TokenSequence x;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) x.push_back(static_cast<Token>(std::stoi(cell)));
        samples.push_back(std::move(x));
    }
    return samples;
}

} // namespace

std::string report_compare(const std::vector<std::string>& run_dirs) {
    if (run_dirs.empty()) throw ConfigError("report: no run directories given");
    namespace fs = std::filesystem;
    std::ostringstream os;
    std::string hash;
    os << "method            hellinger      tv             psnr           mean_reward    nfe_total\n";
    for (const auto& dir : run_dirs) {
        const auto j = nlohmann::json::parse(read_file((fs::path(dir) / "metrics.json").string()));
        const std::string h = j.at("task_hash").get<std::string>();
        if (hash.empty())
            hash = h;
        else if (h != hash)
            throw ConfigError("report: task hash mismatch between runs (" + hash + " vs " + h + ")");
        auto field = [&](const char* k) -> std::string {
            if (!j.contains(k)) return "-";
            return format_double(j.at(k).get<double>()).substr(0, 12);
        };
        std::string method = j.at("method").get<std::string>();
        method.resize(18, ' ');
        auto pad = [](std::string s) {
            s.resize(15, ' ');
            return s;
        };
        os << method << pad(field("hellinger")) << pad(field("tv")) << pad(field("psnr"))
           << pad(field("mean_reward")) << j.at("nfe_total").get<long>() << "\n";
    }
    os << "task_hash = " << hash << "\n";
    return os.str();
}

void report_check(const std::string& run_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(run_dir);
    ExperimentConfig cfg = ExperimentConfig::from_file((dir / "config.echo").string());
    const TaskInstance task = TaskInstance::parse(read_file((dir / "task.txt").string()));
    const auto samples = load_samples_csv((dir / "samples.csv").string());
    const auto stored = nlohmann::json::parse(read_file((dir / "metrics.json").string()));

    cfg.apply_task_defaults(task);
    const RunMetrics fresh = compute_metrics(cfg, task, samples, 0.0);
    auto check = [&](const char* key, const std::optional<double>& v) {
        if (stored.contains(key) != v.has_value())
            throw Error(std::string("report_check: presence mismatch for ") + key);
        if (v && std::abs(stored.at(key).get<double>() - *v) > 1e-12)
            throw Error(std::string("report_check: ") + key + " mismatch: stored " +
                        format_double(stored.at(key).get<double>()) + " recomputed " +
                        format_double(*v));
    };
    check("hellinger", fresh.hellinger);
    check("tv", fresh.tv);
    check("psnr", fresh.psnr);
    check("mean_reward", fresh.mean_reward);
    if (stored.at("n_samples").get<int>() != fresh.n_samples)
        throw Error("report_check: n_samples mismatch");
    if (stored.at("task_hash").get<std::string>() != fresh.task_hash)
        throw Error("report_check: task hash mismatch");
    if (stored.at("nfe_total").get<long>() != fresh.nfe_total)
        throw Error("report_check: nfe_total mismatch");
}

} // namespace sgdd
