// Command-line driver: task generation, posterior-sampling runs, ablations,
// theory verification, and report aggregation.
//
// Exit codes: 0 success, 2 configuration error, 3 budget error,
// 4 verification failure.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgdd/harness.hpp"
#include "sgdd/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitVerify = 4;

sgdd::TaskInstance build_task(const std::string& kind, int N, int D, std::uint64_t seed,
                              double sigma_y, double gamma, double beta, double keep_frac,
                              const std::string& reward_kind, double sigma_prior, double grid_min,
                              double grid_max) {
    if (kind == "synthetic")
        return sgdd::make_synthetic_task(N, D, seed, sigma_prior, grid_min, grid_max, sigma_y);
    if (kind == "xor" || kind == "and") {
        if (N != 2) throw sgdd::ConfigError("xor/and tasks require N = 2");
        return sgdd::make_parity_task(kind, D, gamma, seed, sigma_y);
    }
    if (kind == "mask") {
        if (N != 2) throw sgdd::ConfigError("mask tasks require N = 2");
        return sgdd::make_mask_task(D, keep_frac, seed, sigma_y);
    }
    if (kind == "reward") {
        if (N != 2) throw sgdd::ConfigError("reward tasks require N = 2");
        return sgdd::make_reward_task(D, reward_kind, beta, seed);
    }
    throw sgdd::ConfigError("unknown task kind '" + kind + "'");
}

std::vector<double> parse_eta_list(const std::string& csv) {
    std::vector<double> etas;
    std::istringstream is(csv);
    std::string item;
    while (std::getline(is, item, ',')) etas.push_back(sgdd::parse_double(item));
    if (etas.empty()) throw sgdd::ConfigError("--etas: empty list");
    return etas;
}

std::vector<std::array<int, 2>> parse_kh_configs(const std::string& csv) {
    std::vector<std::array<int, 2>> configs;
    std::istringstream is(csv);
    std::string item;
    while (std::getline(is, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw sgdd::ConfigError("--configs entries must be K:H, got '" + item + "'");
        configs.push_back({std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
    }
    if (configs.empty()) throw sgdd::ConfigError("--configs: empty list");
    return configs;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Split Gibbs posterior sampling over uniform-kernel discrete diffusion priors"};
    app.require_subcommand(1);

    // --- make-task ---
    auto* make_task = app.add_subcommand("make-task", "Generate a task instance file");
    std::string mt_kind = "synthetic", mt_out = "task.txt", mt_reward = "popcount";
    int mt_N = 50, mt_D = 2;
    std::uint64_t mt_seed = 1;
    double mt_sigma_y = 0.1, mt_gamma = 2.0, mt_beta = 1.0, mt_keep = 0.5;
    double mt_sigma_prior = 1.0, mt_grid_min = -3.0, mt_grid_max = 3.0;
    make_task->add_option("--kind", mt_kind, "synthetic | xor | and | mask | reward");
    make_task->add_option("--N", mt_N, "vocabulary size");
    make_task->add_option("--D", mt_D, "sequence length");
    make_task->add_option("--seed", mt_seed, "task seed (fixes the instance)");
    make_task->add_option("--sigma-y", mt_sigma_y, "likelihood temperature");
    make_task->add_option("--gamma", mt_gamma, "pairs per dimension (xor/and)");
    make_task->add_option("--beta", mt_beta, "reward strength");
    make_task->add_option("--keep-frac", mt_keep, "kept fraction (mask)");
    make_task->add_option("--reward", mt_reward, "popcount | linear | motif");
    make_task->add_option("--sigma-prior", mt_sigma_prior, "Gaussian width (synthetic)");
    make_task->add_option("--grid-min", mt_grid_min, "grid lower end (synthetic)");
    make_task->add_option("--grid-max", mt_grid_max, "grid upper end (synthetic)");
    make_task->add_option("--out", mt_out, "output task file");

    // --- run ---
    auto* run = app.add_subcommand("run", "Run one method on a task and write a report");
    std::string run_config;
    std::uint64_t run_seed = 0;
    int run_threads = -1;
    std::string run_out;
    run->add_option("--config", run_config, "flat key=value run configuration")->required();
    run->add_option("--seed", run_seed, "override config seed");
    run->add_option("--threads", run_threads, "override worker threads (0 = hardware)");
    run->add_option("--out", run_out, "override output directory");

    // --- ablate-schedule ---
    auto* ablate_s = app.add_subcommand("ablate-schedule", "Annealed vs fixed-eta quality traces");
    std::string as_task, as_etas = "0.5,0.1,1e-3", as_out;
    int as_K = 50, as_chains = 200, as_threads = 1, as_Tmh = 0, as_H = 0;
    std::uint64_t as_seed = 1;
    ablate_s->add_option("--task", as_task)->required();
    ablate_s->add_option("--etas", as_etas, "fixed levels to compare");
    ablate_s->add_option("--K", as_K, "iterations");
    ablate_s->add_option("--T-mh", as_Tmh, "MH sweeps per iteration (0 = task default)");
    ablate_s->add_option("--H", as_H, "Euler steps per prior step (0 = task default)");
    ablate_s->add_option("--chains", as_chains);
    ablate_s->add_option("--seed", as_seed);
    ablate_s->add_option("--threads", as_threads);
    ablate_s->add_option("--out", as_out, "output directory")->required();

    // --- ablate-nfe ---
    auto* ablate_n = app.add_subcommand("ablate-nfe", "Quality vs compute budget");
    std::string an_task, an_configs = "25:2,25:4,40:5,40:10,50:20", an_out;
    int an_chains = 300, an_threads = 1, an_Tmh = 0;
    std::uint64_t an_seed = 1;
    ablate_n->add_option("--task", an_task)->required();
    ablate_n->add_option("--configs", an_configs, "comma-separated K:H pairs");
    ablate_n->add_option("--T-mh", an_Tmh, "MH sweeps per iteration (0 = task default)");
    ablate_n->add_option("--chains", an_chains);
    ablate_n->add_option("--seed", an_seed);
    ablate_n->add_option("--threads", an_threads);
    ablate_n->add_option("--out", an_out, "output directory")->required();

    // --- verify-theory ---
    auto* verify = app.add_subcommand("verify-theory", "Run the exactness/identity battery");
    bool vt_bug = false;
    std::uint64_t vt_seed = 7;
    std::string vt_out;
    verify->add_flag("--inject-bug", vt_bug, "invert the MH acceptance ratio (negative control)");
    verify->add_option("--seed", vt_seed);
    verify->add_option("--out", vt_out, "optional report file");

    // --- report ---
    auto* report = app.add_subcommand("report", "Aggregate or validate run directories");
    std::vector<std::string> rp_dirs;
    bool rp_check = false;
    report->add_option("dirs", rp_dirs, "run directories")->required();
    report->add_flag("--check", rp_check, "recompute metrics from stored samples and compare");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*make_task) {
            // l0-count likelihoods default to the sharp temperature, the
            // scalar-sum task to the broad one.
            if (!make_task->count("--sigma-y") && mt_kind == "synthetic") mt_sigma_y = 1.0;
            const sgdd::TaskInstance task =
                build_task(mt_kind, mt_N, mt_D, mt_seed, mt_sigma_y, mt_gamma, mt_beta, mt_keep,
                           mt_reward, mt_sigma_prior, mt_grid_min, mt_grid_max);
            sgdd::write_file_atomic(mt_out, task.serialize());
            std::cout << "wrote " << mt_out << " (task_hash " << sgdd::hex64(sgdd::task_hash(task))
                      << ")\n";
            return kExitOk;
        }

        if (*run) {
            sgdd::ExperimentConfig cfg = sgdd::ExperimentConfig::from_file(run_config);
            if (run->count("--seed")) cfg.seed = run_seed;
            if (run->count("--threads")) cfg.threads = run_threads;
            if (!run_out.empty()) cfg.out_dir = run_out;
            if (cfg.out_dir.empty()) throw sgdd::ConfigError("run: no output directory (config 'out' or --out)");
            // Resolve the task path relative to the config file location.
            namespace fs = std::filesystem;
            fs::path task_path(cfg.task_path);
            if (task_path.is_relative()) {
                const fs::path base = fs::path(run_config).parent_path();
                if (fs::exists(base / task_path)) task_path = base / task_path;
            }
            const sgdd::TaskInstance task = sgdd::TaskInstance::parse(sgdd::read_file(task_path.string()));
            sgdd::ExperimentConfig effective = cfg;
            effective.apply_task_defaults(task);
            effective.validate();
            const sgdd::RunReport rep = sgdd::run_experiment(effective, task);
            sgdd::write_run_report(effective, task, rep);
            std::cout << "method = " << rep.metrics.method << "\n";
            if (rep.metrics.hellinger) std::cout << "hellinger = " << *rep.metrics.hellinger << "\n";
            if (rep.metrics.tv) std::cout << "tv = " << *rep.metrics.tv << "\n";
            if (rep.metrics.psnr) std::cout << "psnr = " << *rep.metrics.psnr << "\n";
            if (rep.metrics.mean_reward) std::cout << "mean_reward = " << *rep.metrics.mean_reward << "\n";
            for (const auto& w : rep.metrics.warnings) std::cout << "warning: " << w << "\n";
            std::cout << "report written to " << effective.out_dir << "\n";
            return kExitOk;
        }

        if (*ablate_s) {
            const sgdd::TaskInstance task = sgdd::TaskInstance::parse(sgdd::read_file(as_task));
            sgdd::ExperimentConfig cfg;
            cfg.task_path = as_task;
            cfg.K = as_K;
            cfg.T_mh = as_Tmh;
            cfg.H = as_H;
            cfg.seed = as_seed;
            cfg.threads = as_threads;
            const auto traces = sgdd::run_schedule_ablation(task, cfg, parse_eta_list(as_etas), as_chains);
            std::ostringstream csv;
            csv << "schedule,k,eta,quality\n";
            for (const auto& tr : traces)
                for (std::size_t k = 0; k < tr.quality.size(); ++k)
                    csv << tr.label << "," << k << ","
                        << (k < tr.eta.size() ? sgdd::format_double(tr.eta[k]) : "0") << ","
                        << sgdd::format_double(tr.quality[k]) << "\n";
            sgdd::write_file_atomic((std::filesystem::path(as_out) / "schedule_ablation.csv").string(),
                                    csv.str());
            for (const auto& tr : traces)
                std::cout << tr.label << ": final quality " << tr.quality.back() << "\n";
            return kExitOk;
        }

        if (*ablate_n) {
            const sgdd::TaskInstance task = sgdd::TaskInstance::parse(sgdd::read_file(an_task));
            sgdd::ExperimentConfig cfg;
            cfg.task_path = an_task;
            cfg.T_mh = an_Tmh;
            cfg.seed = an_seed;
            cfg.threads = an_threads;
            const auto points = sgdd::run_nfe_ablation(task, cfg, parse_kh_configs(an_configs), an_chains);
            std::ostringstream csv;
            csv << "label,K,H,nfe,quality_mean,quality_se\n";
            for (const auto& p : points)
                csv << p.label << "," << p.K << "," << p.H << "," << p.nfe << ","
                    << sgdd::format_double(p.quality_mean) << "," << sgdd::format_double(p.quality_se)
                    << "\n";
            sgdd::write_file_atomic((std::filesystem::path(an_out) / "nfe_ablation.csv").string(),
                                    csv.str());
            for (const auto& p : points)
                std::cout << p.label << ": quality " << p.quality_mean << " +- " << p.quality_se << "\n";
            return kExitOk;
        }

        if (*verify) {
            const auto checks = sgdd::run_theory_battery(vt_bug, vt_seed);
            bool all_pass = true;
            std::ostringstream out;
            for (const auto& c : checks) {
                all_pass = all_pass && c.pass;
                out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": value "
                    << sgdd::format_double(c.value) << " vs threshold "
                    << sgdd::format_double(c.threshold) << " (" << c.detail << ")\n";
            }
            std::cout << out.str();
            if (!vt_out.empty()) sgdd::write_file_atomic(vt_out, out.str());
            return all_pass ? kExitOk : kExitVerify;
        }

        if (*report) {
            if (rp_check) {
                for (const auto& dir : rp_dirs) {
                    sgdd::report_check(dir);
                    std::cout << dir << ": metrics reproduce from stored samples\n";
                }
            } else {
                std::cout << sgdd::report_compare(rp_dirs);
            }
            return kExitOk;
        }
    } catch (const sgdd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const sgdd::BudgetError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
