#include "sgdd/task.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "sgdd/io.hpp"
#include "sgdd/rng.hpp"

namespace sgdd {

LikelihoodPotential TaskInstance::likelihood() const {
    if (is_reward()) {
        if (!reward) throw ConfigError("TaskInstance: reward task without reward function");
        return make_reward_likelihood(*reward, beta);
    }
    if (!model) throw ConfigError("TaskInstance: inverse task without forward model");
    return make_likelihood(*model, measurement);
}

namespace {

std::string format_pairs(const std::vector<std::pair<int, int>>& pairs) {
    std::string out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(pairs[i].first) + ':' + std::to_string(pairs[i].second);
    }
    return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& s) {
    std::vector<std::pair<int, int>> pairs;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("bad pair '" + item + "'");
        pairs.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    }
    return pairs;
}

std::string format_tokens(const TokenSequence& x) {
    std::string out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(x[i]);
    }
    return out;
}

TokenSequence parse_tokens(const KeyValueFile& kv, const std::string& key) {
    TokenSequence x;
    for (int v : kv.get_int_list(key)) x.push_back(static_cast<Token>(v));
    return x;
}

std::string reward_kind_name(RewardFunction::Kind k) {
    return k == RewardFunction::Kind::linear_token_score ? "linear_token_score" : "motif_count";
}

} // namespace

std::string TaskInstance::serialize() const {
    std::ostringstream os;
    os << "format = sgdd-task-v1\n";
    os << "kind = " << kind << "\n";
    os << "N = " << space.vocab_size << "\n";
    os << "D = " << space.seq_len << "\n";
    os << "task_seed = " << task_seed << "\n";
    if (is_reward()) {
        os << "beta = " << format_double(beta) << "\n";
        os << "reward_kind = " << reward_kind_name(reward->kind) << "\n";
        if (reward->kind == RewardFunction::Kind::linear_token_score)
            os << "token_scores = " << format_double_list(reward->token_scores) << "\n";
        else
            os << "motif = " << format_tokens(reward->motif) << "\n";
    } else {
        os << "sigma_y = " << format_double(measurement.sigma_y) << "\n";
        switch (model->kind) {
            case ForwardModel::Kind::l1_sum:
                os << "model = l1_sum\n";
                os << "value_map = " << format_double_list(model->value_map) << "\n";
                os << "sigma_prior = " << format_double(sigma_prior) << "\n";
                os << "grid_min = " << format_double(grid_min) << "\n";
                os << "grid_max = " << format_double(grid_max) << "\n";
                os << "y = " << format_double(measurement.value.scalar) << "\n";
                break;
            case ForwardModel::Kind::xor_pairs:
            case ForwardModel::Kind::and_pairs:
                os << "model = " << (model->kind == ForwardModel::Kind::xor_pairs ? "xor_pairs" : "and_pairs") << "\n";
                os << "pairs = " << format_pairs(model->pairs) << "\n";
                os << "y_bits = " << format_tokens(measurement.value.bits) << "\n";
                break;
            case ForwardModel::Kind::mask:
                os << "model = mask\n";
                os << "keep = " << format_int_list(model->keep) << "\n";
                os << "y_bits = " << format_tokens(measurement.value.bits) << "\n";
                break;
        }
        if (!x_true.empty()) os << "x_true = " << format_tokens(x_true) << "\n";
    }
    os << "prior_begin\n";
    prior.save(os);
    os << "prior_end\n";
    return os.str();
}

TaskInstance TaskInstance::parse(const std::string& text) {
    KeyValueFile kv = KeyValueFile::parse_string(text);
    if (kv.get_string("format") != "sgdd-task-v1")
        throw ConfigError("unknown task format '" + kv.get_string("format") + "'");
    TaskInstance task;
    task.kind = kv.get_string("kind");
    task.space = StateSpace(kv.get_int("N"), kv.get_int("D"));
    task.task_seed = kv.get_uint64("task_seed");
    {
        std::istringstream pis(kv.block("prior"));
        task.prior = TabularPrior::load(pis);
    }
    if (!(task.prior.space() == task.space)) throw ConfigError("task/prior state space mismatch");

    if (task.kind == "reward") {
        task.beta = kv.get_double("beta");
        RewardFunction r;
        const std::string rk = kv.get_string("reward_kind");
        if (rk == "linear_token_score") {
            r.kind = RewardFunction::Kind::linear_token_score;
            r.token_scores = kv.get_double_list("token_scores");
        } else if (rk == "motif_count") {
            r.kind = RewardFunction::Kind::motif_count;
            r.motif = parse_tokens(kv, "motif");
        } else {
            throw ConfigError("unknown reward_kind '" + rk + "'");
        }
        task.reward = std::move(r);
        return task;
    }

    task.measurement.sigma_y = kv.get_double("sigma_y");
    ForwardModel m;
    const std::string mk = kv.get_string("model");
    if (mk == "l1_sum") {
        m.kind = ForwardModel::Kind::l1_sum;
        m.value_map = kv.get_double_list("value_map");
        task.sigma_prior = kv.get_double("sigma_prior");
        task.grid_min = kv.get_double("grid_min");
        task.grid_max = kv.get_double("grid_max");
        task.measurement.value.is_scalar = true;
        task.measurement.value.scalar = kv.get_double("y");
    } else if (mk == "xor_pairs" || mk == "and_pairs") {
        m.kind = mk == "xor_pairs" ? ForwardModel::Kind::xor_pairs : ForwardModel::Kind::and_pairs;
        m.pairs = parse_pairs(kv.get_string("pairs"));
        task.measurement.value.bits = parse_tokens(kv, "y_bits");
    } else if (mk == "mask") {
        m.kind = ForwardModel::Kind::mask;
        m.keep = kv.get_int_list("keep");
        task.measurement.value.bits = parse_tokens(kv, "y_bits");
    } else {
        throw ConfigError("unknown model '" + mk + "'");
    }
    m.validate(task.space);
    task.model = std::move(m);
    if (kv.has("x_true")) {
        task.x_true = parse_tokens(kv, "x_true");
        validate_sequence(task.x_true, task.space);
    }
    return task;
}

std::uint64_t task_hash(const TaskInstance& task) { return fnv1a64(task.serialize()); }

Eigen::ArrayXd coordinate_grid(int N, double lo, double hi) {
    if (N < 2) throw DomainError("coordinate_grid: N must be >= 2");
    if (!(lo < hi)) throw DomainError("coordinate_grid: need lo < hi");
    Eigen::ArrayXd g(N);
    for (int i = 0; i < N; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(N - 1);
    return g;
}

TabularPrior discretized_gaussian_prior(int N, int D, double sigma_prior, double grid_min,
                                        double grid_max) {
    if (!(sigma_prior > 0.0)) throw DomainError("discretized_gaussian_prior: sigma_prior must be > 0");
    const Eigen::ArrayXd g = coordinate_grid(N, grid_min, grid_max);
    Eigen::ArrayXd w = (-g.square() / (2.0 * sigma_prior * sigma_prior)).exp();
    w /= w.sum();
    std::vector<Eigen::ArrayXd> marginals(static_cast<std::size_t>(D), w);
    return TabularPrior::factorized(StateSpace(N, D), std::move(marginals));
}

namespace {

TokenSequence sample_factorized(const TabularPrior& prior, RngStream& rng) {
    const StateSpace& sp = prior.space();
    TokenSequence x(static_cast<std::size_t>(sp.seq_len));
    for (int d = 0; d < sp.seq_len; ++d) {
        const auto& q = prior.marginals()[static_cast<std::size_t>(d)];
        double u = rng.next_double();
        Token pick = static_cast<Token>(sp.vocab_size - 1);
        for (int v = 0; v < sp.vocab_size; ++v) {
            if (u < q[v]) {
                pick = static_cast<Token>(v);
                break;
            }
            u -= q[v];
        }
        x[static_cast<std::size_t>(d)] = pick;
    }
    return x;
}

/// Per-dimension Bernoulli profile in [0.15, 0.85]; informative but full-support.
TabularPrior biased_binary_prior(int D, RngStream& rng) {
    std::vector<Eigen::ArrayXd> marginals;
    marginals.reserve(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        const double p1 = 0.15 + 0.7 * rng.next_double();
        Eigen::ArrayXd q(2);
        q << 1.0 - p1, p1;
        marginals.push_back(std::move(q));
    }
    return TabularPrior::factorized(StateSpace(2, D), std::move(marginals));
}

} // namespace

TaskInstance make_synthetic_task(int N, int D, std::uint64_t seed, double sigma_prior,
                                 double grid_min, double grid_max, double sigma_y) {
    TaskInstance task;
    task.kind = "synthetic";
    task.space = StateSpace(N, D);
    task.task_seed = seed;
    task.sigma_prior = sigma_prior;
    task.grid_min = grid_min;
    task.grid_max = grid_max;
    task.prior = discretized_gaussian_prior(N, D, sigma_prior, grid_min, grid_max);

    ForwardModel m;
    m.kind = ForwardModel::Kind::l1_sum;
    m.value_map = coordinate_grid(N, grid_min, grid_max);
    m.validate(task.space);

    RngStream rng(seed, 0);
    task.x_true = sample_factorized(task.prior, rng);
    task.measurement.value = apply_forward(m, task.x_true);
    task.measurement.sigma_y = sigma_y;
    task.model = std::move(m);
    return task;
}

TaskInstance make_parity_task(const std::string& kind, int D, double gamma, std::uint64_t seed,
                              double sigma_y) {
    if (kind != "xor" && kind != "and") throw ConfigError("make_parity_task: kind must be xor or and");
    const int n_pairs = static_cast<int>(gamma * D);
    if (n_pairs < 1) throw ConfigError("make_parity_task: gamma*D < 1");
    const long max_pairs = static_cast<long>(D) * (D - 1) / 2;
    if (n_pairs > max_pairs) throw ConfigError("make_parity_task: more pairs than distinct position pairs");

    TaskInstance task;
    task.kind = kind;
    task.space = StateSpace(2, D);
    task.task_seed = seed;

    RngStream rng(seed, 0);
    task.prior = biased_binary_prior(D, rng);
    task.x_true = sample_factorized(task.prior, rng);

    ForwardModel m;
    m.kind = kind == "xor" ? ForwardModel::Kind::xor_pairs : ForwardModel::Kind::and_pairs;
    std::set<std::pair<int, int>> seen;
    while (static_cast<int>(m.pairs.size()) < n_pairs) {
        int i = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(D)));
        int j = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(D)));
        if (i == j) continue;
        if (!seen.insert({std::min(i, j), std::max(i, j)}).second) continue;
        m.pairs.emplace_back(i, j);
    }
    m.validate(task.space);
    task.measurement.value = apply_forward(m, task.x_true);
    task.measurement.sigma_y = sigma_y;
    task.model = std::move(m);
    return task;
}

TaskInstance make_mask_task(int D, double keep_frac, std::uint64_t seed, double sigma_y) {
    const int n_keep = std::max(1, static_cast<int>(std::lround(keep_frac * D)));
    if (n_keep > D) throw ConfigError("make_mask_task: keep fraction > 1");

    TaskInstance task;
    task.kind = "mask";
    task.space = StateSpace(2, D);
    task.task_seed = seed;

    RngStream rng(seed, 0);
    task.prior = biased_binary_prior(D, rng);
    task.x_true = sample_factorized(task.prior, rng);

    ForwardModel m;
    m.kind = ForwardModel::Kind::mask;
    std::set<int> keep;
    while (static_cast<int>(keep.size()) < n_keep)
        keep.insert(static_cast<int>(rng.next_below(static_cast<std::uint32_t>(D))));
    m.keep.assign(keep.begin(), keep.end());
    m.validate(task.space);
    task.measurement.value = apply_forward(m, task.x_true);
    task.measurement.sigma_y = sigma_y;
    task.model = std::move(m);
    return task;
}

TaskInstance make_reward_task(int D, const std::string& reward_kind, double beta,
                              std::uint64_t seed, bool biased_prior) {
    TaskInstance task;
    task.kind = "reward";
    task.space = StateSpace(2, D);
    task.task_seed = seed;
    task.beta = beta > 0.0 ? beta : 1e-9; // config floor for the beta -> 0 limit

    RngStream rng(seed, 0);
    task.prior = biased_prior ? biased_binary_prior(D, rng) : TabularPrior::uniform(task.space);

    RewardFunction r;
    if (reward_kind == "popcount") {
        r.kind = RewardFunction::Kind::linear_token_score;
        r.token_scores = Eigen::ArrayXd(2);
        r.token_scores << 0.0, 1.0;
    } else if (reward_kind == "linear") {
        r.kind = RewardFunction::Kind::linear_token_score;
        r.token_scores = Eigen::ArrayXd(2);
        r.token_scores << 0.0, 1.0;
    } else if (reward_kind == "motif") {
        r.kind = RewardFunction::Kind::motif_count;
        r.motif = {1, 0, 1};
    } else {
        throw ConfigError("make_reward_task: unknown reward kind '" + reward_kind + "'");
    }
    task.reward = std::move(r);
    return task;
}

} // namespace sgdd
