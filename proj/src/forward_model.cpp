#include "sgdd/forward_model.hpp"

#include <cmath>
#include <set>
#include <string>

#include "sgdd/errors.hpp"

namespace sgdd {

void ForwardModel::validate(const StateSpace& space) const {
    switch (kind) {
        case Kind::l1_sum:
            if (value_map.size() != space.vocab_size)
                throw DimensionError("ForwardModel: value_map size != vocab_size");
            break;
        case Kind::xor_pairs:
        case Kind::and_pairs:
            if (pairs.empty()) throw ConfigError("ForwardModel: no pairs");
            for (auto [i, j] : pairs)
                if (i < 0 || j < 0 || i >= space.seq_len || j >= space.seq_len)
                    throw DimensionError("ForwardModel: pair index out of range");
            break;
        case Kind::mask: {
            if (keep.empty()) throw ConfigError("ForwardModel: empty keep set");
            std::set<int> seen;
            for (int i : keep) {
                if (i < 0 || i >= space.seq_len) throw DimensionError("ForwardModel: keep index out of range");
                if (!seen.insert(i).second) throw ConfigError("ForwardModel: duplicate keep index");
            }
            break;
        }
    }
}

MeasurementValue apply_forward(const ForwardModel& model, const TokenSequence& x) {
    MeasurementValue out;
    switch (model.kind) {
        case ForwardModel::Kind::l1_sum: {
            out.is_scalar = true;
            double sum = 0.0;
            for (Token t : x) {
                if (t >= model.value_map.size())
                    throw DomainError("apply_forward: token " + std::to_string(t) +
                                      " outside value map");
                sum += std::abs(model.value_map[t]);
            }
            out.scalar = sum;
            break;
        }
        case ForwardModel::Kind::xor_pairs:
        case ForwardModel::Kind::and_pairs: {
            out.bits.reserve(model.pairs.size());
            const bool is_xor = model.kind == ForwardModel::Kind::xor_pairs;
            for (auto [i, j] : model.pairs) {
                const Token a = x[static_cast<std::size_t>(i)];
                const Token b = x[static_cast<std::size_t>(j)];
                out.bits.push_back(is_xor ? (a ^ b) & 1 : (a & b) & 1);
            }
            break;
        }
        case ForwardModel::Kind::mask:
            out.bits.reserve(model.keep.size());
            for (int i : model.keep) out.bits.push_back(x[static_cast<std::size_t>(i)]);
            break;
    }
    return out;
}

LikelihoodPotential make_likelihood(const ForwardModel& model, const Measurement& y) {
    if (!(y.sigma_y > 0.0)) throw DomainError("make_likelihood: sigma_y must be > 0");
    const bool scalar_model = model.kind == ForwardModel::Kind::l1_sum;
    if (scalar_model != y.value.is_scalar)
        throw DimensionError("make_likelihood: measurement shape does not match model kind");
    if (!scalar_model) {
        const std::size_t expect =
            model.kind == ForwardModel::Kind::mask ? model.keep.size() : model.pairs.size();
        if (y.value.bits.size() != expect)
            throw DimensionError("make_likelihood: measurement length != model output length");
    }
    LikelihoodPotential f;
    f.kind = LikelihoodPotential::Kind::inverse_problem;
    f.sigma_y = y.sigma_y;
    f.eval = [model, y](const TokenSequence& z) {
        const MeasurementValue g = apply_forward(model, z);
        if (g.is_scalar) return std::abs(g.scalar - y.value.scalar) / y.sigma_y;
        int mismatches = 0;
        for (std::size_t i = 0; i < g.bits.size(); ++i) mismatches += (g.bits[i] != y.value.bits[i]);
        return static_cast<double>(mismatches) / y.sigma_y;
    };
    return f;
}

double RewardFunction::eval(const TokenSequence& x) const {
    if (kind == Kind::linear_token_score) {
        double r = 0.0;
        for (Token t : x) {
            if (t >= token_scores.size()) throw DomainError("RewardFunction: token outside score table");
            r += token_scores[t];
        }
        return r;
    }
    if (motif.empty() || motif.size() > x.size()) return 0.0;
    int count = 0;
    for (std::size_t i = 0; i + motif.size() <= x.size(); ++i) {
        bool hit = true;
        for (std::size_t k = 0; k < motif.size(); ++k)
            if (x[i + k] != motif[k]) {
                hit = false;
                break;
            }
        count += hit;
    }
    return static_cast<double>(count);
}

LikelihoodPotential make_reward_likelihood(const RewardFunction& r, double beta) {
    if (!(beta > 0.0)) throw DomainError("make_reward_likelihood: beta must be > 0");
    LikelihoodPotential f;
    f.kind = LikelihoodPotential::Kind::reward;
    f.beta = beta;
    f.eval = [r, beta](const TokenSequence& z) { return -beta * r.eval(z); };
    return f;
}

} // namespace sgdd
