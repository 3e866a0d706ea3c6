#include "sgdd/prior.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "sgdd/errors.hpp"
#include "sgdd/io.hpp"
#include "sgdd/pmf.hpp"

namespace sgdd {

namespace {

void check_table(const Eigen::ArrayXd& t, const char* what) {
    if ((t < 0.0).any()) throw DomainError(std::string(what) + ": negative probability");
    const double sum = t.sum();
    if (std::abs(sum - 1.0) > kPmfNormTol)
        throw DomainError(std::string(what) + ": table sums to " + std::to_string(sum));
}

} // namespace

TabularPrior TabularPrior::factorized(const StateSpace& space, std::vector<Eigen::ArrayXd> marginals) {
    if (static_cast<int>(marginals.size()) != space.seq_len)
        throw DimensionError("TabularPrior: expected one marginal per dimension");
    for (const auto& m : marginals) {
        if (m.size() != space.vocab_size)
            throw DimensionError("TabularPrior: marginal size != vocab_size");
        check_table(m, "TabularPrior(factorized)");
    }
    TabularPrior p;
    p.form_ = Form::factorized;
    p.space_ = space;
    p.marginals_ = std::move(marginals);
    return p;
}

TabularPrior TabularPrior::joint(const StateSpace& space, Eigen::ArrayXd probs, std::uint64_t budget) {
    const std::uint64_t count = state_count_checked(space, budget);
    if (static_cast<std::uint64_t>(probs.size()) != count)
        throw DimensionError("TabularPrior: joint table size != N^D");
    check_table(probs, "TabularPrior(joint)");
    TabularPrior p;
    p.form_ = Form::joint;
    p.space_ = space;
    p.joint_ = std::move(probs);
    return p;
}

TabularPrior TabularPrior::uniform(const StateSpace& space) {
    std::vector<Eigen::ArrayXd> m(static_cast<std::size_t>(space.seq_len),
                                  Eigen::ArrayXd::Constant(space.vocab_size, 1.0 / space.vocab_size));
    return factorized(space, std::move(m));
}

const std::vector<Eigen::ArrayXd>& TabularPrior::marginals() const {
    if (form_ != Form::factorized) throw Error("TabularPrior: not factorized");
    return marginals_;
}

const Eigen::ArrayXd& TabularPrior::joint_probs() const {
    if (form_ != Form::joint) throw Error("TabularPrior: not joint");
    return joint_;
}

double TabularPrior::log_prob(const TokenSequence& x) const {
    validate_sequence(x, space_);
    if (form_ == Form::joint) {
        const double p = joint_[static_cast<Eigen::Index>(index_from_state(space_, x))];
        return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
    double lp = 0.0;
    for (int d = 0; d < space_.seq_len; ++d) {
        const double p = marginals_[static_cast<std::size_t>(d)][x[static_cast<std::size_t>(d)]];
        if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
        lp += std::log(p);
    }
    return lp;
}

void TabularPrior::save(std::ostream& os) const {
    os << "form = " << (form_ == Form::factorized ? "factorized" : "joint") << "\n";
    os << "N = " << space_.vocab_size << "\n";
    os << "D = " << space_.seq_len << "\n";
    if (form_ == Form::factorized) {
        for (int d = 0; d < space_.seq_len; ++d)
            os << "table_" << d << " = " << format_double_list(marginals_[static_cast<std::size_t>(d)]) << "\n";
    } else {
        os << "table = " << format_double_list(joint_) << "\n";
    }
}

TabularPrior TabularPrior::load(std::istream& is) {
    KeyValueFile kv = KeyValueFile::parse(is);
    const std::string form = kv.get_string("form");
    const StateSpace space(kv.get_int("N"), kv.get_int("D"));
    if (form == "factorized") {
        std::vector<Eigen::ArrayXd> m;
        m.reserve(static_cast<std::size_t>(space.seq_len));
        for (int d = 0; d < space.seq_len; ++d)
            m.push_back(kv.get_double_list("table_" + std::to_string(d)));
        kv.reject_unknown_keys({"form", "N", "D"}, "table_");
        return factorized(space, std::move(m));
    }
    if (form == "joint") {
        Eigen::ArrayXd t = kv.get_double_list("table");
        kv.reject_unknown_keys({"form", "N", "D", "table"}, "");
        return joint(space, std::move(t));
    }
    throw ConfigError("TabularPrior: unknown form '" + form + "'");
}

} // namespace sgdd
