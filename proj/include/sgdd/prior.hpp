#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "sgdd/state_space.hpp"

namespace sgdd {

/// Exact prior over {0..N-1}^D, either as D per-dimension marginals
/// (factorized) or as one full table over N^D states (joint, budget-guarded).
/// Immutable after construction and safe to share across threads.
class TabularPrior {
public:
    enum class Form { factorized, joint };

    static TabularPrior factorized(const StateSpace& space, std::vector<Eigen::ArrayXd> marginals);
    static TabularPrior joint(const StateSpace& space, Eigen::ArrayXd probs,
                              std::uint64_t budget = kDefaultEnumerationBudget);
    static TabularPrior uniform(const StateSpace& space);

    Form form() const { return form_; }
    const StateSpace& space() const { return space_; }

    const std::vector<Eigen::ArrayXd>& marginals() const; // factorized only
    const Eigen::ArrayXd& joint_probs() const;            // joint only

    double log_prob(const TokenSequence& x) const;

    /// Structured text {form, N, D, tables} with exact decimal floats.
    void save(std::ostream& os) const;
    static TabularPrior load(std::istream& is);

private:
    TabularPrior() = default;

    Form form_ = Form::factorized;
    StateSpace space_;
    std::vector<Eigen::ArrayXd> marginals_; // factorized: D arrays of size N
    Eigen::ArrayXd joint_;                  // joint: N^D entries
};

} // namespace sgdd
