#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgdd/errors.hpp"
#include "sgdd/rng.hpp"

namespace sgdd {

using Token = std::uint16_t;
using TokenSequence = std::vector<Token>;

constexpr std::uint64_t kDefaultEnumerationBudget = std::uint64_t{1} << 24;

/// Finite product space {0..N-1}^D.
struct StateSpace {
    int vocab_size = 2; // N
    int seq_len = 1;    // D

    StateSpace() = default;
    StateSpace(int N, int D) : vocab_size(N), seq_len(D) {
        if (N < 2) throw DomainError("StateSpace: vocab_size must be >= 2, got " + std::to_string(N));
        if (D < 1) throw DomainError("StateSpace: seq_len must be >= 1, got " + std::to_string(D));
        if (N > 65536) throw DomainError("StateSpace: vocab_size exceeds token width (65536)");
    }

    bool operator==(const StateSpace& o) const {
        return vocab_size == o.vocab_size && seq_len == o.seq_len;
    }
};

/// N^D if it fits the budget; throws BudgetError otherwise. The product is
/// checked multiplicatively so N^D never overflows before the check fires.
inline std::uint64_t state_count_checked(const StateSpace& s,
                                         std::uint64_t budget = kDefaultEnumerationBudget) {
    std::uint64_t count = 1;
    for (int d = 0; d < s.seq_len; ++d) {
        if (count > budget / static_cast<std::uint64_t>(s.vocab_size))
            throw BudgetError("state space " + std::to_string(s.vocab_size) + "^" +
                              std::to_string(s.seq_len) + " exceeds enumeration budget " +
                              std::to_string(budget));
        count *= static_cast<std::uint64_t>(s.vocab_size);
    }
    return count;
}

inline void validate_sequence(const TokenSequence& x, const StateSpace& s) {
    if (static_cast<int>(x.size()) != s.seq_len)
        throw DimensionError("sequence length " + std::to_string(x.size()) +
                             " != seq_len " + std::to_string(s.seq_len));
    for (Token t : x)
        if (t >= s.vocab_size) throw DomainError("token " + std::to_string(t) + " out of vocabulary");
}

inline int hamming_distance(const TokenSequence& a, const TokenSequence& b) {
    if (a.size() != b.size())
        throw DimensionError("hamming_distance: length mismatch " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()));
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

/// Mixed-radix enumeration, dimension 0 least significant.
inline TokenSequence state_from_index(const StateSpace& s, std::uint64_t idx) {
    TokenSequence x(static_cast<std::size_t>(s.seq_len));
    for (int d = 0; d < s.seq_len; ++d) {
        x[static_cast<std::size_t>(d)] = static_cast<Token>(idx % static_cast<std::uint64_t>(s.vocab_size));
        idx /= static_cast<std::uint64_t>(s.vocab_size);
    }
    return x;
}

inline std::uint64_t index_from_state(const StateSpace& s, const TokenSequence& x) {
    std::uint64_t idx = 0;
    for (int d = s.seq_len - 1; d >= 0; --d)
        idx = idx * static_cast<std::uint64_t>(s.vocab_size) + x[static_cast<std::size_t>(d)];
    return idx;
}

inline TokenSequence uniform_random_sequence(const StateSpace& s, RngStream& rng) {
    TokenSequence x(static_cast<std::size_t>(s.seq_len));
    for (auto& t : x) t = static_cast<Token>(rng.next_below(static_cast<std::uint32_t>(s.vocab_size)));
    return x;
}

} // namespace sgdd
