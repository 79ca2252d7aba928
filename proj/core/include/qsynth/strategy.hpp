#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qsynth/model.hpp"

namespace qsynth {

/// A resolver action: a set of transitions from one location such that at
/// most one of them is enabled under any valuation (pairwise guard-disjoint).
struct ActionDef {
    std::vector<int> transitions;  // sorted transition indices
};

/// All guard-disjoint subsets of a location's outgoing transitions. Default
/// keeps only maximal subsets; all_subsets yields every nonempty one.
/// Order is deterministic (by sorted transition indices).
std::vector<ActionDef> enumerate_actions(const PartialProgram& p, const Thread& c, int loc,
                                         bool all_subsets = false);

/// One observation that a memoryless strategy must resolve. For program games
/// thread/loc identify it; raw games use loc as the observation id.
struct ChoiceObs {
    int thread = -1;
    int loc = -1;
    int num_actions = 0;
};

/// Total observation → action-index map over a fixed choice-observation list.
struct MemorylessStrategy {
    std::vector<int> choice;

    /// Lexicographic encoding used for deterministic tie-breaks and reports.
    std::string encode() const;
};

/// Partial map; -1 marks an unresolved observation.
struct PartialStrategy {
    std::vector<int> choice;

    bool complete() const {
        for (int c : choice)
            if (c < 0) return false;
        return true;
    }
};

/// Lazily materialized enumeration lattice: each level fixes the next
/// observation in the given order, so a node is an assignment to a prefix.
class StrategyTree {
public:
    explicit StrategyTree(std::vector<ChoiceObs> obs) : obs_(std::move(obs)) {}

    PartialStrategy root() const { return PartialStrategy{std::vector<int>(obs_.size(), -1)}; }

    int depth(const PartialStrategy& s) const {
        int d = 0;
        while (d < (int)obs_.size() && s.choice[d] >= 0) ++d;
        return d;
    }

    bool is_leaf(const PartialStrategy& s) const { return depth(s) == (int)obs_.size(); }

    std::vector<PartialStrategy> children(const PartialStrategy& s) const;

    /// Number of complete strategies (saturating at UINT64_MAX).
    uint64_t leaf_count() const;

    const std::vector<ChoiceObs>& observations() const { return obs_; }

private:
    std::vector<ChoiceObs> obs_;
};

/// Returns true when it can prove that every completion of the given partial
/// strategy is unsafe; false means "don't know".
using PartialCheckFn = std::function<bool(const PartialStrategy&)>;

struct EliminationStats {
    uint64_t pruned_subtrees = 0;
    uint64_t checks = 0;
};

/// Walks the strategy tree, pruning subtrees whose root fails the partial
/// check. The output contains every safe memoryless strategy (pruning is
/// sound); it may also contain unsafe ones, filtered downstream.
std::vector<MemorylessStrategy> strategy_elimination(const StrategyTree& tree,
                                                     const PartialCheckFn& check,
                                                     EliminationStats* stats = nullptr);

}  // namespace qsynth
