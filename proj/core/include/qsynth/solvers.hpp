#pragma once

#include <utility>
#include <vector>

#include "qsynth/rational.hpp"

namespace qsynth {

/// Finite MDP with exact-rational distributions and per-edge weights.
/// Distributions list support only (all probabilities positive). A Markov
/// chain is an MDP with exactly one action per state; a nondeterministic
/// weighted transition system uses point distributions and is evaluated by
/// max-mean-cycle instead of policy iteration.
struct MDP {
    struct Edge {
        int target;
        Rat prob;
        Rat weight;
    };
    struct Action {
        int label = 0;
        std::vector<Edge> edges;
    };
    struct State {
        std::vector<Action> actions;
        bool bad = false;
    };
    std::vector<State> states;
    int initial = 0;

    bool is_chain() const {
        for (const auto& s : states)
            if (s.actions.size() != 1) return false;
        return true;
    }
};

struct WeightedTS {
    struct Edge {
        int target;
        Rat weight;
    };
    std::vector<std::vector<Edge>> succ;
    std::vector<char> bad;
    int initial = 0;
};

/// Flattens an MDP with point distributions into a weighted TS; every action
/// choice and probabilistic branch becomes a nondeterministic edge.
WeightedTS to_wts(const MDP& m);

/// True iff a bad state is reachable from the initial state under some
/// resolution of nondeterminism (equivalently, with positive probability).
bool unsafe_reachable(const MDP& m);
bool unsafe_reachable(const WeightedTS& ts);

/// Maximum mean cycle weight over reachable cycles (Karp per SCC);
/// infinity when a bad state is reachable. Every state needs a successor.
ExtValue max_mean_cycle(const WeightedTS& ts);

/// Successor-list form of an irreducible Markov chain (probabilities only).
using SparseChain = std::vector<std::vector<std::pair<int, Rat>>>;

/// Exact stationary distribution by sparse Gaussian elimination of the
/// balance equations with a normalization row.
std::vector<Rat> gaussian_stationary(const SparseChain& chain);

/// Stationary distribution by forward propagation: remove DFS back edges,
/// express every state's weight as a linear form in the back-edge source
/// variables by substitution in topological order, and solve the small
/// residual system. Falls back to gaussian_stationary when there are more
/// than 64 back-edge sources. Output always equals gaussian_stationary's.
std::vector<Rat> stationary_forward_prop(const SparseChain& chain);

/// Long-run average weight of a Markov chain (single-action MDP): sum over
/// bottom SCCs of reach-probability times stationary average; infinity when
/// a bad state is reachable.
ExtValue mc_value(const MDP& chain);

struct MdpSolution {
    ExtValue value;
    std::vector<int> policy;  // maximizer action index per state; empty when infinite
};

/// Optimal long-run average for the maximizing controller via multichain
/// policy iteration with gain/bias improvement; infinity when bad reachable.
MdpSolution mdp_strategy_improvement(const MDP& m);

// Shared exact linear algebra (exposed for tests).
namespace linalg {
/// Solves a sparse square system given as rows of (column, coefficient)
/// pairs. Throws std::runtime_error when singular.
std::vector<Rat> sparse_solve(std::vector<std::vector<std::pair<int, Rat>>> rows,
                              std::vector<Rat> rhs);
}  // namespace linalg

}  // namespace qsynth
