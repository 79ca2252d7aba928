#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsynth/rational.hpp"

namespace qsynth {

/// Deterministic weighted automaton over cost symbols. Symbol -1 is the
/// "nothing tracked happened" symbol (spelled `bot` in source files); states
/// without an explicit bot edge get a cost-0 self-loop. Any other missing
/// (state, symbol) pair is a validation error.
struct PerformanceAutomaton {
    struct Edge {
        int target = -1;
        Rat cost;
    };
    std::vector<std::string> states;
    std::vector<std::string> symbols;  // without bot
    int initial = 0;
    // edges[state][symbol]; index symbols.size() holds the bot edge
    std::vector<std::vector<std::optional<Edge>>> edges;

    int find_state(const std::string& name) const;
    int find_symbol(const std::string& name) const;  // -1 for "bot"

    /// Fills in default bot self-loops and checks totality on non-bot symbols.
    /// Returns a message on failure.
    std::optional<std::string> finalize();

    /// (successor, cost) for a symbol; sym == -1 is bot.
    std::pair<int, Rat> step(int state, int sym) const;

    static PerformanceAutomaton trivial();  // one state, empty alphabet
};

/// Finite-memory thread picker. Probabilistic mode holds exact-rational
/// weights per (memory state, thread name); nondeterministic mode exposes the
/// active set verbatim. `uniform` is a 1-state probabilistic scheduler that
/// splits evenly over whatever threads the program declares.
struct Scheduler {
    enum class Mode { Nondeterministic, Probabilistic };
    Mode mode = Mode::Probabilistic;
    bool uniform = false;
    std::vector<std::string> memory;  // at least one state
    int initial = 0;
    // weights[state][thread name]; absent = 0
    std::vector<std::map<std::string, Rat>> weights;
    // next[state][thread name]; absent = stay
    std::vector<std::map<std::string, int>> next;

    int find_state(const std::string& name) const;
    int step(int state, const std::string& thread) const;

    static Scheduler make_uniform();
    static Scheduler make_nondet();

    /// Checks that per-state weights sum to exactly 1 (unless uniform or
    /// nondeterministic) and that thread names are among `threads`.
    std::optional<std::string> bind_check(const std::vector<std::string>& threads) const;
};

/// Renormalized pick distribution over the active subset, as (thread, weight)
/// pairs with positive weights summing to 1. Empty when no active thread has
/// scheduler support (the caller decides what blocked means).
std::vector<std::pair<int, Rat>> restrict_active(const Scheduler& sch, int state,
                                                 const std::vector<std::string>& thread_names,
                                                 const std::vector<int>& active);

}  // namespace qsynth
