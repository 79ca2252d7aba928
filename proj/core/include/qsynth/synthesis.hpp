#pragma once

#include <string>
#include <vector>

#include "qsynth/abstraction.hpp"
#include "qsynth/game.hpp"

namespace qsynth {

struct ResolveOptions {
    bool use_abstraction = false;
    bool minimize = false;  // coarsest-bisimulation pass before solving
    bool prune = true;
    int threads = 1;
    ComposeOptions compose;
};

struct CandidateRow {
    MemorylessStrategy strategy;
    ExtValue value;
    bool safe = false;
};

struct ResolveResult {
    bool found = false;  // false = no safe program
    MemorylessStrategy best;
    ExtValue value = ExtValue::infinity();
    PartialProgram resolved;  // meaningful when found
    std::vector<CandidateRow> rows;
    EliminationStats stats;
    uint64_t total_strategies = 0;
    std::vector<std::string> notes;
};

/// Dispatches to the right solver: max-mean-cycle for nondeterministic
/// schedulers, mc_value for chains, policy iteration otherwise.
ExtValue solve_fixed(const FixedSystem& fs);

/// Value of a choice-free program (throws if the program has reachable
/// choice observations).
ExtValue value_of_program(const PartialProgram& p, const Scheduler& sch,
                          const PerformanceAutomaton& w, SafetyConditions conds,
                          ComposeOptions copt = {});

/// Full pipeline: enumerate strategies with sound pruning, evaluate each
/// (optionally through the abstraction quotient, always re-checked), return
/// the argmin with lexicographic tie-break. Candidate evaluation may run on
/// several threads; the result is deterministic regardless.
ResolveResult resolve(const PartialProgram& p, const Scheduler& sch,
                      const PerformanceAutomaton& w, SafetyConditions conds,
                      const ResolveOptions& opt = {});

/// resolve, then compare against the threshold; an infinite value never
/// satisfies the bound.
bool decide(const PartialProgram& p, const Scheduler& sch, const PerformanceAutomaton& w,
            SafetyConditions conds, const Rat& lambda, const ResolveOptions& opt = {});

/// The allowed program selected by a strategy: at every choice location only
/// the chosen action's transitions survive (unreachable choice locations get
/// the first action, keeping the output choice-free).
PartialProgram resolve_allowed(const Composer& c, const MemorylessStrategy& s);

/// Solver for hand-built observation games with nondeterministic (P2) edges:
/// enumerates memoryless observation strategies by action label and evaluates
/// each residual graph by max-mean-cycle.
struct GameSolveResult {
    bool found = false;  // some strategy with finite value
    ExtValue value = ExtValue::infinity();
    std::vector<int> obs;     // observation ids with a choice
    std::vector<int> labels;  // chosen action label per obs (best strategy)
    std::vector<std::pair<std::string, ExtValue>> rows;
};

GameSolveResult resolve_game(const GameGraph& g);

}  // namespace qsynth
