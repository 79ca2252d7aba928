#pragma once

#include <array>
#include <string>
#include <vector>

#include "qsynth/game.hpp"

namespace qsynth {

/// 3-CNF formula; literals are +/-(1-based variable index), 0 is invalid.
struct Cnf {
    int num_vars = 0;
    std::vector<std::array<int, 3>> clauses;
};

/// Exhaustive satisfiability check; throws for more than 20 variables.
bool brute_force_sat(const Cnf& f);

/// DIMACS cnf reader restricted to 3-literal clauses (shorter clauses are
/// padded by repeating the last literal).
Cnf parse_dimacs(const std::string& text);

/// The reduction gadget built directly as a game graph: one P2 `init` state
/// branching per clause, a P1 state per clause literal observing only the
/// literal's variable, and an absorbing `bad` state reached by falsifying a
/// whole clause. 3K+2 states, N+1 observations. The safety variant flags
/// `bad`; the limit-average variant instead weights bad's self-loop 1 and
/// every other edge 0, so the optimal value is 0 when the formula is
/// satisfiable and 1 otherwise.
struct SatGadget {
    GameGraph safety;
    GameGraph limavg;
    bool satisfiable = false;
};

SatGadget gen_sat_gadget(const Cnf& f);

/// A generated example: frontend-format sources plus their parsed forms and
/// the safety conditions the example is meant to run under.
struct GalleryInstance {
    std::string name;
    std::string program_src;
    std::string perf_src;
    std::string sched_src;
    PartialProgram program;
    Scheduler sched;
    PerformanceAutomaton perf;
    SafetyConditions conds;
};

/// Shared buffer with a per-thread choice between one global lock (coarse)
/// and per-cell locks (fine). Lock operations cost `lock_cost` on symbol l,
/// cell reads/writes cost `copy_cost` on symbol m. granularity: 0 = choice,
/// 1 = coarse only, 2 = fine only.
GalleryInstance gen_producer_consumer(int producers, int consumers, int cells,
                                      const Rat& lock_cost, const Rat& copy_cost,
                                      int granularity = 0);

/// Two optimistic-concurrency threads: each picks a batch size n (the choice),
/// snapshots a modular version counter, works for n * work_len steps, then
/// locks and validates; a concurrent commit forces the whole batch to be
/// redone. Re-executed work is charged `work_cost` on symbol wr (first
/// execution is the free baseline), locking costs `lock_cost`, snapshot and
/// validation cost 1. fixed_n > 0 hardwires the batch size (choice-free).
GalleryInstance gen_optimistic(int n_max, const Rat& work_cost, const Rat& lock_cost,
                               int work_len, int fixed_n = 0);

/// Static-worker work division: a master picks how many of the
/// n_threads_max workers to activate, then polls until a shared item counter
/// runs out. A worker's activation step performs its first item and costs
/// init_cost + work_cost; plain items cost work_cost; every bookkeeping or
/// polling step costs idle_cost. fixed_n > 0 hardwires the worker count.
GalleryInstance gen_work_sharing(int n_threads_max, const Rat& init_cost, int array_len,
                                 const Rat& work_cost = Rat(1), const Rat& idle_cost = Rat(1),
                                 int fixed_n = 0);

/// Two threads batching read/write sweeps over `lines` memory lines under a
/// global lock; the batch size is the choice. The performance automaton is
/// the synchronous product of one cached/uncached automaton per line; a
/// context switch evicts every line. fixed_n > 0 hardwires the batch size.
GalleryInstance gen_cache_example(int n_max, int lines, const Rat& cached_cost,
                                  const Rat& uncached_cost, int fixed_n = 0);

/// Small cross-checking suite: every instance builds under the default state
/// cap and has at most 64 memoryless strategies.
std::vector<GalleryInstance> gallery_small();

}  // namespace qsynth
