#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qsynth/model.hpp"
#include "qsynth/perf.hpp"
#include "qsynth/solvers.hpp"
#include "qsynth/strategy.hpp"

namespace qsynth {

struct SafetyConditions {
    bool race = false;
    bool deadlock = false;
};

struct ComposeOptions {
    uint64_t state_cap = 5'000'000;
    bool all_subsets = false;
};

struct StateCapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Explicit two-player game graph. P2 (environment) states observe 0; P1
/// states observe 1 + the index of their (thread, location) pair. Weights are
/// finite until label_safety turns flagged states into absorbing infinite
/// self-loops.
struct GameGraph {
    struct Outcome {
        int target = 0;
        Rat prob;
        Rat weight;
        bool inf = false;
    };
    struct Action {
        int label = 0;
        std::vector<Outcome> outcomes;
    };
    enum : unsigned {
        FlagBadRace = 1,
        FlagBadDeadlock = 2,
        FlagTerminal = 4,
        FlagBad = 8,
    };
    struct State {
        bool p1 = false;
        int obs = 0;
        unsigned flags = 0;
        std::vector<Action> actions;
    };
    std::vector<State> states;
    int initial = 0;
    // observation id i+1 belongs to obs_keys[i] = (thread, location)
    std::vector<std::pair<int, int>> obs_keys;
};

/// Activates the bad flags selected by `conds`: flagged states get FlagBad
/// and are replaced by an absorbing self-loop of infinite weight.
void label_safety(GameGraph& g, SafetyConditions conds);

void dump_dot(const GameGraph& g, std::ostream& os);

/// Scheduling-round state of the composed system: thread locations, variable
/// values (input slots zeroed), performance and scheduler memory states, the
/// previously scheduled thread (tracked only when the cost alphabet contains
/// `cs`), and lock holders (tracked only under deadlock checking).
struct SysKey {
    std::vector<int> locs;
    Valuation vals;
    int perf = 0;
    int sched = 0;
    int last = -1;
    std::vector<int> holders;

    friend auto operator<=>(const SysKey&, const SysKey&) = default;
};

/// Strategy-fixed system in contracted form: one edge per scheduling round
/// (environment move plus the scheduled thread's transition, costs summed),
/// so a safe finite run of weights w1..wn repeated forever has value
/// exactly (Σwi)/n. Probabilistic scheduler yields an MDP whose actions are
/// the environment's input choices; nondeterministic scheduler yields point
/// distributions, evaluated as a weighted transition system.
struct FixedSystem {
    bool nondet = false;
    MDP mdp;
    std::vector<SysKey> keys;  // per MDP state
};

/// Product construction: the full observation game, strategy fixing, and the
/// sound partial-strategy safety check used for pruning.
class Composer {
public:
    Composer(PartialProgram p, Scheduler sch, PerformanceAutomaton w, SafetyConditions conds,
             ComposeOptions opt = {});

    const GameGraph& game() const { return game_; }

    /// Choice observations reachable in the game, ordered by earliest BFS
    /// discovery depth (ties by thread id, then location id).
    const std::vector<ChoiceObs>& choice_obs() const { return choice_obs_; }
    const std::vector<std::pair<int, int>>& choice_obs_keys() const { return choice_keys_; }

    const std::vector<ActionDef>& actions_at(int thread, int loc) const {
        return actions_[thread][loc];
    }

    const PartialProgram& program() const { return p_; }
    const Scheduler& scheduler() const { return sch_; }
    const PerformanceAutomaton& perf() const { return w_; }
    SafetyConditions conditions() const { return conds_; }

    /// Recomposes the system with the strategy's actions as the kept
    /// transition sets; equals the composition of the allowed program.
    FixedSystem fix_strategy(const MemorylessStrategy& s) const;

    /// True when every completion of the partial strategy is provably
    /// unsafe; false means "don't know". Explores only states reachable
    /// regardless of how unresolved observations are completed.
    bool partial_check(const PartialStrategy& s) const;

private:
    struct Enab {
        int iota;
        int trans;  // thread-local transition index
    };
    using KeptFn = const std::vector<int>* (*)(void*, int, int);

    bool enabled_with_iota(int t, const Transition& tr, const Valuation& base, int iota) const;
    std::vector<Enab> enabling(int t, const std::vector<int>& kept, const SysKey& key) const;
    std::vector<int> enabled_set(int t, const std::vector<int>& kept, const SysKey& key) const;
    SysKey next_sys(const SysKey& key, int t, int iota, int trans) const;
    const std::vector<int>& kept_all(int t, int loc) const { return p_.threads[t].out[loc]; }
    bool conflict(const Transition& a, const Transition& b) const;

    void build();

    PartialProgram p_;
    Scheduler sch_;
    PerformanceAutomaton w_;
    SafetyConditions conds_;
    ComposeOptions opt_;

    std::vector<std::string> thread_names_;
    std::vector<std::vector<std::vector<ActionDef>>> actions_;  // [thread][loc]
    std::vector<std::vector<char>> is_choice_;                  // [thread][loc]
    std::vector<std::vector<std::vector<int>>> input_combos_;   // [thread][combo][input#]
    std::vector<std::vector<std::vector<int>>> wait_locks_;     // [thread][trans] lock vars
    std::vector<std::vector<std::vector<std::pair<int, int>>>> lock_writes_;
    std::vector<int> lock_list_;  // global lock vars in index order
    std::vector<int> lock_slot_;  // var index -> slot in lock_list_ or -1
    bool track_cs_ = false;
    int cs_sym_ = -2;
    std::vector<int> sym_map_;  // program symbol index -> perf symbol index (-1 = bot)

    GameGraph game_;
    std::vector<ChoiceObs> choice_obs_;
    std::vector<std::pair<int, int>> choice_keys_;
    std::vector<std::vector<int>> obs_index_;  // [thread][loc] -> choice_obs_ index or -1

    friend struct ComposeWalk;
};

}  // namespace qsynth
