#include "qsynth/game.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <ostream>

namespace qsynth {

namespace {

void collect_conjuncts(const Guard& g, std::vector<const Guard*>& out) {
    if (g.kind == Guard::Kind::And) {
        collect_conjuncts(*g.a, out);
        collect_conjuncts(*g.b, out);
    } else {
        out.push_back(&g);
    }
}

// lock vars v with a top-level conjunct v == 0 (either orientation)
std::vector<int> held_lock_conjuncts(const PartialProgram& p, const Guard& g) {
    std::vector<const Guard*> cs;
    collect_conjuncts(g, cs);
    std::vector<int> out;
    for (const Guard* c : cs) {
        if (c->kind != Guard::Kind::Cmp || c->rel != Rel::Eq) continue;
        const Term* var = nullptr;
        const Term* k = nullptr;
        if (c->lhs->kind == Term::Kind::Var && c->rhs->kind == Term::Kind::Const) {
            var = c->lhs.get();
            k = c->rhs.get();
        } else if (c->rhs->kind == Term::Kind::Var && c->lhs->kind == Term::Kind::Const) {
            var = c->rhs.get();
            k = c->lhs.get();
        } else {
            continue;
        }
        if (k->value == 0 && p.is_lock(var->var)) out.push_back(var->var);
    }
    return out;
}

struct NodeKey {
    SysKey sys;
    int t = -1;  // scheduled thread for P1 nodes
    int iota = -1;

    friend auto operator<=>(const NodeKey&, const NodeKey&) = default;
};

}  // namespace

Composer::Composer(PartialProgram p, Scheduler sch, PerformanceAutomaton w, SafetyConditions conds,
                   ComposeOptions opt)
    : p_(std::move(p)), sch_(std::move(sch)), w_(std::move(w)), conds_(conds), opt_(opt) {
    compute_accesses(p_);
    if (auto err = w_.finalize()) throw std::runtime_error("performance automaton: " + *err);
    for (const auto& c : p_.threads) thread_names_.push_back(c.name);
    if (auto err = sch_.bind_check(thread_names_)) throw std::runtime_error("scheduler: " + *err);

    cs_sym_ = w_.find_symbol("cs");
    track_cs_ = cs_sym_ >= 0;
    // program cost symbols the automaton does not know cost nothing
    for (const auto& sym : p_.symbols) {
        int i = w_.find_symbol(sym);
        sym_map_.push_back(i >= 0 ? i : -1);
    }

    lock_slot_.assign(p_.vars.size(), -1);
    for (size_t v = 0; v < p_.vars.size(); ++v)
        if (p_.is_lock((int)v)) {
            lock_slot_[v] = (int)lock_list_.size();
            lock_list_.push_back((int)v);
        }

    actions_.resize(p_.threads.size());
    is_choice_.resize(p_.threads.size());
    input_combos_.resize(p_.threads.size());
    wait_locks_.resize(p_.threads.size());
    lock_writes_.resize(p_.threads.size());
    obs_index_.resize(p_.threads.size());
    for (size_t t = 0; t < p_.threads.size(); ++t) {
        const Thread& c = p_.threads[t];
        is_choice_[t].assign(c.locations.size(), 0);
        for (int q : choice_locations(p_, c)) is_choice_[t][q] = 1;
        actions_[t].resize(c.locations.size());
        for (size_t q = 0; q < c.locations.size(); ++q)
            actions_[t][q] = enumerate_actions(p_, c, (int)q, opt_.all_subsets);
        obs_index_[t].assign(c.locations.size(), -1);

        // cartesian product of the thread's input domains
        std::vector<std::vector<int>>& combos = input_combos_[t];
        combos.push_back({});
        for (int v : c.inputs) {
            std::vector<std::vector<int>> grown;
            for (const auto& base : combos)
                for (int x = p_.vars[v].lo; x <= p_.vars[v].hi; ++x) {
                    auto e = base;
                    e.push_back(x);
                    grown.push_back(std::move(e));
                }
            combos = std::move(grown);
        }

        for (const auto& tr : c.transitions) {
            wait_locks_[t].push_back(held_lock_conjuncts(p_, *tr.guard));
            std::vector<std::pair<int, int>> lw;
            for (const auto& as : tr.op.assigns)
                if (p_.is_lock(as.target) && as.value->kind == Term::Kind::Const)
                    lw.push_back({as.target, (int)as.value->value});
            lock_writes_[t].push_back(std::move(lw));
        }
    }
    build();
}

bool Composer::enabled_with_iota(int t, const Transition& tr, const Valuation& base,
                                 int iota) const {
    const Thread& c = p_.threads[t];
    Valuation v = base;
    const auto& combo = input_combos_[t][iota];
    for (size_t i = 0; i < c.inputs.size(); ++i) v[c.inputs[i]] = combo[i];
    return eval_guard(*tr.guard, v);
}

std::vector<Composer::Enab> Composer::enabling(int t, const std::vector<int>& kept,
                                               const SysKey& key) const {
    std::vector<Enab> out;
    for (int iota = 0; iota < (int)input_combos_[t].size(); ++iota)
        for (int tr : kept)
            if (enabled_with_iota(t, p_.threads[t].transitions[tr], key.vals, iota)) {
                out.push_back({iota, tr});
                break;
            }
    return out;
}

std::vector<int> Composer::enabled_set(int t, const std::vector<int>& kept,
                                       const SysKey& key) const {
    std::vector<int> out;
    for (int tr : kept) {
        for (int iota = 0; iota < (int)input_combos_[t].size(); ++iota)
            if (enabled_with_iota(t, p_.threads[t].transitions[tr], key.vals, iota)) {
                out.push_back(tr);
                break;
            }
    }
    return out;
}

// Applies the thread transition: locations, variables (inputs patched for
// evaluation then zeroed again), and lock holders. Perf/scheduler fields are
// the caller's business.
SysKey Composer::next_sys(const SysKey& key, int t, int iota, int trans) const {
    const Thread& c = p_.threads[t];
    const Transition& tr = c.transitions[trans];
    SysKey out = key;
    const auto& combo = input_combos_[t][iota];
    for (size_t i = 0; i < c.inputs.size(); ++i) out.vals[c.inputs[i]] = combo[i];
    out.vals = apply_operation(p_, tr.op, out.vals);
    for (int v : c.inputs) out.vals[v] = 0;
    out.locs[t] = tr.to;
    if (!out.holders.empty())
        for (const auto& [v, x] : lock_writes_[t][trans]) out.holders[lock_slot_[v]] = x ? t : -1;
    return out;
}

bool Composer::conflict(const Transition& a, const Transition& b) const {
    for (const auto& aa : a.accesses) {
        if (p_.is_lock(aa.var)) continue;
        for (const auto& ba : b.accesses)
            if (aa.var == ba.var && (aa.write || ba.write)) return true;
    }
    return false;
}

namespace {

// Cycle detection in the waits-for relation restricted to waiting threads.
bool has_cycle(const std::vector<std::vector<int>>& edges, const std::vector<char>& waiting) {
    int n = (int)edges.size();
    std::vector<int> color(n, 0);
    std::function<bool(int)> dfs = [&](int v) -> bool {
        color[v] = 1;
        for (int w : edges[v]) {
            if (!waiting[w]) continue;
            if (color[w] == 1) return true;
            if (color[w] == 0 && dfs(w)) return true;
        }
        color[v] = 2;
        return false;
    };
    for (int v = 0; v < n; ++v)
        if (waiting[v] && color[v] == 0 && dfs(v)) return true;
    return false;
}

}  // namespace

// Shared walk machinery for build(), fix_strategy() and partial_check().
struct ComposeWalk {
    const Composer& c;
    // kept transition list per (thread, location); nullptr entries impossible
    std::function<const std::vector<int>&(int, int)> kept;

    const std::vector<int>& kept_at(const SysKey& key, int t) const {
        return kept(t, key.locs[t]);
    }

    bool terminal(const SysKey& key) const {
        for (size_t t = 0; t < c.p_.threads.size(); ++t)
            if (!kept_at(key, (int)t).empty()) return false;
        return true;
    }

    std::vector<int> active(const SysKey& key) const {
        std::vector<int> out;
        for (size_t t = 0; t < c.p_.threads.size(); ++t)
            if (!c.enabling((int)t, kept_at(key, (int)t), key).empty()) out.push_back((int)t);
        return out;
    }

    bool race(const SysKey& key) const {
        size_t n = c.p_.threads.size();
        std::vector<std::vector<int>> en(n);
        for (size_t t = 0; t < n; ++t) en[t] = c.enabled_set((int)t, kept_at(key, (int)t), key);
        for (size_t t1 = 0; t1 < n; ++t1)
            for (size_t t2 = t1 + 1; t2 < n; ++t2)
                for (int a : en[t1])
                    for (int b : en[t2])
                        if (c.conflict(c.p_.threads[t1].transitions[a],
                                       c.p_.threads[t2].transitions[b]))
                            return true;
        return false;
    }

    // blocked(t) must mean: t cannot move now under any relevant kept set.
    bool waits_cycle(const SysKey& key, const std::function<bool(int)>& blocked) const {
        if (key.holders.empty()) return false;
        size_t n = c.p_.threads.size();
        std::vector<std::vector<int>> edges(n);
        std::vector<char> waiting(n, 0);
        for (size_t t = 0; t < n; ++t) {
            const auto& k = kept_at(key, (int)t);
            if (k.empty() || !blocked((int)t)) continue;
            bool all_lock_blocked = true;
            std::vector<int> targets;
            for (int tr : k) {
                bool found = false;
                for (int g : c.wait_locks_[t][tr]) {
                    int h = key.holders[c.lock_slot_[g]];
                    if (key.vals[g] == 1 && h >= 0 && h != (int)t) {
                        targets.push_back(h);
                        found = true;
                    }
                }
                if (!found) {
                    all_lock_blocked = false;
                    break;
                }
            }
            if (all_lock_blocked) {
                waiting[t] = 1;
                edges[t] = std::move(targets);
            }
        }
        return has_cycle(edges, waiting);
    }

    bool stuck_dead(const SysKey& key) const {
        bool nonterminal = false;
        for (size_t t = 0; t < c.p_.threads.size(); ++t) {
            if (!c.enabling((int)t, kept_at(key, (int)t), key).empty()) return false;
            if (!kept_at(key, (int)t).empty()) nonterminal = true;
        }
        return nonterminal;
    }
};

void Composer::build() {
    ComposeWalk walk{*this,
                     [this](int t, int loc) -> const std::vector<int>& { return kept_all(t, loc); }};

    SysKey init;
    init.locs.resize(p_.threads.size());
    for (size_t t = 0; t < p_.threads.size(); ++t) init.locs[t] = p_.threads[t].initial_loc;
    init.vals.assign(p_.vars.size(), 0);
    for (size_t v = 0; v < p_.vars.size(); ++v) init.vals[v] = p_.vars[v].initial.value_or(0);
    init.perf = w_.initial;
    init.sched = sch_.initial;
    if (conds_.deadlock) init.holders.assign(lock_list_.size(), -1);

    std::map<NodeKey, int> index;
    std::vector<NodeKey> keys;
    std::vector<int> depth;
    std::map<std::pair<int, int>, int> obs_id;
    std::map<std::pair<int, int>, int> choice_depth;
    std::deque<int> queue;

    auto add = [&](NodeKey k, int d) {
        auto it = index.find(k);
        if (it != index.end()) return it->second;
        int id = (int)keys.size();
        if ((uint64_t)id >= opt_.state_cap) throw StateCapExceeded("game state cap exceeded");
        index.emplace(k, id);
        keys.push_back(k);
        depth.push_back(d);
        game_.states.emplace_back();
        GameGraph::State& st = game_.states.back();
        if (k.t >= 0) {
            st.p1 = true;
            std::pair<int, int> key{k.t, k.sys.locs[k.t]};
            auto [oit, fresh] = obs_id.emplace(key, (int)game_.obs_keys.size() + 1);
            if (fresh) game_.obs_keys.push_back(key);
            st.obs = oit->second;
            if (is_choice_[k.t][key.second] && !choice_depth.count(key)) choice_depth[key] = d;
        }
        queue.push_back(id);
        return id;
    };

    add(NodeKey{init, -1, -1}, 0);
    game_.initial = 0;

    while (!queue.empty()) {
        int id = queue.front();
        queue.pop_front();
        NodeKey nk = keys[id];
        std::vector<GameGraph::Action> acts;
        unsigned flags = 0;

        if (nk.t < 0) {
            const SysKey& sys = nk.sys;
            if (walk.race(sys)) flags |= GameGraph::FlagBadRace;
            {
                auto blocked = [&](int t) {
                    return walk.c.enabling(t, walk.kept_at(sys, t), sys).empty();
                };
                if (walk.stuck_dead(sys) || walk.waits_cycle(sys, blocked))
                    flags |= GameGraph::FlagBadDeadlock;
            }
            if (walk.terminal(sys)) {
                flags |= GameGraph::FlagTerminal;
                acts.push_back({0, {{game_.initial, Rat(1), Rat(0), false}}});
            } else {
                auto act = walk.active(sys);
                std::vector<std::vector<Enab>> en;
                for (int t : act) en.push_back(enabling(t, kept_all(t, sys.locs[t]), sys));
                auto mid_of = [&](int t) {
                    SysKey mid = sys;
                    mid.sched = sch_.step(sys.sched, thread_names_[t]);
                    if (track_cs_) mid.last = t;
                    return mid;
                };
                auto env_step = [&](int t) {
                    int sym = (track_cs_ && sys.last >= 0 && sys.last != t) ? cs_sym_ : -1;
                    return w_.step(sys.perf, sym);
                };
                if (sch_.mode == Scheduler::Mode::Nondeterministic) {
                    int label = 0;
                    for (size_t i = 0; i < act.size(); ++i)
                        for (const Enab& e : en[i]) {
                            int t = act[i];
                            auto [perf1, c1] = env_step(t);
                            SysKey mid = mid_of(t);
                            mid.perf = perf1;
                            int tgt = add(NodeKey{mid, t, e.iota}, depth[id] + 1);
                            acts.push_back({label++, {{tgt, Rat(1), c1, false}}});
                        }
                } else {
                    auto picks = restrict_active(sch_, sys.sched, thread_names_, act);
                    if (picks.empty()) {
                        acts.push_back({0, {{game_.initial, Rat(1), Rat(0), false}}});
                    } else {
                        // odometer over per-thread input choices
                        std::vector<int> pick_pos;  // position of picks[j] in act
                        for (auto& [t, _] : picks)
                            pick_pos.push_back(
                                (int)(std::find(act.begin(), act.end(), t) - act.begin()));
                        std::vector<size_t> sel(picks.size(), 0);
                        int label = 0;
                        while (true) {
                            GameGraph::Action a;
                            a.label = label++;
                            for (size_t j = 0; j < picks.size(); ++j) {
                                int t = picks[j].first;
                                const Enab& e = en[pick_pos[j]][sel[j]];
                                auto [perf1, c1] = env_step(t);
                                SysKey mid = mid_of(t);
                                mid.perf = perf1;
                                int tgt = add(NodeKey{mid, t, e.iota}, depth[id] + 1);
                                a.outcomes.push_back({tgt, picks[j].second, c1, false});
                            }
                            acts.push_back(std::move(a));
                            size_t j = 0;
                            for (; j < sel.size(); ++j) {
                                if (++sel[j] < en[pick_pos[j]].size()) break;
                                sel[j] = 0;
                            }
                            if (j == sel.size()) break;
                        }
                    }
                }
            }
        } else {
            const SysKey& mid = nk.sys;
            int t = nk.t, loc = mid.locs[t];
            for (size_t ai = 0; ai < actions_[t][loc].size(); ++ai) {
                int fired = -1;
                for (int tr : actions_[t][loc][ai].transitions)
                    if (enabled_with_iota(t, p_.threads[t].transitions[tr], mid.vals, nk.iota)) {
                        fired = tr;
                        break;
                    }
                if (fired < 0) continue;
                const Transition& tr = p_.threads[t].transitions[fired];
                auto [perf2, c2] =
                    w_.step(mid.perf, tr.cost_symbol < 0 ? -1 : sym_map_[tr.cost_symbol]);
                SysKey ts = next_sys(mid, t, nk.iota, fired);
                ts.perf = perf2;
                int tgt = walk.terminal(ts) ? game_.initial
                                            : add(NodeKey{ts, -1, -1}, depth[id] + 1);
                acts.push_back({(int)ai, {{tgt, Rat(1), c2, false}}});
            }
            if (acts.empty()) acts.push_back({0, {{game_.initial, Rat(1), Rat(0), false}}});
        }

        game_.states[id].flags = flags;
        game_.states[id].actions = std::move(acts);
    }

    // choice observation order: earliest BFS depth, then thread, then location
    std::vector<std::pair<int, std::pair<int, int>>> order;
    for (const auto& [key, d] : choice_depth) order.push_back({d, key});
    std::sort(order.begin(), order.end());
    for (const auto& [d, key] : order) {
        obs_index_[key.first][key.second] = (int)choice_obs_.size();
        choice_keys_.push_back(key);
        choice_obs_.push_back(
            {key.first, key.second, (int)actions_[key.first][key.second].size()});
    }

    label_safety(game_, conds_);
}

FixedSystem Composer::fix_strategy(const MemorylessStrategy& s) const {
    if (s.choice.size() != choice_obs_.size())
        throw std::runtime_error("strategy does not match the choice observations");
    ComposeWalk walk{*this, [this, &s](int t, int loc) -> const std::vector<int>& {
                         int oi = obs_index_[t][loc];
                         if (oi >= 0) return actions_[t][loc][s.choice[oi]].transitions;
                         return kept_all(t, loc);
                     }};

    FixedSystem fs;
    fs.nondet = sch_.mode == Scheduler::Mode::Nondeterministic;

    SysKey init;
    init.locs.resize(p_.threads.size());
    for (size_t t = 0; t < p_.threads.size(); ++t) init.locs[t] = p_.threads[t].initial_loc;
    init.vals.assign(p_.vars.size(), 0);
    for (size_t v = 0; v < p_.vars.size(); ++v) init.vals[v] = p_.vars[v].initial.value_or(0);
    init.perf = w_.initial;
    init.sched = sch_.initial;
    if (conds_.deadlock) init.holders.assign(lock_list_.size(), -1);

    std::map<SysKey, int> index;
    std::deque<int> queue;
    auto add = [&](const SysKey& k) {
        auto it = index.find(k);
        if (it != index.end()) return it->second;
        int id = (int)fs.keys.size();
        if ((uint64_t)id >= opt_.state_cap) throw StateCapExceeded("state cap exceeded");
        index.emplace(k, id);
        fs.keys.push_back(k);
        fs.mdp.states.emplace_back();
        queue.push_back(id);
        return id;
    };

    auto self_loop = [](MDP::State& st, Rat w) {
        st.actions.push_back({0, {{0, Rat(1), w}}});
        st.actions.back().edges[0].target = -1;  // patched below with own id
    };

    add(init);
    fs.mdp.initial = 0;

    while (!queue.empty()) {
        int id = queue.front();
        queue.pop_front();
        SysKey sys = fs.keys[id];
        MDP::State st;

        if (walk.terminal(sys)) {
            // only the initial state can be terminal; successors redirect
            self_loop(st, Rat(0));
        } else if (conds_.race && walk.race(sys)) {
            st.bad = true;
            self_loop(st, Rat(0));
        } else if (conds_.deadlock &&
                   (walk.stuck_dead(sys) || walk.waits_cycle(sys, [&](int t) {
                        return enabling(t, walk.kept_at(sys, t), sys).empty();
                    }))) {
            st.bad = true;
            self_loop(st, Rat(0));
        } else {
            auto act = walk.active(sys);
            std::vector<std::vector<Enab>> en;
            for (int t : act) en.push_back(enabling(t, walk.kept_at(sys, t), sys));

            auto step_through = [&](int t, const Enab& e) -> std::pair<SysKey, Rat> {
                int sym = (track_cs_ && sys.last >= 0 && sys.last != t) ? cs_sym_ : -1;
                auto [perf1, c1] = w_.step(sys.perf, sym);
                const Transition& tr = p_.threads[t].transitions[e.trans];
                auto [perf2, c2] =
                    w_.step(perf1, tr.cost_symbol < 0 ? -1 : sym_map_[tr.cost_symbol]);
                SysKey ts = next_sys(sys, t, e.iota, e.trans);
                ts.perf = perf2;
                ts.sched = sch_.step(sys.sched, thread_names_[t]);
                ts.last = track_cs_ ? t : -1;
                return {std::move(ts), c1 + c2};
            };

            if (fs.nondet) {
                int label = 0;
                for (size_t i = 0; i < act.size(); ++i)
                    for (const Enab& e : en[i]) {
                        auto [ts, w] = step_through(act[i], e);
                        int tgt = walk.terminal(ts) ? 0 : add(ts);
                        st.actions.push_back({label++, {{tgt, Rat(1), w}}});
                    }
                if (st.actions.empty()) st.actions.push_back({0, {{0, Rat(1), Rat(0)}}});
            } else {
                auto picks = restrict_active(sch_, sys.sched, thread_names_, act);
                if (picks.empty()) {
                    st.actions.push_back({0, {{0, Rat(1), Rat(0)}}});
                } else {
                    std::vector<int> pick_pos;
                    for (auto& [t, _] : picks)
                        pick_pos.push_back(
                            (int)(std::find(act.begin(), act.end(), t) - act.begin()));
                    std::vector<size_t> sel(picks.size(), 0);
                    int label = 0;
                    while (true) {
                        MDP::Action a;
                        a.label = label++;
                        for (size_t j = 0; j < picks.size(); ++j) {
                            auto [ts, w] = step_through(picks[j].first, en[pick_pos[j]][sel[j]]);
                            int tgt = walk.terminal(ts) ? 0 : add(ts);
                            a.edges.push_back({tgt, picks[j].second, w});
                        }
                        st.actions.push_back(std::move(a));
                        size_t j = 0;
                        for (; j < sel.size(); ++j) {
                            if (++sel[j] < en[pick_pos[j]].size()) break;
                            sel[j] = 0;
                        }
                        if (j == sel.size()) break;
                    }
                }
            }
        }
        for (auto& a : st.actions)
            for (auto& e : a.edges)
                if (e.target < 0) e.target = id;
        fs.mdp.states[id] = std::move(st);
    }
    return fs;
}

bool Composer::partial_check(const PartialStrategy& s) const {
    if (!conds_.race && !conds_.deadlock) return false;
    if (s.choice.size() != choice_obs_.size())
        throw std::runtime_error("strategy does not match the choice observations");

    static const std::vector<int> kEmpty;
    // kept set under every completion; empty when the observation is open
    auto kept_min = [&](int t, int loc) -> const std::vector<int>& {
        int oi = obs_index_[t][loc];
        if (oi >= 0)
            return s.choice[oi] >= 0 ? actions_[t][loc][s.choice[oi]].transitions : kEmpty;
        return kept_all(t, loc);
    };
    // superset of the kept set under any completion
    auto kept_ext = [&](int t, int loc) -> const std::vector<int>& {
        int oi = obs_index_[t][loc];
        if (oi >= 0 && s.choice[oi] >= 0) return actions_[t][loc][s.choice[oi]].transitions;
        return kept_all(t, loc);
    };
    ComposeWalk walk{*this, kept_min};

    SysKey init;
    init.locs.resize(p_.threads.size());
    for (size_t t = 0; t < p_.threads.size(); ++t) init.locs[t] = p_.threads[t].initial_loc;
    init.vals.assign(p_.vars.size(), 0);
    for (size_t v = 0; v < p_.vars.size(); ++v) init.vals[v] = p_.vars[v].initial.value_or(0);
    if (conds_.deadlock) init.holders.assign(lock_list_.size(), -1);

    std::map<SysKey, int> index;
    std::deque<SysKey> queue;
    index.emplace(init, 0);
    queue.push_back(init);

    while (!queue.empty()) {
        SysKey sys = std::move(queue.front());
        queue.pop_front();

        if (conds_.race && walk.race(sys)) return true;
        if (conds_.deadlock) {
            bool all_blocked = true;
            bool nonterminal = false;
            for (size_t t = 0; t < p_.threads.size(); ++t) {
                if (!enabling((int)t, kept_ext((int)t, sys.locs[t]), sys).empty())
                    all_blocked = false;
                if (!kept_min((int)t, sys.locs[t]).empty()) nonterminal = true;
            }
            if (all_blocked && nonterminal) return true;
            auto blocked = [&](int t) {
                return enabling(t, kept_ext(t, sys.locs[t]), sys).empty();
            };
            if (walk.waits_cycle(sys, blocked)) return true;
        }

        for (size_t t = 0; t < p_.threads.size(); ++t) {
            int loc = sys.locs[t];
            int oi = obs_index_[t][loc];
            if (oi >= 0 && s.choice[oi] < 0) continue;  // open: moves not certain
            if (sch_.mode == Scheduler::Mode::Probabilistic && !sch_.uniform &&
                !sch_.weights[sys.sched].count(thread_names_[t]))
                continue;
            for (const Enab& e : enabling((int)t, kept_min((int)t, loc), sys)) {
                SysKey ts = next_sys(sys, (int)t, e.iota, e.trans);
                ts.sched = sch_.step(sys.sched, thread_names_[t]);
                if (index.size() >= opt_.state_cap) return false;
                if (index.emplace(ts, (int)index.size()).second) queue.push_back(std::move(ts));
            }
        }
    }
    return false;
}

void label_safety(GameGraph& g, SafetyConditions conds) {
    unsigned mask = 0;
    if (conds.race) mask |= GameGraph::FlagBadRace;
    if (conds.deadlock) mask |= GameGraph::FlagBadDeadlock;
    for (size_t i = 0; i < g.states.size(); ++i) {
        auto& st = g.states[i];
        if (!(st.flags & mask)) continue;
        st.flags |= GameGraph::FlagBad;
        st.actions.clear();
        st.actions.push_back({0, {{(int)i, Rat(1), Rat(0), true}}});
    }
}

void dump_dot(const GameGraph& g, std::ostream& os) {
    os << "digraph game {\n";
    for (size_t i = 0; i < g.states.size(); ++i) {
        const auto& st = g.states[i];
        os << "  s" << i << " [shape=" << (st.p1 ? "circle" : "box") << " label=\"s" << i;
        if (st.p1 && st.obs > 0) {
            auto [t, q] = g.obs_keys[st.obs - 1];
            os << "\\nobs(t" << t << ",q" << q << ")";
        }
        if (st.flags & GameGraph::FlagBad) os << "\\nBAD";
        if (st.flags & GameGraph::FlagBadRace) os << "\\nrace";
        if (st.flags & GameGraph::FlagBadDeadlock) os << "\\ndeadlock";
        if (st.flags & GameGraph::FlagTerminal) os << "\\nterminal";
        os << "\"];\n";
        for (const auto& a : st.actions)
            for (const auto& o : a.outcomes) {
                os << "  s" << i << " -> s" << o.target << " [label=\"a" << a.label << " p="
                   << rat_str(o.prob) << " w=";
                if (o.inf)
                    os << "inf";
                else
                    os << rat_str(o.weight);
                os << "\"];\n";
            }
    }
    os << "}\n";
}

}  // namespace qsynth
