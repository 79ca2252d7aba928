#include "qsynth/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace qsynth {

namespace {

void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int k = std::min<int>(threads, (int)n);
    for (int i = 0; i < k; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace

ExtValue solve_fixed(const FixedSystem& fs) {
    if (fs.nondet) return max_mean_cycle(to_wts(fs.mdp));
    if (fs.mdp.is_chain()) return mc_value(fs.mdp);
    return mdp_strategy_improvement(fs.mdp).value;
}

ExtValue value_of_program(const PartialProgram& p, const Scheduler& sch,
                          const PerformanceAutomaton& w, SafetyConditions conds,
                          ComposeOptions copt) {
    Composer c(p, sch, w, conds, copt);
    if (!c.choice_obs().empty())
        throw std::runtime_error("value_of_program: program has unresolved choices");
    return solve_fixed(c.fix_strategy(MemorylessStrategy{}));
}

PartialProgram resolve_allowed(const Composer& c, const MemorylessStrategy& s) {
    PartialProgram out = c.program();
    std::map<std::pair<int, int>, int> chosen;  // (thread, loc) -> action index
    for (size_t i = 0; i < c.choice_obs().size(); ++i)
        chosen[c.choice_obs_keys()[i]] = s.choice[i];

    for (size_t t = 0; t < out.threads.size(); ++t) {
        Thread& th = out.threads[t];
        std::set<int> keep;
        std::vector<char> resolved(th.locations.size(), 0);
        for (int q : choice_locations(out, th)) {
            const auto& acts = c.actions_at((int)t, q);
            if (acts.empty()) continue;
            auto it = chosen.find({(int)t, q});
            int a = it != chosen.end() ? it->second : 0;
            resolved[q] = 1;
            for (int tr : acts[a].transitions) keep.insert(tr);
        }
        std::vector<Transition> trs;
        for (size_t i = 0; i < th.transitions.size(); ++i)
            if (!resolved[th.transitions[i].from] || keep.count((int)i))
                trs.push_back(th.transitions[i]);
        th.transitions = std::move(trs);
        th.out.assign(th.locations.size(), {});
        for (size_t i = 0; i < th.transitions.size(); ++i)
            th.out[th.transitions[i].from].push_back((int)i);
    }
    return out;
}

ResolveResult resolve(const PartialProgram& p, const Scheduler& sch,
                      const PerformanceAutomaton& w, SafetyConditions conds,
                      const ResolveOptions& opt) {
    Composer composer(p, sch, w, conds, opt.compose);
    StrategyTree tree(composer.choice_obs());

    ResolveResult res;
    res.total_strategies = tree.leaf_count();

    PartialCheckFn check;
    if (opt.prune)
        check = [&composer](const PartialStrategy& s) { return composer.partial_check(s); };
    else
        check = [](const PartialStrategy&) { return false; };

    auto candidates = strategy_elimination(tree, check, &res.stats);
    res.rows.resize(candidates.size());

    parallel_for(candidates.size(), opt.threads, [&](size_t i) {
        FixedSystem fs = composer.fix_strategy(candidates[i]);
        if (opt.use_abstraction) fs = apply_abstractions(p, std::move(fs));
        if (opt.minimize) {
            fs.mdp = quotient(fs.mdp, coarsest_qpb(fs.mdp));
            fs.keys.clear();
        }
        ExtValue v = solve_fixed(fs);
        res.rows[i] = {candidates[i], v, v.is_finite()};
    });

    int best = -1;
    for (size_t i = 0; i < res.rows.size(); ++i) {
        if (!res.rows[i].value.is_finite()) continue;
        if (best < 0 || res.rows[i].value < res.rows[best].value) best = (int)i;
    }
    if (best < 0) return res;  // no safe program

    res.found = true;
    res.best = res.rows[best].strategy;
    res.value = res.rows[best].value;
    if (opt.use_abstraction) {
        FixedSystem fs = composer.fix_strategy(res.best);
        apply_abstractions(p, std::move(fs), &res.notes);
    }
    res.resolved = resolve_allowed(composer, res.best);
    return res;
}

bool decide(const PartialProgram& p, const Scheduler& sch, const PerformanceAutomaton& w,
            SafetyConditions conds, const Rat& lambda, const ResolveOptions& opt) {
    ResolveResult r = resolve(p, sch, w, conds, opt);
    return r.found && r.value.value() <= lambda;
}

GameSolveResult resolve_game(const GameGraph& g) {
    GameSolveResult res;

    // collect choice observations and their action label sets
    std::map<int, std::set<int>> labels_of;
    for (const auto& st : g.states)
        if (st.p1 && st.obs > 0) {
            auto& ls = labels_of[st.obs];
            for (const auto& a : st.actions) ls.insert(a.label);
        }
    std::vector<int> obs;
    std::vector<std::vector<int>> labels;
    for (const auto& [o, ls] : labels_of) {
        obs.push_back(o);
        labels.push_back(std::vector<int>(ls.begin(), ls.end()));
    }
    res.obs = obs;

    auto evaluate = [&](const std::vector<int>& pick) {
        WeightedTS ts;
        ts.initial = g.initial;
        ts.succ.resize(g.states.size());
        ts.bad.assign(g.states.size(), 0);
        for (size_t s = 0; s < g.states.size(); ++s) {
            const auto& st = g.states[s];
            if (st.flags & GameGraph::FlagBad) ts.bad[s] = 1;
            int want = -1;
            if (st.p1 && st.obs > 0) {
                auto it = std::find(obs.begin(), obs.end(), st.obs);
                if (it != obs.end()) want = labels[it - obs.begin()][pick[it - obs.begin()]];
            }
            for (const auto& a : st.actions) {
                if (want >= 0 && a.label != want) continue;
                for (const auto& o : a.outcomes) {
                    if (o.inf) ts.bad[s] = 1;
                    ts.succ[s].push_back({o.target, o.weight});
                }
            }
            if (ts.succ[s].empty()) ts.succ[s].push_back({(int)s, Rat(0)});
        }
        return max_mean_cycle(ts);
    };

    std::vector<int> pick(obs.size(), 0);
    while (true) {
        ExtValue v = evaluate(pick);
        std::string enc;
        for (size_t i = 0; i < pick.size(); ++i) {
            if (i) enc += ";";
            enc += std::to_string(labels[i][pick[i]]);
        }
        res.rows.push_back({enc, v});
        if (v.is_finite() && (!res.found || v < res.value)) {
            res.found = true;
            res.value = v;
            res.labels.clear();
            for (size_t i = 0; i < pick.size(); ++i) res.labels.push_back(labels[i][pick[i]]);
        }
        size_t j = 0;
        for (; j < pick.size(); ++j) {
            if (++pick[j] < (int)labels[j].size()) break;
            pick[j] = 0;
        }
        if (j == pick.size()) break;
    }
    return res;
}

}  // namespace qsynth
