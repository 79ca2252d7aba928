#include <algorithm>
#include <functional>
#include <random>
#include <tuple>

#include "doctest.h"
#include "qsynth/solvers.hpp"

using namespace qsynth;

namespace {

// Oracle: maximum mean over all simple cycles, by DFS cycle enumeration.
// Only usable on tiny graphs.
ExtValue cycle_oracle(const WeightedTS& ts) {
    size_t n = ts.succ.size();
    std::vector<char> reach(n, 0);
    std::vector<int> stack = {ts.initial};
    reach[ts.initial] = 1;
    while (!stack.empty()) {
        int s = stack.back();
        stack.pop_back();
        if (ts.bad[s]) return ExtValue::infinity();
        for (const auto& e : ts.succ[s])
            if (!reach[e.target]) {
                reach[e.target] = 1;
                stack.push_back(e.target);
            }
    }
    bool any = false;
    Rat best;
    std::vector<int> on_path(n, -1);
    std::vector<Rat> acc(n);
    std::function<void(int, int)> dfs = [&](int s, int depth) {
        for (const auto& e : ts.succ[s]) {
            if (!reach[e.target]) continue;
            if (on_path[e.target] >= 0) {
                Rat w = acc[s] + e.weight - acc[e.target];
                int len = depth + 1 - on_path[e.target];
                Rat mean = w / Rat(len);
                if (!any || mean > best) best = mean, any = true;
            } else {
                on_path[e.target] = depth + 1;
                acc[e.target] = acc[s] + e.weight;
                dfs(e.target, depth + 1);
                on_path[e.target] = -1;
            }
        }
    };
    for (size_t s = 0; s < n; ++s)
        if (reach[s]) {
            on_path[s] = 0;
            acc[s] = Rat(0);
            dfs((int)s, 0);
            on_path[s] = -1;
        }
    REQUIRE(any);
    return ExtValue(best);
}

WeightedTS wts(int n, std::vector<std::tuple<int, int, Rat>> edges, std::vector<int> bad = {}) {
    WeightedTS ts;
    ts.succ.resize(n);
    ts.bad.assign(n, 0);
    for (auto& [f, t, w] : edges) ts.succ[f].push_back({t, w});
    for (int b : bad) ts.bad[b] = 1;
    return ts;
}

MDP chain_of(std::vector<std::vector<std::tuple<int, Rat, Rat>>> rows, std::vector<int> bad = {}) {
    MDP m;
    m.states.resize(rows.size());
    for (size_t s = 0; s < rows.size(); ++s) {
        MDP::Action a;
        for (auto& [t, p, w] : rows[s]) a.edges.push_back({(int)t, p, w});
        m.states[s].actions.push_back(a);
    }
    for (int b : bad) m.states[b].bad = true;
    return m;
}

}  // namespace

TEST_CASE("max_mean_cycle on hand-built graphs") {
    // single loop of weight 5
    CHECK(max_mean_cycle(wts(1, {{0, 0, Rat(5)}})).value() == Rat(5));
    // two loops; the heavier one wins
    auto g = wts(2, {{0, 1, Rat(1)}, {1, 0, Rat(3)}, {1, 1, Rat(7) / Rat(4)}});
    CHECK(max_mean_cycle(g).value() == Rat(2));  // (1+3)/2 beats 7/4
    // an unreachable heavy cycle does not count
    auto h = wts(3, {{0, 0, Rat(1)}, {1, 2, Rat(100)}, {2, 1, Rat(100)}});
    CHECK(max_mean_cycle(h).value() == Rat(1));
    // a reachable bad state dominates everything
    auto b = wts(2, {{0, 1, Rat(0)}, {1, 1, Rat(0)}}, {1});
    CHECK(!max_mean_cycle(b).is_finite());
    // negative weights are fine
    auto neg = wts(2, {{0, 1, Rat(-3)}, {1, 0, Rat(1)}});
    CHECK(max_mean_cycle(neg).value() == Rat(-1));
}

TEST_CASE("max_mean_cycle agrees with cycle enumeration on random graphs") {
    std::mt19937 rng(20260823);
    for (int iter = 0; iter < 150; ++iter) {
        int n = 2 + (int)(rng() % 6);
        WeightedTS ts;
        ts.succ.resize(n);
        ts.bad.assign(n, 0);
        for (int s = 0; s < n; ++s) {
            // guarantee a successor, then sprinkle extras
            int deg = 1 + (int)(rng() % 3);
            for (int d = 0; d < deg; ++d) {
                int t = (int)(rng() % n);
                Rat w((int)(rng() % 21) - 10, 1 + (int)(rng() % 4));
                ts.succ[s].push_back({t, w});
            }
        }
        if (iter % 7 == 0) ts.bad[rng() % n] = 1;
        auto got = max_mean_cycle(ts);
        auto want = cycle_oracle(ts);
        CHECK(got.is_finite() == want.is_finite());
        if (got.is_finite()) CHECK(got.value() == want.value());
    }
}

TEST_CASE("unsafe_reachable respects reachability") {
    auto a = wts(3, {{0, 1, Rat(0)}, {1, 0, Rat(0)}, {2, 2, Rat(0)}}, {2});
    CHECK(!unsafe_reachable(a));
    auto b = wts(3, {{0, 1, Rat(0)}, {1, 2, Rat(0)}, {2, 2, Rat(0)}}, {2});
    CHECK(unsafe_reachable(b));
    MDP m = chain_of({{{1, Rat(1), Rat(0)}}, {{1, Rat(1), Rat(0)}}}, {1});
    CHECK(unsafe_reachable(m));
}

TEST_CASE("to_wts expands every action and branch into edges") {
    MDP m;
    m.states.resize(2);
    m.states[0].actions.push_back({0, {{0, Rat(1), Rat(1)}}});
    m.states[0].actions.push_back({1, {{1, Rat(1), Rat(2)}}});
    m.states[1].actions.push_back({0, {{0, Rat(1), Rat(3)}}});
    auto ts = to_wts(m);
    CHECK(ts.succ[0].size() == 2);
    CHECK(ts.succ[1].size() == 1);
    CHECK(max_mean_cycle(ts).value() == Rat(5) / Rat(2));  // alternate 2,3
}

TEST_CASE("gaussian_stationary on hand-built chains") {
    // two-state flip-flop
    SparseChain flip = {{{1, Rat(1)}}, {{0, Rat(1)}}};
    auto pi = gaussian_stationary(flip);
    CHECK(pi == std::vector<Rat>{Rat(1) / Rat(2), Rat(1) / Rat(2)});
    // biased three-cycle with a self-loop
    SparseChain c = {
        {{0, Rat(1) / Rat(2)}, {1, Rat(1) / Rat(2)}},
        {{2, Rat(1)}},
        {{0, Rat(1)}},
    };
    auto q = gaussian_stationary(c);
    // balance: pi0 = 2*pi1 = 2*pi2, normalized
    CHECK(q == std::vector<Rat>{Rat(1) / Rat(2), Rat(1) / Rat(4), Rat(1) / Rat(4)});
}

TEST_CASE("forward propagation equals Gaussian elimination on random chains") {
    std::mt19937 rng(7);
    for (int iter = 0; iter < 60; ++iter) {
        int n = 2 + (int)(rng() % 40);
        // ring guarantees irreducibility; chords add back edges
        SparseChain chain(n);
        for (int s = 0; s < n; ++s) {
            std::vector<int> targets = {(s + 1) % n};
            int chords = (int)(rng() % 3);
            for (int c = 0; c < chords; ++c) targets.push_back((int)(rng() % n));
            std::sort(targets.begin(), targets.end());
            targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
            Rat total(0);
            std::vector<Rat> ws;
            for (size_t i = 0; i < targets.size(); ++i) {
                Rat w(1 + (int)(rng() % 5));
                ws.push_back(w);
                total += w;
            }
            for (size_t i = 0; i < targets.size(); ++i)
                chain[s].push_back({targets[i], ws[i] / total});
        }
        auto a = stationary_forward_prop(chain);
        auto b = gaussian_stationary(chain);
        CHECK(a == b);
        Rat sum(0);
        for (const Rat& x : a) sum += x;
        CHECK(sum == Rat(1));
    }
}

TEST_CASE("forward propagation falls back cleanly past the variable budget") {
    // chord-heavy ring on 70 states: more than 64 back-edge sources
    int n = 70;
    SparseChain chain(n);
    for (int s = 0; s < n; ++s) {
        int chord = (s * 37 + 11) % n;
        if (chord == (s + 1) % n || chord == s) chord = (chord + 2) % n;
        chain[s].push_back({(s + 1) % n, Rat(1) / Rat(2)});
        chain[s].push_back({chord, Rat(1) / Rat(2)});
    }
    auto a = stationary_forward_prop(chain);
    auto b = gaussian_stationary(chain);
    CHECK(a == b);
}

TEST_CASE("mc_value on hand-built chains") {
    // deterministic 3-cycle with weights 1,2,3
    MDP cyc = chain_of({{{1, Rat(1), Rat(1)}}, {{2, Rat(1), Rat(2)}}, {{0, Rat(1), Rat(3)}}});
    CHECK(mc_value(cyc).value() == Rat(2));
    // transient split into two absorbing loops: value is the expectation
    MDP split = chain_of({
        {{1, Rat(1) / Rat(3), Rat(0)}, {2, Rat(2) / Rat(3), Rat(0)}},
        {{1, Rat(1), Rat(6)}},
        {{2, Rat(1), Rat(3)}},
    });
    CHECK(mc_value(split).value() == Rat(4));  // 6/3 + 2*3/3
    // bad state reachable with positive probability
    MDP bad = chain_of({{{0, Rat(1) / Rat(2), Rat(0)}, {1, Rat(1) / Rat(2), Rat(0)}},
                        {{1, Rat(1), Rat(0)}}},
                       {1});
    CHECK(!mc_value(bad).is_finite());
    // chain that needs the stationary distribution: lazy flip-flop
    MDP lazy = chain_of({
        {{0, Rat(3) / Rat(4), Rat(0)}, {1, Rat(1) / Rat(4), Rat(0)}},
        {{0, Rat(1), Rat(10)}},
    });
    // pi = (4/5, 1/5); expected step weight = (1/5)*10
    CHECK(mc_value(lazy).value() == Rat(2));
}

TEST_CASE("policy iteration agrees with exhaustive policy enumeration") {
    std::mt19937 rng(424242);
    for (int iter = 0; iter < 80; ++iter) {
        int n = 2 + (int)(rng() % 5);
        MDP m;
        m.states.resize(n);
        for (int s = 0; s < n; ++s) {
            int na = 1 + (int)(rng() % 2);
            for (int a = 0; a < na; ++a) {
                MDP::Action act;
                act.label = a;
                int t1 = (int)(rng() % n), t2 = (int)(rng() % n);
                Rat w1((int)(rng() % 13) - 6), w2((int)(rng() % 13) - 6);
                if (t1 == t2) {
                    act.edges.push_back({t1, Rat(1), w1});
                } else {
                    act.edges.push_back({t1, Rat(1) / Rat(2), w1});
                    act.edges.push_back({t2, Rat(1) / Rat(2), w2});
                }
                m.states[s].actions.push_back(act);
            }
        }
        // oracle: evaluate every pure memoryless policy as a chain
        std::vector<int> idx(n, 0);
        bool any = false;
        Rat best;
        while (true) {
            MDP fixed;
            fixed.states.resize(n);
            for (int s = 0; s < n; ++s) fixed.states[s].actions = {m.states[s].actions[idx[s]]};
            auto v = mc_value(fixed);
            REQUIRE(v.is_finite());
            if (!any || v.value() > best) best = v.value(), any = true;
            int s = 0;
            for (; s < n; ++s) {
                if (++idx[s] < (int)m.states[s].actions.size()) break;
                idx[s] = 0;
            }
            if (s == n) break;
        }
        auto got = mdp_strategy_improvement(m);
        REQUIRE(got.value.is_finite());
        CHECK(got.value.value() == best);
        // the returned policy covers the states reachable under some action
        // (order-preserving restriction) and must achieve the optimum there
        std::vector<int> old_of_new;
        {
            std::vector<char> seen(n, 0);
            std::vector<int> stack = {0};
            seen[0] = 1;
            while (!stack.empty()) {
                int s = stack.back();
                stack.pop_back();
                for (const auto& a : m.states[s].actions)
                    for (const auto& e : a.edges)
                        if (!seen[e.target]) {
                            seen[e.target] = 1;
                            stack.push_back(e.target);
                        }
            }
            for (int s = 0; s < n; ++s)
                if (seen[s]) old_of_new.push_back(s);
        }
        REQUIRE(got.policy.size() == old_of_new.size());
        MDP fixed;
        fixed.states.resize(old_of_new.size());
        std::vector<int> new_of_old(n, -1);
        for (size_t i = 0; i < old_of_new.size(); ++i) new_of_old[old_of_new[i]] = (int)i;
        for (size_t i = 0; i < old_of_new.size(); ++i) {
            MDP::Action a = m.states[old_of_new[i]].actions[got.policy[i]];
            for (auto& e : a.edges) e.target = new_of_old[e.target];
            fixed.states[i].actions = {a};
        }
        CHECK(mc_value(fixed).value() == best);
    }
}

TEST_CASE("policy iteration reports infinity exactly when bad is reachable") {
    MDP m;
    m.states.resize(3);
    m.states[0].actions.push_back({0, {{1, Rat(1), Rat(1)}}});
    m.states[0].actions.push_back({1, {{2, Rat(1), Rat(0)}}});
    m.states[1].actions.push_back({0, {{1, Rat(1), Rat(1)}}});
    m.states[2].actions.push_back({0, {{2, Rat(1), Rat(0)}}});
    m.states[2].bad = true;
    CHECK(!mdp_strategy_improvement(m).value.is_finite());
    m.states[2].bad = false;
    auto v = mdp_strategy_improvement(m);
    REQUIRE(v.value.is_finite());
    CHECK(v.value.value() == Rat(1));
}

TEST_CASE("sparse_solve handles permuted systems and flags singular ones") {
    // x + 2y = 5, 3x - y = 1  ->  x = 1, y = 2
    std::vector<std::vector<std::pair<int, Rat>>> rows = {
        {{0, Rat(1)}, {1, Rat(2)}},
        {{0, Rat(3)}, {1, Rat(-1)}},
    };
    auto x = linalg::sparse_solve(rows, {Rat(5), Rat(1)});
    CHECK(x == std::vector<Rat>{Rat(1), Rat(2)});

    std::vector<std::vector<std::pair<int, Rat>>> sing = {
        {{0, Rat(1)}, {1, Rat(1)}},
        {{0, Rat(2)}, {1, Rat(2)}},
    };
    CHECK_THROWS_AS(linalg::sparse_solve(sing, {Rat(1), Rat(3)}), std::runtime_error);
}
