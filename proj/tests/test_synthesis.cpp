#include "doctest.h"
#include "qsynth/frontend.hpp"
#include "qsynth/gallery.hpp"
#include "qsynth/synthesis.hpp"

using namespace qsynth;

namespace {

const char* kTwoSpeed = R"(
    globals { x : [0, 2] = 0; }
    thread t {
      loc a b;
      choice a {
        -> b do { x := 1 } label s1;
        -> b do { x := 2 } label s2;
      }
      trans b -> a do { x := 0 };
    }
)";

const char* kTwoSpeedPerf = R"(
    state q0;
    edge q0 --s1/4--> q0;
    edge q0 --s2/6--> q0;
)";

}  // namespace

TEST_CASE("value_of_program rejects programs with reachable choices") {
    auto p = parse_partial_program(kTwoSpeed);
    auto w = parse_performance_automaton(kTwoSpeedPerf);
    CHECK_THROWS(value_of_program(p, Scheduler::make_uniform(), w, {}));
}

TEST_CASE("resolve picks the cheaper branch and reports both rows") {
    auto p = parse_partial_program(kTwoSpeed);
    auto w = parse_performance_automaton(kTwoSpeedPerf);
    auto r = resolve(p, Scheduler::make_uniform(), w, {});
    REQUIRE(r.found);
    CHECK(r.best.encode() == "0");
    REQUIRE(r.value.is_finite());
    CHECK(r.value.value() == Rat(2));
    CHECK(r.total_strategies == 2);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].value.value() == Rat(2));
    CHECK(r.rows[1].value.value() == Rat(3));
    CHECK(r.rows[0].safe);
    // the resolved program is choice-free and has the same value
    auto v = value_of_program(r.resolved, Scheduler::make_uniform(), w, {});
    CHECK(v.value() == r.value.value());
}

TEST_CASE("decide compares the optimum against the threshold") {
    auto p = parse_partial_program(kTwoSpeed);
    auto w = parse_performance_automaton(kTwoSpeedPerf);
    auto sch = Scheduler::make_uniform();
    CHECK(decide(p, sch, w, {}, Rat(2)));
    CHECK(decide(p, sch, w, {}, Rat(5)));
    CHECK(!decide(p, sch, w, {}, Rat(3) / Rat(2)));
}

TEST_CASE("an unavoidable race makes every strategy unsafe") {
    const char* prog = R"(
        globals { x : [0, 1] = 0; }
        thread a { loc p; trans p -> p do { x := 1 }; }
        thread b { loc p; trans p -> p do { x := 0 }; }
    )";
    auto p = parse_partial_program(prog);
    auto w = PerformanceAutomaton::trivial();
    auto r = resolve(p, Scheduler::make_uniform(), w, {true, false});
    CHECK(!r.found);
    CHECK(!r.value.is_finite());
    // with the race check off the same program has a finite value
    auto r2 = resolve(p, Scheduler::make_uniform(), w, {});
    CHECK(r2.found);
    CHECK(r2.value.value() == Rat(0));
}

TEST_CASE("choice between racy and locked access keeps only the locked action") {
    const char* prog = R"(
        globals { l : [0, 1] = 0; x : [0, 1] = 0; }
        thread a {
          locks(l);
          loc s w u;
          choice s {
            -> w when true label fast;
            -> w when l == 0 do { l := 1 } label slow;
          }
          trans w -> u do { x := 1 };
          trans u -> s do { l := 0 };
        }
        thread b {
          locks(l);
          loc s w u;
          trans s -> w when l == 0 do { l := 1 };
          trans w -> u do { x := 0 };
          trans u -> s do { l := 0 };
        }
    )";
    auto p = parse_partial_program(prog);
    auto w = parse_performance_automaton(R"(
        state q0;
        edge q0 --fast/0--> q0;
        edge q0 --slow/5--> q0;
    )");
    auto r = resolve(p, Scheduler::make_uniform(), w, {true, false});
    REQUIRE(r.found);
    // action 0 skips the lock and races on x; only the locking action is safe
    Composer c(p, Scheduler::make_uniform(), w, {true, false});
    REQUIRE(c.choice_obs().size() == 1);
    const auto& acts = c.actions_at(0, 0);
    bool chosen_locks = false;
    for (int ti : acts[r.best.choice[0]].transitions)
        if (p.threads[0].transitions[ti].cost_symbol >= 0 &&
            p.symbols[p.threads[0].transitions[ti].cost_symbol] == "slow")
            chosen_locks = true;
    CHECK(chosen_locks);
}

TEST_CASE("resolve_allowed survives an emit/parse round trip") {
    auto p = parse_partial_program(kTwoSpeed);
    auto w = parse_performance_automaton(kTwoSpeedPerf);
    Composer c(p, Scheduler::make_uniform(), w, {});
    PartialProgram allowed = resolve_allowed(c, MemorylessStrategy{{1}});
    std::string text = emit_program(allowed);
    PartialProgram back = parse_partial_program(text);
    CHECK(emit_program(back) == text);
    auto v = value_of_program(back, Scheduler::make_uniform(), w, {});
    CHECK(v.value() == Rat(3));
}

TEST_CASE("pruning changes the work done but never the answer") {
    for (const auto& gi : gallery_small()) {
        if (gi.name.find("prodcons") == std::string::npos) continue;
        CAPTURE(gi.name);
        ResolveOptions on, off;
        off.prune = false;
        auto a = resolve(gi.program, gi.sched, gi.perf, gi.conds, on);
        auto b = resolve(gi.program, gi.sched, gi.perf, gi.conds, off);
        CHECK(a.found == b.found);
        CHECK(a.best.encode() == b.best.encode());
        CHECK(a.value.is_finite() == b.value.is_finite());
        if (a.value.is_finite()) CHECK(a.value.value() == b.value.value());
        CHECK(b.stats.pruned_subtrees == 0);
        CHECK(a.rows.size() <= b.rows.size());
    }
}

TEST_CASE("abstraction and minimization leave the result unchanged") {
    auto gis = gallery_small();
    int covered = 0;
    for (const auto& gi : gis) {
        if (gi.program.abstractions.empty() || covered >= 2) continue;
        CAPTURE(gi.name);
        ++covered;
        ResolveOptions plain, abs, mini;
        abs.use_abstraction = true;
        mini.minimize = true;
        auto a = resolve(gi.program, gi.sched, gi.perf, gi.conds, plain);
        auto b = resolve(gi.program, gi.sched, gi.perf, gi.conds, abs);
        auto c = resolve(gi.program, gi.sched, gi.perf, gi.conds, mini);
        REQUIRE(a.found == b.found);
        CHECK(a.best.encode() == b.best.encode());
        CHECK(a.value.value() == b.value.value());
        CHECK(a.best.encode() == c.best.encode());
        CHECK(a.value.value() == c.value.value());
    }
    CHECK(covered >= 1);
}

TEST_CASE("multithreaded evaluation is deterministic") {
    auto p = parse_partial_program(kTwoSpeed);
    auto w = parse_performance_automaton(kTwoSpeedPerf);
    ResolveOptions seq, par;
    par.threads = 4;
    auto a = resolve(p, Scheduler::make_uniform(), w, {}, seq);
    auto b = resolve(p, Scheduler::make_uniform(), w, {}, par);
    CHECK(a.best.encode() == b.best.encode());
    CHECK(a.value.value() == b.value.value());
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].strategy.encode() == b.rows[i].strategy.encode());
        CHECK(a.rows[i].safe == b.rows[i].safe);
    }
}

TEST_CASE("ties break lexicographically on the strategy encoding") {
    const char* prog = R"(
        globals { x : [0, 2] = 0; }
        thread t {
          loc a b;
          choice a {
            -> b do { x := 1 } label s;
            -> b do { x := 2 } label s;
          }
          trans b -> a do { x := 0 };
        }
    )";
    auto p = parse_partial_program(prog);
    auto w = parse_performance_automaton("state q0;\nedge q0 --s/2--> q0;");
    auto r = resolve(p, Scheduler::make_uniform(), w, {});
    REQUIRE(r.found);
    CHECK(r.rows.size() == 2);
    CHECK(r.rows[0].value.value() == r.rows[1].value.value());
    CHECK(r.best.encode() == "0");
}

TEST_CASE("resolve_game solves a hand-built observation game") {
    // P2 initial state branches to two P1 states sharing one observation;
    // the only uniformly safe choice is action 1 in both.
    GameGraph g;
    g.states.resize(3);
    g.obs_keys = {{0, 0}};
    g.states[0].p1 = false;
    g.states[0].actions.push_back({0, {{1, Rat(1), Rat(0), false}}});
    g.states[0].actions.push_back({1, {{2, Rat(1), Rat(0), false}}});
    for (int s : {1, 2}) {
        g.states[s].p1 = true;
        g.states[s].obs = 1;
    }
    // at state 1, action 0 is bad (infinite loop weight); at state 2 both work
    g.states[1].actions.push_back({0, {{1, Rat(1), Rat(1), true}}});
    g.states[1].actions.push_back({1, {{0, Rat(1), Rat(2), false}}});
    g.states[2].actions.push_back({0, {{0, Rat(1), Rat(1), false}}});
    g.states[2].actions.push_back({1, {{0, Rat(1), Rat(4), false}}});
    auto r = resolve_game(g);
    REQUIRE(r.found);
    CHECK(r.obs == std::vector<int>{1});
    CHECK(r.labels == std::vector<int>{1});
    // worst case of action 1 everywhere: cycle 0-2-0 of mean 2
    CHECK(r.value.value() == Rat(2));
    CHECK(r.rows.size() == 2);
}
