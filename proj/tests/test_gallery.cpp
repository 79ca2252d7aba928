#include <map>
#include <random>

#include "doctest.h"
#include "qsynth/gallery.hpp"
#include "qsynth/synthesis.hpp"

using namespace qsynth;

namespace {

Cnf cnf(int nv, std::vector<std::array<int, 3>> cls) { return Cnf{nv, std::move(cls)}; }

}  // namespace

TEST_CASE("gadget shape: 3K+2 states and N+1 observations") {
    auto g = gen_sat_gadget(cnf(1, {{1, 1, 1}}));  // (x or x or x)
    CHECK(g.safety.states.size() == 5);
    CHECK(g.safety.obs_keys.size() == 1);  // one per variable, plus obs 0
    CHECK(g.satisfiable);
    auto h = gen_sat_gadget(cnf(3, {{1, -2, 3}, {-1, 2, -3}}));
    CHECK(h.safety.states.size() == 8);
    CHECK(h.limavg.states.size() == 8);
    CHECK(h.safety.obs_keys.size() == 3);
}

TEST_CASE("satisfiable formulas admit a safe strategy, value 0") {
    auto g = gen_sat_gadget(cnf(2, {{1, 2, 2}, {-1, 2, 2}}));  // satisfied by y
    CHECK(g.satisfiable);
    auto rs = resolve_game(g.safety);
    CHECK(rs.found);
    auto rl = resolve_game(g.limavg);
    REQUIRE(rl.found);
    CHECK(rl.value.value() == Rat(0));
}

TEST_CASE("contradictions admit no safe strategy, value 1") {
    auto g = gen_sat_gadget(cnf(1, {{1, 1, 1}, {-1, -1, -1}}));
    CHECK(!g.satisfiable);
    auto rs = resolve_game(g.safety);
    CHECK(!rs.found);
    auto rl = resolve_game(g.limavg);
    REQUIRE(rl.rows.size() == 2);  // one observation, two actions
    CHECK(rl.value.value() == Rat(1));
}

TEST_CASE("gadget agrees with brute force on random formulas") {
    std::mt19937 rng(31337);
    for (int iter = 0; iter < 40; ++iter) {
        int nv = 2 + (int)(rng() % 4);
        int nc = 1 + (int)(rng() % 6);
        Cnf f;
        f.num_vars = nv;
        for (int c = 0; c < nc; ++c) {
            std::array<int, 3> cl;
            for (int j = 0; j < 3; ++j) {
                int v = 1 + (int)(rng() % nv);
                cl[j] = rng() % 2 ? v : -v;
            }
            f.clauses.push_back(cl);
        }
        bool want = brute_force_sat(f);
        auto g = gen_sat_gadget(f);
        CHECK(g.satisfiable == want);
        CHECK(resolve_game(g.safety).found == want);
        auto rl = resolve_game(g.limavg);
        CHECK(rl.value.value() == Rat(want ? 0 : 1));
    }
}

TEST_CASE("parse_dimacs reads headers, comments, and short clauses") {
    Cnf f = parse_dimacs("c comment\np cnf 3 2\n1 -2 3 0\n-1 2 0\n");
    CHECK(f.num_vars == 3);
    REQUIRE(f.clauses.size() == 2);
    CHECK(f.clauses[0] == std::array<int, 3>{1, -2, 3});
    CHECK(f.clauses[1] == std::array<int, 3>{-1, 2, 2});  // padded
    CHECK_THROWS(parse_dimacs("p cnf 2 1\n1 2 1 2 0\n"));  // over-long clause
    CHECK_THROWS(gen_sat_gadget(cnf(2, {{1, 4, 2}})));     // literal out of range
}

TEST_CASE("every gallery instance is well-formed and composable") {
    for (const auto& gi : gallery_small()) {
        CAPTURE(gi.name);
        CHECK(validate(gi.program).empty());
        CHECK(!gi.sched.bind_check([&] {
                      std::vector<std::string> ns;
                      for (const auto& t : gi.program.threads) ns.push_back(t.name);
                      return ns;
                  }())
                   .has_value());
        Composer c(gi.program, gi.sched, gi.perf, gi.conds);
        CHECK(!c.game().states.empty());
        uint64_t strategies = 1;
        for (const auto& o : c.choice_obs()) strategies *= (uint64_t)o.num_actions;
        CHECK(strategies <= 64);
        CHECK(!c.choice_obs().empty());
    }
}

TEST_CASE("producer-consumer frozen optima") {
    auto cheap_copy = gen_producer_consumer(1, 1, 2, Rat(1), Rat(1));
    auto dear_copy = gen_producer_consumer(1, 1, 2, Rat(1), Rat(100));
    auto one_cell = gen_producer_consumer(1, 1, 1, Rat(1), Rat(10));

    auto rd = resolve(dear_copy.program, dear_copy.sched, dear_copy.perf, dear_copy.conds);
    REQUIRE(rd.found);
    CHECK(rd.best.encode() == "1;1");  // fine-grained on both threads
    CHECK(rd.value.value() == Rat(51) / Rat(2));
    bool saw_coarse = false;
    for (const auto& row : rd.rows)
        if (row.strategy.encode() == "0;0") {
            saw_coarse = true;
            CHECK(row.value.value() == Rat(101) / Rat(3));
        }
    CHECK(saw_coarse);

    auto rc = resolve(cheap_copy.program, cheap_copy.sched, cheap_copy.perf, cheap_copy.conds);
    REQUIRE(rc.found);
    CHECK(rc.best.encode() == "0;0");  // coarse wins when copies are cheap
    CHECK(rc.value.value() == Rat(2) / Rat(3));
    for (const auto& row : rc.rows)
        if (row.strategy.encode() == "1;1") CHECK(row.value.value() == Rat(3) / Rat(4));

    // with a single cell the two granularities coincide
    auto r1 = resolve(one_cell.program, one_cell.sched, one_cell.perf, one_cell.conds);
    REQUIRE(r1.found);
    for (const auto& row : r1.rows)
        if (row.safe) CHECK(row.value.value() == Rat(3));
}

TEST_CASE("fixed granularities match the corresponding choice rows") {
    auto choice = gen_producer_consumer(1, 1, 2, Rat(1), Rat(100));
    auto coarse = gen_producer_consumer(1, 1, 2, Rat(1), Rat(100), 1);
    auto fine = gen_producer_consumer(1, 1, 2, Rat(1), Rat(100), 2);
    auto vc = value_of_program(coarse.program, coarse.sched, coarse.perf, coarse.conds);
    auto vf = value_of_program(fine.program, fine.sched, fine.perf, fine.conds);
    CHECK(vc.value() == Rat(101) / Rat(3));
    CHECK(vf.value() == Rat(51) / Rat(2));
}

TEST_CASE("work sharing: expensive activation favors fewer workers") {
    auto gi = gen_work_sharing(3, Rat(6), 4, Rat(1), Rat(3));
    auto r = resolve(gi.program, gi.sched, gi.perf, gi.conds);
    REQUIRE(r.found);
    CHECK(r.best.encode() == "0");  // one worker
    CHECK(r.value.value() == Rat(37) / Rat(13));
    std::map<std::string, Rat> vals;
    for (const auto& row : r.rows) vals[row.strategy.encode()] = row.value.value();
    CHECK(vals.at("1") == Rat(145) / Rat(44));
    CHECK(vals.at("2") == Rat(337) / Rat(93));
    CHECK(vals.at("0") < vals.at("1"));
    CHECK(vals.at("1") < vals.at("2"));
}

TEST_CASE("work sharing: a degenerate cost model collapses to the work cost") {
    // activation free, idling costs the same as work: every step costs 1
    auto gi = gen_work_sharing(2, Rat(0), 3, Rat(1), Rat(1));
    auto r = resolve(gi.program, gi.sched, gi.perf, gi.conds);
    REQUIRE(r.found);
    for (const auto& row : r.rows)
        if (row.safe) CHECK(row.value.value() == Rat(1));
}

TEST_CASE("cache batching: larger batches amortize cold misses") {
    auto gi = gen_cache_example(3, 1, Rat(1), Rat(10));
    auto r = resolve(gi.program, gi.sched, gi.perf, gi.conds);
    REQUIRE(r.found);
    CHECK(r.best.encode() == "2;2");  // both threads batch 3 sweeps
    CHECK(r.value.value() == Rat(7) / Rat(4));
    std::map<std::string, Rat> vals;
    for (const auto& row : r.rows) vals[row.strategy.encode()] = row.value.value();
    // per batch of n sweeps (2n steps): expected 1/2 * (10 - 1) cold-miss
    // surcharge plus 2n unit accesses, i.e. (9/2 + 2n) / 2n
    CHECK(vals.at("0;0") == Rat(13) / Rat(4));
    CHECK(vals.at("1;1") == Rat(17) / Rat(8));
    CHECK(vals.at("1;1") < vals.at("0;0"));
    CHECK(vals.at("2;2") < vals.at("1;1"));

    auto two = gen_cache_example(2, 2, Rat(1), Rat(8));
    auto r2 = resolve(two.program, two.sched, two.perf, two.conds);
    REQUIRE(r2.found);
    CHECK(r2.value.value() == Rat(15) / Rat(8));
    // product automaton over 2 lines has 4 states
    CHECK(two.perf.states.size() == 4);
}

TEST_CASE("cache batching is cost-neutral when hits equal misses") {
    auto gi = gen_cache_example(2, 1, Rat(3), Rat(3));
    auto r = resolve(gi.program, gi.sched, gi.perf, gi.conds);
    REQUIRE(r.found);
    for (const auto& row : r.rows)
        if (row.safe) CHECK(row.value.value() == Rat(3));
}

TEST_CASE("fixed batch sizes reproduce the diagonal of the cache choice") {
    for (int n = 1; n <= 3; ++n) {
        auto gi = gen_cache_example(3, 1, Rat(1), Rat(10), n);
        auto v = value_of_program(gi.program, gi.sched, gi.perf, gi.conds);
        REQUIRE(v.is_finite());
        Rat want = (Rat(9) / Rat(2) + Rat(2 * n)) / Rat(2 * n);
        CHECK(v.value() == want);
    }
}

TEST_CASE("generators validate their shape arguments") {
    CHECK_THROWS(gen_producer_consumer(0, 1, 1, Rat(1), Rat(1)));
    CHECK_THROWS(gen_optimistic(0, Rat(1), Rat(1), 1));
    CHECK_THROWS(gen_work_sharing(1, Rat(1), 0));
    CHECK_THROWS(gen_cache_example(1, 0, Rat(1), Rat(1)));
    CHECK_THROWS(gen_cache_example(2, 1, Rat(1), Rat(1), 3));  // fixed_n > n_max
}
