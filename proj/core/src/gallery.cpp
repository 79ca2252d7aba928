#include "qsynth/gallery.hpp"

#include <sstream>
#include <stdexcept>

#include "qsynth/frontend.hpp"

namespace qsynth {

bool brute_force_sat(const Cnf& f) {
    if (f.num_vars > 20)
        throw std::invalid_argument("brute_force_sat: more than 20 variables");
    for (uint32_t m = 0; m < (1u << f.num_vars); ++m) {
        bool all = true;
        for (const auto& cl : f.clauses) {
            bool sat = false;
            for (int lit : cl) {
                int k = lit > 0 ? lit : -lit;
                if ((lit > 0) == (((m >> (k - 1)) & 1) != 0)) {
                    sat = true;
                    break;
                }
            }
            if (!sat) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

Cnf parse_dimacs(const std::string& text) {
    Cnf f;
    std::istringstream is(text);
    std::string line;
    std::vector<int> lits;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == 'c') continue;
        std::istringstream ls(line);
        if (line[0] == 'p') {
            std::string p, cnf;
            ls >> p >> cnf >> f.num_vars;
            if (cnf != "cnf") throw std::invalid_argument("parse_dimacs: expected 'p cnf'");
            continue;
        }
        int lit;
        while (ls >> lit) {
            if (lit == 0) {
                if (lits.empty() || lits.size() > 3)
                    throw std::invalid_argument("parse_dimacs: clauses must have 1-3 literals");
                while (lits.size() < 3) lits.push_back(lits.back());
                f.clauses.push_back({lits[0], lits[1], lits[2]});
                lits.clear();
            } else {
                lits.push_back(lit);
            }
        }
    }
    if (!lits.empty()) throw std::invalid_argument("parse_dimacs: unterminated clause");
    return f;
}

SatGadget gen_sat_gadget(const Cnf& f) {
    int K = (int)f.clauses.size();
    int N = f.num_vars;
    GameGraph g;
    g.states.resize(3 * K + 2);
    g.initial = 0;
    int bad = 3 * K + 1;
    g.obs_keys.resize(N);
    for (int k = 0; k < N; ++k) g.obs_keys[k] = {0, k};

    for (int i = 0; i < K; ++i) {
        g.states[0].actions.push_back({i, {{1 + 3 * i, Rat(1), Rat(0), false}}});
        for (int j = 0; j < 3; ++j) {
            int s = 1 + 3 * i + j;
            int lit = f.clauses[i][j];
            int k = lit > 0 ? lit : -lit;
            if (k < 1 || k > N) throw std::invalid_argument("gen_sat_gadget: bad literal");
            g.states[s].p1 = true;
            g.states[s].obs = k;
            int miss = j < 2 ? s + 1 : bad;
            for (int a : {0, 1}) {
                int target = ((lit > 0) == (a == 1)) ? 0 : miss;
                g.states[s].actions.push_back({a, {{target, Rat(1), Rat(0), false}}});
            }
        }
    }
    g.states[bad].actions.push_back({0, {{bad, Rat(1), Rat(0), false}}});

    SatGadget out;
    out.satisfiable = brute_force_sat(f);
    out.limavg = g;
    out.limavg.states[bad].actions[0].outcomes[0].weight = Rat(1);
    g.states[bad].flags |= GameGraph::FlagBad;
    out.safety = std::move(g);
    return out;
}

namespace {

GalleryInstance make_instance(std::string name, std::string prog, std::string perf,
                              std::string sched, SafetyConditions conds) {
    GalleryInstance gi;
    gi.name = std::move(name);
    gi.program_src = std::move(prog);
    gi.perf_src = std::move(perf);
    gi.sched_src = std::move(sched);
    gi.program = parse_partial_program(gi.program_src);
    gi.perf = parse_performance_automaton(gi.perf_src);
    gi.sched = parse_scheduler(gi.sched_src);
    gi.conds = conds;
    return gi;
}

std::string num(const Rat& r) {
    std::string s = rat_str(r);
    return s;
}

}  // namespace

GalleryInstance gen_producer_consumer(int producers, int consumers, int cells,
                                      const Rat& lock_cost, const Rat& copy_cost,
                                      int granularity) {
    if (producers < 1 || consumers < 1 || cells < 1)
        throw std::invalid_argument("gen_producer_consumer: bad shape");
    std::ostringstream os;
    os << "globals {\n  gl : [0, 1] = 0;\n";
    for (int j = 0; j < cells; ++j) os << "  cl" << j << " : [0, 1] = 0;\n";
    for (int j = 0; j < cells; ++j) os << "  d" << j << " : [0, 3] = 0;\n";
    os << "}\n";

    auto thread = [&](const std::string& name, bool producer) {
        os << "thread " << name << " {\n";
        if (!producer) os << "  locals {\n    tmp : [0, 3] = 0;\n  }\n";
        os << "  locks(gl";
        for (int j = 0; j < cells; ++j) os << " cl" << j;
        os << ");\n";
        bool coarse = granularity != 2;
        bool fine = granularity != 1;
        os << "  loc s";
        if (coarse)
            for (int j = 1; j <= 2 * cells + 1; ++j) os << " c" << j;
        if (fine)
            for (int j = 1; j <= 4 * cells - 1; ++j) os << " f" << j;
        os << ";\n";
        auto fnode = [&](int x) {
            return (x == 0 || x == 4 * cells) ? std::string("s") : "f" + std::to_string(x);
        };
        auto touch = [&](int j) {
            return producer ? "d" + std::to_string(j) + " := 1"
                            : "tmp := d" + std::to_string(j);
        };
        if (granularity == 0) {
            os << "  choice s {\n";
            os << "    -> c1 when gl == 0 do { gl := 1 } label l;\n";
            os << "    -> f1 when cl0 == 0 do { cl0 := 1 } label l;\n";
            os << "  }\n";
        } else if (granularity == 1) {
            os << "  trans s -> c1 when gl == 0 do { gl := 1 } label l;\n";
        } else {
            os << "  trans s -> f1 when cl0 == 0 do { cl0 := 1 } label l;\n";
        }
        if (coarse) {
            for (int j = 0; j < cells; ++j) {
                os << "  trans c" << 2 * j + 1 << " -> c" << 2 * j + 2 << ";\n";
                os << "  trans c" << 2 * j + 2 << " -> c" << 2 * j + 3 << " do { " << touch(j)
                   << " } label m;\n";
            }
            os << "  trans c" << 2 * cells + 1 << " -> s do { gl := 0 } label l;\n";
        }
        if (fine) {
            for (int j = 0; j < cells; ++j) {
                if (j > 0)
                    os << "  trans " << fnode(4 * j) << " -> " << fnode(4 * j + 1)
                       << " when cl" << j << " == 0 do { cl" << j << " := 1 } label l;\n";
                os << "  trans " << fnode(4 * j + 1) << " -> " << fnode(4 * j + 2) << ";\n";
                os << "  trans " << fnode(4 * j + 2) << " -> " << fnode(4 * j + 3) << " do { "
                   << touch(j) << " } label m;\n";
                os << "  trans " << fnode(4 * j + 3) << " -> " << fnode(4 * j + 4) << " do { cl"
                   << j << " := 0 } label l;\n";
            }
        }
        os << "}\n";
    };
    for (int i = 0; i < producers; ++i) thread("prod" + std::to_string(i), true);
    for (int i = 0; i < consumers; ++i) thread("cons" + std::to_string(i), false);

    os << "abstract data(";
    for (int j = 0; j < cells; ++j) os << "d" << j << ", ";
    os << "tmp);\n";

    std::ostringstream perf;
    perf << "state q0;\n";
    perf << "edge q0 --l/" << num(lock_cost) << "--> q0;\n";
    perf << "edge q0 --m/" << num(copy_cost) << "--> q0;\n";

    std::ostringstream name;
    name << "prodcons-" << producers << "-" << consumers << "-" << cells;
    if (granularity) name << (granularity == 1 ? "-coarse" : "-fine");

    SafetyConditions conds;
    conds.race = true;
    return make_instance(name.str(), os.str(), perf.str(), "uniform;\n", conds);
}

GalleryInstance gen_optimistic(int n_max, const Rat& work_cost, const Rat& lock_cost,
                               int work_len, int fixed_n) {
    if (n_max < 1 || work_len < 1 || fixed_n > n_max)
        throw std::invalid_argument("gen_optimistic: bad shape");
    std::ostringstream os;
    os << "globals {\n  gver : [0, 1] = 0;\n  gl : [0, 1] = 0;\n}\n";
    for (const char* tn : {"t1", "t2"}) {
        os << "thread " << tn << " {\n";
        os << "  locals {\n";
        os << "    lver : [0, 1] = 0;\n";
        os << "    cnt : [0, " << n_max << "] = 0;\n";
        os << "    retry : [0, 1] = 0;\n";
        os << "  }\n";
        os << "  locks(gl);\n";
        os << "  loc s r";
        for (int j = 1; j <= work_len; ++j) os << " w" << j;
        os << " a t;\n";
        if (fixed_n > 0) {
            os << "  trans s -> r do { cnt := " << fixed_n << " };\n";
        } else {
            os << "  choice s {\n";
            for (int k = 1; k <= n_max; ++k) os << "    -> r do { cnt := " << k << " };\n";
            os << "  }\n";
        }
        os << "  trans r -> w1 do { lver := gver } label m;\n";
        for (int j = 1; j < work_len; ++j) {
            os << "  trans w" << j << " -> w" << j + 1 << " when retry == 0 label w;\n";
            os << "  trans w" << j << " -> w" << j + 1 << " when retry == 1 label wr;\n";
        }
        os << "  trans w" << work_len
           << " -> w1 when cnt > 1 && retry == 0 do { cnt := cnt - 1 } label w;\n";
        os << "  trans w" << work_len
           << " -> w1 when cnt > 1 && retry == 1 do { cnt := cnt - 1 } label wr;\n";
        os << "  trans w" << work_len
           << " -> a when cnt == 1 && retry == 0 do { cnt := cnt - 1 } label w;\n";
        os << "  trans w" << work_len
           << " -> a when cnt == 1 && retry == 1 do { cnt := cnt - 1 } label wr;\n";
        os << "  trans a -> t when gl == 0 do { gl := 1 } label l;\n";
        os << "  trans t -> s when gver == lver"
           << " do { gver := (gver + 1) mod 2, retry := 0, gl := 0 } label m;\n";
        os << "  trans t -> s when !(gver == lver) do { retry := 1, gl := 0 } label m;\n";
        os << "}\n";
    }

    std::ostringstream perf;
    perf << "state q0;\n";
    perf << "edge q0 --w/0--> q0;\n";
    perf << "edge q0 --wr/" << num(work_cost) << "--> q0;\n";
    perf << "edge q0 --l/" << num(lock_cost) << "--> q0;\n";
    perf << "edge q0 --m/1--> q0;\n";

    std::ostringstream name;
    name << "optimistic-n" << (fixed_n > 0 ? fixed_n : n_max) << (fixed_n > 0 ? "fixed" : "")
         << "-wc" << num(work_cost) << "-lc" << num(lock_cost) << "-len" << work_len;
    return make_instance(name.str(), os.str(), perf.str(), "uniform;\n", SafetyConditions{});
}

GalleryInstance gen_work_sharing(int n_threads_max, const Rat& init_cost, int array_len,
                                 const Rat& work_cost, const Rat& idle_cost, int fixed_n) {
    int W = n_threads_max;
    if (W < 1 || array_len < 1 || fixed_n > W)
        throw std::invalid_argument("gen_work_sharing: bad shape");
    std::ostringstream os;
    os << "globals {\n  nw : [0, " << W << "] = 0;\n  rem : [0, " << array_len
       << "] = " << array_len << ";\n}\n";
    os << "thread master {\n";
    os << "  loc s p d;\n";
    if (fixed_n > 0) {
        os << "  trans s -> p do { nw := " << fixed_n << " } label idle;\n";
    } else {
        os << "  choice s {\n";
        for (int k = 1; k <= W; ++k) os << "    -> p do { nw := " << k << " } label idle;\n";
        os << "  }\n";
    }
    os << "  trans p -> p when rem > 0 label idle;\n";
    os << "  trans p -> d when rem == 0 label idle;\n";
    os << "}\n";
    for (int i = 1; i <= W; ++i) {
        os << "thread worker" << i << " {\n";
        bool scratch = i == 1;
        if (scratch) os << "  locals {\n    scratch : [0, 1] = 0;\n  }\n";
        os << "  loc w r d;\n";
        std::string item = "rem := rem - 1";
        if (scratch) item += ", scratch := (scratch + 1) mod 2";
        os << "  trans w -> r when nw >= " << i << " && rem > 0 do { " << item
           << " } label act;\n";
        os << "  trans w -> d when nw >= " << i << " && rem == 0 label idle;\n";
        if (i > 1) os << "  trans w -> d when nw >= 1 && nw < " << i << " label idle;\n";
        os << "  trans r -> r when rem > 0 do { " << item << " } label wk;\n";
        os << "  trans r -> d when rem == 0 label idle;\n";
        os << "}\n";
    }
    os << "abstract data(scratch);\n";

    std::ostringstream perf;
    perf << "state q0;\n";
    perf << "edge q0 --act/" << num(init_cost + work_cost) << "--> q0;\n";
    perf << "edge q0 --wk/" << num(work_cost) << "--> q0;\n";
    perf << "edge q0 --idle/" << num(idle_cost) << "--> q0;\n";

    std::ostringstream name;
    name << "worksharing-w" << W << "-init" << num(init_cost) << "-len" << array_len;
    if (fixed_n > 0) name << "-fixed" << fixed_n;
    return make_instance(name.str(), os.str(), perf.str(), "uniform;\n", SafetyConditions{});
}

GalleryInstance gen_cache_example(int n_max, int lines, const Rat& cached_cost,
                                  const Rat& uncached_cost, int fixed_n) {
    if (n_max < 1 || lines < 1 || lines > 16 || fixed_n > n_max)
        throw std::invalid_argument("gen_cache_example: bad shape");
    auto sym = [](int m) {
        return (m % 2 == 0 ? "r" : "w") + std::to_string(m / 2);
    };
    std::ostringstream os;
    os << "globals {\n  gl : [0, 1] = 0;\n}\n";
    for (const char* tn : {"t1", "t2"}) {
        os << "thread " << tn << " {\n";
        os << "  locals {\n    cnt : [0, " << n_max << "] = 0;\n  }\n";
        os << "  locks(gl);\n";
        os << "  loc s h";
        for (int m = 1; m < 2 * lines; ++m) os << " i" << m;
        os << ";\n";
        if (fixed_n > 0) {
            os << "  trans s -> i1 when gl == 0 do { gl := 1, cnt := " << fixed_n
               << " } label r0;\n";
        } else {
            os << "  choice s {\n";
            for (int k = 1; k <= n_max; ++k)
                os << "    -> i1 when gl == 0 do { gl := 1, cnt := " << k << " } label r0;\n";
            os << "  }\n";
        }
        os << "  trans h -> i1 label r0;\n";
        for (int m = 1; m < 2 * lines - 1; ++m)
            os << "  trans i" << m << " -> i" << m + 1 << " label " << sym(m) << ";\n";
        int last = 2 * lines - 1;
        os << "  trans i" << last << " -> h when cnt > 1 do { cnt := cnt - 1 } label "
           << sym(last) << ";\n";
        os << "  trans i" << last << " -> s when cnt == 1 do { cnt := 0, gl := 0 } label "
           << sym(last) << ";\n";
        os << "}\n";
    }

    // synchronous product of per-line cached/uncached automata; a context
    // switch evicts everything
    std::ostringstream perf;
    int S = 1 << lines;
    auto qname = [&](int bits) {
        std::string n = "q";
        for (int j = 0; j < lines; ++j) n += (bits >> j) & 1 ? 'c' : 'u';
        return n;
    };
    perf << "state";
    for (int b = 0; b < S; ++b) perf << " " << qname(b);
    perf << ";\n";
    for (int b = 0; b < S; ++b) {
        for (int m = 0; m < 2 * lines; ++m) {
            int j = m / 2;
            const Rat& c = (b >> j) & 1 ? cached_cost : uncached_cost;
            perf << "edge " << qname(b) << " --" << sym(m) << "/" << num(c) << "--> "
                 << qname(b | (1 << j)) << ";\n";
        }
        perf << "edge " << qname(b) << " --cs/0--> " << qname(0) << ";\n";
    }

    std::ostringstream name;
    name << "cache-n" << (fixed_n > 0 ? fixed_n : n_max) << (fixed_n > 0 ? "fixed" : "")
         << "-lines" << lines << "-c" << num(cached_cost) << "-u" << num(uncached_cost);
    return make_instance(name.str(), os.str(), perf.str(), "uniform;\n", SafetyConditions{});
}

std::vector<GalleryInstance> gallery_small() {
    std::vector<GalleryInstance> out;
    out.push_back(gen_producer_consumer(1, 1, 2, Rat(1), Rat(100)));
    out.push_back(gen_producer_consumer(1, 1, 2, Rat(1), Rat(1)));
    out.push_back(gen_producer_consumer(1, 1, 1, Rat(1), Rat(10)));
    out.push_back(gen_optimistic(3, Rat(8), Rat(20), 1));
    out.push_back(gen_work_sharing(3, Rat(6), 4, Rat(1), Rat(3)));
    out.push_back(gen_cache_example(3, 1, Rat(1), Rat(10)));
    out.push_back(gen_cache_example(2, 2, Rat(1), Rat(8)));
    return out;
}

}  // namespace qsynth
