#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsynth/frontend.hpp"
#include "qsynth/gallery.hpp"
#include "qsynth/synthesis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qsynth;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

SafetyConditions parse_checks(const std::string& list) {
    SafetyConditions c;
    std::istringstream is(list);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        if (item == "race")
            c.race = true;
        else if (item == "deadlock")
            c.deadlock = true;
        else
            throw std::runtime_error("unknown safety condition '" + item + "'");
    }
    return c;
}

Rat parse_rat(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rat(Int(s));
    return Rat(Int(s.substr(0, slash))) / Rat(Int(s.substr(slash + 1)));
}

uint64_t state_cap() {
    if (const char* env = std::getenv("QSYNTH_STATE_CAP")) return std::stoull(env);
    return ComposeOptions{}.state_cap;
}

std::string value_cell(const ExtValue& v) {
    return v.is_finite() ? rat_str(v.value()) : "inf";
}

std::string decimal_cell(const ExtValue& v) {
    return v.is_finite() ? rat_decimal(v.value(), 6) : "inf";
}

struct SynthOpts {
    std::string program_file, perf_file, sched_file, check, out = ".";
    int threads = 1;
    bool use_abstraction = false, minimize = false, no_prune = false;
    bool all_subsets = false, dump_game = false;
    bool gadget = false, limavg = false;
};

void write_reports(const fs::path& out, const json& meta,
                   const std::vector<std::array<std::string, 4>>& rows) {
    std::ostringstream csv;
    csv << "strategy,value,decimal,safe\n";
    for (const auto& r : rows) csv << r[0] << "," << r[1] << "," << r[2] << "," << r[3] << "\n";
    write_file(out / "report.csv", csv.str());
    write_file(out / "report.json", meta.dump(2) + "\n");
}

int run_gadget(const SynthOpts& o) {
    Cnf f = parse_dimacs(read_file(o.program_file));
    SatGadget gadget = gen_sat_gadget(f);
    const GameGraph& g = o.limavg ? gadget.limavg : gadget.safety;
    GameSolveResult r = resolve_game(g);

    std::vector<std::array<std::string, 4>> rows;
    for (const auto& [enc, v] : r.rows)
        rows.push_back({enc, value_cell(v), decimal_cell(v), v.is_finite() ? "1" : "0"});

    json j;
    j["input"] = {{"cnf", o.program_file},
                  {"variables", f.num_vars},
                  {"clauses", f.clauses.size()},
                  {"variant", o.limavg ? "limavg" : "safety"}};
    j["game"] = {{"states", g.states.size()}, {"observations", f.num_vars + 1}};
    j["tie_break"] = "lexicographically smallest strategy encoding";
    j["found"] = r.found;
    if (r.found) {
        j["value"] = {{"rational", value_cell(r.value)}, {"decimal", decimal_cell(r.value)}};
        std::vector<std::string> labels;
        for (int l : r.labels) labels.push_back(l ? "true" : "false");
        j["assignment"] = labels;
    }
    fs::create_directories(o.out);
    write_reports(o.out, j, rows);

    bool ok = r.found && (!o.limavg || r.value < ExtValue(Rat(1)));
    std::cout << (o.limavg ? "value " + (r.found ? r.value.str() : std::string("inf"))
                           : std::string(ok ? "safe strategy found" : "no safe strategy"))
              << "\n";
    return ok ? 0 : 2;
}

int run_synth(const SynthOpts& o) {
    if (o.gadget) return run_gadget(o);

    PartialProgram p = parse_partial_program(read_file(o.program_file));
    PerformanceAutomaton w = o.perf_file.empty()
                                 ? PerformanceAutomaton::trivial()
                                 : parse_performance_automaton(read_file(o.perf_file));
    Scheduler sch =
        o.sched_file.empty() ? Scheduler::make_uniform() : parse_scheduler(read_file(o.sched_file));
    SafetyConditions conds = parse_checks(o.check);

    ResolveOptions opt;
    opt.use_abstraction = o.use_abstraction;
    opt.minimize = o.minimize;
    opt.prune = !o.no_prune;
    opt.threads = o.threads;
    opt.compose.state_cap = state_cap();
    opt.compose.all_subsets = o.all_subsets;

    Composer composer(p, sch, w, conds, opt.compose);
    fs::create_directories(o.out);
    if (o.dump_game) {
        std::ofstream dot(fs::path(o.out) / "game.dot");
        dump_dot(composer.game(), dot);
    }

    ResolveResult r = resolve(p, sch, w, conds, opt);

    std::vector<std::array<std::string, 4>> rows;
    for (const auto& row : r.rows)
        rows.push_back({row.strategy.encode(), value_cell(row.value), decimal_cell(row.value),
                        row.safe ? "1" : "0"});

    json j;
    j["inputs"] = {{"program", o.program_file},
                   {"perf", o.perf_file.empty() ? "(trivial)" : o.perf_file},
                   {"sched", o.sched_file.empty() ? "(uniform)" : o.sched_file},
                   {"check", {{"race", conds.race}, {"deadlock", conds.deadlock}}}};
    j["options"] = {{"abstract", opt.use_abstraction}, {"minimize", opt.minimize},
                    {"prune", opt.prune},             {"threads", opt.threads},
                    {"all_subsets", opt.compose.all_subsets}, {"state_cap", opt.compose.state_cap}};
    j["game_states"] = composer.game().states.size();
    json obs = json::array();
    for (size_t i = 0; i < composer.choice_obs().size(); ++i) {
        const auto& [t, l] = composer.choice_obs_keys()[i];
        obs.push_back({{"thread", p.threads[t].name},
                       {"location", p.threads[t].locations[l]},
                       {"actions", composer.choice_obs()[i].num_actions}});
    }
    j["observations"] = obs;
    j["strategies"] = {{"total", r.total_strategies},
                       {"evaluated", r.rows.size()},
                       {"pruned_subtrees", r.stats.pruned_subtrees},
                       {"partial_checks", r.stats.checks}};
    j["tie_break"] = "lexicographically smallest strategy encoding";
    j["found"] = r.found;
    if (r.found) {
        j["strategy"] = r.best.encode();
        j["value"] = {{"rational", rat_str(r.value.value())},
                      {"decimal", rat_decimal(r.value.value(), 6)}};
    }
    j["notes"] = r.notes;
    write_reports(o.out, j, rows);

    if (!r.found) {
        std::cout << "no safe program\n";
        return 2;
    }
    write_file(fs::path(o.out) / "optimal.prog", emit_program(r.resolved));
    std::cout << "value " << r.value.str() << " strategy [" << r.best.encode() << "]\n";
    return 0;
}

int run_value(const SynthOpts& o) {
    PartialProgram p = parse_partial_program(read_file(o.program_file));
    PerformanceAutomaton w = o.perf_file.empty()
                                 ? PerformanceAutomaton::trivial()
                                 : parse_performance_automaton(read_file(o.perf_file));
    Scheduler sch =
        o.sched_file.empty() ? Scheduler::make_uniform() : parse_scheduler(read_file(o.sched_file));
    ComposeOptions copt;
    copt.state_cap = state_cap();
    ExtValue v = value_of_program(p, sch, w, parse_checks(o.check), copt);
    std::cout << v.str() << "\n";
    return 0;
}

GalleryInstance build_gallery(const std::string& name,
                              const std::map<std::string, std::string>& kv) {
    auto geti = [&](const char* k, int def) {
        auto it = kv.find(k);
        return it == kv.end() ? def : std::stoi(it->second);
    };
    auto getr = [&](const char* k, const Rat& def) {
        auto it = kv.find(k);
        return it == kv.end() ? def : parse_rat(it->second);
    };
    for (const auto& [k, _] : kv) {
        static const std::set<std::string> known = {
            "producers", "consumers", "cells",    "lockcost", "copycost", "granularity",
            "nmax",      "workcost",  "worklen",  "workers",  "initcost", "len",
            "idlecost",  "lines",     "cached",   "uncached", "n"};
        if (!known.count(k)) throw std::runtime_error("unknown parameter '" + k + "'");
    }
    if (name == "prodcons")
        return gen_producer_consumer(geti("producers", 1), geti("consumers", 1),
                                     geti("cells", 2), getr("lockcost", Rat(1)),
                                     getr("copycost", Rat(100)), geti("granularity", 0));
    if (name == "optimistic")
        return gen_optimistic(geti("nmax", 5), getr("workcost", Rat(22)),
                              getr("lockcost", Rat(40)), geti("worklen", 1), geti("n", 0));
    if (name == "worksharing")
        return gen_work_sharing(geti("workers", 3), getr("initcost", Rat(6)), geti("len", 4),
                                getr("workcost", Rat(1)), getr("idlecost", Rat(3)),
                                geti("n", 0));
    if (name == "cache")
        return gen_cache_example(geti("nmax", 5), geti("lines", 1), getr("cached", Rat(1)),
                                 getr("uncached", Rat(10)), geti("n", 0));
    throw std::runtime_error("unknown gallery name '" + name + "'");
}

int run_bench(const std::string& name, const std::vector<std::string>& params,
              const std::string& sweep, const std::string& out, int threads) {
    std::map<std::string, std::string> kv;
    for (const auto& p : params) {
        auto eq = p.find('=');
        if (eq == std::string::npos) throw std::runtime_error("expected k=v, got '" + p + "'");
        kv[p.substr(0, eq)] = p.substr(eq + 1);
    }

    std::string key;
    std::vector<std::string> points;
    if (!sweep.empty()) {
        auto eq = sweep.find('=');
        if (eq == std::string::npos) throw std::runtime_error("expected k=range in --sweep");
        key = sweep.substr(0, eq);
        std::string range = sweep.substr(eq + 1);
        auto dots = range.find("..");
        if (dots != std::string::npos) {
            int lo = std::stoi(range.substr(0, dots)), hi = std::stoi(range.substr(dots + 2));
            for (int v = lo; v <= hi; ++v) points.push_back(std::to_string(v));
        } else {
            std::istringstream is(range);
            std::string item;
            while (std::getline(is, item, ',')) points.push_back(item);
        }
    } else {
        points.push_back("");
    }

    fs::create_directories(out);
    std::ostringstream csv;
    csv << "param,point,instance,strategy,value,decimal,safe\n";
    for (const auto& pt : points) {
        if (!key.empty()) kv[key] = pt;
        GalleryInstance gi = build_gallery(name, kv);
        write_file(fs::path(out) / (gi.name + ".prog"), gi.program_src);
        write_file(fs::path(out) / (gi.name + ".perf"), gi.perf_src);
        write_file(fs::path(out) / (gi.name + ".sched"), gi.sched_src);
        ResolveOptions opt;
        opt.threads = threads;
        opt.compose.state_cap = state_cap();
        ResolveResult r = resolve(gi.program, gi.sched, gi.perf, gi.conds, opt);
        csv << key << "," << pt << "," << gi.name << ","
            << (r.found ? r.best.encode() : "") << "," << (r.found ? value_cell(r.value) : "inf")
            << "," << (r.found ? decimal_cell(r.value) : "inf") << "," << (r.found ? 1 : 0)
            << "\n";
    }
    write_file(fs::path(out) / "report.csv", csv.str());
    std::cout << "wrote " << (fs::path(out) / "report.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantitative synthesis for concurrent programs"};
    app.require_subcommand(1);

    SynthOpts so;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("program", so.program_file, "program file")->required();
        cmd->add_option("--perf", so.perf_file, "performance automaton file");
        cmd->add_option("--sched", so.sched_file, "scheduler file");
        cmd->add_option("--check", so.check, "comma list: race,deadlock");
    };

    CLI::App* synth = app.add_subcommand("synth", "resolve choices optimally");
    add_common(synth);
    synth->add_option("--threads", so.threads, "parallel candidate evaluation");
    synth->add_option("--out", so.out, "output directory");
    synth->add_flag("--abstract", so.use_abstraction, "apply declared abstractions");
    synth->add_flag("--minimize", so.minimize, "coarsest-bisimulation reduction");
    synth->add_flag("--no-prune", so.no_prune, "disable strategy elimination");
    synth->add_flag("--all-subsets", so.all_subsets, "non-maximal resolver actions too");
    synth->add_flag("--dump-game", so.dump_game, "write game.dot");
    synth->add_flag("--gadget", so.gadget, "input is a DIMACS cnf; solve its game");
    synth->add_flag("--limavg", so.limavg, "weighted gadget variant");

    CLI::App* value = app.add_subcommand("value", "value of a choice-free program");
    add_common(value);

    CLI::App* bench = app.add_subcommand("bench", "generate and sweep gallery instances");
    std::string gname, sweep, bout = ".";
    std::vector<std::string> params;
    int bthreads = 1;
    bench->add_option("name", gname, "prodcons|optimistic|worksharing|cache")->required();
    bench->add_option("--params", params, "generator parameters k=v");
    bench->add_option("--sweep", sweep, "k=lo..hi or k=v1,v2,...");
    bench->add_option("--out", bout, "output directory");
    bench->add_option("--threads", bthreads, "parallel candidate evaluation");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(so);
        if (value->parsed()) return run_value(so);
        return run_bench(gname, params, sweep, bout, bthreads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
