#include "qsynth/abstraction.hpp"

#include <algorithm>
#include <map>

namespace qsynth {

Partition Partition::identity(size_t n) {
    Partition p;
    p.cls.resize(n);
    for (size_t i = 0; i < n; ++i) p.cls[i] = (int)i;
    p.num_classes = (int)n;
    return p;
}

namespace {

// per action label: target class -> weight -> probability mass
using ActionSig = std::map<int, std::map<Rat, Rat>>;
using StateSig = std::vector<std::pair<int, ActionSig>>;

StateSig signature(const MDP& m, const std::vector<int>& cls, int s) {
    StateSig sig;
    for (const auto& a : m.states[s].actions) {
        ActionSig as;
        for (const auto& e : a.edges) as[cls[e.target]][e.weight] += e.prob;
        sig.push_back({a.label, std::move(as)});
    }
    std::sort(sig.begin(), sig.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    return sig;
}

std::vector<std::vector<int>> members_of(const Partition& p) {
    std::vector<std::vector<int>> mem(p.num_classes);
    for (size_t s = 0; s < p.cls.size(); ++s) mem[p.cls[s]].push_back((int)s);
    return mem;
}

}  // namespace

bool check_qpb(const MDP& m, const Partition& p) {
    if (p.cls.size() != m.states.size()) return false;
    auto mem = members_of(p);
    for (const auto& c : mem) {
        if (c.empty()) continue;
        int rep = c[0];
        StateSig rsig = signature(m, p.cls, rep);
        for (size_t i = 1; i < c.size(); ++i) {
            if (m.states[c[i]].bad != m.states[rep].bad) return false;
            if (signature(m, p.cls, c[i]) != rsig) return false;
        }
    }
    return true;
}

MDP quotient(const MDP& m, const Partition& p) {
    if (!check_qpb(m, p)) throw std::runtime_error("quotient: partition is not a bisimulation");
    auto mem = members_of(p);
    MDP out;
    out.states.resize(p.num_classes);
    out.initial = p.cls[m.initial];
    for (int c = 0; c < p.num_classes; ++c) {
        if (mem[c].empty()) continue;
        int rep = mem[c][0];
        out.states[c].bad = m.states[rep].bad;
        for (const auto& [label, as] : signature(m, p.cls, rep)) {
            MDP::Action a;
            a.label = label;
            for (const auto& [tc, wm] : as)
                for (const auto& [w, mass] : wm) a.edges.push_back({tc, mass, w});
            out.states[c].actions.push_back(std::move(a));
        }
    }
    return out;
}

Partition coarsest_qpb(const MDP& m) {
    size_t n = m.states.size();
    std::vector<int> cls(n, 0);
    {
        std::map<std::pair<bool, std::vector<int>>, int> init;
        for (size_t s = 0; s < n; ++s) {
            std::vector<int> labels;
            for (const auto& a : m.states[s].actions) labels.push_back(a.label);
            std::sort(labels.begin(), labels.end());
            auto [it, _] = init.emplace(std::make_pair(m.states[s].bad, std::move(labels)),
                                        (int)init.size());
            cls[s] = it->second;
        }
    }
    while (true) {
        std::map<std::pair<int, StateSig>, int> next;
        std::vector<int> ncls(n);
        for (size_t s = 0; s < n; ++s) {
            auto key = std::make_pair(cls[s], signature(m, cls, (int)s));
            auto [it, _] = next.emplace(std::move(key), (int)next.size());
            ncls[s] = it->second;
        }
        bool stable = next.size() == [&] {
            std::vector<int> seen(cls.begin(), cls.end());
            std::sort(seen.begin(), seen.end());
            seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
            return seen.size();
        }();
        cls = std::move(ncls);
        if (stable) break;
    }
    Partition p;
    p.cls = std::move(cls);
    p.num_classes = 0;
    for (int c : p.cls) p.num_classes = std::max(p.num_classes, c + 1);
    return p;
}

namespace {

std::vector<char> resolve_listed(const PartialProgram& p, const std::vector<std::string>& vars,
                                 std::string* err) {
    std::vector<char> listed(p.vars.size(), 0);
    for (const auto& name : vars) {
        bool found = false;
        for (size_t v = 0; v < p.vars.size(); ++v)
            if (p.vars[v].name == name) {
                listed[v] = 1;
                found = true;
            }
        if (!found) {
            *err = "unknown variable '" + name + "'";
            return {};
        }
    }
    return listed;
}

bool mentions_listed(const Term& t, const std::vector<char>& listed) {
    std::vector<int> vs;
    collect_vars(t, vs);
    for (int v : vs)
        if (listed[v]) return true;
    return false;
}

bool mentions_listed(const Guard& g, const std::vector<char>& listed) {
    std::vector<int> vs;
    collect_vars(g, vs);
    for (int v : vs)
        if (listed[v]) return true;
    return false;
}

// every comparison touching a listed variable must compare two listed vars
bool order_guard_ok(const Guard& g, const std::vector<char>& listed) {
    switch (g.kind) {
        case Guard::Kind::True:
            return true;
        case Guard::Kind::And:
            return order_guard_ok(*g.a, listed) && order_guard_ok(*g.b, listed);
        case Guard::Kind::Not:
            return order_guard_ok(*g.a, listed);
        case Guard::Kind::Cmp:
            if (!mentions_listed(*g.lhs, listed) && !mentions_listed(*g.rhs, listed))
                return true;
            return g.lhs->kind == Term::Kind::Var && listed[g.lhs->var] &&
                   g.rhs->kind == Term::Kind::Var && listed[g.rhs->var];
    }
    return false;
}

AbstractionResult finish(const MDP& m, const FixedSystem& fs,
                         std::vector<SysKey> masked) {
    AbstractionResult r;
    std::map<SysKey, int> index;
    r.partition.cls.resize(fs.keys.size());
    for (size_t s = 0; s < masked.size(); ++s) {
        auto [it, _] = index.emplace(masked[s], (int)index.size());
        r.partition.cls[s] = it->second;
    }
    r.partition.num_classes = (int)index.size();
    if (!check_qpb(m, r.partition)) {
        r.accepted = false;
        r.reason = "partition fails the bisimulation check";
        return r;
    }
    r.accepted = true;
    r.masked_keys = std::move(masked);
    return r;
}

}  // namespace

AbstractionResult data_abstraction(const PartialProgram& p, const FixedSystem& fs,
                                   const std::vector<std::string>& vars) {
    AbstractionResult r;
    auto listed = resolve_listed(p, vars, &r.reason);
    if (listed.empty()) return r;

    for (const auto& c : p.threads)
        for (const auto& tr : c.transitions) {
            if (mentions_listed(*tr.guard, listed)) {
                r.reason = "a listed variable occurs in a guard of thread " + c.name;
                return r;
            }
            for (const auto& a : tr.op.assigns)
                if (!listed[a.target] && mentions_listed(*a.value, listed)) {
                    r.reason = "a listed variable flows into non-listed '" +
                               p.vars[a.target].name + "'";
                    return r;
                }
        }

    std::vector<SysKey> masked = fs.keys;
    for (auto& k : masked)
        for (size_t v = 0; v < listed.size(); ++v)
            if (listed[v]) k.vals[v] = 0;
    return finish(fs.mdp, fs, std::move(masked));
}

AbstractionResult order_abstraction(const PartialProgram& p, const FixedSystem& fs,
                                    const std::vector<std::string>& vars) {
    AbstractionResult r;
    auto listed = resolve_listed(p, vars, &r.reason);
    if (listed.empty()) return r;

    for (const auto& c : p.threads)
        for (const auto& tr : c.transitions) {
            if (!order_guard_ok(*tr.guard, listed)) {
                r.reason = "a guard of thread " + c.name +
                           " uses a listed variable outside listed-to-listed comparisons";
                return r;
            }
            for (const auto& a : tr.op.assigns) {
                const Term& v = *a.value;
                if (listed[a.target]) {
                    bool copy = v.kind == Term::Kind::Var && listed[v.var];
                    bool constant = v.kind == Term::Kind::Const;
                    if (!copy && !constant) {
                        r.reason = "listed variable '" + p.vars[a.target].name +
                                   "' is assigned a non-copy expression";
                        return r;
                    }
                } else if (mentions_listed(v, listed)) {
                    r.reason = "a listed variable flows into non-listed '" +
                               p.vars[a.target].name + "'";
                    return r;
                }
            }
        }

    std::vector<int> slots;
    for (size_t v = 0; v < listed.size(); ++v)
        if (listed[v]) slots.push_back((int)v);
    std::vector<SysKey> masked = fs.keys;
    for (auto& k : masked) {
        std::vector<int> vals;
        for (int v : slots) vals.push_back(k.vals[v]);
        std::vector<int> sorted = vals;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        for (size_t i = 0; i < slots.size(); ++i)
            k.vals[slots[i]] =
                (int)(std::lower_bound(sorted.begin(), sorted.end(), vals[i]) - sorted.begin());
    }
    return finish(fs.mdp, fs, std::move(masked));
}

FixedSystem apply_abstractions(const PartialProgram& p, FixedSystem fs,
                               std::vector<std::string>* notes) {
    for (const auto& d : p.abstractions) {
        const char* kind = d.kind == AbstractionDirective::Kind::Data ? "data" : "order";
        AbstractionResult r = d.kind == AbstractionDirective::Kind::Data
                                  ? data_abstraction(p, fs, d.vars)
                                  : order_abstraction(p, fs, d.vars);
        if (!r.accepted) {
            if (notes)
                notes->push_back(std::string(kind) + " abstraction rejected: " + r.reason);
            continue;
        }
        auto mem = members_of(r.partition);
        std::vector<SysKey> qkeys(r.partition.num_classes);
        for (int c = 0; c < r.partition.num_classes; ++c)
            if (!mem[c].empty()) qkeys[c] = r.masked_keys[mem[c][0]];
        fs.mdp = quotient(fs.mdp, r.partition);
        fs.keys = std::move(qkeys);
        if (notes)
            notes->push_back(std::string(kind) + " abstraction applied: " +
                             std::to_string(r.partition.cls.size()) + " -> " +
                             std::to_string(r.partition.num_classes) + " states");
    }
    return fs;
}

}  // namespace qsynth
