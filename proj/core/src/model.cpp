#include "qsynth/model.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace qsynth {

TermPtr Term::constant(int64_t v) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Const;
    t->value = v;
    return t;
}

TermPtr Term::variable(int var) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Var;
    t->var = var;
    return t;
}

TermPtr Term::bin(BinOp op, TermPtr l, TermPtr r) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Bin;
    t->op = op;
    t->lhs = std::move(l);
    t->rhs = std::move(r);
    return t;
}

GuardPtr Guard::truth() {
    return std::make_shared<Guard>();
}

GuardPtr Guard::cmp(Rel r, TermPtr l, TermPtr rh) {
    auto g = std::make_shared<Guard>();
    g->kind = Kind::Cmp;
    g->rel = r;
    g->lhs = std::move(l);
    g->rhs = std::move(rh);
    return g;
}

GuardPtr Guard::conj(GuardPtr x, GuardPtr y) {
    auto g = std::make_shared<Guard>();
    g->kind = Kind::And;
    g->a = std::move(x);
    g->b = std::move(y);
    return g;
}

GuardPtr Guard::negate(GuardPtr x) {
    auto g = std::make_shared<Guard>();
    g->kind = Kind::Not;
    g->a = std::move(x);
    return g;
}

int PartialProgram::find_var(const std::string& name, int thread) const {
    // thread-scoped names shadow globals
    for (size_t i = 0; i < vars.size(); ++i)
        if (vars[i].name == name && vars[i].thread == thread) return (int)i;
    for (size_t i = 0; i < vars.size(); ++i)
        if (vars[i].name == name && vars[i].kind == VarKind::Global) return (int)i;
    return -1;
}

int PartialProgram::find_symbol(const std::string& name) const {
    for (size_t i = 0; i < symbols.size(); ++i)
        if (symbols[i] == name) return (int)i;
    return -1;
}

int PartialProgram::intern_symbol(const std::string& name) {
    int i = find_symbol(name);
    if (i >= 0) return i;
    symbols.push_back(name);
    return (int)symbols.size() - 1;
}

bool PartialProgram::is_lock(int var) const {
    for (const auto& t : threads)
        if (std::find(t.lock_vars.begin(), t.lock_vars.end(), var) != t.lock_vars.end())
            return true;
    return false;
}

int64_t eval_term(const Term& t, const Valuation& v) {
    switch (t.kind) {
        case Term::Kind::Const:
            return t.value;
        case Term::Kind::Var:
            if (t.var < 0 || t.var >= (int)v.size()) throw EvalError("unbound variable");
            return v[t.var];
        case Term::Kind::Bin: {
            int64_t a = eval_term(*t.lhs, v), b = eval_term(*t.rhs, v);
            switch (t.op) {
                case BinOp::Add: return a + b;
                case BinOp::Sub: return a - b;
                case BinOp::Mul: return a * b;
                case BinOp::Mod: {
                    if (b == 0) throw EvalError("mod by zero");
                    // Euclidean: result in [0, |b|)
                    int64_t m = a % b;
                    if (m < 0) m += (b > 0 ? b : -b);
                    return m;
                }
            }
        }
    }
    throw EvalError("malformed term");
}

bool eval_guard(const Guard& g, const Valuation& v) {
    switch (g.kind) {
        case Guard::Kind::True:
            return true;
        case Guard::Kind::Cmp: {
            int64_t a = eval_term(*g.lhs, v), b = eval_term(*g.rhs, v);
            switch (g.rel) {
                case Rel::Eq: return a == b;
                case Rel::Ne: return a != b;
                case Rel::Lt: return a < b;
                case Rel::Le: return a <= b;
                case Rel::Gt: return a > b;
                case Rel::Ge: return a >= b;
            }
            return false;
        }
        case Guard::Kind::And:
            return eval_guard(*g.a, v) && eval_guard(*g.b, v);
        case Guard::Kind::Not:
            return !eval_guard(*g.a, v);
    }
    throw EvalError("malformed guard");
}

Valuation apply_operation(const PartialProgram& p, const Operation& op, const Valuation& v) {
    Valuation out = v;
    for (const auto& as : op.assigns) {
        int64_t val = eval_term(*as.value, v);
        const VarDecl& d = p.vars[as.target];
        if (val < d.lo || val > d.hi)
            throw DomainOverflow("assignment to " + d.name + " leaves domain");
        out[as.target] = (int)val;
    }
    return out;
}

void collect_vars(const Term& t, std::vector<int>& out) {
    switch (t.kind) {
        case Term::Kind::Const: return;
        case Term::Kind::Var: out.push_back(t.var); return;
        case Term::Kind::Bin:
            collect_vars(*t.lhs, out);
            collect_vars(*t.rhs, out);
            return;
    }
}

void collect_vars(const Guard& g, std::vector<int>& out) {
    switch (g.kind) {
        case Guard::Kind::True: return;
        case Guard::Kind::Cmp:
            collect_vars(*g.lhs, out);
            collect_vars(*g.rhs, out);
            return;
        case Guard::Kind::And:
            collect_vars(*g.a, out);
            collect_vars(*g.b, out);
            return;
        case Guard::Kind::Not:
            collect_vars(*g.a, out);
            return;
    }
}

namespace {

std::vector<int> dedup(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Sweeps all assignments to `vars` (others left at base) and calls f.
// Returns false if f ever returned false (stopping early).
bool sweep(const PartialProgram& p, const std::vector<int>& vars, Valuation& base,
           const std::function<bool(const Valuation&)>& f) {
    std::function<bool(size_t)> rec = [&](size_t i) -> bool {
        if (i == vars.size()) return f(base);
        const VarDecl& d = p.vars[vars[i]];
        for (int x = d.lo; x <= d.hi; ++x) {
            base[vars[i]] = x;
            if (!rec(i + 1)) return false;
        }
        return true;
    };
    return rec(0);
}

Valuation base_valuation(const PartialProgram& p) {
    Valuation v(p.vars.size());
    for (size_t i = 0; i < p.vars.size(); ++i)
        v[i] = p.vars[i].initial.value_or(p.vars[i].lo);
    return v;
}

}  // namespace

bool guards_disjoint(const PartialProgram& p, const Guard& g1, const Guard& g2) {
    std::vector<int> vars;
    collect_vars(g1, vars);
    collect_vars(g2, vars);
    vars = dedup(vars);
    Valuation base = base_valuation(p);
    return sweep(p, vars, base, [&](const Valuation& v) {
        return !(eval_guard(g1, v) && eval_guard(g2, v));
    });
}

std::vector<int> choice_locations(const PartialProgram& p, const Thread& c) {
    std::vector<int> result;
    for (size_t q = 0; q < c.locations.size(); ++q) {
        const auto& outs = c.out[q];
        if (outs.size() < 2) continue;
        std::vector<int> vars;
        for (int ti : outs) collect_vars(*c.transitions[ti].guard, vars);
        vars = dedup(vars);
        Valuation base = base_valuation(p);
        bool nondet = !sweep(p, vars, base, [&](const Valuation& v) {
            int enabled = 0;
            for (int ti : outs)
                if (eval_guard(*c.transitions[ti].guard, v) && ++enabled >= 2) return false;
            return true;
        });
        if (nondet) result.push_back((int)q);
    }
    return result;
}

void compute_accesses(PartialProgram& p) {
    std::set<int> globals(p.globals.begin(), p.globals.end());
    for (auto& th : p.threads) {
        for (auto& tr : th.transitions) {
            std::vector<int> reads;
            collect_vars(*tr.guard, reads);
            for (const auto& as : tr.op.assigns) collect_vars(*as.value, reads);
            tr.accesses.clear();
            for (int v : dedup(reads))
                if (globals.count(v)) tr.accesses.push_back({v, false});
            for (const auto& as : tr.op.assigns)
                if (globals.count(as.target)) {
                    auto it = std::find_if(tr.accesses.begin(), tr.accesses.end(),
                                           [&](const Access& a) { return a.var == as.target; });
                    if (it != tr.accesses.end())
                        it->write = true;
                    else
                        tr.accesses.push_back({as.target, true});
                }
        }
    }
}

void rebuild_out(PartialProgram& p) {
    for (auto& th : p.threads) {
        th.out.assign(th.locations.size(), {});
        for (size_t i = 0; i < th.transitions.size(); ++i)
            th.out[th.transitions[i].from].push_back((int)i);
    }
}

std::vector<Diagnostic> validate(const PartialProgram& p) {
    std::vector<Diagnostic> diags;
    auto report = [&](std::string where, std::string msg) {
        diags.push_back({std::move(where), std::move(msg)});
    };

    for (const auto& d : p.vars) {
        if (d.lo > d.hi) report("var " + d.name, "empty domain");
        if (d.initial && (*d.initial < d.lo || *d.initial > d.hi))
            report("var " + d.name, "initial value outside domain");
        if (d.kind != VarKind::Input && !d.initial)
            report("var " + d.name, "missing initial value");
        if (d.kind == VarKind::Input && d.initial)
            report("var " + d.name, "input variables take no initial value");
    }
    for (size_t i = 0; i < p.vars.size(); ++i)
        for (size_t j = i + 1; j < p.vars.size(); ++j)
            if (p.vars[i].name == p.vars[j].name && p.vars[i].thread == p.vars[j].thread)
                report("var " + p.vars[i].name, "duplicate declaration");

    if (p.threads.empty()) report("program", "no threads");

    for (const auto& th : p.threads) {
        std::string tn = "thread " + th.name;
        if (th.initial_loc < 0 || th.initial_loc >= (int)th.locations.size())
            report(tn, "initial location out of range");
        for (int lv : th.lock_vars) {
            const VarDecl& d = p.vars[lv];
            if (d.kind != VarKind::Global) report(tn, "lock " + d.name + " is not global");
            if (d.lo != 0 || d.hi != 1) report(tn, "lock " + d.name + " must have domain [0,1]");
        }
        for (size_t k = 0; k < th.transitions.size(); ++k) {
            const Transition& tr = th.transitions[k];
            std::string tw = tn + " transition " + std::to_string(k);
            if (tr.from < 0 || tr.from >= (int)th.locations.size() || tr.to < 0 ||
                tr.to >= (int)th.locations.size()) {
                report(tw, "location out of range");
                continue;
            }
            std::set<int> seen;
            for (const auto& as : tr.op.assigns) {
                if (!seen.insert(as.target).second)
                    report(tw, "variable " + p.vars[as.target].name + " assigned twice");
                if (p.vars[as.target].kind == VarKind::Input)
                    report(tw, "assignment to input variable " + p.vars[as.target].name);
                // lock discipline: locks written only with constants 0/1
                if (p.is_lock(as.target)) {
                    if (as.value->kind != Term::Kind::Const ||
                        (as.value->value != 0 && as.value->value != 1))
                        report(tw, "lock " + p.vars[as.target].name +
                                       " must be written with constant 0 or 1");
                }
            }
            // conservative overflow check: no assignment may leave its domain
            // under any valuation of the variables it reads that satisfies the
            // transition's guard
            for (const auto& as : tr.op.assigns) {
                std::vector<int> vars;
                collect_vars(*as.value, vars);
                collect_vars(*tr.guard, vars);
                vars = dedup(vars);
                size_t count = 1;
                for (int v : vars) {
                    count *= (size_t)(p.vars[v].hi - p.vars[v].lo + 1);
                    if (count > 4'000'000) break;
                }
                if (count > 4'000'000) {
                    report(tw, "overflow check domain too large");
                    continue;
                }
                Valuation base(p.vars.size());
                for (size_t i = 0; i < p.vars.size(); ++i)
                    base[i] = p.vars[i].initial.value_or(p.vars[i].lo);
                const VarDecl& d = p.vars[as.target];
                bool ok = sweep(p, vars, base, [&](const Valuation& v) {
                    try {
                        if (!eval_guard(*tr.guard, v)) return true;
                        int64_t x = eval_term(*as.value, v);
                        return x >= d.lo && x <= d.hi;
                    } catch (const EvalError&) {
                        return false;
                    }
                });
                if (!ok)
                    report(tw, "assignment to " + d.name + " can overflow its domain");
            }
        }
    }

    // all threads share the global table by construction; check initial values
    // are consistent (a single table makes cross-thread disagreement a parse
    // concern, revalidated here for programmatically built programs)
    for (int g : p.globals)
        if (p.vars[g].kind != VarKind::Global)
            report("var " + p.vars[g].name, "listed as global but not declared global");

    return diags;
}

}  // namespace qsynth
