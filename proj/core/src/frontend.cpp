#include "qsynth/frontend.hpp"

#include <cctype>
#include <sstream>

namespace qsynth {

namespace {

struct Tok {
    enum Kind { Id, Int, Sym, End } kind = End;
    std::string text;
    long value = 0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : s_(text) { advance(); }

    const Tok& peek() const { return tok_; }
    Tok take() {
        Tok t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        skip_space();
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= s_.size()) {
            tok_.kind = Tok::End;
            tok_.text = "<end of file>";
            return;
        }
        char c = s_[pos_];
        if (std::isalpha((unsigned char)c) || c == '_') {
            size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum((unsigned char)s_[pos_]) || s_[pos_] == '_'))
                bump();
            tok_.kind = Tok::Id;
            tok_.text = s_.substr(start, pos_ - start);
            return;
        }
        if (std::isdigit((unsigned char)c)) {
            size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) bump();
            tok_.kind = Tok::Int;
            tok_.text = s_.substr(start, pos_ - start);
            tok_.value = std::stol(tok_.text);
            return;
        }
        static const char* multi[] = {"-->", "->", "--", ":=", "==", "!=", "<=", ">=", "&&"};
        for (const char* m : multi) {
            size_t n = std::char_traits<char>::length(m);
            if (s_.compare(pos_, n, m) == 0) {
                tok_.kind = Tok::Sym;
                tok_.text = m;
                for (size_t i = 0; i < n; ++i) bump();
                return;
            }
        }
        if (std::string("{}()[],;:=+-*/<>!").find(c) != std::string::npos) {
            tok_.kind = Tok::Sym;
            tok_.text = std::string(1, c);
            bump();
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }

    void skip_space() {
        while (pos_ < s_.size()) {
            char c = s_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                bump();
            } else if (c == '#' || (c == '/' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '/')) {
                while (pos_ < s_.size() && s_[pos_] != '\n') bump();
            } else {
                break;
            }
        }
    }

    void bump() {
        if (s_[pos_] == '\n') {
            line_++;
            col_ = 1;
        } else {
            col_++;
        }
        pos_++;
    }

    const std::string& s_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Tok tok_;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lx_(text) {}

protected:
    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError(msg + " (got '" + lx_.peek().text + "')", lx_.peek().line,
                         lx_.peek().col);
    }

    bool at_sym(const char* s) { return lx_.peek().kind == Tok::Sym && lx_.peek().text == s; }
    bool at_id(const char* s = nullptr) {
        return lx_.peek().kind == Tok::Id && (!s || lx_.peek().text == s);
    }
    bool at_end() { return lx_.peek().kind == Tok::End; }

    bool eat_sym(const char* s) {
        if (!at_sym(s)) return false;
        lx_.take();
        return true;
    }
    bool eat_id(const char* s) {
        if (!at_id(s)) return false;
        lx_.take();
        return true;
    }
    void expect_sym(const char* s) {
        if (!eat_sym(s)) fail(std::string("expected '") + s + "'");
    }
    std::string expect_id(const char* what) {
        if (lx_.peek().kind != Tok::Id) fail(std::string("expected ") + what);
        return lx_.take().text;
    }
    long expect_int() {
        bool neg = eat_sym("-");
        if (lx_.peek().kind != Tok::Int) fail("expected integer");
        long v = lx_.take().value;
        return neg ? -v : v;
    }
    Rat expect_rat() {
        long num = expect_int();
        if (eat_sym("/")) {
            long den = expect_int();
            if (den == 0) fail("zero denominator");
            return Rat(num) / Rat(den);
        }
        return Rat(num);
    }

    Lexer lx_;
};

class ProgramParser : Parser {
public:
    explicit ProgramParser(const std::string& text) : Parser(text) {}

    PartialProgram run() {
        if (!eat_id("globals")) fail("expected 'globals'");
        expect_sym("{");
        while (!eat_sym("}")) var_decl(VarKind::Global, -1);
        while (at_id("thread")) thread();
        while (at_id("abstract")) abstraction();
        if (!at_end()) fail("expected 'thread', 'abstract' or end of file");
        if (p_.threads.empty()) fail("at least one thread required");
        rebuild_out(p_);
        auto diags = validate(p_);
        if (!diags.empty()) {
            std::string msg = "invalid program:";
            for (const auto& d : diags) msg += "\n  " + d.where + ": " + d.message;
            throw ParseError(msg, 1, 1);
        }
        return std::move(p_);
    }

private:
    void var_decl(VarKind kind, int thread) {
        VarDecl v;
        v.name = expect_id("variable name");
        v.kind = kind;
        v.thread = thread;
        expect_sym(":");
        expect_sym("[");
        v.lo = (int)expect_int();
        expect_sym(",");
        v.hi = (int)expect_int();
        expect_sym("]");
        if (kind == VarKind::Input) {
            if (at_sym("=")) fail("input variables take no initial value");
        } else {
            expect_sym("=");
            v.initial = (int)expect_int();
        }
        expect_sym(";");
        int idx = (int)p_.vars.size();
        p_.vars.push_back(std::move(v));
        if (kind == VarKind::Global)
            p_.globals.push_back(idx);
        else if (kind == VarKind::Local)
            p_.threads[thread].locals.push_back(idx);
        else
            p_.threads[thread].inputs.push_back(idx);
    }

    void thread() {
        eat_id("thread");
        int tid = (int)p_.threads.size();
        p_.threads.emplace_back();
        Thread& c = p_.threads.back();
        c.name = expect_id("thread name");
        c.id = tid;
        cur_thread_ = tid;
        expect_sym("{");
        while (!eat_sym("}")) {
            if (eat_id("locals")) {
                expect_sym("{");
                while (!eat_sym("}")) var_decl(VarKind::Local, tid);
            } else if (eat_id("inputs")) {
                expect_sym("{");
                while (!eat_sym("}")) var_decl(VarKind::Input, tid);
            } else if (eat_id("locks")) {
                expect_sym("(");
                while (!eat_sym(")")) {
                    std::string n = expect_id("lock variable");
                    int v = p_.find_var(n, -1);
                    if (v < 0) fail("unknown global '" + n + "'");
                    c.lock_vars.push_back(v);
                }
                expect_sym(";");
            } else if (eat_id("loc")) {
                while (!eat_sym(";")) {
                    std::string n = expect_id("location name");
                    if (loc_index(c, n) >= 0) fail("duplicate location '" + n + "'");
                    c.locations.push_back(n);
                }
            } else if (eat_id("trans")) {
                int from = loc_ref(c);
                expect_sym("->");
                transition(c, from);
            } else if (eat_id("choice")) {
                int from = loc_ref(c);
                expect_sym("{");
                while (!eat_sym("}")) {
                    expect_sym("->");
                    transition(c, from);
                }
            } else {
                fail("expected thread item");
            }
        }
        cur_thread_ = -1;
    }

    int loc_index(const Thread& c, const std::string& n) {
        for (size_t i = 0; i < c.locations.size(); ++i)
            if (c.locations[i] == n) return (int)i;
        return -1;
    }
    int loc_ref(const Thread& c) {
        std::string n = expect_id("location");
        int i = loc_index(c, n);
        if (i < 0) fail("unknown location '" + n + "'");
        return i;
    }

    void transition(Thread& c, int from) {
        Transition tr;
        tr.from = from;
        tr.to = loc_ref(c);
        if (eat_id("when"))
            tr.guard = guard();
        else
            tr.guard = Guard::truth();
        if (eat_id("do")) {
            expect_sym("{");
            while (!at_sym("}")) {
                Assign a;
                a.target = var_ref("assignment target");
                expect_sym(":=");
                a.value = expr();
                tr.op.assigns.push_back(std::move(a));
                if (!eat_sym(",")) break;
            }
            expect_sym("}");
        }
        if (eat_id("label")) tr.cost_symbol = p_.intern_symbol(expect_id("cost symbol"));
        expect_sym(";");
        c.transitions.push_back(std::move(tr));
    }

    int var_ref(const char* what) {
        std::string n = expect_id(what);
        int v = p_.find_var(n, cur_thread_);
        if (v < 0) fail("unknown variable '" + n + "'");
        return v;
    }

    GuardPtr guard() {
        GuardPtr g = guard_unary();
        while (eat_sym("&&")) g = Guard::conj(g, guard_unary());
        return g;
    }

    GuardPtr guard_unary() {
        if (eat_sym("!")) return Guard::negate(guard_unary());
        if (at_sym("(")) {
            lx_.take();
            GuardPtr g = guard();
            expect_sym(")");
            return g;
        }
        if (eat_id("true")) return Guard::truth();
        TermPtr l = expr();
        Rel r;
        if (eat_sym("=="))
            r = Rel::Eq;
        else if (eat_sym("!="))
            r = Rel::Ne;
        else if (eat_sym("<="))
            r = Rel::Le;
        else if (eat_sym(">="))
            r = Rel::Ge;
        else if (eat_sym("<"))
            r = Rel::Lt;
        else if (eat_sym(">"))
            r = Rel::Gt;
        else {
            fail("expected comparison operator");
        }
        return Guard::cmp(r, l, expr());
    }

    TermPtr expr() {
        TermPtr t = mulexp();
        while (true) {
            if (eat_sym("+"))
                t = Term::bin(BinOp::Add, t, mulexp());
            else if (eat_sym("-"))
                t = Term::bin(BinOp::Sub, t, mulexp());
            else
                break;
        }
        return t;
    }

    TermPtr mulexp() {
        TermPtr t = atom();
        while (true) {
            if (eat_sym("*"))
                t = Term::bin(BinOp::Mul, t, atom());
            else if (eat_id("mod"))
                t = Term::bin(BinOp::Mod, t, atom());
            else
                break;
        }
        return t;
    }

    TermPtr atom() {
        if (eat_sym("-")) return Term::bin(BinOp::Sub, Term::constant(0), atom());
        if (lx_.peek().kind == Tok::Int) return Term::constant(lx_.take().value);
        if (at_sym("(")) {
            lx_.take();
            TermPtr t = expr();
            expect_sym(")");
            return t;
        }
        return Term::variable(var_ref("variable"));
    }

    void abstraction() {
        eat_id("abstract");
        AbstractionDirective d;
        if (eat_id("data"))
            d.kind = AbstractionDirective::Kind::Data;
        else if (eat_id("order"))
            d.kind = AbstractionDirective::Kind::Order;
        else
            fail("expected 'data' or 'order'");
        expect_sym("(");
        while (!eat_sym(")")) {
            d.vars.push_back(expect_id("variable name"));
            eat_sym(",");
        }
        expect_sym(";");
        p_.abstractions.push_back(std::move(d));
    }

    PartialProgram p_;
    int cur_thread_ = -1;
};

class PerfParser : Parser {
public:
    explicit PerfParser(const std::string& text) : Parser(text) {}

    PerformanceAutomaton run() {
        while (!at_end()) {
            if (eat_id("state")) {
                while (!eat_sym(";")) {
                    std::string n = expect_id("state name");
                    if (w_.find_state(n) >= 0) fail("duplicate state '" + n + "'");
                    w_.states.push_back(n);
                }
            } else if (eat_id("edge")) {
                edge();
            } else {
                fail("expected 'state' or 'edge'");
            }
        }
        w_.initial = 0;
        w_.edges.assign(w_.states.size(),
                        std::vector<std::optional<PerformanceAutomaton::Edge>>(
                            w_.symbols.size() + 1));
        for (auto& e : pending_) {
            int sidx = e.sym == "bot" ? (int)w_.symbols.size() : w_.find_symbol(e.sym);
            auto& slot = w_.edges[e.from][sidx];
            if (slot) throw ParseError("two edges from state '" + w_.states[e.from] +
                                           "' on symbol '" + e.sym + "'",
                                       e.line, 1);
            slot = PerformanceAutomaton::Edge{e.to, e.cost};
        }
        if (auto err = w_.finalize()) throw ParseError(*err, 1, 1);
        return std::move(w_);
    }

private:
    void edge() {
        struct Pend p;
        p.line = lx_.peek().line;
        p.from = state_ref();
        expect_sym("--");
        p.sym = expect_id("cost symbol");
        expect_sym("/");
        p.cost = expect_rat();
        expect_sym("-->");
        p.to = state_ref();
        expect_sym(";");
        if (p.sym != "bot" && w_.find_symbol(p.sym) < 0) w_.symbols.push_back(p.sym);
        pending_.push_back(std::move(p));
    }

    int state_ref() {
        std::string n = expect_id("state name");
        int i = w_.find_state(n);
        if (i < 0) fail("unknown state '" + n + "'");
        return i;
    }

    struct Pend {
        int from, to, line;
        std::string sym;
        Rat cost;
    };
    PerformanceAutomaton w_;
    std::vector<Pend> pending_;
};

class SchedParser : Parser {
public:
    explicit SchedParser(const std::string& text) : Parser(text) {}

    Scheduler run() {
        if (eat_id("uniform")) {
            expect_sym(";");
            if (!at_end()) fail("unexpected trailing input after 'uniform;'");
            return Scheduler::make_uniform();
        }
        Scheduler s;
        if (eat_id("nondet")) {
            expect_sym(";");
            s.mode = Scheduler::Mode::Nondeterministic;
        }
        while (!at_end()) {
            if (eat_id("memory")) {
                while (!eat_sym(";")) {
                    std::string n = expect_id("memory state");
                    if (s.find_state(n) >= 0) fail("duplicate memory state '" + n + "'");
                    s.memory.push_back(n);
                }
            } else if (eat_id("pick")) {
                int q = state_ref(s);
                std::string t = expect_id("thread name");
                expect_sym(":");
                Rat w = expect_rat();
                expect_sym(";");
                s.weights.resize(s.memory.size());
                if (s.weights[q].count(t)) fail("duplicate pick for thread '" + t + "'");
                s.weights[q][t] = w;
            } else if (eat_id("next")) {
                expect_sym("(");
                int q = state_ref(s);
                expect_sym(",");
                std::string t = expect_id("thread name");
                expect_sym(")");
                expect_sym("=");
                int q2 = state_ref(s);
                expect_sym(";");
                s.next.resize(s.memory.size());
                s.next[q][t] = q2;
            } else {
                fail("expected 'memory', 'pick' or 'next'");
            }
        }
        if (s.memory.empty()) s.memory.push_back("m0");
        s.weights.resize(s.memory.size());
        s.next.resize(s.memory.size());
        s.initial = 0;
        return s;
    }

private:
    int state_ref(Scheduler& s) {
        std::string n = expect_id("memory state");
        int i = s.find_state(n);
        if (i < 0) fail("unknown memory state '" + n + "'");
        return i;
    }
};

int term_prec(const Term& t) {
    if (t.kind != Term::Kind::Bin) return 3;
    return (t.op == BinOp::Mul || t.op == BinOp::Mod) ? 2 : 1;
}

void print_term(std::ostream& os, const PartialProgram& p, const Term& t, int parent_prec) {
    int prec = term_prec(t);
    bool paren = prec < parent_prec;
    if (paren) os << "(";
    switch (t.kind) {
        case Term::Kind::Const:
            os << t.value;
            break;
        case Term::Kind::Var:
            os << p.vars[t.var].name;
            break;
        case Term::Kind::Bin: {
            const char* op = t.op == BinOp::Add   ? " + "
                             : t.op == BinOp::Sub ? " - "
                             : t.op == BinOp::Mul ? " * "
                                                  : " mod ";
            print_term(os, p, *t.lhs, prec);
            os << op;
            // right operand needs parens at equal precedence (left assoc)
            print_term(os, p, *t.rhs, prec + 1);
            break;
        }
    }
    if (paren) os << ")";
}

void print_guard(std::ostream& os, const PartialProgram& p, const Guard& g) {
    switch (g.kind) {
        case Guard::Kind::True:
            os << "true";
            break;
        case Guard::Kind::Cmp: {
            const char* rel = g.rel == Rel::Eq   ? " == "
                              : g.rel == Rel::Ne ? " != "
                              : g.rel == Rel::Lt ? " < "
                              : g.rel == Rel::Le ? " <= "
                              : g.rel == Rel::Gt ? " > "
                                                 : " >= ";
            print_term(os, p, *g.lhs, 0);
            os << rel;
            print_term(os, p, *g.rhs, 0);
            break;
        }
        case Guard::Kind::And:
            print_guard(os, p, *g.a);
            os << " && ";
            print_guard(os, p, *g.b);
            break;
        case Guard::Kind::Not:
            os << "!(";
            print_guard(os, p, *g.a);
            os << ")";
            break;
    }
}

void print_var_decl(std::ostream& os, const VarDecl& v, const char* indent) {
    os << indent << v.name << " : [" << v.lo << ", " << v.hi << "]";
    if (v.initial) os << " = " << *v.initial;
    os << ";\n";
}

}  // namespace

PartialProgram parse_partial_program(const std::string& text) {
    return ProgramParser(text).run();
}

PerformanceAutomaton parse_performance_automaton(const std::string& text) {
    return PerfParser(text).run();
}

Scheduler parse_scheduler(const std::string& text) { return SchedParser(text).run(); }

std::string emit_program(const PartialProgram& p) {
    std::ostringstream os;
    os << "globals {\n";
    for (int v : p.globals) print_var_decl(os, p.vars[v], "  ");
    os << "}\n";
    for (const Thread& c : p.threads) {
        os << "thread " << c.name << " {\n";
        if (!c.locals.empty()) {
            os << "  locals {\n";
            for (int v : c.locals) print_var_decl(os, p.vars[v], "    ");
            os << "  }\n";
        }
        if (!c.inputs.empty()) {
            os << "  inputs {\n";
            for (int v : c.inputs) print_var_decl(os, p.vars[v], "    ");
            os << "  }\n";
        }
        if (!c.lock_vars.empty()) {
            os << "  locks(";
            for (size_t i = 0; i < c.lock_vars.size(); ++i)
                os << (i ? " " : "") << p.vars[c.lock_vars[i]].name;
            os << ");\n";
        }
        os << "  loc";
        for (const auto& l : c.locations) os << " " << l;
        os << ";\n";
        for (const Transition& tr : c.transitions) {
            os << "  trans " << c.locations[tr.from] << " -> " << c.locations[tr.to] << " when ";
            print_guard(os, p, *tr.guard);
            if (!tr.op.assigns.empty()) {
                os << " do { ";
                for (size_t i = 0; i < tr.op.assigns.size(); ++i) {
                    if (i) os << ", ";
                    os << p.vars[tr.op.assigns[i].target].name << " := ";
                    print_term(os, p, *tr.op.assigns[i].value, 0);
                }
                os << " }";
            }
            if (tr.cost_symbol >= 0) os << " label " << p.symbols[tr.cost_symbol];
            os << ";\n";
        }
        os << "}\n";
    }
    for (const auto& d : p.abstractions) {
        os << "abstract " << (d.kind == AbstractionDirective::Kind::Data ? "data" : "order")
           << "(";
        for (size_t i = 0; i < d.vars.size(); ++i) os << (i ? ", " : "") << d.vars[i];
        os << ");\n";
    }
    return os.str();
}

}  // namespace qsynth
