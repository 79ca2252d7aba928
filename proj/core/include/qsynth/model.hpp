#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsynth {

// ---------------------------------------------------------------------------
// Guarded-command finite-state threads over finite integer domains.
// ---------------------------------------------------------------------------

enum class VarKind { Local, Global, Input };

struct VarDecl {
    std::string name;
    int lo = 0, hi = 0;            // inclusive domain
    VarKind kind = VarKind::Global;
    int thread = -1;               // owning thread for locals/inputs
    std::optional<int> initial;    // absent for inputs
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

enum class BinOp { Add, Sub, Mul, Mod };

struct Term {
    enum class Kind { Const, Var, Bin };
    Kind kind;
    int64_t value = 0;  // Const
    int var = -1;       // Var: index into PartialProgram::vars
    BinOp op = BinOp::Add;
    TermPtr lhs, rhs;

    static TermPtr constant(int64_t v);
    static TermPtr variable(int var);
    static TermPtr bin(BinOp op, TermPtr l, TermPtr r);
};

enum class Rel { Eq, Ne, Lt, Le, Gt, Ge };

struct Guard;
using GuardPtr = std::shared_ptr<const Guard>;

struct Guard {
    enum class Kind { True, Cmp, And, Not };
    Kind kind = Kind::True;
    Rel rel = Rel::Eq;
    TermPtr lhs, rhs;   // Cmp
    GuardPtr a, b;      // And (a,b) / Not (a)

    static GuardPtr truth();
    static GuardPtr cmp(Rel r, TermPtr l, TermPtr rh);
    static GuardPtr conj(GuardPtr x, GuardPtr y);
    static GuardPtr negate(GuardPtr x);
};

struct Assign {
    int target;  // local or global variable
    TermPtr value;
};

/// Simultaneous assignments; right-hand sides evaluate in the pre-state.
struct Operation {
    std::vector<Assign> assigns;
};

struct Access {
    int var;     // global variable
    bool write;
    friend bool operator==(const Access&, const Access&) = default;
};

struct Transition {
    int from = -1, to = -1;       // location indices within the thread
    GuardPtr guard;
    Operation op;
    int cost_symbol = -1;         // index into PartialProgram::symbols; -1 = bot
    std::vector<Access> accesses; // derived: globals read/written
};

struct Thread {
    std::string name;
    int id = -1;
    std::vector<std::string> locations;
    int initial_loc = 0;
    std::vector<int> locals, inputs;      // var indices
    std::vector<int> lock_vars;           // global var indices used as locks
    std::vector<Transition> transitions;
    std::vector<std::vector<int>> out;    // per location, transition indices
};

struct AbstractionDirective {
    enum class Kind { Data, Order };
    Kind kind;
    std::vector<std::string> vars;  // global or local names as written
};

struct PartialProgram {
    std::vector<VarDecl> vars;      // unified table: globals first, then per-thread
    std::vector<int> globals;       // indices of global vars
    std::vector<Thread> threads;
    std::vector<std::string> symbols;  // cost alphabet (without bot)
    std::vector<AbstractionDirective> abstractions;

    int find_var(const std::string& name, int thread) const;  // -1 if absent
    int find_symbol(const std::string& name) const;           // -1 if absent
    int intern_symbol(const std::string& name);
    bool is_lock(int var) const;
};

/// Total map from the program's variable table to values.
using Valuation = std::vector<int>;

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int64_t eval_term(const Term& t, const Valuation& v);
bool eval_guard(const Guard& g, const Valuation& v);

struct DomainOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Applies the simultaneous assignment; throws DomainOverflow when a result
/// leaves its variable's domain (validation rejects programs where that can
/// happen, so this is unreachable on validated input).
Valuation apply_operation(const PartialProgram& p, const Operation& op, const Valuation& v);

/// Locations where two or more outgoing guards hold under some valuation,
/// determined by exhaustive sweep over the variables the guards mention.
std::vector<int> choice_locations(const PartialProgram& p, const Thread& c);

struct Diagnostic {
    std::string where;
    std::string message;
};

/// Checks all structural invariants plus conservative overflow-freedom and
/// lock write discipline. Empty result means the program is well formed.
std::vector<Diagnostic> validate(const PartialProgram& p);

/// Derives Transition::accesses for every transition.
void compute_accesses(PartialProgram& p);

/// Rebuilds every thread's per-location outgoing transition index lists.
void rebuild_out(PartialProgram& p);

/// Variables mentioned by a term/guard, appended to `out`.
void collect_vars(const Term& t, std::vector<int>& out);
void collect_vars(const Guard& g, std::vector<int>& out);

/// True iff two guards are never simultaneously true, by sweeping the
/// variables either of them mentions (other variables are irrelevant).
bool guards_disjoint(const PartialProgram& p, const Guard& g1, const Guard& g2);

}  // namespace qsynth
