#pragma once

// Core representation of single-sorted relational first-order logic with
// equality: symbols, vocabularies, terms, formulas, and the transformations
// the rest of the tool is built on (NNF, PNF, Skolemization, substitution,
// priming, quantifier-class analysis).
//
// Formula and Term values are immutable after construction and shared via
// shared_ptr; every transformation builds new nodes.  The textual form
// produced by to_string() is fully parenthesized and round-trips through the
// frontend formula parser.

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace bhz {

// ---------------------------------------------------------------- symbols

enum class SymKind { Constant, Relation, Function };

struct Symbol {
    std::string name;
    SymKind kind = SymKind::Constant;
    unsigned arity = 0;   // 0 for constants; >= 0 for relations; >= 1 for functions
    bool primed = false;

    bool operator==(const Symbol& o) const {
        return name == o.name && kind == o.kind && arity == o.arity && primed == o.primed;
    }
    bool operator!=(const Symbol& o) const { return !(*this == o); }
    bool operator<(const Symbol& o) const {
        return std::tie(name, primed, kind, arity) < std::tie(o.name, o.primed, o.kind, o.arity);
    }
    // Display name; primed symbols carry a trailing tick.
    std::string display() const { return primed ? name + "'" : name; }
};

inline Symbol constant_sym(std::string name, bool primed = false) {
    return Symbol{std::move(name), SymKind::Constant, 0, primed};
}
inline Symbol relation_sym(std::string name, unsigned arity, bool primed = false) {
    return Symbol{std::move(name), SymKind::Relation, arity, primed};
}
inline Symbol function_sym(std::string name, unsigned arity, bool primed = false) {
    if (arity == 0) throw std::invalid_argument("function arity must be >= 1");
    return Symbol{std::move(name), SymKind::Function, arity, primed};
}
inline Symbol primed(Symbol s) {
    s.primed = true;
    return s;
}

// A vocabulary is a set of symbols closed under lookup by (name, primed).
// It is "relational" when it declares no function symbols.
class Vocabulary {
  public:
    void add(const Symbol& s) {
        auto key = std::make_pair(s.name, s.primed);
        auto it = m_table.find(key);
        if (it != m_table.end()) {
            if (!(it->second == s))
                throw std::invalid_argument("conflicting redeclaration of symbol " + s.display());
            return;
        }
        m_table.emplace(key, s);
    }
    bool contains(const std::string& name, bool primed = false) const {
        return m_table.count({name, primed}) != 0;
    }
    const Symbol* find(const std::string& name, bool primed = false) const {
        auto it = m_table.find({name, primed});
        return it == m_table.end() ? nullptr : &it->second;
    }
    bool relational() const {
        for (auto& [k, s] : m_table)
            if (s.kind == SymKind::Function) return false;
        return true;
    }
    // Symbols in deterministic (name, primed) order.
    std::vector<Symbol> symbols() const {
        std::vector<Symbol> out;
        out.reserve(m_table.size());
        for (auto& [k, s] : m_table) out.push_back(s);
        return out;
    }
    size_t size() const { return m_table.size(); }

  private:
    std::map<std::pair<std::string, bool>, Symbol> m_table;
};

// ------------------------------------------------------------------ terms

enum class TermOp { Var, Const, App };

struct TermNode;
using TermRef = std::shared_ptr<const TermNode>;

struct TermNode {
    TermOp op;
    std::string var;            // Var
    Symbol sym;                 // Const / App
    std::vector<TermRef> args;  // App
};

inline TermRef mk_var(std::string name) {
    auto n = std::make_shared<TermNode>();
    n->op = TermOp::Var;
    n->var = std::move(name);
    return n;
}
inline TermRef mk_const(Symbol s) {
    if (s.kind != SymKind::Constant) throw std::invalid_argument("mk_const: not a constant symbol");
    auto n = std::make_shared<TermNode>();
    n->op = TermOp::Const;
    n->sym = std::move(s);
    return n;
}
inline TermRef mk_app(Symbol f, std::vector<TermRef> args) {
    if (f.kind != SymKind::Function) throw std::invalid_argument("mk_app: not a function symbol");
    if (f.arity != args.size()) throw std::invalid_argument("mk_app: arity mismatch for " + f.name);
    auto n = std::make_shared<TermNode>();
    n->op = TermOp::App;
    n->sym = std::move(f);
    n->args = std::move(args);
    return n;
}

inline bool ground(const TermRef& t) {
    if (t->op == TermOp::Var) return false;
    for (auto& a : t->args)
        if (!ground(a)) return false;
    return true;
}

// Function nesting depth: constants are 0, f(t...) is 1 + max depth of args.
inline unsigned term_depth(const TermRef& t) {
    if (t->op != TermOp::App) return 0;
    unsigned d = 0;
    for (auto& a : t->args) d = std::max(d, term_depth(a));
    return d + 1;
}

// --------------------------------------------------------------- formulas

enum class FOp { True, False, Atom, Eq, Not, And, Or, Implies, Iff, Forall, Exists };

struct FormulaNode;
using FormulaRef = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
    FOp op;
    Symbol rel;                   // Atom
    std::vector<TermRef> args;    // Atom / Eq (2 terms)
    std::vector<FormulaRef> kids; // Not:1, And/Or:n, Implies/Iff:2, quantifiers:1 (body)
    std::string var;              // Forall / Exists
};

inline FormulaRef mk_true() {
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::True;
    return n;
}
inline FormulaRef mk_false() {
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::False;
    return n;
}
inline FormulaRef mk_atom(Symbol r, std::vector<TermRef> args) {
    if (r.kind != SymKind::Relation) throw std::invalid_argument("mk_atom: not a relation symbol");
    if (r.arity != args.size()) throw std::invalid_argument("mk_atom: arity mismatch for " + r.name);
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::Atom;
    n->rel = std::move(r);
    n->args = std::move(args);
    return n;
}
inline FormulaRef mk_eq(TermRef a, TermRef b) {
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::Eq;
    n->args = {std::move(a), std::move(b)};
    return n;
}
inline FormulaRef mk_not(FormulaRef f) {
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::Not;
    n->kids = {std::move(f)};
    return n;
}
// And/Or flatten nested nodes of the same operator; the empty conjunction is
// true and the empty disjunction is false.
inline FormulaRef mk_and(std::vector<FormulaRef> kids) {
    std::vector<FormulaRef> flat;
    for (auto& k : kids) {
        if (k->op == FOp::And)
            flat.insert(flat.end(), k->kids.begin(), k->kids.end());
        else
            flat.push_back(k);
    }
    if (flat.empty()) return mk_true();
    if (flat.size() == 1) return flat[0];
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::And;
    n->kids = std::move(flat);
    return n;
}
inline FormulaRef mk_or(std::vector<FormulaRef> kids) {
    std::vector<FormulaRef> flat;
    for (auto& k : kids) {
        if (k->op == FOp::Or)
            flat.insert(flat.end(), k->kids.begin(), k->kids.end());
        else
            flat.push_back(k);
    }
    if (flat.empty()) return mk_false();
    if (flat.size() == 1) return flat[0];
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::Or;
    n->kids = std::move(flat);
    return n;
}
inline FormulaRef mk_and(FormulaRef a, FormulaRef b) { return mk_and(std::vector<FormulaRef>{a, b}); }
inline FormulaRef mk_or(FormulaRef a, FormulaRef b) { return mk_or(std::vector<FormulaRef>{a, b}); }
inline FormulaRef mk_implies(FormulaRef a, FormulaRef b) {
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::Implies;
    n->kids = {std::move(a), std::move(b)};
    return n;
}
inline FormulaRef mk_iff(FormulaRef a, FormulaRef b) {
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::Iff;
    n->kids = {std::move(a), std::move(b)};
    return n;
}
inline FormulaRef mk_forall(std::string var, FormulaRef body) {
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::Forall;
    n->var = std::move(var);
    n->kids = {std::move(body)};
    return n;
}
inline FormulaRef mk_exists(std::string var, FormulaRef body) {
    auto n = std::make_shared<FormulaNode>();
    n->op = FOp::Exists;
    n->var = std::move(var);
    n->kids = {std::move(body)};
    return n;
}
inline FormulaRef mk_forall(const std::vector<std::string>& vars, FormulaRef body) {
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) body = mk_forall(*it, body);
    return body;
}
inline FormulaRef mk_exists(const std::vector<std::string>& vars, FormulaRef body) {
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) body = mk_exists(*it, body);
    return body;
}

// --------------------------------------------------------------- printing

inline void print_term(std::ostream& os, const TermRef& t) {
    switch (t->op) {
        case TermOp::Var: os << t->var; break;
        case TermOp::Const: os << t->sym.display(); break;
        case TermOp::App:
            os << t->sym.display() << '(';
            for (size_t i = 0; i < t->args.size(); i++) {
                if (i) os << ", ";
                print_term(os, t->args[i]);
            }
            os << ')';
            break;
    }
}

inline void print_formula(std::ostream& os, const FormulaRef& f) {
    auto infix = [&](const char* op) {
        os << '(';
        for (size_t i = 0; i < f->kids.size(); i++) {
            if (i) os << ' ' << op << ' ';
            print_formula(os, f->kids[i]);
        }
        os << ')';
    };
    switch (f->op) {
        case FOp::True: os << "true"; break;
        case FOp::False: os << "false"; break;
        case FOp::Atom:
            os << f->rel.display();
            if (!f->args.empty()) {
                os << '(';
                for (size_t i = 0; i < f->args.size(); i++) {
                    if (i) os << ", ";
                    print_term(os, f->args[i]);
                }
                os << ')';
            }
            break;
        case FOp::Eq:
            os << '(';
            print_term(os, f->args[0]);
            os << " = ";
            print_term(os, f->args[1]);
            os << ')';
            break;
        case FOp::Not:
            os << '!';
            print_formula(os, f->kids[0]);
            break;
        case FOp::And: infix("&"); break;
        case FOp::Or: infix("|"); break;
        case FOp::Implies: infix("->"); break;
        case FOp::Iff: infix("<->"); break;
        case FOp::Forall:
        case FOp::Exists:
            os << '(' << (f->op == FOp::Forall ? "forall " : "exists ") << f->var << ". ";
            print_formula(os, f->kids[0]);
            os << ')';
            break;
    }
}

inline std::string to_string(const TermRef& t) {
    std::ostringstream os;
    print_term(os, t);
    return os.str();
}
inline std::string to_string(const FormulaRef& f) {
    std::ostringstream os;
    print_formula(os, f);
    return os.str();
}
inline bool struct_eq(const FormulaRef& a, const FormulaRef& b) { return to_string(a) == to_string(b); }
inline bool struct_eq(const TermRef& a, const TermRef& b) { return to_string(a) == to_string(b); }

// ------------------------------------------------------------ inspection

namespace detail {
inline void term_vars(const TermRef& t, std::vector<std::string>& out, std::set<std::string>& seen) {
    if (t->op == TermOp::Var) {
        if (seen.insert(t->var).second) out.push_back(t->var);
    } else {
        for (auto& a : t->args) term_vars(a, out, seen);
    }
}
inline void free_vars_rec(const FormulaRef& f, std::set<std::string>& bound,
                          std::vector<std::string>& out, std::set<std::string>& seen) {
    switch (f->op) {
        case FOp::Atom:
        case FOp::Eq:
            for (auto& t : f->args) {
                std::vector<std::string> vs;
                std::set<std::string> local;
                term_vars(t, vs, local);
                for (auto& v : vs)
                    if (!bound.count(v) && seen.insert(v).second) out.push_back(v);
            }
            break;
        case FOp::Forall:
        case FOp::Exists: {
            bool added = bound.insert(f->var).second;
            free_vars_rec(f->kids[0], bound, out, seen);
            if (added) bound.erase(f->var);
            break;
        }
        default:
            for (auto& k : f->kids) free_vars_rec(k, bound, out, seen);
            break;
    }
}
} // namespace detail

// Free variables in order of first occurrence (used to fix Skolem argument
// order deterministically).
inline std::vector<std::string> free_vars_ordered(const FormulaRef& f) {
    std::set<std::string> bound, seen;
    std::vector<std::string> out;
    detail::free_vars_rec(f, bound, out, seen);
    return out;
}
inline std::set<std::string> free_vars(const FormulaRef& f) {
    auto v = free_vars_ordered(f);
    return std::set<std::string>(v.begin(), v.end());
}
inline bool sentence(const FormulaRef& f) { return free_vars_ordered(f).empty(); }

template <class TermFn, class AtomFn>
inline void walk(const FormulaRef& f, TermFn on_term, AtomFn on_atom) {
    std::vector<FormulaRef> stack{f};
    auto walk_term = [&](auto&& self, const TermRef& t) -> void {
        on_term(t);
        for (auto& a : t->args) self(self, a);
    };
    while (!stack.empty()) {
        FormulaRef cur = stack.back();
        stack.pop_back();
        if (cur->op == FOp::Atom) on_atom(cur);
        for (auto& t : cur->args) walk_term(walk_term, t);
        for (auto& k : cur->kids) stack.push_back(k);
    }
}

// Constant symbols occurring in a formula.
inline std::set<Symbol> consts(const FormulaRef& f) {
    std::set<Symbol> out;
    walk(
        f, [&](const TermRef& t) { if (t->op == TermOp::Const) out.insert(t->sym); },
        [](const FormulaRef&) {});
    return out;
}
// Function symbols occurring in a formula.
inline std::set<Symbol> funcs(const FormulaRef& f) {
    std::set<Symbol> out;
    walk(
        f, [&](const TermRef& t) { if (t->op == TermOp::App) out.insert(t->sym); },
        [](const FormulaRef&) {});
    return out;
}
// Relation symbols occurring in a formula.
inline std::set<Symbol> rels(const FormulaRef& f) {
    std::set<Symbol> out;
    walk(
        f, [](const TermRef&) {}, [&](const FormulaRef& a) { out.insert(a->rel); });
    return out;
}
inline bool has_function_apps(const FormulaRef& f) { return !funcs(f).empty(); }
inline bool has_quantifiers(const FormulaRef& f) {
    if (f->op == FOp::Forall || f->op == FOp::Exists) return true;
    for (auto& k : f->kids)
        if (has_quantifiers(k)) return true;
    return false;
}

// All variable names occurring anywhere (free or bound), plus quantified names.
inline std::set<std::string> all_var_names(const FormulaRef& f) {
    std::set<std::string> out;
    if (f->op == FOp::Forall || f->op == FOp::Exists) out.insert(f->var);
    walk(
        f, [&](const TermRef& t) { if (t->op == TermOp::Var) out.insert(t->var); },
        [](const FormulaRef&) {});
    std::vector<FormulaRef> stack{f};
    while (!stack.empty()) {
        auto cur = stack.back();
        stack.pop_back();
        if (cur->op == FOp::Forall || cur->op == FOp::Exists) out.insert(cur->var);
        for (auto& k : cur->kids) stack.push_back(k);
    }
    return out;
}

inline std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
    if (!avoid.count(base)) return base;
    for (unsigned i = 1;; i++) {
        std::string cand = base + "_" + std::to_string(i);
        if (!avoid.count(cand)) return cand;
    }
}

// ------------------------------------------------------------ substitution

inline TermRef substitute(const TermRef& t, const std::map<std::string, TermRef>& binding) {
    switch (t->op) {
        case TermOp::Var: {
            auto it = binding.find(t->var);
            return it == binding.end() ? t : it->second;
        }
        case TermOp::Const: return t;
        case TermOp::App: {
            std::vector<TermRef> args;
            args.reserve(t->args.size());
            for (auto& a : t->args) args.push_back(substitute(a, binding));
            return mk_app(t->sym, std::move(args));
        }
    }
    return t;
}

// Capture-avoiding substitution of terms for free variables.  Bound variables
// that would capture a variable of a substituted term are renamed apart.
inline FormulaRef substitute(const FormulaRef& f, const std::map<std::string, TermRef>& binding) {
    if (binding.empty()) return f;
    switch (f->op) {
        case FOp::True:
        case FOp::False: return f;
        case FOp::Atom: {
            std::vector<TermRef> args;
            for (auto& t : f->args) args.push_back(substitute(t, binding));
            return mk_atom(f->rel, std::move(args));
        }
        case FOp::Eq: return mk_eq(substitute(f->args[0], binding), substitute(f->args[1], binding));
        case FOp::Forall:
        case FOp::Exists: {
            std::map<std::string, TermRef> inner = binding;
            inner.erase(f->var);
            if (inner.empty()) return f;
            // Rename the bound variable if any substituted term mentions it.
            bool capture = false;
            for (auto& [v, t] : inner) {
                std::vector<std::string> vs;
                std::set<std::string> seen;
                detail::term_vars(t, vs, seen);
                if (seen.count(f->var)) { capture = true; break; }
            }
            std::string bv = f->var;
            FormulaRef body = f->kids[0];
            if (capture) {
                std::set<std::string> avoid = all_var_names(body);
                for (auto& [v, t] : inner) {
                    std::vector<std::string> vs;
                    std::set<std::string> seen;
                    detail::term_vars(t, vs, seen);
                    avoid.insert(seen.begin(), seen.end());
                    avoid.insert(v);
                }
                bv = fresh_name(f->var + "_r", avoid);
                body = substitute(body, {{f->var, mk_var(bv)}});
            }
            body = substitute(body, inner);
            return f->op == FOp::Forall ? mk_forall(bv, body) : mk_exists(bv, body);
        }
        default: {
            std::vector<FormulaRef> kids;
            for (auto& k : f->kids) kids.push_back(substitute(k, binding));
            auto n = std::make_shared<FormulaNode>();
            n->op = f->op;
            n->kids = std::move(kids);
            return n;
        }
    }
}

// Replace every occurrence of a constant symbol by a term, renaming bound
// variables that would capture variables of the replacement.
inline TermRef substitute_constant(const TermRef& t, const Symbol& c, const TermRef& repl) {
    switch (t->op) {
        case TermOp::Var: return t;
        case TermOp::Const: return t->sym == c ? repl : t;
        case TermOp::App: {
            std::vector<TermRef> args;
            for (auto& a : t->args) args.push_back(substitute_constant(a, c, repl));
            return mk_app(t->sym, std::move(args));
        }
    }
    return t;
}

inline FormulaRef substitute_constant(const FormulaRef& f, const Symbol& c, const TermRef& repl) {
    switch (f->op) {
        case FOp::True:
        case FOp::False: return f;
        case FOp::Atom: {
            std::vector<TermRef> args;
            for (auto& t : f->args) args.push_back(substitute_constant(t, c, repl));
            return mk_atom(f->rel, std::move(args));
        }
        case FOp::Eq:
            return mk_eq(substitute_constant(f->args[0], c, repl),
                         substitute_constant(f->args[1], c, repl));
        case FOp::Forall:
        case FOp::Exists: {
            std::string bv = f->var;
            FormulaRef body = f->kids[0];
            std::vector<std::string> vs;
            std::set<std::string> repl_vars;
            detail::term_vars(repl, vs, repl_vars);
            if (repl_vars.count(bv)) {
                std::set<std::string> avoid = all_var_names(body);
                avoid.insert(repl_vars.begin(), repl_vars.end());
                std::string nv = fresh_name(bv + "_r", avoid);
                body = substitute(body, {{bv, mk_var(nv)}});
                bv = nv;
            }
            body = substitute_constant(body, c, repl);
            return f->op == FOp::Forall ? mk_forall(bv, body) : mk_exists(bv, body);
        }
        default: {
            std::vector<FormulaRef> kids;
            for (auto& k : f->kids) kids.push_back(substitute_constant(k, c, repl));
            auto n = std::make_shared<FormulaNode>();
            n->op = f->op;
            n->kids = std::move(kids);
            return n;
        }
    }
}

// Replace every atom r(t...) by psi[t.../xs], capture-avoiding.  If
// `also_primed` is set, atoms of the primed copy of r are replaced by the
// primed copy of psi.
inline FormulaRef substitute_relation(const FormulaRef& f, const Symbol& r,
                                      const std::vector<std::string>& xs, const FormulaRef& psi);

namespace detail {
inline FormulaRef subst_rel_rec(const FormulaRef& f, const Symbol& r,
                                const std::vector<std::string>& xs, const FormulaRef& psi) {
    switch (f->op) {
        case FOp::Atom:
            if (f->rel == r) {
                std::map<std::string, TermRef> binding;
                for (size_t i = 0; i < xs.size(); i++) binding[xs[i]] = f->args[i];
                return substitute(psi, binding);
            }
            return f;
        case FOp::True:
        case FOp::False:
        case FOp::Eq: return f;
        case FOp::Forall:
        case FOp::Exists: {
            // Rename the bound variable if psi's free variables would be captured
            // (psi may mention symbols, but its free variables beyond xs are the
            // caller's responsibility; we guard against collisions with f->var).
            FormulaRef body = subst_rel_rec(f->kids[0], r, xs, psi);
            return f->op == FOp::Forall ? mk_forall(f->var, body) : mk_exists(f->var, body);
        }
        default: {
            std::vector<FormulaRef> kids;
            for (auto& k : f->kids) kids.push_back(subst_rel_rec(k, r, xs, psi));
            auto n = std::make_shared<FormulaNode>();
            n->op = f->op;
            n->kids = std::move(kids);
            return n;
        }
    }
}
} // namespace detail

inline FormulaRef substitute_relation(const FormulaRef& f, const Symbol& r,
                                      const std::vector<std::string>& xs, const FormulaRef& psi) {
    if (r.kind != SymKind::Relation || r.arity != xs.size())
        throw std::invalid_argument("substitute_relation: arity mismatch for " + r.name);
    auto psi_free = free_vars(psi);
    for (auto& x : xs) psi_free.erase(x);
    // Alpha-rename bound variables of f that collide with psi's free symbols
    // or parameters, so substitution into quantified contexts is safe.
    std::set<std::string> avoid = psi_free;
    avoid.insert(xs.begin(), xs.end());
    for (auto& n : all_var_names(psi)) avoid.insert(n);
    std::function<FormulaRef(const FormulaRef&, std::set<std::string>&)> rename =
        [&](const FormulaRef& g, std::set<std::string>& used) -> FormulaRef {
        switch (g->op) {
            case FOp::Forall:
            case FOp::Exists: {
                std::string bv = g->var;
                FormulaRef body = g->kids[0];
                if (avoid.count(bv) || used.count(bv)) {
                    std::set<std::string> a2 = avoid;
                    a2.insert(used.begin(), used.end());
                    for (auto& n : all_var_names(body)) a2.insert(n);
                    std::string nv = fresh_name(bv + "_r", a2);
                    body = substitute(body, {{bv, mk_var(nv)}});
                    bv = nv;
                }
                used.insert(bv);
                body = rename(body, used);
                return g->op == FOp::Forall ? mk_forall(bv, body) : mk_exists(bv, body);
            }
            default: {
                if (g->kids.empty()) return g;
                std::vector<FormulaRef> kids;
                for (auto& k : g->kids) kids.push_back(rename(k, used));
                auto n = std::make_shared<FormulaNode>();
                n->op = g->op;
                n->rel = g->rel;
                n->args = g->args;
                n->var = g->var;
                n->kids = std::move(kids);
                return n;
            }
        }
    };
    std::set<std::string> used;
    FormulaRef safe = rename(f, used);
    return detail::subst_rel_rec(safe, r, xs, psi);
}

// -------------------------------------------------------------- prime maps

namespace detail {
inline TermRef map_syms_term(const TermRef& t, bool to_primed) {
    switch (t->op) {
        case TermOp::Var: return t;
        case TermOp::Const: {
            if (t->sym.primed == to_primed)
                throw std::invalid_argument(std::string(to_primed ? "prime" : "unprime") +
                                            ": symbol " + t->sym.display() +
                                            (to_primed ? " already primed" : " not primed"));
            Symbol s = t->sym;
            s.primed = to_primed;
            return mk_const(s);
        }
        case TermOp::App: {
            if (t->sym.primed == to_primed)
                throw std::invalid_argument("prime/unprime: bad symbol " + t->sym.display());
            Symbol s = t->sym;
            s.primed = to_primed;
            std::vector<TermRef> args;
            for (auto& a : t->args) args.push_back(map_syms_term(a, to_primed));
            return mk_app(s, std::move(args));
        }
    }
    return t;
}
inline FormulaRef map_syms(const FormulaRef& f, bool to_primed) {
    switch (f->op) {
        case FOp::True:
        case FOp::False: return f;
        case FOp::Atom: {
            if (f->rel.primed == to_primed)
                throw std::invalid_argument(std::string(to_primed ? "prime" : "unprime") +
                                            ": symbol " + f->rel.display() +
                                            (to_primed ? " already primed" : " not primed"));
            Symbol s = f->rel;
            s.primed = to_primed;
            std::vector<TermRef> args;
            for (auto& t : f->args) args.push_back(map_syms_term(t, to_primed));
            return mk_atom(s, std::move(args));
        }
        case FOp::Eq:
            return mk_eq(map_syms_term(f->args[0], to_primed), map_syms_term(f->args[1], to_primed));
        default: {
            std::vector<FormulaRef> kids;
            for (auto& k : f->kids) kids.push_back(map_syms(k, to_primed));
            auto n = std::make_shared<FormulaNode>();
            n->op = f->op;
            n->var = f->var;
            n->kids = std::move(kids);
            return n;
        }
    }
}
} // namespace detail

// Symbol-wise renaming of every constant/relation/function symbol to its
// primed copy (resp. back).  unprime(prime(f)) is the identity.
inline FormulaRef prime(const FormulaRef& f) { return detail::map_syms(f, true); }
inline FormulaRef unprime(const FormulaRef& f) { return detail::map_syms(f, false); }

// ------------------------------------------------------------------- NNF

// Negation normal form: negation applied only to atoms/equalities, with
// -> and <-> expanded.  Equivalent to the input and idempotent.
inline FormulaRef nnf(const FormulaRef& f, bool negate = false) {
    switch (f->op) {
        case FOp::True: return negate ? mk_false() : mk_true();
        case FOp::False: return negate ? mk_true() : mk_false();
        case FOp::Atom:
        case FOp::Eq: return negate ? mk_not(f) : f;
        case FOp::Not: return nnf(f->kids[0], !negate);
        case FOp::And: {
            std::vector<FormulaRef> kids;
            for (auto& k : f->kids) kids.push_back(nnf(k, negate));
            return negate ? mk_or(std::move(kids)) : mk_and(std::move(kids));
        }
        case FOp::Or: {
            std::vector<FormulaRef> kids;
            for (auto& k : f->kids) kids.push_back(nnf(k, negate));
            return negate ? mk_and(std::move(kids)) : mk_or(std::move(kids));
        }
        case FOp::Implies: {
            // a -> b  ==  !a | b
            if (negate) return mk_and(nnf(f->kids[0], false), nnf(f->kids[1], true));
            return mk_or(nnf(f->kids[0], true), nnf(f->kids[1], false));
        }
        case FOp::Iff: {
            // a <-> b  ==  (a & b) | (!a & !b);  negated: (a & !b) | (!a & b)
            auto a = f->kids[0], b = f->kids[1];
            if (negate)
                return mk_or(mk_and(nnf(a, false), nnf(b, true)), mk_and(nnf(a, true), nnf(b, false)));
            return mk_or(mk_and(nnf(a, false), nnf(b, false)), mk_and(nnf(a, true), nnf(b, true)));
        }
        case FOp::Forall:
            return negate ? mk_exists(f->var, nnf(f->kids[0], true))
                          : mk_forall(f->var, nnf(f->kids[0], false));
        case FOp::Exists:
            return negate ? mk_forall(f->var, nnf(f->kids[0], true))
                          : mk_exists(f->var, nnf(f->kids[0], false));
    }
    throw std::logic_error("nnf: unreachable");
}

// --------------------------------------------------------- alpha renaming

// Rename bound variables so that all binders use pairwise distinct names that
// also avoid free variables and every name in `avoid` (typically the symbol
// names of a vocabulary, so printed formulas re-parse unambiguously).
inline FormulaRef alpha_rename(const FormulaRef& f, std::set<std::string> avoid = {}) {
    for (auto& v : free_vars_ordered(f)) avoid.insert(v);
    std::function<FormulaRef(const FormulaRef&, std::map<std::string, TermRef>&)> rec =
        [&](const FormulaRef& g, std::map<std::string, TermRef>& ren) -> FormulaRef {
        switch (g->op) {
            case FOp::Forall:
            case FOp::Exists: {
                std::string nv = fresh_name(g->var, avoid);
                avoid.insert(nv);
                auto saved = ren.find(g->var) != ren.end() ? std::optional(ren[g->var]) : std::nullopt;
                ren[g->var] = mk_var(nv);
                FormulaRef body = rec(g->kids[0], ren);
                if (saved)
                    ren[g->var] = *saved;
                else
                    ren.erase(g->var);
                return g->op == FOp::Forall ? mk_forall(nv, body) : mk_exists(nv, body);
            }
            case FOp::Atom: {
                std::vector<TermRef> args;
                for (auto& t : g->args) args.push_back(substitute(t, ren));
                return mk_atom(g->rel, std::move(args));
            }
            case FOp::Eq: return mk_eq(substitute(g->args[0], ren), substitute(g->args[1], ren));
            case FOp::True:
            case FOp::False: return g;
            default: {
                std::vector<FormulaRef> kids;
                for (auto& k : g->kids) kids.push_back(rec(k, ren));
                auto n = std::make_shared<FormulaNode>();
                n->op = g->op;
                n->kids = std::move(kids);
                return n;
            }
        }
    };
    std::map<std::string, TermRef> ren;
    return rec(f, ren);
}

// ------------------------------------------------------------------- PNF

// One quantifier of a prenex prefix.
struct QVar {
    bool universal;
    std::string var;
    bool operator==(const QVar& o) const { return universal == o.universal && var == o.var; }
};
using Prefix = std::vector<QVar>;

namespace detail {

inline unsigned blocks(const Prefix& p) {
    unsigned b = 0;
    for (size_t i = 0; i < p.size(); i++)
        if (i == 0 || p[i].universal != p[i - 1].universal) b++;
    return b;
}
inline std::string pattern(const Prefix& p) {
    std::string s;
    for (size_t i = 0; i < p.size(); i++)
        if (i == 0 || p[i].universal != p[i - 1].universal) s += p[i].universal ? 'A' : 'E';
    return s;
}

// Greedy merge of two prefixes, preserving the relative order within each.
// Starting preference `want_universal` selects the kind consumed first; the
// result has the minimal number of quantifier blocks achievable for that
// starting choice.
inline Prefix merge_greedy(const Prefix& a, const Prefix& b, bool want_universal) {
    Prefix out;
    size_t i = 0, j = 0;
    bool cur = want_universal;
    while (i < a.size() || j < b.size()) {
        bool took = false;
        while (i < a.size() && a[i].universal == cur) { out.push_back(a[i++]); took = true; }
        while (j < b.size() && b[j].universal == cur) { out.push_back(b[j++]); took = true; }
        if (i >= a.size() && j >= b.size()) break;
        cur = !cur;
        if (!took && ((i < a.size() && a[i].universal != cur) ||
                      (j < b.size() && b[j].universal != cur)))
            continue; // first block of the chosen kind was empty; flip again
    }
    return out;
}

// Pareto set of candidate merges of two candidate sets, deduplicated by
// block pattern, keeping only candidates with the minimal block count and, to
// preserve both orientations, at most one candidate per pattern.
inline std::vector<Prefix> merge_candidates(const std::vector<Prefix>& as, const std::vector<Prefix>& bs) {
    std::vector<Prefix> all;
    for (auto& a : as)
        for (auto& b : bs) {
            all.push_back(merge_greedy(a, b, false));
            all.push_back(merge_greedy(a, b, true));
        }
    unsigned best = UINT32_MAX;
    for (auto& p : all) best = std::min(best, blocks(p));
    std::map<std::string, Prefix> by_pattern;
    for (auto& p : all) {
        if (blocks(p) > best + 1) continue; // keep near-minimal orientations
        auto pat = pattern(p);
        if (!by_pattern.count(pat)) by_pattern[pat] = p;
    }
    std::vector<Prefix> out;
    for (auto& [pat, p] : by_pattern) out.push_back(p);
    return out;
}

struct PnfResult {
    std::vector<Prefix> candidates; // candidate prefixes (distinct block patterns)
    FormulaRef matrix;
};

inline PnfResult pnf_rec(const FormulaRef& f) {
    switch (f->op) {
        case FOp::True:
        case FOp::False:
        case FOp::Atom:
        case FOp::Eq: return {{Prefix{}}, f};
        case FOp::Not: {
            PnfResult r = pnf_rec(f->kids[0]);
            for (auto& p : r.candidates)
                for (auto& q : p) q.universal = !q.universal;
            return {r.candidates, mk_not(r.matrix)};
        }
        case FOp::Forall:
        case FOp::Exists: {
            PnfResult r = pnf_rec(f->kids[0]);
            // Drop vacuous quantifiers so they cannot worsen the prefix class.
            if (!free_vars(f->kids[0]).count(f->var)) return r;
            QVar q{f->op == FOp::Forall, f->var};
            for (auto& p : r.candidates) p.insert(p.begin(), q);
            // Prepending can create pattern duplicates; thin them.
            std::map<std::string, Prefix> by_pattern;
            for (auto& p : r.candidates)
                if (!by_pattern.count(pattern(p))) by_pattern[pattern(p)] = p;
            std::vector<Prefix> cands;
            for (auto& [pat, p] : by_pattern) cands.push_back(p);
            return {cands, r.matrix};
        }
        case FOp::And:
        case FOp::Or: {
            PnfResult acc = pnf_rec(f->kids[0]);
            std::vector<FormulaRef> mats{acc.matrix};
            for (size_t i = 1; i < f->kids.size(); i++) {
                PnfResult r = pnf_rec(f->kids[i]);
                acc.candidates = merge_candidates(acc.candidates, r.candidates);
                mats.push_back(r.matrix);
            }
            acc.matrix = f->op == FOp::And ? mk_and(std::move(mats)) : mk_or(std::move(mats));
            return acc;
        }
        case FOp::Implies: {
            PnfResult l = pnf_rec(f->kids[0]);
            for (auto& p : l.candidates)
                for (auto& q : p) q.universal = !q.universal;
            PnfResult r = pnf_rec(f->kids[1]);
            PnfResult out;
            out.candidates = merge_candidates(l.candidates, r.candidates);
            out.matrix = mk_implies(l.matrix, r.matrix);
            return out;
        }
        case FOp::Iff:
            // Quantified equivalences were split (and renamed apart) before
            // the recursion started; what remains here is quantifier-free.
            return {{Prefix{}}, f};
    }
    throw std::logic_error("pnf: unreachable");
}

// Rewrite every equivalence that contains a quantifier into the conjunction
// of its two implications.  Duplicated subtrees are renamed apart by the
// caller's subsequent global alpha-renaming pass.
inline FormulaRef expand_quantified_iffs(const FormulaRef& f) {
    if (f->kids.empty()) return f;
    std::vector<FormulaRef> kids;
    for (auto& k : f->kids) kids.push_back(expand_quantified_iffs(k));
    if (f->op == FOp::Iff && (has_quantifiers(kids[0]) || has_quantifiers(kids[1])))
        return mk_and(mk_implies(kids[0], kids[1]), mk_implies(kids[1], kids[0]));
    auto n = std::make_shared<FormulaNode>();
    n->op = f->op;
    n->rel = f->rel;
    n->args = f->args;
    n->var = f->var;
    n->kids = std::move(kids);
    return n;
}

// Candidate selection: empty, then all-universal, then all-existential, then
// exists-forall (the decidable shape), then forall-exists, then minimal blocks.
inline const Prefix& choose_prefix(const std::vector<Prefix>& cands) {
    auto rank = [](const Prefix& p) -> unsigned {
        std::string pat = pattern(p);
        if (pat.empty()) return 0;
        if (pat == "A") return 1;
        if (pat == "E") return 2;
        if (pat == "EA") return 3;
        if (pat == "AE") return 4;
        return 5 + blocks(p);
    };
    const Prefix* best = &cands[0];
    for (auto& p : cands)
        if (rank(p) < rank(*best)) best = &p;
    return *best;
}

} // namespace detail

// Prenex normal form: equivalent formula consisting of a quantifier prefix
// followed by a quantifier-free matrix.  Bound variables are renamed apart
// first; independent quantifiers are interleaved so as to minimize the number
// of alternations, preferring the exists-forall orientation when available.
inline FormulaRef pnf(const FormulaRef& f, const std::set<std::string>& avoid_names = {}) {
    FormulaRef g = alpha_rename(detail::expand_quantified_iffs(f), avoid_names);
    detail::PnfResult r = detail::pnf_rec(g);
    const Prefix& pre = detail::choose_prefix(r.candidates);
    FormulaRef out = r.matrix;
    for (auto it = pre.rbegin(); it != pre.rend(); ++it)
        out = it->universal ? mk_forall(it->var, out) : mk_exists(it->var, out);
    return out;
}

// Prefix and matrix of a formula already in PNF.
inline std::pair<Prefix, FormulaRef> split_pnf(const FormulaRef& f) {
    Prefix pre;
    FormulaRef cur = f;
    while (cur->op == FOp::Forall || cur->op == FOp::Exists) {
        pre.push_back({cur->op == FOp::Forall, cur->var});
        cur = cur->kids[0];
    }
    return {pre, cur};
}

// ----------------------------------------------------------- skolemization

struct SkolemInfo {
    Symbol sym;           // introduced Skolem constant or function
    std::string orig_var; // the existential variable it witnesses
};

struct SkolemResult {
    FormulaRef formula;   // universal formula over the extended vocabulary
    Vocabulary vocab;     // input vocabulary plus the introduced symbols
    std::vector<SkolemInfo> introduced;
};

// Skolemization: NNF first, then every existential y under m universals (and
// with the n free variables of the input in scope) is replaced by a fresh
// function of arity n+m applied to those variables — a fresh constant when
// n+m = 0.  The result is a universal formula; Sk(f) -> f is valid and the two
// are equisatisfiable.  Naming is deterministic: sk_<var>_<counter>, skipping
// names the vocabulary already contains.
inline SkolemResult skolemize(const FormulaRef& f, const Vocabulary& vocab) {
    SkolemResult res;
    res.vocab = vocab;
    std::set<std::string> avoid;
    for (auto& s : vocab.symbols()) avoid.insert(s.name);
    FormulaRef g = alpha_rename(nnf(f), avoid);
    std::vector<std::string> free_order = free_vars_ordered(g);
    unsigned counter = 0;
    auto fresh_sym_name = [&](const std::string& base) {
        for (;;) {
            std::string cand = "sk_" + base + "_" + std::to_string(counter++);
            if (!res.vocab.contains(cand, false) && !res.vocab.contains(cand, true)) return cand;
        }
    };
    std::function<FormulaRef(const FormulaRef&, std::vector<std::string>&,
                             std::map<std::string, TermRef>&)>
        rec = [&](const FormulaRef& h, std::vector<std::string>& universals,
                  std::map<std::string, TermRef>& repl) -> FormulaRef {
        switch (h->op) {
            case FOp::Exists: {
                std::vector<TermRef> args;
                for (auto& z : free_order) args.push_back(mk_var(z));
                for (auto& x : universals) args.push_back(mk_var(x));
                Symbol s;
                TermRef witness;
                if (args.empty()) {
                    s = constant_sym(fresh_sym_name(h->var));
                    witness = mk_const(s);
                } else {
                    s = function_sym(fresh_sym_name(h->var), (unsigned)args.size());
                    witness = mk_app(s, args);
                }
                res.vocab.add(s);
                res.introduced.push_back({s, h->var});
                repl[h->var] = witness;
                FormulaRef body = rec(h->kids[0], universals, repl);
                repl.erase(h->var);
                return body;
            }
            case FOp::Forall: {
                universals.push_back(h->var);
                FormulaRef body = rec(h->kids[0], universals, repl);
                universals.pop_back();
                return mk_forall(h->var, body);
            }
            case FOp::Atom: {
                std::vector<TermRef> args;
                for (auto& t : h->args) args.push_back(substitute(t, repl));
                return mk_atom(h->rel, std::move(args));
            }
            case FOp::Eq:
                return mk_eq(substitute(h->args[0], repl), substitute(h->args[1], repl));
            case FOp::True:
            case FOp::False: return h;
            default: {
                std::vector<FormulaRef> kids;
                for (auto& k : h->kids) kids.push_back(rec(k, universals, repl));
                auto n = std::make_shared<FormulaNode>();
                n->op = h->op;
                n->kids = std::move(kids);
                return n;
            }
        }
    };
    std::vector<std::string> universals;
    std::map<std::string, TermRef> repl;
    res.formula = rec(g, universals, repl);
    return res;
}

// --------------------------------------------------------- quantifier class

enum class QuantClass { QF, Universal, Existential, AF, EPR, AE, OneAlternation, Other };

inline const char* to_cstring(QuantClass c) {
    switch (c) {
        case QuantClass::QF: return "QF";
        case QuantClass::Universal: return "Universal";
        case QuantClass::Existential: return "Existential";
        case QuantClass::AF: return "AF";
        case QuantClass::EPR: return "EPR";
        case QuantClass::AE: return "AE";
        case QuantClass::OneAlternation: return "1-alternation";
        case QuantClass::Other: return "Other";
    }
    return "?";
}

namespace detail {

inline std::vector<std::string> prefix_patterns(const FormulaRef& f) {
    PnfResult r = pnf_rec(alpha_rename(nnf(f)));
    std::set<std::string> pats;
    for (auto& p : r.candidates) pats.insert(pattern(p));
    return std::vector<std::string>(pats.begin(), pats.end());
}

inline bool match_forall_exists(const std::string& pat) { // A*E*
    return pat.empty() || pat == "A" || pat == "E" || pat == "AE";
}
inline bool match_exists_forall(const std::string& pat) { // E*A*
    return pat.empty() || pat == "A" || pat == "E" || pat == "EA";
}

// Maximal quantified subtrees of an NNF tree.
inline void maximal_quantified(const FormulaRef& f, std::vector<FormulaRef>& out) {
    if (f->op == FOp::Forall || f->op == FOp::Exists) {
        out.push_back(f);
        return;
    }
    for (auto& k : f->kids) maximal_quantified(k, out);
}

inline bool pure_kind(const FormulaRef& f, bool universal) {
    if (f->op == (universal ? FOp::Exists : FOp::Forall)) return false;
    for (auto& k : f->kids)
        if (!pure_kind(k, universal)) return false;
    return true;
}

} // namespace detail

// Achievability predicates (a formula may belong to several classes).
inline bool in_universal(const FormulaRef& f) {
    for (auto& p : detail::prefix_patterns(f))
        if (p.empty() || p == "A") return true;
    return false;
}
inline bool in_existential(const FormulaRef& f) {
    for (auto& p : detail::prefix_patterns(f))
        if (p.empty() || p == "E") return true;
    return false;
}
// Boolean combination of universal and existential formulas.
inline bool in_af(const FormulaRef& f) {
    std::vector<FormulaRef> subs;
    FormulaRef g = nnf(f);
    detail::maximal_quantified(g, subs);
    for (auto& s : subs)
        if (!detail::pure_kind(s, true) && !detail::pure_kind(s, false)) return false;
    return true;
}
// Exists*-forall* over a function-free formula.
inline bool in_epr(const FormulaRef& f) {
    if (has_function_apps(f)) return false;
    for (auto& p : detail::prefix_patterns(f))
        if (detail::match_exists_forall(p)) return true;
    return false;
}
inline bool in_ae(const FormulaRef& f) {
    for (auto& p : detail::prefix_patterns(f))
        if (detail::match_forall_exists(p)) return true;
    return false;
}
// Boolean combination of forall*-exists* formulas (closed under negation).
inline bool in_one_alternation(const FormulaRef& f) {
    std::vector<FormulaRef> subs;
    FormulaRef g = nnf(f);
    detail::maximal_quantified(g, subs);
    for (auto& s : subs) {
        bool ok = false;
        for (auto& p : detail::prefix_patterns(s))
            if (detail::match_forall_exists(p) || detail::match_exists_forall(p)) { ok = true; break; }
        if (!ok) return false;
    }
    return true;
}

// Minimal applicable class, in the fixed report order.  A formula whose
// quantifiers are all vacuous reports QF (the empty prefix is achievable).
inline QuantClass classify(const FormulaRef& f) {
    auto pats = detail::prefix_patterns(f);
    auto achievable = [&](const std::string& s) {
        return std::find(pats.begin(), pats.end(), s) != pats.end();
    };
    if (achievable("")) return QuantClass::QF;
    if (achievable("A")) return QuantClass::Universal;
    if (achievable("E")) return QuantClass::Existential;
    if (in_af(f)) return QuantClass::AF;
    if (!has_function_apps(f) && achievable("EA")) return QuantClass::EPR;
    if (achievable("AE")) return QuantClass::AE;
    if (in_one_alternation(f)) return QuantClass::OneAlternation;
    return QuantClass::Other;
}

} // namespace bhz
