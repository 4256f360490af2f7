#pragma once

// Independent test oracles.  Everything here is deliberately brute-force and
// written directly against the semantics of first-order logic over finite
// structures, without reusing any of the transformation code under test:
//  - explicit finite structures and a recursive evaluator,
//  - exhaustive enumeration of all structures of a given size,
//  - bounded satisfiability / validity / equivalence checks,
//  - a seeded random formula generator,
//  - an independent ground-term universe recount.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bhz/fol.hpp"
#include "bhz/frontend.hpp"

namespace bhz::oracle {

// A finite structure: universe {0, ..., size-1} plus interpretations.
struct FiniteModel {
    unsigned size = 1;
    std::map<Symbol, unsigned> consts;
    std::map<Symbol, std::set<std::vector<unsigned>>> rels;
    std::map<Symbol, std::map<std::vector<unsigned>, unsigned>> funcs;
};

using Env = std::map<std::string, unsigned>;

inline unsigned eval_term(const FiniteModel& m, const Env& env, const TermRef& t) {
    switch (t->op) {
        case TermOp::Var: return env.at(t->var);
        case TermOp::Const: return m.consts.at(t->sym);
        case TermOp::App: {
            std::vector<unsigned> args;
            for (auto& a : t->args) args.push_back(eval_term(m, env, a));
            return m.funcs.at(t->sym).at(args);
        }
    }
    throw std::logic_error("eval_term: unreachable");
}

inline bool eval_formula(const FiniteModel& m, const Env& env, const FormulaRef& f) {
    switch (f->op) {
        case FOp::True: return true;
        case FOp::False: return false;
        case FOp::Atom: {
            std::vector<unsigned> args;
            for (auto& t : f->args) args.push_back(eval_term(m, env, t));
            return m.rels.at(f->rel).count(args) != 0;
        }
        case FOp::Eq: return eval_term(m, env, f->args[0]) == eval_term(m, env, f->args[1]);
        case FOp::Not: return !eval_formula(m, env, f->kids[0]);
        case FOp::And:
            for (auto& k : f->kids)
                if (!eval_formula(m, env, k)) return false;
            return true;
        case FOp::Or:
            for (auto& k : f->kids)
                if (eval_formula(m, env, k)) return true;
            return false;
        case FOp::Implies:
            return !eval_formula(m, env, f->kids[0]) || eval_formula(m, env, f->kids[1]);
        case FOp::Iff: return eval_formula(m, env, f->kids[0]) == eval_formula(m, env, f->kids[1]);
        case FOp::Forall: {
            Env e2 = env;
            for (unsigned v = 0; v < m.size; v++) {
                e2[f->var] = v;
                if (!eval_formula(m, e2, f->kids[0])) return false;
            }
            return true;
        }
        case FOp::Exists: {
            Env e2 = env;
            for (unsigned v = 0; v < m.size; v++) {
                e2[f->var] = v;
                if (eval_formula(m, e2, f->kids[0])) return true;
            }
            return false;
        }
    }
    throw std::logic_error("eval_formula: unreachable");
}

// All tuples over {0..n-1} of the given width, in lexicographic order.
inline std::vector<std::vector<unsigned>> all_tuples(unsigned n, unsigned width) {
    std::vector<std::vector<unsigned>> out{{}};
    for (unsigned i = 0; i < width; i++) {
        std::vector<std::vector<unsigned>> next;
        for (auto& t : out)
            for (unsigned v = 0; v < n; v++) {
                auto t2 = t;
                t2.push_back(v);
                next.push_back(std::move(t2));
            }
        out = std::move(next);
    }
    return out;
}

// Enumerate every structure of universe size n over the vocabulary, invoking
// fn on each.  fn returns false to stop early; the function returns true iff
// the enumeration ran to completion.  Relation interpretations are enumerated
// via bitmasks, so n^arity must stay below 64 per relation.
inline bool for_each_model(const Vocabulary& vocab, unsigned n,
                           const std::function<bool(const FiniteModel&)>& fn) {
    std::vector<Symbol> syms = vocab.symbols();
    FiniteModel m;
    m.size = n;
    std::function<bool(size_t)> assign = [&](size_t i) -> bool {
        if (i == syms.size()) return fn(m);
        const Symbol& s = syms[i];
        switch (s.kind) {
            case SymKind::Constant:
                for (unsigned v = 0; v < n; v++) {
                    m.consts[s] = v;
                    if (!assign(i + 1)) return false;
                }
                m.consts.erase(s);
                return true;
            case SymKind::Relation: {
                auto tuples = all_tuples(n, s.arity);
                if (tuples.size() >= 64) throw std::invalid_argument("relation too wide to enumerate");
                for (uint64_t mask = 0; mask < (uint64_t(1) << tuples.size()); mask++) {
                    std::set<std::vector<unsigned>> interp;
                    for (size_t j = 0; j < tuples.size(); j++)
                        if (mask & (uint64_t(1) << j)) interp.insert(tuples[j]);
                    m.rels[s] = std::move(interp);
                    if (!assign(i + 1)) return false;
                }
                m.rels.erase(s);
                return true;
            }
            case SymKind::Function: {
                auto tuples = all_tuples(n, s.arity);
                // Odometer over n^(#tuples) total maps.
                std::vector<unsigned> digits(tuples.size(), 0);
                for (;;) {
                    std::map<std::vector<unsigned>, unsigned> interp;
                    for (size_t j = 0; j < tuples.size(); j++) interp[tuples[j]] = digits[j];
                    m.funcs[s] = std::move(interp);
                    if (!assign(i + 1)) return false;
                    size_t j = 0;
                    while (j < digits.size() && ++digits[j] == n) digits[j++] = 0;
                    if (j == digits.size()) break;
                }
                m.funcs.erase(s);
                return true;
            }
        }
        return true;
    };
    return assign(0);
}

inline FormulaRef close_universally(const FormulaRef& f) {
    FormulaRef out = f;
    auto fv = free_vars_ordered(f);
    for (auto it = fv.rbegin(); it != fv.rend(); ++it) out = mk_forall(*it, out);
    return out;
}

// Smallest universe size in [1, nmax] admitting a model of the sentence, if any.
inline std::optional<unsigned> sat_upto(const FormulaRef& f, const Vocabulary& vocab, unsigned nmax) {
    FormulaRef g = close_universally(f);
    for (unsigned n = 1; n <= nmax; n++) {
        bool completed = for_each_model(vocab, n, [&](const FiniteModel& m) {
            return !eval_formula(m, {}, g); // stop (return false) on a model
        });
        if (!completed) return n;
    }
    return std::nullopt;
}

inline bool valid_upto(const FormulaRef& f, const Vocabulary& vocab, unsigned nmax) {
    return !sat_upto(mk_not(close_universally(f)), vocab, nmax).has_value();
}

// Equivalence over all structures of size ≤ nmax (free variables closed
// pointwise: compared under every environment).
inline bool equivalent_upto(const FormulaRef& a, const FormulaRef& b, const Vocabulary& vocab,
                            unsigned nmax) {
    std::vector<std::string> fv = free_vars_ordered(a);
    for (auto& v : free_vars_ordered(b))
        if (std::find(fv.begin(), fv.end(), v) == fv.end()) fv.push_back(v);
    for (unsigned n = 1; n <= nmax; n++) {
        bool ok = for_each_model(vocab, n, [&](const FiniteModel& m) {
            auto envs = all_tuples(n, fv.size());
            for (auto& tup : envs) {
                Env env;
                for (size_t i = 0; i < fv.size(); i++) env[fv[i]] = tup[i];
                if (eval_formula(m, env, a) != eval_formula(m, env, b)) return false;
            }
            return true;
        });
        if (!ok) return false;
    }
    return true;
}

// Expand a structure with a defined relation: r interpreted as the set of
// tuples satisfying psi under parameters xs.
inline FiniteModel expand_with_defined_relation(const FiniteModel& m, const Symbol& r,
                                                const std::vector<std::string>& xs,
                                                const FormulaRef& psi) {
    FiniteModel out = m;
    std::set<std::vector<unsigned>> interp;
    for (auto& tup : all_tuples(m.size, r.arity)) {
        Env env;
        for (size_t i = 0; i < xs.size(); i++) env[xs[i]] = tup[i];
        if (eval_formula(m, env, psi)) interp.insert(tup);
    }
    out.rels[r] = std::move(interp);
    return out;
}

// ------------------------------------------------------- random generation

inline FiniteModel random_model(std::mt19937& rng, const Vocabulary& vocab, unsigned n) {
    FiniteModel m;
    m.size = n;
    std::uniform_int_distribution<unsigned> elem(0, n - 1);
    std::uniform_int_distribution<int> coin(0, 1);
    for (auto& s : vocab.symbols()) {
        switch (s.kind) {
            case SymKind::Constant: m.consts[s] = elem(rng); break;
            case SymKind::Relation: {
                std::set<std::vector<unsigned>> interp;
                for (auto& t : all_tuples(n, s.arity))
                    if (coin(rng)) interp.insert(t);
                m.rels[s] = std::move(interp);
                break;
            }
            case SymKind::Function: {
                std::map<std::vector<unsigned>, unsigned> interp;
                for (auto& t : all_tuples(n, s.arity)) interp[t] = elem(rng);
                m.funcs[s] = std::move(interp);
                break;
            }
        }
    }
    return m;
}

struct FormulaGenConfig {
    std::vector<Symbol> consts;
    std::vector<Symbol> rels;
    std::vector<Symbol> funcs;   // empty for relational vocabularies
    unsigned max_depth = 4;      // Boolean/quantifier nesting
    unsigned max_term_depth = 1; // function nesting in generated terms
};

namespace detail {
inline TermRef random_term(std::mt19937& rng, const FormulaGenConfig& cfg,
                           const std::vector<std::string>& scope, unsigned depth) {
    std::vector<int> options; // 0 = var, 1 = const, 2 = app
    if (!scope.empty()) options.push_back(0);
    if (!cfg.consts.empty()) options.push_back(1);
    if (!cfg.funcs.empty() && depth > 0 && (!scope.empty() || !cfg.consts.empty()))
        options.push_back(2);
    if (options.empty()) throw std::invalid_argument("random_term: no way to build a term");
    int choice = options[std::uniform_int_distribution<size_t>(0, options.size() - 1)(rng)];
    switch (choice) {
        case 0:
            return mk_var(scope[std::uniform_int_distribution<size_t>(0, scope.size() - 1)(rng)]);
        case 1:
            return mk_const(
                cfg.consts[std::uniform_int_distribution<size_t>(0, cfg.consts.size() - 1)(rng)]);
        default: {
            const Symbol& f =
                cfg.funcs[std::uniform_int_distribution<size_t>(0, cfg.funcs.size() - 1)(rng)];
            std::vector<TermRef> args;
            for (unsigned i = 0; i < f.arity; i++)
                args.push_back(random_term(rng, cfg, scope, depth - 1));
            return mk_app(f, std::move(args));
        }
    }
}

inline FormulaRef random_formula_rec(std::mt19937& rng, const FormulaGenConfig& cfg,
                                     std::vector<std::string>& scope, unsigned depth,
                                     unsigned& var_counter) {
    auto leaf = [&]() -> FormulaRef {
        std::vector<int> options; // 0 = atom, 1 = eq, 2 = true, 3 = false
        if (!cfg.rels.empty()) { options.push_back(0); options.push_back(0); }
        if (!scope.empty() || !cfg.consts.empty()) options.push_back(1);
        options.push_back(2);
        options.push_back(3);
        int choice = options[std::uniform_int_distribution<size_t>(0, options.size() - 1)(rng)];
        switch (choice) {
            case 0: {
                const Symbol& r =
                    cfg.rels[std::uniform_int_distribution<size_t>(0, cfg.rels.size() - 1)(rng)];
                std::vector<TermRef> args;
                for (unsigned i = 0; i < r.arity; i++)
                    args.push_back(random_term(rng, cfg, scope, cfg.max_term_depth));
                return mk_atom(r, std::move(args));
            }
            case 1:
                return mk_eq(random_term(rng, cfg, scope, cfg.max_term_depth),
                             random_term(rng, cfg, scope, cfg.max_term_depth));
            case 2: return mk_true();
            default: return mk_false();
        }
    };
    if (depth == 0) return leaf();
    // Weighted operator choice; quantifiers introduce fresh variables.
    std::uniform_int_distribution<int> pick(0, 9);
    switch (pick(rng)) {
        case 0:
        case 1: return leaf();
        case 2: return mk_not(random_formula_rec(rng, cfg, scope, depth - 1, var_counter));
        case 3:
            return mk_and(random_formula_rec(rng, cfg, scope, depth - 1, var_counter),
                          random_formula_rec(rng, cfg, scope, depth - 1, var_counter));
        case 4:
            return mk_or(random_formula_rec(rng, cfg, scope, depth - 1, var_counter),
                         random_formula_rec(rng, cfg, scope, depth - 1, var_counter));
        case 5:
            return mk_implies(random_formula_rec(rng, cfg, scope, depth - 1, var_counter),
                              random_formula_rec(rng, cfg, scope, depth - 1, var_counter));
        case 6:
            return mk_iff(random_formula_rec(rng, cfg, scope, depth - 1, var_counter),
                          random_formula_rec(rng, cfg, scope, depth - 1, var_counter));
        default: {
            bool universal = pick(rng) < 5;
            std::string v = "v" + std::to_string(var_counter++);
            scope.push_back(v);
            FormulaRef body = random_formula_rec(rng, cfg, scope, depth - 1, var_counter);
            scope.pop_back();
            return universal ? mk_forall(v, body) : mk_exists(v, body);
        }
    }
}
} // namespace detail

// Deterministic random formula; sentences when cfg has constants (leaf terms
// fall back to constants once no quantified variable is in scope).
inline FormulaRef random_formula(std::mt19937& rng, const FormulaGenConfig& cfg) {
    std::vector<std::string> scope;
    unsigned var_counter = 0;
    return detail::random_formula_rec(rng, cfg, scope, cfg.max_depth, var_counter);
}

// ------------------------------------------- explicit command semantics

// Brute-force execution of a desugared command from a concrete state,
// written directly from the intended operational meaning:
//  - a relation update pointwise reassigns the relation;
//  - a havoc branches over every universe element;
//  - updates and havocs discard successor states violating the axioms
//    (mirroring the axiom guard in the precondition rules);
//  - an assume discards states where its formula fails;
//  - abort marks the execution crashed.
// The state is a FiniteModel; only unprimed symbols are touched, so primed
// symbols may ride along as inert auxiliaries for two-vocabulary formulas.
struct Outcomes {
    std::vector<FiniteModel> finals;
    bool crash = false;
};

inline Outcomes run_command(const CommandRef& c, const FiniteModel& s, const FormulaRef& axioms) {
    auto ax_ok = [&](const FiniteModel& m) { return !axioms || eval_formula(m, {}, axioms); };
    switch (c->op) {
        case CmdOp::Skip: return {{s}, false};
        case CmdOp::Abort: return {{}, true};
        case CmdOp::Assume:
            if (eval_formula(s, {}, c->body)) return {{s}, false};
            return {{}, false};
        case CmdOp::RelUpdate: {
            FiniteModel s2 = s;
            std::set<std::vector<unsigned>> interp;
            for (auto& tup : all_tuples(s.size, c->rel.arity)) {
                Env env;
                for (size_t i = 0; i < c->params.size(); i++) env[c->params[i]] = tup[i];
                if (eval_formula(s, env, c->body)) interp.insert(tup);
            }
            s2.rels[c->rel] = std::move(interp);
            if (ax_ok(s2)) return {{s2}, false};
            return {{}, false};
        }
        case CmdOp::Havoc: {
            Outcomes out;
            for (unsigned e = 0; e < s.size; e++) {
                FiniteModel s2 = s;
                s2.consts[constant_sym(c->var)] = e;
                if (ax_ok(s2)) out.finals.push_back(std::move(s2));
            }
            return out;
        }
        case CmdOp::Seq: {
            Outcomes first = run_command(c->c1, s, axioms);
            Outcomes out;
            out.crash = first.crash;
            for (auto& mid : first.finals) {
                Outcomes second = run_command(c->c2, mid, axioms);
                out.crash = out.crash || second.crash;
                for (auto& f : second.finals) out.finals.push_back(std::move(f));
            }
            return out;
        }
        case CmdOp::Choice: {
            Outcomes a = run_command(c->c1, s, axioms);
            Outcomes b = run_command(c->c2, s, axioms);
            for (auto& f : b.finals) a.finals.push_back(std::move(f));
            a.crash = a.crash || b.crash;
            return a;
        }
        default:
            throw std::invalid_argument("run_command: sugar form (desugar first)");
    }
}

// Truth of the weakest precondition at s per the operational reading: no
// execution crashes, and every surviving final state satisfies Q.  Q may
// mention primed symbols; they are read from `s` itself (inert).
inline bool wp_holds(const CommandRef& c, const FormulaRef& q, const FiniteModel& s,
                     const FormulaRef& axioms) {
    Outcomes out = run_command(c, s, axioms);
    if (out.crash) return false;
    for (auto& f : out.finals)
        if (!eval_formula(f, {}, q)) return false;
    return true;
}

// Does some execution from the unprimed part of `joint` crash, or end in a
// state equal to the primed part of `joint` on every unprimed symbol?
inline bool can_reach_primed(const CommandRef& c, const FiniteModel& joint,
                             const FormulaRef& axioms) {
    Outcomes out = run_command(c, joint, axioms);
    if (out.crash) return true;
    for (auto& f : out.finals) {
        bool match = true;
        for (auto& [sym, val] : joint.consts) {
            if (sym.primed) continue;
            Symbol p = sym;
            p.primed = true;
            auto it = joint.consts.find(p);
            if (it != joint.consts.end() && f.consts.at(sym) != it->second) match = false;
        }
        for (auto& [sym, interp] : joint.rels) {
            if (sym.primed) continue;
            Symbol p = sym;
            p.primed = true;
            auto it = joint.rels.find(p);
            if (it != joint.rels.end() && f.rels.at(sym) != it->second) match = false;
        }
        if (match) return true;
    }
    return false;
}

// ------------------------------------------------- ground-term universe

// Printed forms of every ground term of function-nesting depth ≤ k over the
// given constants and functions, computed by naive closure.
inline std::set<std::string> term_universe_strings(const std::vector<Symbol>& consts,
                                                   const std::vector<Symbol>& funcs, unsigned k) {
    std::vector<TermRef> layer;
    std::set<std::string> seen;
    for (auto& c : consts) {
        auto t = mk_const(c);
        if (seen.insert(to_string(t)).second) layer.push_back(t);
    }
    std::vector<TermRef> all = layer;
    for (unsigned round = 0; round < k; round++) {
        std::vector<TermRef> next;
        for (auto& f : funcs) {
            // All arity-tuples over `all` (terms of the previous closure).
            std::vector<std::vector<TermRef>> tuples{{}};
            for (unsigned i = 0; i < f.arity; i++) {
                std::vector<std::vector<TermRef>> ext;
                for (auto& tup : tuples)
                    for (auto& t : all) {
                        auto t2 = tup;
                        t2.push_back(t);
                        ext.push_back(std::move(t2));
                    }
                tuples = std::move(ext);
            }
            for (auto& tup : tuples) {
                auto t = mk_app(f, tup);
                if (seen.insert(to_string(t)).second) next.push_back(t);
            }
        }
        all.insert(all.end(), next.begin(), next.end());
    }
    return seen;
}

} // namespace bhz::oracle
