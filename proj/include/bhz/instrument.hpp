#pragma once

// Transformations that trade quantifier structure for decidable checks.
//
// A DerivedRelation pairs a relation symbol r with a defining formula
// ψ(x⃗) = ∃y⃗.φ(x⃗,y⃗).  The one-sided constraint ∀x⃗. ψ(x⃗) → r(x⃗) keeps the
// transition relation in the decidable class, and `local_instantiate` supplies
// the other direction pointwise: it inserts
//
//     local c⃗ := *;  assume r(t⃗) → φ(t⃗, c⃗)
//
// into an action, enforcing r(t⃗) → ∃y⃗.φ(t⃗,y⃗) for one tuple t⃗ of program
// variables while handing the caller fresh locals c⃗ that can seed further,
// deeper rounds.  `check_naming_soundness` is the companion side-check: once
// the instrumented transition's existentials are pinned to constants by an
// ExistentialNaming and the derived relations are unfolded, the original
// transition must entail it — certified by a bounded refutation, so the answer
// is CONFIRMED or UNKNOWN, never a false positive.
//
// `expand_invariant` rewrites a ∀*∃* invariant I into an equivalent form I_r
// that spells out witnesses for every instantiation tuple up to depth r over a
// single collapsed constant (which constant generated a tuple never matters,
// so one stand-in covers them all).  `star_invariant` chains the expansions
// into I₁ ∧ ⋀_{j<k}(I_j → I_{j+1}), a single-alternation equivalent of I.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bhz/fol.hpp"
#include "bhz/frontend.hpp"
#include "bhz/horizon.hpp"
#include "bhz/solver.hpp"
#include "bhz/vcgen.hpp"

namespace bhz {

// --------------------------------------------------------- derived relations

// Relation r with ordered parameters and a defining formula whose free
// variables all come from the parameter list.
struct DerivedRelation {
    Symbol r;
    std::vector<std::string> params;
    FormulaRef psi;
};

inline DerivedRelation derived_relation(const std::string& name, std::vector<std::string> params,
                                        FormulaRef psi) {
    std::set<std::string> seen(params.begin(), params.end());
    if (seen.size() != params.size())
        throw std::invalid_argument("derived relation " + name + ": duplicate parameter");
    for (auto& v : free_vars(psi))
        if (!seen.count(v))
            throw std::invalid_argument("derived relation " + name + ": unbound variable " + v);
    DerivedRelation d;
    d.r = relation_sym(name, (unsigned)params.size());
    d.params = std::move(params);
    d.psi = std::move(psi);
    return d;
}

// Replace every r(t⃗) by ψ(t⃗) and every r′(t⃗) by ψ′(t⃗).
inline FormulaRef unfold(const FormulaRef& f, const DerivedRelation& d) {
    FormulaRef g = substitute_relation(f, d.r, d.params, d.psi);
    return substitute_relation(g, primed(d.r), d.params, prime(d.psi));
}

namespace detail_in {

// ψ split into its existential prefix and quantifier-free matrix.
struct Definition {
    std::vector<std::string> existentials;
    FormulaRef matrix;
};

inline Definition split_definition(const DerivedRelation& d) {
    Definition out;
    FormulaRef cur = d.psi;
    while (cur->op == FOp::Exists) {
        for (auto& p : d.params)
            if (p == cur->var)
                throw std::invalid_argument("derived relation " + d.r.name + ": existential " +
                                            cur->var + " shadows a parameter");
        out.existentials.push_back(cur->var);
        cur = cur->kids[0];
    }
    if (has_quantifiers(cur))
        throw std::invalid_argument("local instantiation: definition of " + d.r.name +
                                    " must be existentials over a quantifier-free matrix");
    out.matrix = cur;
    return out;
}

inline void local_names(const CommandRef& c, std::set<std::string>& out) {
    if (!c) return;
    if (c->op == CmdOp::Local || c->op == CmdOp::Havoc) out.insert(c->var);
    local_names(c->c1, out);
    local_names(c->c2, out);
}

} // namespace detail_in

// ------------------------------------------------------ local instantiation

struct LocalInstantiation {
    ProgramModel model;
    std::vector<std::string> fresh; // new locals, in ψ's existential order
};

// Insert `local c⃗ := *; assume r(t⃗) → φ(t⃗, c⃗)` into `action`.  The tuple
// names program variables in scope for that action; names with the reserved
// sk_ prefix are accepted undeclared, denoting the shared witness constants of
// the Skolemization-aware check.  The block lands after the action's leading
// declarations and assumes — still before any state change, so the assume
// constrains the pre-state — which also places chained rounds in order.
inline LocalInstantiation local_instantiate(const ProgramModel& model, const DerivedRelation& d,
                                            const std::string& action,
                                            const std::vector<std::string>& tuple) {
    if (tuple.size() != d.r.arity)
        throw std::invalid_argument("local instantiation: " + d.r.display() + " takes " +
                                    std::to_string(d.r.arity) + " variables, got " +
                                    std::to_string(tuple.size()));
    detail_in::Definition def = detail_in::split_definition(d);

    LocalInstantiation out;
    out.model = model;
    ProgramModel& m = out.model;

    Action* act = nullptr;
    for (auto& a : m.actions)
        if (a.name == action) act = &a;
    if (!act) throw std::invalid_argument("unknown action: " + action);

    // Names the action can see: parameters, program variables, its locals.
    std::set<std::string> scope;
    for (auto& p : act->params) scope.insert(p);
    for (auto& v : m.variables) scope.insert(v.name);
    for (auto& l : act->locals) scope.insert(l.name);
    detail_in::local_names(act->body, scope);
    for (auto& t : tuple)
        if (!scope.count(t) && t.rfind("sk_", 0) != 0)
            throw std::invalid_argument("local instantiation: variable " + t +
                                        " is not in scope in action " + action);

    // Fresh locals inst_1, inst_2, … dodging every name in the program.
    std::set<std::string> avoid = scope;
    for (auto& s : m.vocab.symbols()) avoid.insert(s.name);
    for (auto& a : m.actions) detail_vc::collect_names(a.body, avoid);
    detail_vc::collect_names(d.psi, avoid);
    unsigned counter = 1;
    for (size_t j = 0; j < def.existentials.size(); j++) {
        std::string cand;
        do cand = "inst_" + std::to_string(counter++);
        while (avoid.count(cand));
        avoid.insert(cand);
        out.fresh.push_back(cand);
    }

    // assume r(t⃗) → φ(t⃗, c⃗): program variables enter formulas as constants.
    std::vector<TermRef> args;
    std::map<std::string, TermRef> binding;
    for (size_t i = 0; i < tuple.size(); i++) {
        TermRef c = mk_const(constant_sym(tuple[i]));
        args.push_back(c);
        binding[d.params[i]] = c;
    }
    for (size_t j = 0; j < out.fresh.size(); j++)
        binding[def.existentials[j]] = mk_const(constant_sym(out.fresh[j]));
    FormulaRef assumed = mk_implies(mk_atom(d.r, args), substitute(def.matrix, binding));

    std::vector<CommandRef> block;
    for (auto& c : out.fresh) {
        block.push_back(m.desugared ? mk_havoc(c) : mk_local(c));
        if (m.desugared) act->locals.push_back(constant_sym(c));
    }
    block.push_back(mk_assume(assumed));

    // Splice after the leading Havoc/Local/Assume prefix of the body's spine.
    auto is_decl = [](const CommandRef& c) {
        return c->op == CmdOp::Havoc || c->op == CmdOp::Local || c->op == CmdOp::Assume;
    };
    std::vector<CommandRef> parts;
    CommandRef cur = act->body;
    while (cur->op == CmdOp::Seq && is_decl(cur->c1)) {
        parts.push_back(cur->c1);
        cur = cur->c2;
    }
    CommandRef rest = cur;
    if (cur->op != CmdOp::Seq && is_decl(cur)) {
        parts.push_back(cur);
        rest = nullptr;
    }
    parts.insert(parts.end(), block.begin(), block.end());
    if (rest) parts.push_back(rest);
    act->body = mk_seq(std::move(parts));

    // The instrumented program owns r even if the input never declared it.
    if (!m.vocab.contains(d.r.name, false)) {
        m.vocab.add(d.r);
        m.relations.push_back(d.r);
    } else {
        m.vocab.add(d.r); // conflicting arity → redeclaration error
    }
    return out;
}

// -------------------------------------------------- naming soundness check

// Total assignment of a transition formula's existential prefix to constants.
struct ExistentialNaming {
    std::map<std::string, Symbol> mapping;
};

enum class NamingStatus { Confirmed, Unknown };

inline const char* to_cstring(NamingStatus s) {
    return s == NamingStatus::Confirmed ? "CONFIRMED" : "UNKNOWN";
}

struct NamingCheck {
    NamingStatus status = NamingStatus::Unknown;
    FormulaRef goal;           // Sk(δ) → η(δ̂)[ψ/r, ψ′/r′]
    InstantiationSet instances; // bounded encoding of the refutation
    Verdict ground;            // solver outcome; a model documents the gap
};

namespace detail_in {

// Substitute η's constants for the leading existential block of a prenex
// ∃*∀* sentence; the remainder must be universals over a quantifier-free
// matrix.  Every constant must already be declared.
inline FormulaRef name_existentials(const FormulaRef& delta_hat, const ExistentialNaming& eta,
                                    const Vocabulary& vocab) {
    FormulaRef cur = delta_hat;
    std::map<std::string, TermRef> binding;
    while (cur->op == FOp::Exists) {
        auto it = eta.mapping.find(cur->var);
        if (it == eta.mapping.end())
            throw std::invalid_argument("existential naming is not total: no constant for " +
                                        cur->var);
        if (!vocab.contains(it->second.name, it->second.primed))
            throw std::invalid_argument("existential naming: unknown constant " +
                                        it->second.display());
        binding[cur->var] = mk_const(it->second);
        cur = cur->kids[0];
    }
    FormulaRef body = cur;
    while (body->op == FOp::Forall) body = body->kids[0];
    if (has_quantifiers(body))
        throw std::invalid_argument(
            "existential naming: formula is not a prenex exists*-forall* sentence");
    return substitute(cur, binding);
}

} // namespace detail_in

// Does the instrumented transition δ̂ add no behavior beyond δ once its
// existentials are named and the derived relation is unfolded?  We test
// whether Sk(δ) ∧ ¬(η(δ̂)[ψ/r, ψ′/r′]) has no ground refutation survivor at
// the given bound: refuted ⟹ the entailment holds ⟹ CONFIRMED.  A surviving
// model only means the bound was too small, hence UNKNOWN rather than a
// rejection.  η may name the constants Skolemization of δ introduces (their
// deterministic names come from `skolemize(δ, vocab)`).  δ̂ must be passed in
// prenex form, since η is keyed by its prefix variables.
inline NamingCheck check_naming_soundness(const FormulaRef& delta, const FormulaRef& delta_hat,
                                          const ExistentialNaming& eta, const DerivedRelation& d,
                                          const Vocabulary& vocab, unsigned bound,
                                          size_t limit = kDefaultInstanceLimit) {
    NamingCheck out;
    VerificationCondition vc;
    vc.kind = VcKind::Naming;
    vc.vocab = vocab;
    detail_vc::add_conjunct(vc, delta, SkOrigin::Delta);
    FormulaRef named = detail_in::name_existentials(delta_hat, eta, vc.vocab);
    FormulaRef target = unfold(named, d);
    out.goal = mk_implies(vc.conjuncts[0].formula, target);
    detail_vc::add_conjunct(vc, mk_not(target), SkOrigin::Named);
    out.instances = bounded_instantiation_set(vc, bound, limit);
    GroundProblem gp;
    for (auto& inst : out.instances.instances) gp.sentences.push_back(inst.sentence);
    out.ground = solve(gp);
    out.status = out.ground.unsat() ? NamingStatus::Confirmed : NamingStatus::Unknown;
    return out;
}

// ------------------------------------------------------ invariant expansion

namespace detail_in {

// Term over one collapsed constant and the witness functions: fn = -1 is the
// constant, otherwise fn indexes an existential and args index shallower
// entries of the bank.
struct BankTerm {
    int fn;
    std::vector<size_t> args;
    unsigned depth;
};

} // namespace detail_in

// I_r for a ∀*∃* sentence I = ∀x⃗.∃y⃗.φ: conjoin one copy of φ per
// instantiation tuple of depth ≤ r over the witness functions, reading each
// tuple component as either a universal variable (the collapsed constant) or
// the witness a shallower tuple introduced.  All witnesses sit in one
// existential block under the original universals, named w<tuple>_<existential>
// (a longer prefix is chosen if the input already uses such names).  The
// result is logically equivalent to I for every r ≥ 1.
inline FormulaRef expand_invariant(const FormulaRef& inv, unsigned depth) {
    if (depth < 1) throw std::invalid_argument("invariant expansion needs depth >= 1");
    FormulaRef p = pnf(inv);
    if (!free_vars(p).empty())
        throw std::invalid_argument("invariant expansion: formula has free variables");
    auto [prefix, matrix] = split_pnf(p);
    size_t n = 0;
    while (n < prefix.size() && prefix[n].universal) n++;
    std::vector<std::string> xs, ys;
    for (size_t i = 0; i < n; i++) xs.push_back(prefix[i].var);
    for (size_t i = n; i < prefix.size(); i++) {
        if (prefix[i].universal)
            throw std::invalid_argument("invariant expansion: not a forall*-exists* sentence");
        ys.push_back(prefix[i].var);
    }
    const size_t m = ys.size();

    // Witness functions occur only for existentials the matrix mentions; a
    // tuple component under one such function costs one level of depth.
    std::set<std::string> matrix_free = free_vars(matrix);
    std::vector<size_t> used;
    for (size_t j = 0; j < m; j++)
        if (matrix_free.count(ys[j])) used.push_back(j);
    const unsigned max_component = used.empty() ? 0 : depth - 1;

    // Bank of candidate components, level by level.  n = 0 needs no bank: the
    // only tuple is empty and the witness functions are constants.
    std::vector<detail_in::BankTerm> bank{{-1, {}, 0}};
    if (n > 0) {
        size_t prev_start = 0; // first index of the previous level
        for (unsigned lvl = 1; lvl <= max_component; lvl++) {
            size_t level_start = bank.size();
            for (size_t j : used) {
                std::vector<size_t> t(n, 0);
                for (;;) {
                    bool deep_enough = false; // some component from level lvl-1
                    for (size_t i = 0; i < n; i++)
                        if (t[i] >= prev_start && t[i] < level_start) deep_enough = true;
                    if (deep_enough) bank.push_back({(int)j, t, lvl});
                    size_t i = n;
                    while (i-- > 0) {
                        if (++t[i] < level_start) break;
                        t[i] = 0;
                        if (i == 0) goto next_fn;
                    }
                }
            next_fn:;
            }
            prev_start = level_start;
        }
    }

    // Tuples are all n-sequences over the bank, ranked lexicographically; the
    // all-constant tuple is always first.
    const size_t B = bank.size();
    size_t tuples = 1;
    for (size_t i = 0; i < n; i++) tuples *= B;

    // Witness names: w<tuple>_<existential>, 1-based on both sides.
    std::set<std::string> avoid;
    for (auto& v : all_var_names(p)) avoid.insert(v);
    std::string wprefix = "w";
    for (bool clash = true; clash;) {
        clash = false;
        for (size_t q = 1; q <= tuples && !clash; q++)
            for (size_t j = 1; j <= m && !clash; j++)
                if (avoid.count(wprefix + std::to_string(q) + "_" + std::to_string(j)))
                    clash = true;
        if (clash) wprefix += "_";
    }
    auto witness = [&](size_t q, size_t j) {
        return wprefix + std::to_string(q + 1) + "_" + std::to_string(j + 1);
    };
    auto rank = [&](const std::vector<size_t>& t) {
        size_t q = 0;
        for (size_t i = 0; i < n; i++) q = q * B + t[i];
        return q;
    };

    std::vector<FormulaRef> conjuncts;
    std::vector<size_t> t(n, 0);
    for (size_t q = 0; q < tuples; q++) {
        std::map<std::string, TermRef> binding;
        for (size_t i = 0; i < n; i++) {
            const detail_in::BankTerm& bt = bank[t[i]];
            binding[xs[i]] =
                bt.fn < 0 ? mk_var(xs[i]) : mk_var(witness(rank(bt.args), (size_t)bt.fn));
        }
        for (size_t j = 0; j < m; j++) binding[ys[j]] = mk_var(witness(q, j));
        conjuncts.push_back(substitute(matrix, binding));
        size_t i = n;
        while (i-- > 0) {
            if (++t[i] < B) break;
            t[i] = 0;
        }
    }

    std::vector<std::string> wnames;
    for (size_t q = 0; q < tuples; q++)
        for (size_t j = 0; j < m; j++) wnames.push_back(witness(q, j));
    FormulaRef body = mk_and(std::move(conjuncts));
    if (!wnames.empty()) body = mk_exists(wnames, body);
    return xs.empty() ? body : mk_forall(xs, body);
}

// I₁ ∧ ⋀_{j<k}(I_j → I_{j+1}): one quantifier alternation, equivalent to I.
inline FormulaRef star_invariant(const FormulaRef& inv, unsigned depth) {
    if (depth < 1) throw std::invalid_argument("staged expansion needs depth >= 1");
    std::vector<FormulaRef> parts{expand_invariant(inv, 1)};
    for (unsigned j = 1; j < depth; j++)
        parts.push_back(mk_implies(expand_invariant(inv, j), expand_invariant(inv, j + 1)));
    return mk_and(std::move(parts));
}

} // namespace bhz
