#pragma once

// Weakest preconditions, transition relations, and verification conditions.
//
// For a desugared command C and postcondition Q (which may mention primed
// symbols as inert auxiliaries), wp follows the standard rule table:
//
//   wp(skip, Q)          = Q
//   wp(abort, Q)         = false
//   wp(r(x⃗) := φ, Q)     = (A → Q) with every atom r(s⃗) replaced by φ[s⃗/x⃗]
//   wp(v := *, Q)        = ∀x. (A → Q)[x/v]        (x globally fresh)
//   wp(assume φ, Q)      = φ → Q
//   wp(C1 ; C2, Q)       = wp(C1, wp(C2, Q))
//   wp(C1 | C2, Q)       = wp(C1, Q) ∧ wp(C2, Q)
//
// where A is the conjunction of the model's axioms.  The transition relation
// of a command is δ[C] = ¬wp(C, ¬ψ), with ψ the frame identity
// ⋀_r ∀x⃗. r(x⃗) ↔ r′(x⃗)  ∧  ⋀_c c = c′, and the program's transition
// relation is δ = A ∧ ⋁_i δ[C_i].
//
// Verification conditions are lists of separately-Skolemized, prenexed
// universal conjuncts, each tagged with its role:
//   consecution:  Sk(I) [invariant-pre] ∧ Sk(δ) [delta] ∧ Sk(¬I′) [invariant-post]
//   initiation:   Sk(φ₀) [delta] ∧ Sk(¬I) [invariant-post]
//   safety:       Sk(I) [invariant-pre] ∧ Sk(¬φ_P) [invariant-post]
// The initiation premise φ₀ carries the delta tag because it plays the same
// role (the thing that may move the state off the invariant) in the
// approximate instantiation scheme.
//
// The Skolemization-aware variant applies to a universal invariant
// Î = ∀x⃗.θ(x⃗): it encodes Î ∧ δ̂ ∧ ¬θ′(s⃗) where the shared constants s⃗
// (named sk_<x> after the prenex variables of Î) stand both for the
// existentials of ¬Î′ and for any action local with the same sk_<x> name,
// which is left unquantified in δ̂ instead of being havoc-bound.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bhz/fol.hpp"
#include "bhz/frontend.hpp"

namespace bhz {

// ------------------------------------------------------------------- wp

struct WpOptions {
    // Leave locals whose names start with "sk_" unquantified (they become
    // shared constants of the Skolemization-aware encoding).
    bool keep_sk_locals = false;
};

namespace detail_vc {

struct WpCtx {
    FormulaRef axioms; // null when there are none
    WpOptions opts;
    std::set<std::string> avoid; // every variable name in sight
    unsigned counter = 0;

    std::string fresh(const std::string& base) {
        for (;;) {
            std::string cand = base + "_" + std::to_string(counter++);
            if (!avoid.count(cand)) {
                avoid.insert(cand);
                return cand;
            }
        }
    }
};

// Every variable and constant name in `f`; fresh havoc variables must dodge
// both (a constant of the same name would make the printed form ambiguous).
inline void collect_names(const FormulaRef& f, std::set<std::string>& out) {
    for (auto& v : all_var_names(f)) out.insert(v);
    for (auto& c : consts(f)) out.insert(c.name);
}

inline void collect_names(const CommandRef& c, std::set<std::string>& out) {
    if (!c) return;
    if (c->body) collect_names(c->body, out);
    for (auto& p : c->params) out.insert(p);
    if (!c->var.empty()) out.insert(c->var);
    collect_names(c->c1, out);
    collect_names(c->c2, out);
}

inline FormulaRef wp_rec(const CommandRef& c, const FormulaRef& q, WpCtx& ctx) {
    auto guard = [&](const FormulaRef& f) {
        return ctx.axioms ? mk_implies(ctx.axioms, f) : f;
    };
    switch (c->op) {
        case CmdOp::Skip: return q;
        case CmdOp::Abort: return mk_false();
        case CmdOp::Assume: return mk_implies(c->body, q);
        case CmdOp::RelUpdate: return substitute_relation(guard(q), c->rel, c->params, c->body);
        case CmdOp::Havoc: {
            if (ctx.opts.keep_sk_locals && c->var.rfind("sk_", 0) == 0) return guard(q);
            std::string x = ctx.fresh(c->var);
            FormulaRef body = substitute_constant(guard(q), constant_sym(c->var), mk_var(x));
            return mk_forall(x, body);
        }
        case CmdOp::Seq: return wp_rec(c->c1, wp_rec(c->c2, q, ctx), ctx);
        case CmdOp::Choice: return mk_and(wp_rec(c->c1, q, ctx), wp_rec(c->c2, q, ctx));
        default: throw std::invalid_argument("wp: command contains sugar (desugar first)");
    }
}

} // namespace detail_vc

// Weakest precondition of a desugared command.  axioms may be null.
inline FormulaRef wp(const CommandRef& c, const FormulaRef& q, const FormulaRef& axioms = nullptr,
                     WpOptions opts = {}) {
    detail_vc::WpCtx ctx;
    ctx.axioms = axioms;
    ctx.opts = opts;
    detail_vc::collect_names(q, ctx.avoid);
    if (axioms) detail_vc::collect_names(axioms, ctx.avoid);
    detail_vc::collect_names(c, ctx.avoid);
    return detail_vc::wp_rec(c, q, ctx);
}

// ---------------------------------------------------------- transitions

// ψ_{Σ=Σ′}: every relation and constant of the (unprimed) vocabulary equals
// its primed copy.  Symbols in name order; quantified variables x_0, x_1, ….
inline FormulaRef frame_identity(const Vocabulary& vocab) {
    std::vector<FormulaRef> parts;
    for (auto& s : vocab.symbols()) {
        if (s.primed) continue;
        if (s.kind == SymKind::Constant) {
            parts.push_back(mk_eq(mk_const(s), mk_const(primed(s))));
        } else if (s.kind == SymKind::Relation) {
            std::vector<std::string> vars;
            std::vector<TermRef> args;
            for (unsigned i = 0; i < s.arity; i++) {
                vars.push_back("x_" + std::to_string(i));
                args.push_back(mk_var(vars.back()));
            }
            FormulaRef body = mk_iff(mk_atom(s, args), mk_atom(primed(s), args));
            parts.push_back(mk_forall(vars, body));
        } else {
            throw std::invalid_argument("frame_identity: function symbol " + s.name);
        }
    }
    return mk_and(std::move(parts));
}

// δ[C] = ¬ wp(C, ¬ψ_{Σ=Σ′}).
inline FormulaRef delta_of_command(const CommandRef& c, const Vocabulary& vocab,
                                   const FormulaRef& axioms = nullptr, WpOptions opts = {}) {
    return mk_not(wp(c, mk_not(frame_identity(vocab)), axioms, opts));
}

struct ProgramDelta {
    FormulaRef axioms;                                          // A, or null if none
    FormulaRef whole;                                           // A ∧ ⋁_i δ[C_i]
    std::vector<std::pair<std::string, FormulaRef>> per_action; // name → A ∧ δ[C_i]
};

// δ for a desugared program, whole and per-action.
inline ProgramDelta delta_of_program(const ProgramModel& m, WpOptions opts = {}) {
    ProgramDelta out;
    if (!m.axioms.empty()) out.axioms = mk_and(m.axioms);
    std::vector<FormulaRef> disjuncts;
    for (auto& a : m.actions) {
        FormulaRef d = delta_of_command(a.body, m.vocab, out.axioms, opts);
        disjuncts.push_back(d);
        out.per_action.emplace_back(a.name, out.axioms ? mk_and(out.axioms, d) : d);
    }
    FormulaRef dis = mk_or(std::move(disjuncts));
    out.whole = out.axioms ? mk_and(out.axioms, dis) : dis;
    return out;
}

// --------------------------------------------------- verification conditions

enum class VcKind { Initiation, Consecution, Safety, SkolemAware, Naming };
enum class SkOrigin { InvariantPre, InvariantPost, Delta, Named };

inline const char* to_cstring(VcKind k) {
    switch (k) {
        case VcKind::Initiation: return "initiation";
        case VcKind::Consecution: return "consecution";
        case VcKind::Safety: return "safety";
        case VcKind::SkolemAware: return "skolem-aware";
        case VcKind::Naming: return "naming";
    }
    return "?";
}
inline const char* to_cstring(SkOrigin o) {
    switch (o) {
        case SkOrigin::InvariantPre: return "invariant-pre";
        case SkOrigin::InvariantPost: return "invariant-post";
        case SkOrigin::Delta: return "delta";
        case SkOrigin::Named: return "named";
    }
    return "?";
}

struct VcConjunct {
    FormulaRef formula; // prenexed universal sentence over vocab
    SkOrigin tag;
};

struct VerificationCondition {
    VcKind kind;
    std::vector<VcConjunct> conjuncts;
    Vocabulary vocab;                          // Σ ⊎ Σ′ ⊎ Skolem symbols
    std::map<std::string, SkOrigin> skolemOrigin; // Skolem symbol name → source
    std::optional<std::string> actionName;
    std::string note; // human-readable completeness remark, if any

    FormulaRef formula() const {
        std::vector<FormulaRef> fs;
        for (auto& c : conjuncts) fs.push_back(c.formula);
        return mk_and(std::move(fs));
    }
};

namespace detail_vc {

inline Vocabulary with_primed_copies(const Vocabulary& v) {
    Vocabulary out = v;
    for (auto& s : v.symbols())
        if (!s.primed) out.add(primed(s));
    return out;
}

inline std::set<std::string> symbol_names(const Vocabulary& v) {
    std::set<std::string> out;
    for (auto& s : v.symbols()) out.insert(s.name);
    return out;
}

// Skolemize `f`, record the introduced symbols under `origin`, prenex the
// result, and append it as one tagged conjunct.
inline void add_conjunct(VerificationCondition& vc, const FormulaRef& f, SkOrigin origin) {
    SkolemResult sk = skolemize(f, vc.vocab);
    for (auto& info : sk.introduced) {
        vc.vocab.add(info.sym);
        vc.skolemOrigin[info.sym.name] = origin;
    }
    vc.conjuncts.push_back({pnf(sk.formula, symbol_names(vc.vocab)), origin});
}

} // namespace detail_vc

// Sk(I) ∧ Sk(δ) ∧ Sk(¬I′) for one action (default) or the whole program
// (action == nullptr).  The model must be desugared and validated.
inline VerificationCondition consecution_vc(const ProgramModel& m,
                                            const std::string* action = nullptr) {
    VerificationCondition vc;
    vc.kind = VcKind::Consecution;
    vc.vocab = detail_vc::with_primed_copies(m.vocab);
    ProgramDelta pd = delta_of_program(m);
    FormulaRef delta;
    if (action) {
        for (auto& [name, d] : pd.per_action)
            if (name == *action) delta = d;
        if (!delta) throw std::invalid_argument("unknown action: " + *action);
        vc.actionName = *action;
    } else {
        delta = pd.whole;
    }
    for (auto& inv : m.invariants) detail_vc::add_conjunct(vc, inv, SkOrigin::InvariantPre);
    detail_vc::add_conjunct(vc, delta, SkOrigin::Delta);
    detail_vc::add_conjunct(vc, mk_not(prime(mk_and(m.invariants))), SkOrigin::InvariantPost);
    return vc;
}

inline VerificationCondition consecution_vc(const ProgramModel& m, const std::string& action) {
    return consecution_vc(m, &action);
}

// Sk(φ₀) ∧ Sk(¬I).
inline VerificationCondition initiation_vc(const ProgramModel& m) {
    VerificationCondition vc;
    vc.kind = VcKind::Initiation;
    vc.vocab = m.vocab;
    for (auto& init : m.inits) detail_vc::add_conjunct(vc, init, SkOrigin::Delta);
    detail_vc::add_conjunct(vc, mk_not(mk_and(m.invariants)), SkOrigin::InvariantPost);
    FormulaRef i = mk_and(m.invariants), phi0 = mk_and(m.inits);
    if (in_ae(i) && in_epr(phi0))
        vc.note = "initial condition is exists*-forall* and the invariant is forall*-exists*: "
                  "the condition is decidable at bound 0";
    return vc;
}

// Sk(I) ∧ Sk(¬φ_P).
inline VerificationCondition safety_vc(const ProgramModel& m) {
    VerificationCondition vc;
    vc.kind = VcKind::Safety;
    vc.vocab = m.vocab;
    for (auto& inv : m.invariants) detail_vc::add_conjunct(vc, inv, SkOrigin::InvariantPre);
    detail_vc::add_conjunct(vc, mk_not(mk_and(m.safety)), SkOrigin::InvariantPost);
    return vc;
}

// Skolemization-aware consecution for a universal invariant Î = ∀x⃗.θ(x⃗).
// The constants sk_<x> are shared: they Skolemize ¬Î′ and simultaneously
// stand for the action's locals of the same name (left unquantified in δ̂).
inline VerificationCondition skolem_aware_vc(const ProgramModel& m, const std::string& action) {
    FormulaRef ihat = mk_and(m.invariants);
    if (!in_universal(ihat))
        throw std::invalid_argument("skolem-aware check requires a universal invariant");
    const Action* act = m.find_action(action);
    if (!act) throw std::invalid_argument("unknown action: " + action);

    VerificationCondition vc;
    vc.kind = VcKind::SkolemAware;
    vc.actionName = action;
    vc.vocab = detail_vc::with_primed_copies(m.vocab);

    // Î in prenex form; its universal variables name the shared constants.
    FormulaRef pre = pnf(ihat, detail_vc::symbol_names(vc.vocab));
    auto [prefix, theta] = split_pnf(pre);
    std::map<std::string, TermRef> witness;
    std::set<std::string> shared;
    for (auto& qv : prefix) {
        Symbol c = constant_sym("sk_" + qv.var);
        vc.vocab.add(c);
        shared.insert(c.name);
        witness[qv.var] = mk_const(c);
        vc.skolemOrigin[c.name] = SkOrigin::InvariantPost;
    }
    // Locals named sk_<x> in this action refer to the same constants.
    for (auto& loc : act->locals)
        if (shared.count(loc.name)) vc.skolemOrigin[loc.name] = SkOrigin::Named;

    for (auto& inv : m.invariants) detail_vc::add_conjunct(vc, inv, SkOrigin::InvariantPre);

    // δ̂: axioms ∧ δ[C] with sk_ locals left as constants.
    WpOptions opts;
    opts.keep_sk_locals = true;
    FormulaRef axioms = m.axioms.empty() ? nullptr : mk_and(m.axioms);
    FormulaRef dhat = delta_of_command(act->body, m.vocab, axioms, opts);
    if (axioms) dhat = mk_and(axioms, dhat);
    detail_vc::add_conjunct(vc, dhat, SkOrigin::Delta);

    // ¬θ′(s⃗): quantifier-free once the shared constants are substituted.
    FormulaRef neg_post = substitute(mk_not(prime(theta)), witness);
    vc.conjuncts.push_back({pnf(neg_post, detail_vc::symbol_names(vc.vocab)),
                            SkOrigin::InvariantPost});
    return vc;
}

} // namespace bhz
