#pragma once

// Bounded-depth ground terms and bounded instantiation sets.
//
// T₀ is the set of constants; T_k adds every application f(t₁…t_m) with the
// tᵢ drawn from T_{k−1}, so T_k is exactly the ground terms whose function
// nesting is at most k.  A universal prenex sentence is instantiated by
// substituting ground terms for its variables; the bound-k instantiation set
// of a verification condition keeps, for every conjunct, the instances whose
// overall term depth stays within k.  The approximate variant draws the
// invariant-pre conjuncts' tuples from T_{k−1} instead of T_k, which is a
// subset of the exact set.  The guard encoding is the alternative bound-1
// form: universals whose body contains a function application are restricted
// to range over the constants.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bhz/fol.hpp"
#include "bhz/vcgen.hpp"

namespace bhz {

// Maximum term nesting over every term of the formula.
inline unsigned formula_depth(const FormulaRef& f) {
    unsigned d = 0;
    walk(f, [&](const TermRef& t) { d = std::max(d, term_depth(t)); },
         [](const FormulaRef&) {});
    return d;
}

// -------------------------------------------------------------- term bank

struct TermBank {
    Vocabulary vocab;
    // levels[i] = T_i, sorted by (depth, printed form); T_i ⊆ T_{i+1}.
    std::vector<std::vector<TermRef>> levels;

    const std::vector<TermRef>& level(unsigned k) const {
        if (k >= levels.size()) throw std::out_of_range("term bank level not built");
        return levels[k];
    }
    unsigned max_level() const { return levels.empty() ? 0 : unsigned(levels.size()) - 1; }
};

namespace detail_hz {

inline void sort_terms(std::vector<TermRef>& ts) {
    std::stable_sort(ts.begin(), ts.end(), [](const TermRef& a, const TermRef& b) {
        unsigned da = term_depth(a), db = term_depth(b);
        if (da != db) return da < db;
        return to_string(a) < to_string(b);
    });
}

} // namespace detail_hz

// Ground terms of nesting depth ≤ 0, 1, …, k.  A vocabulary without constants
// yields empty levels (callers that need a nonempty universe add a fresh
// constant first).
inline TermBank terms_up_to(const Vocabulary& vocab, unsigned k) {
    TermBank bank;
    bank.vocab = vocab;
    std::vector<Symbol> funcs;
    std::vector<TermRef> cur;
    for (auto& s : vocab.symbols()) {
        if (s.kind == SymKind::Constant) cur.push_back(mk_const(s));
        if (s.kind == SymKind::Function) funcs.push_back(s);
    }
    detail_hz::sort_terms(cur);
    if (cur.empty()) {
        bank.levels.assign(k + 1, {});
        return bank;
    }
    std::set<std::string> seen;
    for (auto& t : cur) seen.insert(to_string(t));
    bank.levels.push_back(cur);
    for (unsigned lvl = 1; lvl <= k; lvl++) {
        std::vector<TermRef> next = cur;
        for (auto& f : funcs) {
            // Every argument tuple over the previous level, odometer order.
            std::vector<size_t> idx(f.arity, 0);
            for (;;) {
                std::vector<TermRef> args;
                for (size_t i = 0; i < f.arity; i++) args.push_back(cur[idx[i]]);
                TermRef t = mk_app(f, args);
                if (seen.insert(to_string(t)).second) next.push_back(t);
                size_t pos = f.arity;
                while (pos > 0 && ++idx[pos - 1] == cur.size()) {
                    idx[pos - 1] = 0;
                    pos--;
                }
                if (pos == 0) break;
            }
        }
        detail_hz::sort_terms(next);
        bank.levels.push_back(next);
        cur = bank.levels.back();
    }
    return bank;
}

// ---------------------------------------------------------- instantiation

// Assignment skeleton of a prenex universal formula: which variables need
// terms (free variables first, then the prefix, outside-in), how deeply each
// sits under function symbols, and the depth of the variable-free part.
struct UniversalShape {
    std::vector<std::string> vars;
    std::vector<unsigned> need; // function nesting above some occurrence
    unsigned base = 0;          // depth contributed by ground subterms alone
    FormulaRef matrix;
};

namespace detail_hz {

inline void scan_term(const TermRef& t, unsigned above, std::map<std::string, unsigned>& need,
                      unsigned& base) {
    switch (t->op) {
        case TermOp::Var: {
            auto [it, fresh] = need.emplace(t->var, above);
            if (!fresh) it->second = std::max(it->second, above);
            break;
        }
        case TermOp::Const: base = std::max(base, above); break;
        case TermOp::App:
            for (auto& a : t->args) scan_term(a, above + 1, need, base);
            break;
    }
}

} // namespace detail_hz

inline UniversalShape shape_of(const FormulaRef& universal) {
    UniversalShape sh;
    for (auto& v : free_vars_ordered(universal)) sh.vars.push_back(v);
    FormulaRef cur = universal;
    while (cur->op == FOp::Forall) {
        sh.vars.push_back(cur->var);
        cur = cur->kids[0];
    }
    if (has_quantifiers(cur))
        throw std::invalid_argument("instantiate: formula is not a prenex universal");
    sh.matrix = cur;
    std::map<std::string, unsigned> need;
    unsigned base = 0;
    std::vector<FormulaRef> stack{cur};
    while (!stack.empty()) {
        FormulaRef node = stack.back();
        stack.pop_back();
        for (auto& t : node->args) detail_hz::scan_term(t, 0, need, base);
        for (auto& kid : node->kids) stack.push_back(kid);
    }
    sh.base = base;
    for (auto& v : sh.vars) {
        auto it = need.find(v);
        sh.need.push_back(it == need.end() ? 0 : it->second);
    }
    return sh;
}

// Substitute ground terms for the free variables and universal prefix of a
// prenex universal formula, yielding a ground quantifier-free sentence.
inline FormulaRef instantiate(const FormulaRef& universal, const std::vector<TermRef>& tuple) {
    UniversalShape sh = shape_of(universal);
    if (tuple.size() != sh.vars.size())
        throw std::invalid_argument("instantiate: expected " + std::to_string(sh.vars.size()) +
                                    " terms, got " + std::to_string(tuple.size()));
    std::map<std::string, TermRef> binding;
    for (size_t i = 0; i < tuple.size(); i++) {
        if (!ground(tuple[i]))
            throw std::invalid_argument("instantiate: non-ground term " + to_string(tuple[i]));
        binding[sh.vars[i]] = tuple[i];
    }
    return substitute(sh.matrix, binding);
}

// ---------------------------------------------------- instantiation sets

struct Instance {
    FormulaRef sentence; // ground, quantifier-free
    size_t conjunct;     // index into the source condition's conjunct list
    std::vector<TermRef> tuple;
};

struct InstantiationSet {
    unsigned bound = 0;
    bool approx = false;
    std::vector<Instance> instances;    // deduplicated, deterministic order
    unsigned long long total_count = 0; // full cardinality before deduplication
    bool truncated = false;             // materialization stopped at the limit
};

inline constexpr size_t kDefaultInstanceLimit = 1000000;

// The term-bank level each conjunct's tuples are drawn from at bound k: the
// approximation samples invariant-pre conjuncts one level lower.
inline std::vector<unsigned> conjunct_levels(const VerificationCondition& vc, unsigned k,
                                             bool approx) {
    std::vector<unsigned> out;
    for (auto& c : vc.conjuncts) {
        unsigned lvl = k;
        if (approx && c.tag == SkOrigin::InvariantPre && k > 0) lvl = k - 1;
        out.push_back(lvl);
    }
    return out;
}

// A copy of the vocabulary guaranteed to have at least one constant (the
// Herbrand convention for empty-universe instantiation).
inline Vocabulary ensure_constant(const Vocabulary& vocab) {
    for (auto& s : vocab.symbols())
        if (s.kind == SymKind::Constant) return vocab;
    Vocabulary out = vocab;
    std::set<std::string> names;
    for (auto& s : vocab.symbols()) names.insert(s.name);
    out.add(constant_sym(fresh_name("elem", names)));
    return out;
}

namespace detail_hz {

inline unsigned long long sat_mul(unsigned long long a, unsigned long long b) {
    if (a == 0 || b == 0) return 0;
    if (a > UINT64_MAX / b) return UINT64_MAX;
    return a * b;
}
inline unsigned long long sat_add(unsigned long long a, unsigned long long b) {
    return a > UINT64_MAX - b ? UINT64_MAX : a + b;
}

inline InstantiationSet build_set(const VerificationCondition& vc, unsigned k, bool approx,
                                  size_t limit) {
    InstantiationSet out;
    out.bound = k;
    out.approx = approx;
    TermBank bank = terms_up_to(ensure_constant(vc.vocab), k);
    std::vector<unsigned> levels = conjunct_levels(vc, k, approx);

    // Admissible terms per position: depth ≤ k − need, drawn from the
    // conjunct's level.  T_j holds exactly the terms of depth ≤ j, so each
    // position's choice list is a smaller level of the same bank.
    struct Plan {
        UniversalShape shape;
        std::vector<const std::vector<TermRef>*> choices;
    };
    std::vector<Plan> plans(vc.conjuncts.size());
    std::vector<bool> live(vc.conjuncts.size(), false);
    for (size_t ci = 0; ci < vc.conjuncts.size(); ci++) {
        Plan& plan = plans[ci];
        plan.shape = shape_of(vc.conjuncts[ci].formula);
        if (plan.shape.base > k) continue; // the ground part already exceeds the bound
        bool empty = false;
        unsigned long long count = 1;
        for (size_t i = 0; i < plan.shape.vars.size(); i++) {
            if (plan.shape.need[i] > k) {
                empty = true;
                break;
            }
            unsigned lvl = std::min(levels[ci], k - plan.shape.need[i]);
            plan.choices.push_back(&bank.level(lvl));
            if (plan.choices.back()->empty()) empty = true;
            count = sat_mul(count, plan.choices.back()->size());
        }
        if (empty) continue;
        live[ci] = true;
        out.total_count = sat_add(out.total_count, count);
    }

    // Materialize in odometer order until the limit is reached; the count
    // above always reflects the full set.
    std::set<std::string> seen;
    for (size_t ci = 0; ci < vc.conjuncts.size() && !out.truncated; ci++) {
        if (!live[ci]) continue;
        const Plan& plan = plans[ci];
        std::vector<size_t> idx(plan.shape.vars.size(), 0);
        for (;;) {
            if (out.instances.size() >= limit) {
                out.truncated = true;
                break;
            }
            std::vector<TermRef> tuple;
            std::map<std::string, TermRef> binding;
            for (size_t i = 0; i < plan.shape.vars.size(); i++) {
                tuple.push_back((*plan.choices[i])[idx[i]]);
                binding[plan.shape.vars[i]] = tuple.back();
            }
            FormulaRef sentence = substitute(plan.shape.matrix, binding);
            if (seen.insert(to_string(sentence)).second)
                out.instances.push_back({sentence, ci, std::move(tuple)});
            size_t pos = plan.shape.vars.size();
            while (pos > 0 && ++idx[pos - 1] == plan.choices[pos - 1]->size()) {
                idx[pos - 1] = 0;
                pos--;
            }
            if (pos == 0) break;
        }
    }
    return out;
}

} // namespace detail_hz

// Every instance of every conjunct with tuples from T_k and instance depth
// within k — the exact bound-k set.
inline InstantiationSet bounded_instantiation_set(const VerificationCondition& vc, unsigned k,
                                                  size_t limit = kDefaultInstanceLimit) {
    return detail_hz::build_set(vc, k, false, limit);
}

// The under-approximation: invariant-pre conjuncts range over T_{k−1}.
inline InstantiationSet approx_instantiation_set(const VerificationCondition& vc, unsigned k,
                                                 size_t limit = kDefaultInstanceLimit) {
    return detail_hz::build_set(vc, k, true, limit);
}

// ---------------------------------------------------------- guard encoding

namespace detail_hz {

inline FormulaRef guard_rec(const FormulaRef& f, const std::vector<TermRef>& consts) {
    switch (f->op) {
        case FOp::Forall: {
            FormulaRef body = guard_rec(f->kids[0], consts);
            if (!has_function_apps(f->kids[0])) return mk_forall(f->var, body);
            std::vector<FormulaRef> eqs;
            for (auto& c : consts) eqs.push_back(mk_eq(mk_var(f->var), c));
            return mk_forall(f->var, mk_implies(mk_or(std::move(eqs)), body));
        }
        case FOp::Exists:
            throw std::invalid_argument("guard encoding requires a universal sentence");
        default: {
            if (f->kids.empty()) return f;
            std::vector<FormulaRef> kids;
            for (auto& kid : f->kids) kids.push_back(guard_rec(kid, consts));
            auto n = std::make_shared<FormulaNode>(*f);
            n->kids = std::move(kids);
            return n;
        }
    }
}

} // namespace detail_hz

// Restrict every universal whose body mentions a function application to the
// constants of the condition's vocabulary; function-free universals are left
// alone.  This is the bound-1 alternative to explicit enumeration.
inline FormulaRef guard_encode(const VerificationCondition& vc) {
    Vocabulary voc = ensure_constant(vc.vocab);
    std::vector<TermRef> consts;
    for (auto& s : voc.symbols())
        if (s.kind == SymKind::Constant) consts.push_back(mk_const(s));
    std::vector<FormulaRef> parts;
    for (auto& c : vc.conjuncts) {
        if (!in_universal(c.formula))
            throw std::invalid_argument("guard encoding requires a universal sentence");
        parts.push_back(detail_hz::guard_rec(c.formula, consts));
    }
    return mk_and(std::move(parts));
}

} // namespace bhz
