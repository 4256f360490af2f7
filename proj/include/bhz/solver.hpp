#pragma once

// Satisfiability of finite sets of ground quantifier-free sentences with
// equality over uninterpreted constants, functions, and relations.
//
// The decision procedure is a propositional abstraction: every equality and
// relation atom becomes a boolean variable, the sentences are translated to
// CNF, and a small conflict-driven SAT search enumerates assignments.  Full
// assignments are checked against the equality theory by congruence closure;
// theory conflicts come back as learned clauses built from congruence
// explanations, so the search never revisits the same inconsistency.
//
// Models are quotient structures: a partition of the occurring ground terms
// (never any invented elements), a relation table over class tuples, and a
// partial function table read off the term structure.  check_model
// re-evaluates every sentence against such a structure, and
// brute_force_oracle decides small problems independently by enumerating all
// partitions of the universe and all relation tables — the reference point
// the main procedure is tested against.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bhz/fol.hpp"

namespace bhz {

struct GroundProblem {
    std::vector<FormulaRef> sentences; // each ground and quantifier-free
};

struct GroundModel {
    std::vector<TermRef> universe;   // every occurring ground term, interned order
    std::vector<unsigned> class_of;  // universe index -> class id
    unsigned num_classes = 0;
    std::map<std::string, unsigned> index; // printed term -> universe index
    std::map<std::pair<Symbol, std::vector<unsigned>>, bool> relations;
    std::map<std::pair<Symbol, std::vector<unsigned>>, unsigned> functions; // observed part

    unsigned class_of_term(const TermRef& t) const {
        auto it = index.find(to_string(t));
        if (it == index.end())
            throw std::invalid_argument("term outside the model's universe: " + to_string(t));
        return class_of[it->second];
    }
    bool relation_value(const Symbol& r, const std::vector<unsigned>& cls) const {
        auto it = relations.find({r, cls});
        return it != relations.end() && it->second;
    }
    // Total view of the function table: unconstrained entries map to class 0.
    unsigned function_value(const Symbol& f, const std::vector<unsigned>& cls) const {
        auto it = functions.find({f, cls});
        return it != functions.end() ? it->second : 0;
    }
};

enum class SolveStatus { Sat, Unsat, Resource };

struct Verdict {
    SolveStatus status;
    std::optional<GroundModel> model; // present iff Sat

    bool sat() const { return status == SolveStatus::Sat; }
    bool unsat() const { return status == SolveStatus::Unsat; }
};

struct SolveOptions {
    uint64_t max_conflicts = 2000000; // Resource verdict beyond this
    bool minimize_model = false;      // greedy class-merging post-pass
};

inline bool check_model(const GroundProblem& p, const GroundModel& m);

namespace detail_sv {

inline void require_ground_qf(const FormulaRef& f) {
    if (has_quantifiers(f)) throw std::invalid_argument("ground solver: quantified sentence");
    if (!free_vars(f).empty())
        throw std::invalid_argument("ground solver: sentence with free variables");
}

// ------------------------------------------------------------- CDCL core

// Literal encoding: variable v, literal 2v (positive) or 2v+1 (negated).
struct Sat {
    int nvars = 0;
    std::vector<std::vector<int>> clauses;
    std::vector<std::vector<int>> watches; // literal -> clause indices watching it
    std::vector<int8_t> assign;            // -1 unassigned, 0 false, 1 true
    std::vector<int> level, reason, trail, trail_lim;
    size_t qhead = 0;
    bool unsat_root = false;

    int new_var() {
        assign.push_back(-1);
        level.push_back(0);
        reason.push_back(-1);
        watches.emplace_back();
        watches.emplace_back();
        return nvars++;
    }
    static int var(int lit) { return lit >> 1; }
    static bool neg(int lit) { return lit & 1; }
    // -1 unassigned, 0 false, 1 true
    int value(int lit) const {
        int8_t a = assign[var(lit)];
        if (a < 0) return -1;
        return neg(lit) ? 1 - a : a;
    }
    int decision_level() const { return int(trail_lim.size()); }

    void enqueue(int lit, int why) {
        int v = var(lit);
        assign[v] = neg(lit) ? 0 : 1;
        level[v] = decision_level();
        reason[v] = why;
        trail.push_back(lit);
    }

    // Root-level clause addition; returns false on immediate contradiction.
    bool add_clause(std::vector<int> lits) {
        if (unsat_root) return false;
        std::sort(lits.begin(), lits.end());
        lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
        for (size_t i = 1; i < lits.size(); i++)
            if (lits[i] == (lits[i - 1] ^ 1)) return true; // tautology
        std::vector<int> kept;
        for (int l : lits) {
            int val = value(l);
            if (val == 1) return true; // already satisfied at root
            if (val == 0) continue;    // already false at root
            kept.push_back(l);
        }
        if (kept.empty()) {
            unsat_root = true;
            return false;
        }
        if (kept.size() == 1) {
            enqueue(kept[0], -1);
            return true;
        }
        attach(std::move(kept));
        return true;
    }

    int attach(std::vector<int> lits) {
        int idx = int(clauses.size());
        watches[lits[0]].push_back(idx);
        watches[lits[1]].push_back(idx);
        clauses.push_back(std::move(lits));
        return idx;
    }

    // Unit propagation; returns a conflicting clause index or -1.
    // Invariant kept throughout: while a variable is assigned with a reason
    // clause c, the propagated literal sits at c[0].
    int propagate() {
        while (qhead < trail.size()) {
            int p = trail[qhead++];
            int fl = p ^ 1; // literal that just became false
            std::vector<int>& wl = watches[fl];
            size_t keep = 0;
            for (size_t i = 0; i < wl.size(); i++) {
                int ci = wl[i];
                std::vector<int>& c = clauses[ci];
                if (c[0] == fl) std::swap(c[0], c[1]);
                if (value(c[0]) == 1) {
                    wl[keep++] = ci;
                    continue;
                }
                bool moved = false;
                for (size_t j = 2; j < c.size(); j++) {
                    if (value(c[j]) != 0) {
                        std::swap(c[1], c[j]);
                        watches[c[1]].push_back(ci);
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                wl[keep++] = ci;
                if (value(c[0]) == 0) {
                    for (size_t j = i + 1; j < wl.size(); j++) wl[keep++] = wl[j];
                    wl.resize(keep);
                    return ci;
                }
                enqueue(c[0], ci);
            }
            wl.resize(keep);
        }
        return -1;
    }

    void cancel_until(int lvl) {
        if (decision_level() <= lvl) return;
        int bound = trail_lim[lvl];
        for (int i = int(trail.size()) - 1; i >= bound; i--) assign[var(trail[i])] = -1;
        trail.resize(bound);
        trail_lim.resize(lvl);
        qhead = trail.size();
    }

    // First-UIP conflict analysis.  Returns the learned clause with the
    // asserting literal first and a backjump-level literal second.
    std::vector<int> analyze(int confl, int& out_level) {
        std::vector<int> learnt{0}; // slot for the asserting literal
        std::vector<uint8_t> seen(nvars, 0);
        int counter = 0, p = -1;
        int idx = int(trail.size()) - 1;
        int cur = decision_level();
        int ci = confl;
        for (;;) {
            const std::vector<int>& c = clauses[ci];
            // On later rounds c[0] is the literal being resolved on; skip it.
            for (size_t j = (p == -1 ? 0 : 1); j < c.size(); j++) {
                int v = var(c[j]);
                if (!seen[v] && level[v] > 0) {
                    seen[v] = 1;
                    if (level[v] >= cur)
                        counter++;
                    else
                        learnt.push_back(c[j]);
                }
            }
            while (!seen[var(trail[idx])]) idx--;
            p = trail[idx] ^ 1;
            seen[var(p)] = 0;
            counter--;
            if (counter == 0) break;
            ci = reason[var(p)];
            idx--;
        }
        learnt[0] = p;
        out_level = 0;
        for (size_t i = 1; i < learnt.size(); i++)
            out_level = std::max(out_level, level[var(learnt[i])]);
        for (size_t i = 1; i < learnt.size(); i++)
            if (level[var(learnt[i])] == out_level) {
                std::swap(learnt[1], learnt[i]);
                break;
            }
        return learnt;
    }
};

// --------------------------------------------------- terms, atoms, CNF

struct TheoryCtx {
    struct TermInfo {
        TermOp op;
        Symbol sym;
        std::vector<unsigned> args;
        TermRef ref;
    };
    struct AtomInfo {
        bool is_eq;
        Symbol rel;                 // relation atoms only
        std::vector<unsigned> args; // term ids (argument pair for equalities)
    };
    std::vector<TermInfo> terms;
    std::map<std::string, unsigned> term_ids;
    std::vector<AtomInfo> atoms;
    std::map<std::string, unsigned> atom_ids;
    std::vector<int> atom_sat_var; // atom id -> SAT variable (-1 without CNF)
    Sat sat;
    int true_var = -1; // fixed true variable for constant subformulas

    unsigned intern(const TermRef& t) {
        std::string key = to_string(t);
        auto it = term_ids.find(key);
        if (it != term_ids.end()) return it->second;
        if (t->op == TermOp::Var)
            throw std::invalid_argument("ground solver: variable " + t->var);
        TermInfo info;
        info.op = t->op;
        info.sym = t->sym;
        info.ref = t;
        for (auto& a : t->args) info.args.push_back(intern(a));
        unsigned id = unsigned(terms.size());
        terms.push_back(std::move(info));
        term_ids.emplace(std::move(key), id);
        return id;
    }

    unsigned atom_id(AtomInfo info, bool with_sat_var) {
        std::string key;
        if (info.is_eq) {
            unsigned a = info.args[0], b = info.args[1];
            if (a > b) std::swap(a, b);
            info.args = {a, b};
            key = "=" + std::to_string(a) + "," + std::to_string(b);
        } else {
            key = info.rel.display();
            for (auto id : info.args) key += "," + std::to_string(id);
        }
        auto it = atom_ids.find(key);
        if (it != atom_ids.end()) return it->second;
        unsigned id = unsigned(atoms.size());
        atoms.push_back(std::move(info));
        atom_sat_var.push_back(with_sat_var ? sat.new_var() : -1);
        atom_ids.emplace(std::move(key), id);
        return id;
    }

    int atom_lit(unsigned atom, bool positive) const {
        return 2 * atom_sat_var[atom] + (positive ? 0 : 1);
    }
    int8_t atom_val(unsigned atom) const { return sat.assign[atom_sat_var[atom]]; }

    int lit_true() {
        if (true_var < 0) {
            true_var = sat.new_var();
            sat.add_clause({2 * true_var});
        }
        return 2 * true_var;
    }

    // Tseitin translation; returns a literal equivalent to f.
    int encode(const FormulaRef& f) {
        switch (f->op) {
            case FOp::True: return lit_true();
            case FOp::False: return lit_true() ^ 1;
            case FOp::Atom: {
                AtomInfo info;
                info.is_eq = false;
                info.rel = f->rel;
                for (auto& t : f->args) info.args.push_back(intern(t));
                return atom_lit(atom_id(std::move(info), true), true);
            }
            case FOp::Eq: {
                AtomInfo info;
                info.is_eq = true;
                info.args = {intern(f->args[0]), intern(f->args[1])};
                return atom_lit(atom_id(std::move(info), true), true);
            }
            case FOp::Not: return encode(f->kids[0]) ^ 1;
            case FOp::And:
            case FOp::Or: {
                bool conj = f->op == FOp::And;
                std::vector<int> kids;
                for (auto& k : f->kids) kids.push_back(encode(k));
                int v = 2 * sat.new_var();
                std::vector<int> big{conj ? v : (v ^ 1)};
                for (int k : kids) {
                    big.push_back(conj ? (k ^ 1) : k);
                    sat.add_clause({conj ? (v ^ 1) : v, conj ? k : (k ^ 1)});
                }
                sat.add_clause(big);
                return v;
            }
            case FOp::Implies: {
                int a = encode(f->kids[0]);
                int b = encode(f->kids[1]);
                int v = 2 * sat.new_var();
                sat.add_clause({v ^ 1, a ^ 1, b});
                sat.add_clause({v, a});
                sat.add_clause({v, b ^ 1});
                return v;
            }
            case FOp::Iff: {
                int a = encode(f->kids[0]);
                int b = encode(f->kids[1]);
                int v = 2 * sat.new_var();
                sat.add_clause({v ^ 1, a ^ 1, b});
                sat.add_clause({v ^ 1, a, b ^ 1});
                sat.add_clause({v, a, b});
                sat.add_clause({v, a ^ 1, b ^ 1});
                return v;
            }
            default: throw std::invalid_argument("ground solver: quantified sentence");
        }
    }

    // Intern terms and atoms only, without building CNF (oracle path).
    void collect(const FormulaRef& f) {
        switch (f->op) {
            case FOp::True:
            case FOp::False: return;
            case FOp::Atom: {
                AtomInfo info;
                info.is_eq = false;
                info.rel = f->rel;
                for (auto& t : f->args) info.args.push_back(intern(t));
                atom_id(std::move(info), false);
                return;
            }
            case FOp::Eq: {
                AtomInfo info;
                info.is_eq = true;
                info.args = {intern(f->args[0]), intern(f->args[1])};
                atom_id(std::move(info), false);
                return;
            }
            case FOp::Not:
            case FOp::And:
            case FOp::Or:
            case FOp::Implies:
            case FOp::Iff:
                for (auto& k : f->kids) collect(k);
                return;
            default: throw std::invalid_argument("ground solver: quantified sentence");
        }
    }
};

// -------------------------------------------------- congruence closure

struct Congruence {
    const TheoryCtx& ctx;
    std::vector<unsigned> parent, rnk;
    struct Edge {
        unsigned a, b; // term ids
        int eq_atom;   // >= 0: merged by this equality atom; -1: by congruence
    };
    std::vector<Edge> edges;                // spanning forest of performed merges
    std::vector<std::vector<unsigned>> adj; // term -> incident edge indices

    explicit Congruence(const TheoryCtx& c) : ctx(c) {
        parent.resize(ctx.terms.size());
        rnk.assign(ctx.terms.size(), 0);
        adj.resize(ctx.terms.size());
        for (unsigned i = 0; i < parent.size(); i++) parent[i] = i;
    }
    unsigned find(unsigned x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }

    // Close under the given true equality atoms and functional congruence.
    void close(const std::vector<unsigned>& true_eq_atoms) {
        std::map<std::pair<std::string, std::vector<unsigned>>, unsigned> sigs;
        std::vector<std::vector<unsigned>> use(ctx.terms.size());
        auto sig_of = [&](unsigned t) {
            std::vector<unsigned> cls;
            for (auto a : ctx.terms[t].args) cls.push_back(find(a));
            return std::make_pair(ctx.terms[t].sym.display(), std::move(cls));
        };
        std::vector<Edge> pending;
        for (unsigned t = 0; t < ctx.terms.size(); t++) {
            if (ctx.terms[t].op != TermOp::App) continue;
            auto key = sig_of(t);
            auto it = sigs.find(key);
            if (it != sigs.end())
                pending.push_back({t, it->second, -1});
            else
                sigs.emplace(std::move(key), t);
            for (auto a : ctx.terms[t].args) use[find(a)].push_back(t);
        }
        for (unsigned atom : true_eq_atoms)
            pending.push_back({ctx.atoms[atom].args[0], ctx.atoms[atom].args[1], int(atom)});
        while (!pending.empty()) {
            Edge e = pending.back();
            pending.pop_back();
            unsigned ra = find(e.a), rb = find(e.b);
            if (ra == rb) continue;
            if (rnk[ra] < rnk[rb]) std::swap(ra, rb);
            if (rnk[ra] == rnk[rb]) rnk[ra]++;
            parent[rb] = ra;
            unsigned ei = unsigned(edges.size());
            edges.push_back(e);
            adj[e.a].push_back(ei);
            adj[e.b].push_back(ei);
            // Re-signature every application that used the absorbed class.
            for (unsigned t : use[rb]) {
                auto key = sig_of(t);
                auto it = sigs.find(key);
                if (it != sigs.end()) {
                    if (find(it->second) != find(t)) pending.push_back({t, it->second, -1});
                } else {
                    sigs.emplace(std::move(key), t);
                }
            }
            auto& ua = use[ra];
            ua.insert(ua.end(), use[rb].begin(), use[rb].end());
            use[rb].clear();
        }
    }

    // Equality atoms whose truth explains a ~ b.  Congruence edges recurse
    // into strictly earlier edges, so the walk terminates.
    void explain(unsigned a, unsigned b, unsigned limit, std::set<unsigned>& out) const {
        if (a == b) return;
        std::vector<int> via(ctx.terms.size(), -1);
        std::vector<unsigned> queue{a};
        via[a] = -2;
        for (size_t qi = 0; qi < queue.size() && via[b] == -1; qi++) {
            unsigned u = queue[qi];
            for (unsigned ei : adj[u]) {
                if (ei >= limit) continue;
                const Edge& e = edges[ei];
                unsigned v = e.a == u ? e.b : e.a;
                if (via[v] != -1) continue;
                via[v] = int(ei);
                queue.push_back(v);
            }
        }
        if (via[b] == -1) throw std::logic_error("congruence explanation: no path");
        unsigned cur = b;
        while (cur != a) {
            const Edge& e = edges[via[cur]];
            if (e.eq_atom >= 0) {
                out.insert(unsigned(e.eq_atom));
            } else {
                for (size_t i = 0; i < ctx.terms[e.a].args.size(); i++)
                    explain(ctx.terms[e.a].args[i], ctx.terms[e.b].args[i],
                            unsigned(via[cur]), out);
            }
            cur = e.a == cur ? e.b : e.a;
        }
    }
};

// Quotient model from a partition plus an atom valuation.
template <class ClassOf, class AtomValue>
GroundModel build_model(const TheoryCtx& ctx, ClassOf class_of_term, AtomValue atom_value) {
    GroundModel m;
    m.universe.reserve(ctx.terms.size());
    std::map<unsigned, unsigned> renumber;
    for (unsigned t = 0; t < ctx.terms.size(); t++) {
        m.universe.push_back(ctx.terms[t].ref);
        unsigned root = class_of_term(t);
        auto [it, fresh] = renumber.emplace(root, unsigned(renumber.size()));
        m.class_of.push_back(it->second);
        m.index.emplace(to_string(ctx.terms[t].ref), t);
    }
    m.num_classes = unsigned(renumber.size());
    for (unsigned a = 0; a < ctx.atoms.size(); a++) {
        if (ctx.atoms[a].is_eq) continue;
        std::vector<unsigned> cls;
        for (auto t : ctx.atoms[a].args) cls.push_back(m.class_of[t]);
        m.relations[{ctx.atoms[a].rel, cls}] = atom_value(a);
    }
    for (unsigned t = 0; t < ctx.terms.size(); t++) {
        if (ctx.terms[t].op != TermOp::App) continue;
        std::vector<unsigned> cls;
        for (auto a : ctx.terms[t].args) cls.push_back(m.class_of[a]);
        m.functions[{ctx.terms[t].sym, cls}] = m.class_of[t];
    }
    return m;
}

// Greedy post-pass: repeatedly merge a class pair if the merged structure is
// still congruence-consistent and satisfies the problem.
inline void minimize_classes(const GroundProblem& p, GroundModel& m) {
    bool changed = true;
    while (changed && m.num_classes > 1) {
        changed = false;
        for (unsigned c2 = 1; c2 < m.num_classes && !changed; c2++) {
            for (unsigned c1 = 0; c1 < c2 && !changed; c1++) {
                auto remap = [&](unsigned c) {
                    if (c == c2) return c1;
                    return c > c2 ? c - 1 : c;
                };
                GroundModel cand;
                cand.universe = m.universe;
                cand.index = m.index;
                cand.num_classes = m.num_classes - 1;
                for (unsigned c : m.class_of) cand.class_of.push_back(remap(c));
                bool consistent = true;
                for (auto& [key, val] : m.relations) {
                    auto k2 = key;
                    for (auto& c : k2.second) c = remap(c);
                    auto [it, fresh] = cand.relations.emplace(std::move(k2), val);
                    if (!fresh && it->second != val) consistent = false;
                }
                for (auto& [key, val] : m.functions) {
                    auto k2 = key;
                    for (auto& c : k2.second) c = remap(c);
                    auto [it, fresh] = cand.functions.emplace(std::move(k2), remap(val));
                    if (!fresh && it->second != remap(val)) consistent = false;
                }
                if (consistent && check_model(p, cand)) {
                    m = std::move(cand);
                    changed = true;
                }
            }
        }
    }
}

} // namespace detail_sv

// ---------------------------------------------------------------- solve

inline Verdict solve(const GroundProblem& p, const SolveOptions& opts = {}) {
    using namespace detail_sv;
    for (auto& s : p.sentences) require_ground_qf(s);

    TheoryCtx ctx;
    for (auto& s : p.sentences) {
        if (ctx.sat.unsat_root) break;
        int lit = ctx.encode(s);
        ctx.sat.add_clause({lit});
    }
    Sat& sat = ctx.sat;
    uint64_t conflicts = 0;

    // Standard conflict handling; returns false when the root level is hit.
    auto handle_conflict = [&](int confl) -> bool {
        conflicts++;
        if (sat.decision_level() == 0) return false;
        int back = 0;
        std::vector<int> learnt = sat.analyze(confl, back);
        sat.cancel_until(back);
        if (learnt.size() == 1) {
            sat.enqueue(learnt[0], -1);
        } else {
            int ci = sat.attach(std::move(learnt));
            sat.enqueue(sat.clauses[ci][0], ci);
        }
        return true;
    };

    while (!sat.unsat_root) {
        if (conflicts > opts.max_conflicts) return {SolveStatus::Resource, std::nullopt};
        int confl = sat.propagate();
        if (confl >= 0) {
            if (!handle_conflict(confl)) break;
            continue;
        }
        if (int(sat.trail.size()) < sat.nvars) {
            // Decide: lowest-numbered unassigned variable, false first.
            int next = -1;
            for (int v = 0; v < sat.nvars; v++)
                if (sat.assign[v] < 0) {
                    next = v;
                    break;
                }
            sat.trail_lim.push_back(int(sat.trail.size()));
            sat.enqueue(2 * next + 1, -1);
            continue;
        }

        // Full assignment: check it against the equality theory.
        Congruence cc(ctx);
        std::vector<unsigned> true_eqs;
        for (unsigned a = 0; a < ctx.atoms.size(); a++)
            if (ctx.atoms[a].is_eq && ctx.atom_val(a) == 1) true_eqs.push_back(a);
        cc.close(true_eqs);

        std::set<int> conflict; // literals true in the assignment, jointly inconsistent
        // A refuted disequality: both sides merged by the closure.
        for (unsigned a = 0; a < ctx.atoms.size() && conflict.empty(); a++) {
            if (!ctx.atoms[a].is_eq || ctx.atom_val(a) != 0) continue;
            unsigned x = ctx.atoms[a].args[0], y = ctx.atoms[a].args[1];
            if (cc.find(x) != cc.find(y)) continue;
            std::set<unsigned> used;
            cc.explain(x, y, unsigned(cc.edges.size()), used);
            conflict.insert(ctx.atom_lit(a, false));
            for (unsigned e : used) conflict.insert(ctx.atom_lit(e, true));
        }
        // Relation congruence: equal argument classes, opposite truth value.
        if (conflict.empty()) {
            std::map<std::pair<std::string, std::vector<unsigned>>, unsigned> seen;
            for (unsigned a = 0; a < ctx.atoms.size() && conflict.empty(); a++) {
                if (ctx.atoms[a].is_eq) continue;
                std::vector<unsigned> cls;
                for (auto t : ctx.atoms[a].args) cls.push_back(cc.find(t));
                auto key = std::make_pair(ctx.atoms[a].rel.display(), std::move(cls));
                auto it = seen.find(key);
                if (it == seen.end()) {
                    seen.emplace(std::move(key), a);
                    continue;
                }
                unsigned b = it->second;
                if (ctx.atom_val(a) == ctx.atom_val(b)) continue;
                std::set<unsigned> used;
                for (size_t i = 0; i < ctx.atoms[a].args.size(); i++)
                    cc.explain(ctx.atoms[a].args[i], ctx.atoms[b].args[i],
                               unsigned(cc.edges.size()), used);
                conflict.insert(ctx.atom_lit(a, ctx.atom_val(a) == 1));
                conflict.insert(ctx.atom_lit(b, ctx.atom_val(b) == 1));
                for (unsigned e : used) conflict.insert(ctx.atom_lit(e, true));
            }
        }

        if (conflict.empty()) {
            GroundModel m = build_model(
                ctx, [&](unsigned t) { return cc.find(t); },
                [&](unsigned a) { return ctx.atom_val(a) == 1; });
            if (opts.minimize_model) minimize_classes(p, m);
            return {SolveStatus::Sat, std::move(m)};
        }

        // Learn the negation of the clashing literals.
        std::vector<int> clause;
        for (int l : conflict) clause.push_back(l ^ 1);
        int max_lvl = 0;
        for (int l : clause) max_lvl = std::max(max_lvl, sat.level[Sat::var(l)]);
        if (max_lvl == 0) break; // contradiction forced at the root
        sat.cancel_until(max_lvl);
        if (clause.size() == 1) {
            conflicts++;
            sat.cancel_until(0);
            sat.enqueue(clause[0], -1);
            continue;
        }
        std::sort(clause.begin(), clause.end(), [&](int x, int y) {
            return sat.level[Sat::var(x)] > sat.level[Sat::var(y)];
        });
        int ci = sat.attach(std::move(clause));
        if (!handle_conflict(ci)) break;
    }
    return {SolveStatus::Unsat, std::nullopt};
}

// ---------------------------------------------------------- check_model

namespace detail_sv {

inline bool model_eval(const GroundModel& m, const FormulaRef& f) {
    switch (f->op) {
        case FOp::True: return true;
        case FOp::False: return false;
        case FOp::Eq: return m.class_of_term(f->args[0]) == m.class_of_term(f->args[1]);
        case FOp::Atom: {
            std::vector<unsigned> cls;
            for (auto& t : f->args) cls.push_back(m.class_of_term(t));
            return m.relation_value(f->rel, cls);
        }
        case FOp::Not: return !model_eval(m, f->kids[0]);
        case FOp::And:
            for (auto& k : f->kids)
                if (!model_eval(m, k)) return false;
            return true;
        case FOp::Or:
            for (auto& k : f->kids)
                if (model_eval(m, k)) return true;
            return false;
        case FOp::Implies: return !model_eval(m, f->kids[0]) || model_eval(m, f->kids[1]);
        case FOp::Iff: return model_eval(m, f->kids[0]) == model_eval(m, f->kids[1]);
        default: throw std::invalid_argument("check_model: quantified sentence");
    }
}

} // namespace detail_sv

// True iff every sentence evaluates true in the quotient structure.
inline bool check_model(const GroundProblem& p, const GroundModel& m) {
    for (auto& s : p.sentences)
        if (!detail_sv::model_eval(m, s)) return false;
    return true;
}

// ------------------------------------------------------------- oracle

// Exhaustive reference decision for small universes: every partition of the
// occurring terms that respects functional congruence, crossed with every
// truth assignment to the occurring relation signatures.
inline Verdict brute_force_oracle(const GroundProblem& p, size_t max_universe = 8) {
    using namespace detail_sv;
    for (auto& s : p.sentences) require_ground_qf(s);
    TheoryCtx ctx;
    for (auto& s : p.sentences) ctx.collect(s);
    size_t n = ctx.terms.size();
    if (n > max_universe)
        throw std::invalid_argument("brute-force oracle: universe has " + std::to_string(n) +
                                    " terms, limit is " + std::to_string(max_universe));

    std::vector<unsigned> part(n, 0);
    auto congruent = [&]() {
        for (unsigned s = 0; s < n; s++) {
            if (ctx.terms[s].op != TermOp::App) continue;
            for (unsigned t = s + 1; t < n; t++) {
                if (ctx.terms[t].op != TermOp::App) continue;
                if (!(ctx.terms[s].sym == ctx.terms[t].sym)) continue;
                bool same_args = ctx.terms[s].args.size() == ctx.terms[t].args.size();
                for (size_t i = 0; same_args && i < ctx.terms[s].args.size(); i++)
                    same_args = part[ctx.terms[s].args[i]] == part[ctx.terms[t].args[i]];
                if (same_args && part[s] != part[t]) return false;
            }
        }
        return true;
    };

    std::optional<GroundModel> found;
    auto eval_in = [&](const FormulaRef& f, auto&& sig_value) -> bool {
        auto rec = [&](auto&& self, const FormulaRef& g) -> bool {
            switch (g->op) {
                case FOp::True: return true;
                case FOp::False: return false;
                case FOp::Eq:
                    return part[ctx.term_ids.at(to_string(g->args[0]))] ==
                           part[ctx.term_ids.at(to_string(g->args[1]))];
                case FOp::Atom: {
                    std::vector<unsigned> cls;
                    for (auto& t : g->args) cls.push_back(part[ctx.term_ids.at(to_string(t))]);
                    return sig_value(g->rel, cls);
                }
                case FOp::Not: return !self(self, g->kids[0]);
                case FOp::And:
                    for (auto& k : g->kids)
                        if (!self(self, k)) return false;
                    return true;
                case FOp::Or:
                    for (auto& k : g->kids)
                        if (self(self, k)) return true;
                    return false;
                case FOp::Implies: return !self(self, g->kids[0]) || self(self, g->kids[1]);
                case FOp::Iff: return self(self, g->kids[0]) == self(self, g->kids[1]);
                default: throw std::invalid_argument("ground solver: quantified sentence");
            }
        };
        return rec(rec, f);
    };

    auto try_partition = [&]() {
        if (!congruent()) return false;
        // Distinct relation signatures under this partition.
        std::map<std::pair<std::string, std::vector<unsigned>>, size_t> sig_bit;
        std::vector<size_t> atom_bit(ctx.atoms.size(), SIZE_MAX);
        for (unsigned a = 0; a < ctx.atoms.size(); a++) {
            if (ctx.atoms[a].is_eq) continue;
            std::vector<unsigned> cls;
            for (auto t : ctx.atoms[a].args) cls.push_back(part[t]);
            auto key = std::make_pair(ctx.atoms[a].rel.display(), std::move(cls));
            auto [it, fresh] = sig_bit.emplace(std::move(key), sig_bit.size());
            atom_bit[a] = it->second;
        }
        if (sig_bit.size() > 24)
            throw std::invalid_argument("brute-force oracle: too many relation signatures");
        uint64_t masks = uint64_t(1) << sig_bit.size();
        for (uint64_t mask = 0; mask < masks; mask++) {
            auto sig_value = [&](const Symbol& rel, const std::vector<unsigned>& cls) {
                return ((mask >> sig_bit.at({rel.display(), cls})) & 1) != 0;
            };
            bool all = true;
            for (auto& s : p.sentences)
                if (!eval_in(s, sig_value)) {
                    all = false;
                    break;
                }
            if (all) {
                found = build_model(
                    ctx, [&](unsigned t) { return part[t]; },
                    [&](unsigned a) {
                        return atom_bit[a] != SIZE_MAX && ((mask >> atom_bit[a]) & 1) != 0;
                    });
                return true;
            }
        }
        return false;
    };

    // Depth-first over restricted growth strings: part[0] = 0 and each later
    // position uses an existing class or opens the next one.
    auto rec = [&](auto&& self, size_t i, unsigned next_free) -> bool {
        if (i == n) return try_partition();
        for (unsigned c = 0; c <= next_free && c < n; c++) {
            part[i] = c;
            if (self(self, i + 1, std::max(next_free, c + 1))) return true;
        }
        return false;
    };
    bool sat = n == 0 ? try_partition() : rec(rec, 1, 1);
    if (sat) return {SolveStatus::Sat, std::move(found)};
    return {SolveStatus::Unsat, std::nullopt};
}

} // namespace bhz
