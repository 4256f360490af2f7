#pragma once

// User-facing partial models.  A SAT verdict on a bounded instantiation set
// is only evidence about the instances that were checked, not about the full
// verification condition, so the structure extracted here is presented as a
// "partial model (bound k)" unless a separate check proves it is a genuine
// counterexample (possible whenever the condition is function-free: the
// structure is finite, so the full quantified condition can be evaluated in
// it directly).
//
// The boundary report refines the picture for invariant conjuncts of the
// shape  forall x. exists y...  with a single universal: each element either
// satisfies the existential part ("inside") or does not ("outside"); the
// outside elements show where the bounded instantiation stopped supplying
// witnesses.  Conjuncts of any other shape are listed as skipped rather than
// classified by guesswork.

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhz/fol.hpp"
#include "bhz/horizon.hpp"
#include "bhz/solver.hpp"
#include "bhz/vcgen.hpp"

namespace bhz {

struct PartialModel {
    unsigned bound = 0;
    bool counterexample = false; // set only by confirm_counterexample
    std::vector<std::string> elements;        // element names, index = element id
    std::vector<std::string> element_terms;   // first-occurring ground term per element
    std::map<std::string, unsigned> term_map; // printed ground term -> element id
    // True tuples per relation; post-state tables are keyed by the unprimed
    // symbol of the primed relation they interpret.
    std::map<Symbol, std::set<std::vector<unsigned>>> pre_state;
    std::map<Symbol, std::set<std::vector<unsigned>>> post_state;
};

struct BoundaryConjunct {
    FormulaRef conjunct;
    std::vector<unsigned> inside;
    std::vector<unsigned> outside;
};

struct BoundaryReport {
    std::vector<BoundaryConjunct> conjuncts;
    std::vector<std::string> skipped; // printed conjuncts without the required shape
};

// ------------------------------------------------------------ extraction

// Quotient structure of a satisfying assignment for the instantiation set.
// The verdict must come from solving exactly these instances; the model is
// replayed against them and a failure is an internal error, never a result.
inline PartialModel quotient_model(const Verdict& v, const InstantiationSet& s) {
    if (!v.sat() || !v.model)
        throw std::invalid_argument("quotient_model: verdict carries no model");
    GroundProblem p;
    for (auto& inst : s.instances) p.sentences.push_back(inst.sentence);
    if (!check_model(p, *v.model))
        throw std::logic_error("quotient_model: model fails replay against its instances");
    const GroundModel& gm = *v.model;

    PartialModel m;
    m.bound = s.bound;
    m.elements.resize(gm.num_classes);
    m.element_terms.resize(gm.num_classes);
    std::vector<bool> named(gm.num_classes, false);
    for (size_t i = 0; i < gm.universe.size(); i++) {
        unsigned cls = gm.class_of[i];
        std::string term = to_string(gm.universe[i]);
        if (!named[cls]) {
            named[cls] = true;
            m.elements[cls] = "e" + std::to_string(cls);
            m.element_terms[cls] = term;
        }
        m.term_map.emplace(std::move(term), cls);
    }
    for (auto& [key, truth] : gm.relations) {
        if (!truth) continue;
        Symbol sym = key.first;
        if (sym.primed) {
            sym.primed = false;
            m.post_state[sym].insert(key.second);
        } else {
            m.pre_state[sym].insert(key.second);
        }
    }
    return m;
}

// ------------------------------------------------------------ evaluation

namespace detail_md {

inline unsigned eval_term(const PartialModel& m, const std::map<std::string, unsigned>& env,
                          const TermRef& t) {
    switch (t->op) {
        case TermOp::Var: return env.at(t->var);
        case TermOp::Const: return m.term_map.at(to_string(t));
        default:
            throw std::invalid_argument("partial-model evaluation: function application " +
                                        to_string(t));
    }
}

// Finite evaluation over the model's elements; primed atoms read the
// post-state, unprimed the pre-state.
inline bool eval(const PartialModel& m, std::map<std::string, unsigned>& env,
                 const FormulaRef& f) {
    switch (f->op) {
        case FOp::True: return true;
        case FOp::False: return false;
        case FOp::Eq: return eval_term(m, env, f->args[0]) == eval_term(m, env, f->args[1]);
        case FOp::Atom: {
            std::vector<unsigned> tuple;
            for (auto& t : f->args) tuple.push_back(eval_term(m, env, t));
            Symbol sym = f->rel;
            sym.primed = false;
            const auto& table = f->rel.primed ? m.post_state : m.pre_state;
            auto it = table.find(sym);
            return it != table.end() && it->second.count(tuple) != 0;
        }
        case FOp::Not: return !eval(m, env, f->kids[0]);
        case FOp::And:
            for (auto& k : f->kids)
                if (!eval(m, env, k)) return false;
            return true;
        case FOp::Or:
            for (auto& k : f->kids)
                if (eval(m, env, k)) return true;
            return false;
        case FOp::Implies: return !eval(m, env, f->kids[0]) || eval(m, env, f->kids[1]);
        case FOp::Iff: return eval(m, env, f->kids[0]) == eval(m, env, f->kids[1]);
        case FOp::Forall: {
            for (unsigned e = 0; e < m.elements.size(); e++) {
                env[f->var] = e;
                bool ok = eval(m, env, f->kids[0]);
                env.erase(f->var);
                if (!ok) return false;
            }
            return true;
        }
        case FOp::Exists: {
            for (unsigned e = 0; e < m.elements.size(); e++) {
                env[f->var] = e;
                bool ok = eval(m, env, f->kids[0]);
                env.erase(f->var);
                if (ok) return true;
            }
            return false;
        }
    }
    throw std::logic_error("partial-model evaluation: unreachable");
}

inline bool has_nested_universal(const FormulaRef& f) {
    if (f->op == FOp::Forall) return true;
    for (auto& k : f->kids)
        if (has_nested_universal(k)) return true;
    return false;
}

inline std::vector<FormulaRef> top_conjuncts(const FormulaRef& f) {
    if (f->op == FOp::And) return f->kids;
    return {f};
}

} // namespace detail_md

// --------------------------------------------------------- classification

// Element-wise classification for every invariant conjunct with exactly one
// leading universal: the element is "inside" when the conjunct's body holds
// for it in the pre-state.  Conjuncts of any other shape, or ones the finite
// evaluation cannot interpret, land in `skipped`.
inline BoundaryReport classify_boundary(const std::vector<FormulaRef>& invariants,
                                        const PartialModel& m) {
    BoundaryReport report;
    for (auto& inv : invariants) {
        for (auto& conjunct : detail_md::top_conjuncts(inv)) {
            bool shaped = conjunct->op == FOp::Forall &&
                          !detail_md::has_nested_universal(conjunct->kids[0]) &&
                          !has_function_apps(conjunct);
            if (!shaped) {
                report.skipped.push_back(to_string(conjunct));
                continue;
            }
            BoundaryConjunct out;
            out.conjunct = conjunct;
            bool interpretable = true;
            for (unsigned e = 0; e < m.elements.size() && interpretable; e++) {
                std::map<std::string, unsigned> env{{conjunct->var, e}};
                try {
                    if (detail_md::eval(m, env, conjunct->kids[0]))
                        out.inside.push_back(e);
                    else
                        out.outside.push_back(e);
                } catch (const std::out_of_range&) {
                    interpretable = false; // a constant the model does not name
                }
            }
            if (interpretable)
                report.conjuncts.push_back(std::move(out));
            else
                report.skipped.push_back(to_string(conjunct));
        }
    }
    return report;
}

// ------------------------------------------------- counterexample check

// A bounded model refutes nothing by itself.  But when the condition has no
// function symbols, the finite structure interprets everything, and the full
// quantified condition can be evaluated in it outright.  Returns true (and
// marks the model) exactly when that evaluation succeeds.
inline bool confirm_counterexample(const VerificationCondition& vc, PartialModel& m) {
    m.counterexample = false;
    for (auto& c : vc.conjuncts)
        if (has_function_apps(c.formula)) return false;
    if (m.elements.empty()) return false;
    try {
        std::map<std::string, unsigned> env;
        for (auto& c : vc.conjuncts)
            if (!detail_md::eval(m, env, c.formula)) return false;
    } catch (const std::out_of_range&) {
        return false; // a constant outside the model's term map
    }
    m.counterexample = true;
    return true;
}

// --------------------------------------------------------------- output

namespace detail_md {

inline std::string atom_line(const std::string& rel, const std::vector<unsigned>& tuple,
                             const PartialModel& m, bool primed) {
    std::string out = rel + (primed ? "'" : "");
    if (tuple.empty()) return out;
    out += "(";
    for (size_t i = 0; i < tuple.size(); i++) {
        if (i) out += ", ";
        out += m.elements[tuple[i]];
    }
    return out + ")";
}

inline std::string element_list(const PartialModel& m, const std::vector<unsigned>& ids) {
    if (ids.empty()) return "(none)";
    std::string out;
    for (size_t i = 0; i < ids.size(); i++) {
        if (i) out += ", ";
        out += m.elements[ids[i]];
    }
    return out;
}

} // namespace detail_md

inline std::string render_text(const PartialModel& m, const BoundaryReport& report) {
    std::ostringstream os;
    os << (m.counterexample ? "counterexample to induction" : "partial model") << " (bound "
       << m.bound << ")\n";
    os << "elements:\n";
    for (size_t e = 0; e < m.elements.size(); e++)
        os << "  " << m.elements[e] << " = " << m.element_terms[e] << "\n";
    os << "term map:\n";
    for (auto& [term, e] : m.term_map) os << "  " << term << " -> " << m.elements[e] << "\n";
    os << "pre-state:\n";
    for (auto& [sym, tuples] : m.pre_state)
        for (auto& t : tuples) os << "  " << detail_md::atom_line(sym.name, t, m, false) << "\n";
    os << "post-state:\n";
    for (auto& [sym, tuples] : m.post_state)
        for (auto& t : tuples) os << "  " << detail_md::atom_line(sym.name, t, m, true) << "\n";
    for (auto& bc : report.conjuncts) {
        os << "boundary for " << to_string(bc.conjunct) << ":\n";
        os << "  inside: " << detail_md::element_list(m, bc.inside) << "\n";
        os << "  outside: " << detail_md::element_list(m, bc.outside) << "\n";
    }
    if (!report.skipped.empty()) {
        os << "conjuncts without a single-universal boundary:\n";
        for (auto& s : report.skipped) os << "  " << s << "\n";
    }
    return os.str();
}

inline nlohmann::json render_json(const PartialModel& m, const BoundaryReport& report) {
    nlohmann::json doc;
    doc["schema"] = "bhz-model/1";
    doc["bound"] = m.bound;
    doc["counterexample"] = m.counterexample;
    doc["elements"] = nlohmann::json::array();
    for (size_t e = 0; e < m.elements.size(); e++)
        doc["elements"].push_back({{"name", m.elements[e]}, {"term", m.element_terms[e]}});
    doc["term_map"] = nlohmann::json::object();
    for (auto& [term, e] : m.term_map) doc["term_map"][term] = m.elements[e];
    auto tables = [&](const std::map<Symbol, std::set<std::vector<unsigned>>>& state) {
        nlohmann::json out = nlohmann::json::object();
        for (auto& [sym, tuples] : state) {
            nlohmann::json rows = nlohmann::json::array();
            for (auto& t : tuples) {
                nlohmann::json row = nlohmann::json::array();
                for (unsigned e : t) row.push_back(m.elements[e]);
                rows.push_back(std::move(row));
            }
            out[sym.name] = std::move(rows);
        }
        return out;
    };
    doc["pre"] = tables(m.pre_state);
    doc["post"] = tables(m.post_state);
    doc["boundary"] = nlohmann::json::array();
    for (auto& bc : report.conjuncts) {
        nlohmann::json entry;
        entry["conjunct"] = to_string(bc.conjunct);
        entry["inside"] = nlohmann::json::array();
        for (unsigned e : bc.inside) entry["inside"].push_back(m.elements[e]);
        entry["outside"] = nlohmann::json::array();
        for (unsigned e : bc.outside) entry["outside"].push_back(m.elements[e]);
        doc["boundary"].push_back(std::move(entry));
    }
    doc["skipped"] = report.skipped;
    return doc;
}

// Inverse of render_json for the model fields (the boundary report is a
// derived view and is not read back).
inline PartialModel parse_model_json(const nlohmann::json& doc) {
    if (doc.at("schema") != "bhz-model/1")
        throw std::invalid_argument("unsupported model schema: " +
                                    doc.at("schema").get<std::string>());
    PartialModel m;
    m.bound = doc.at("bound").get<unsigned>();
    m.counterexample = doc.at("counterexample").get<bool>();
    std::map<std::string, unsigned> by_name;
    for (auto& e : doc.at("elements")) {
        by_name[e.at("name").get<std::string>()] = unsigned(m.elements.size());
        m.elements.push_back(e.at("name").get<std::string>());
        m.element_terms.push_back(e.at("term").get<std::string>());
    }
    for (auto& [term, name] : doc.at("term_map").items())
        m.term_map[term] = by_name.at(name.get<std::string>());
    auto tables = [&](const nlohmann::json& state) {
        std::map<Symbol, std::set<std::vector<unsigned>>> out;
        for (auto& [rel, rows] : state.items()) {
            for (auto& row : rows) {
                std::vector<unsigned> tuple;
                for (auto& name : row) tuple.push_back(by_name.at(name.get<std::string>()));
                out[relation_sym(rel, unsigned(tuple.size()))].insert(std::move(tuple));
            }
        }
        return out;
    };
    m.pre_state = tables(doc.at("pre"));
    m.post_state = tables(doc.at("post"));
    return m;
}

} // namespace bhz
