#pragma once

// Proof-obligation orchestration.  A model owes one initiation obligation,
// one consecution obligation per action (or a single one for the whole
// transition relation), and one safety obligation when safety formulas are
// declared.  Each obligation is Skolemized by vcgen, decided at a given
// instantiation depth by one of four encodings, and summarized in a
// deterministic report; obligations that stay open carry the extracted
// partial model and its boundary classification.
//
// The default encoding is lazy.  It seeds every universal conjunct with a
// handful of ground instances and then alternates solving with model-guided
// refinement: a satisfying assignment of the current instances is swept for
// depth-respecting instances it violates, and those are added.  The loop
// ends in one of two ways.  Either the ground problem becomes unsatisfiable
// — conclusive, because the instances are a subset of the bound-k
// instantiation set, so the full set (and the condition itself) is
// unsatisfiable too — or the sweep finds nothing, in which case the
// assignment extends to a structure satisfying every instance within the
// bound and is reported as a partial model of that bound.  The sweep walks
// assignments over the model's congruence classes, pruning a branch as soon
// as the partially evaluated matrix folds to a truth value, and only offers
// an element for a variable when some term in its class is shallow enough
// for the instance to stay within the depth bound.
//
// The eager and approximate encodings materialize the corresponding
// instantiation sets from horizon outright.  The guard encoding decides the
// bound-1 guarded form: conjuncts whose matrix touches a function symbol are
// expanded over all constant tuples up front (the guard made concrete), and
// the function-free conjuncts are refined lazily with no depth cap.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhz/fol.hpp"
#include "bhz/frontend.hpp"
#include "bhz/horizon.hpp"
#include "bhz/models.hpp"
#include "bhz/solver.hpp"
#include "bhz/vcgen.hpp"

namespace bhz {

// ------------------------------------------------------------------ types

enum class CheckVerdict { Proved, Unknown, Resource, IllFormed };

inline const char* to_cstring(CheckVerdict v) {
    switch (v) {
        case CheckVerdict::Proved: return "PROVED";
        case CheckVerdict::Unknown: return "UNKNOWN";
        case CheckVerdict::Resource: return "RESOURCE";
        case CheckVerdict::IllFormed: return "ILL-FORMED";
    }
    return "?";
}

enum class Encoding { Lazy, Eager, Approx, Guard };

inline const char* to_cstring(Encoding e) {
    switch (e) {
        case Encoding::Lazy: return "lazy";
        case Encoding::Eager: return "eager";
        case Encoding::Approx: return "approx";
        case Encoding::Guard: return "guard";
    }
    return "?";
}

struct CheckOptions {
    Encoding encoding = Encoding::Lazy;
    std::string action;            // non-empty: check only this action's consecution
    bool per_action = true;        // false: one obligation for the whole transition
    bool with_boundary = true;     // classify open obligations' models
    bool find_minimal_bound = false; // on Proved, re-check smaller bounds
    double timeout_seconds = 60.0; // wall-clock budget per obligation
    size_t instance_limit = kDefaultInstanceLimit;
    uint64_t max_conflicts = 2000000; // per ground-solver call
    unsigned max_rounds = 4000;    // lazy refinement rounds per obligation
    unsigned batch = 8;            // violations added per conjunct per round
};

struct ObligationReport {
    VcKind kind = VcKind::Initiation;
    std::string action;            // empty for initiation, safety, whole-transition
    unsigned bound = 0;
    Encoding encoding = Encoding::Lazy;
    CheckVerdict verdict = CheckVerdict::Resource;
    bool complete = false;         // the bounded answer decides the unbounded question
    std::optional<unsigned> minimal_proved_bound;
    std::optional<PartialModel> partial;    // present on Unknown
    std::optional<BoundaryReport> boundary; // present on Unknown when requested
    std::string note;
    double seconds = 0.0;
    uint64_t instances = 0;        // ground instances in the final solver call
    unsigned rounds = 0;           // refinement rounds (lazy and guard)
};

struct CheckReport {
    unsigned bound = 0;
    Encoding encoding = Encoding::Lazy;
    CheckVerdict verdict = CheckVerdict::Proved;
    std::vector<std::string> diagnostics;   // validation output when ill-formed
    std::vector<ObligationReport> obligations; // ordered by (action, kind)
};

// ----------------------------------------------------------- lazy engine

namespace detail_ck {

// Per-class view of a ground model: the cheapest representative term of each
// congruence class, by (depth, printed form), and that representative's
// depth.  A class may be offered for a variable sitting at function nesting
// n only when depth + n stays within the bound.
struct ClassView {
    const GroundModel* gm = nullptr;
    std::vector<TermRef> rep;
    std::vector<unsigned> depth;
};

inline ClassView class_view(const GroundModel& gm) {
    ClassView v;
    v.gm = &gm;
    v.rep.resize(gm.num_classes);
    v.depth.assign(gm.num_classes, 0);
    std::vector<std::string> best(gm.num_classes);
    std::vector<bool> seen(gm.num_classes, false);
    for (size_t i = 0; i < gm.universe.size(); i++) {
        unsigned cls = gm.class_of[i];
        unsigned d = term_depth(gm.universe[i]);
        std::string printed = to_string(gm.universe[i]);
        if (!seen[cls] || d < v.depth[cls] || (d == v.depth[cls] && printed < best[cls])) {
            seen[cls] = true;
            v.rep[cls] = gm.universe[i];
            v.depth[cls] = d;
            best[cls] = std::move(printed);
        }
    }
    return v;
}

// Term evaluation under a partial variable assignment; absent when some
// variable is unassigned.  Function applications read the model's totalized
// table, so every fully assigned term has a value.
inline std::optional<unsigned> eval_term(const GroundModel& gm,
                                         const std::map<std::string, unsigned>& env,
                                         const TermRef& t) {
    switch (t->op) {
        case TermOp::Var: {
            auto it = env.find(t->var);
            if (it == env.end()) return std::nullopt;
            return it->second;
        }
        case TermOp::Const: return gm.class_of_term(t);
        case TermOp::App: {
            std::vector<unsigned> args;
            for (auto& a : t->args) {
                auto v = eval_term(gm, env, a);
                if (!v) return std::nullopt;
                args.push_back(*v);
            }
            return gm.function_value(t->sym, args);
        }
    }
    return std::nullopt;
}

// Partial evaluation of a quantifier-free matrix: a truth value as soon as
// the assigned variables force one, absent otherwise.  This is what lets
// the assignment sweep prune whole subtrees after a prefix of variables.
inline std::optional<bool> fold(const GroundModel& gm,
                                const std::map<std::string, unsigned>& env,
                                const FormulaRef& f) {
    switch (f->op) {
        case FOp::True: return true;
        case FOp::False: return false;
        case FOp::Eq: {
            auto a = eval_term(gm, env, f->args[0]);
            auto b = eval_term(gm, env, f->args[1]);
            if (!a || !b) return std::nullopt;
            return *a == *b;
        }
        case FOp::Atom: {
            std::vector<unsigned> tuple;
            for (auto& t : f->args) {
                auto v = eval_term(gm, env, t);
                if (!v) return std::nullopt;
                tuple.push_back(*v);
            }
            return gm.relation_value(f->rel, tuple);
        }
        case FOp::Not: {
            auto v = fold(gm, env, f->kids[0]);
            if (!v) return std::nullopt;
            return !*v;
        }
        case FOp::And: {
            bool all = true;
            for (auto& k : f->kids) {
                auto v = fold(gm, env, k);
                if (v && !*v) return false;
                if (!v) all = false;
            }
            if (all) return true;
            return std::nullopt;
        }
        case FOp::Or: {
            bool none = true;
            for (auto& k : f->kids) {
                auto v = fold(gm, env, k);
                if (v && *v) return true;
                if (!v) none = false;
            }
            if (none) return false;
            return std::nullopt;
        }
        case FOp::Implies: {
            auto a = fold(gm, env, f->kids[0]);
            if (a && !*a) return true;
            auto b = fold(gm, env, f->kids[1]);
            if (b && *b) return true;
            if (a && b) return *b || !*a;
            return std::nullopt;
        }
        case FOp::Iff: {
            auto a = fold(gm, env, f->kids[0]);
            auto b = fold(gm, env, f->kids[1]);
            if (!a || !b) return std::nullopt;
            return *a == *b;
        }
        default:
            throw std::logic_error("checker: quantifier inside a conjunct matrix");
    }
}

// One conjunct of the condition, prepared for seeding and sweeping.
struct PreparedConjunct {
    size_t index = 0;          // position in the condition's conjunct list
    UniversalShape shape;
    bool admissible = false;   // some instance exists within the bound
    bool refine = false;       // swept for violations (guard: function-free only)
    bool seed_all_constants = false; // guard: expand over every constant tuple
};

// A violating assignment found by the sweep, as ground representative terms.
struct Violation {
    size_t conjunct = 0;
    std::vector<TermRef> tuple;
};

// Enumerate assignments of `sh.vars` over admissible classes, depth-pruning
// with `fold`, and record up to `cap` violating tuples.  `ranges[i]` lists
// the classes variable i may take.
inline void sweep_conjunct(const PreparedConjunct& pc,
                           const std::vector<std::vector<unsigned>>& ranges,
                           const ClassView& view, unsigned cap,
                           std::vector<Violation>& out) {
    const GroundModel& gm = *view.gm;
    std::map<std::string, unsigned> env;
    std::vector<Violation> found;

    std::function<bool(size_t)> walk = [&](size_t i) -> bool {
        auto v = fold(gm, env, pc.shape.matrix);
        if (v && *v) return true;
        if (v && !*v) {
            Violation viol;
            viol.conjunct = pc.index;
            for (size_t j = 0; j < pc.shape.vars.size(); j++) {
                auto it = env.find(pc.shape.vars[j]);
                // Variables past the refuted prefix take the first
                // admissible class; the matrix value does not depend on them.
                unsigned cls = it != env.end() ? it->second : ranges[j].front();
                viol.tuple.push_back(view.rep[cls]);
            }
            found.push_back(std::move(viol));
            return found.size() < cap;
        }
        if (i == pc.shape.vars.size())
            throw std::logic_error("checker: full assignment left the matrix undecided");
        for (unsigned cls : ranges[i]) {
            env[pc.shape.vars[i]] = cls;
            bool keep = walk(i + 1);
            env.erase(pc.shape.vars[i]);
            if (!keep) return false;
        }
        return true;
    };
    walk(0);
    for (auto& viol : found) out.push_back(std::move(viol));
}

// Outcome of an instance-building engine run: the final verdict, the
// instances it was reached on, and how many refinement rounds it took.
struct EngineResult {
    Verdict verdict{SolveStatus::Resource, std::nullopt};
    InstantiationSet set;
    unsigned rounds = 0;
    std::string note;
};

inline FormulaRef apply_tuple(const UniversalShape& sh, const std::vector<TermRef>& tuple) {
    std::map<std::string, TermRef> binding;
    for (size_t i = 0; i < tuple.size(); i++) binding[sh.vars[i]] = tuple[i];
    return substitute(sh.matrix, binding);
}

// Model-guided instantiation.  `guard_mode` switches the per-conjunct policy
// from depth-bounded refinement to the guarded bound-1 form.
inline EngineResult run_lazy(const VerificationCondition& vc, unsigned k,
                             const CheckOptions& opts, bool guard_mode,
                             std::chrono::steady_clock::time_point deadline) {
    Vocabulary voc = ensure_constant(vc.vocab);
    std::vector<TermRef> consts;
    for (auto& s : voc.symbols())
        if (s.kind == SymKind::Constant) consts.push_back(mk_const(s));

    std::vector<PreparedConjunct> prepared;
    for (size_t i = 0; i < vc.conjuncts.size(); i++) {
        PreparedConjunct pc;
        pc.index = i;
        pc.shape = shape_of(vc.conjuncts[i].formula);
        if (guard_mode) {
            pc.admissible = true;
            bool apps = has_function_apps(vc.conjuncts[i].formula);
            pc.seed_all_constants = apps;
            pc.refine = !apps;
        } else {
            pc.admissible = pc.shape.base <= k;
            for (unsigned need : pc.shape.need)
                if (need > k) pc.admissible = false;
            pc.refine = pc.admissible;
        }
        prepared.push_back(std::move(pc));
    }

    EngineResult res;
    res.set.bound = k;
    std::set<std::string> seen;
    auto add_instance = [&](size_t conjunct, std::vector<TermRef> tuple) {
        Instance inst;
        inst.sentence = apply_tuple(prepared[conjunct].shape, tuple);
        inst.conjunct = conjunct;
        inst.tuple = std::move(tuple);
        res.set.total_count++;
        if (!seen.insert(to_string(inst.sentence)).second) return;
        res.set.instances.push_back(std::move(inst));
    };

    // Seeds.  Guarded function-touching conjuncts get every constant tuple
    // (that is the whole of their instance set); everything else gets the
    // diagonal tuples, which also interns every constant into the universe.
    for (auto& pc : prepared) {
        if (!pc.admissible) continue;
        size_t n = pc.shape.vars.size();
        if (pc.seed_all_constants && n > 0) {
            std::vector<size_t> idx(n, 0);
            while (true) {
                std::vector<TermRef> tuple;
                for (size_t i = 0; i < n; i++) tuple.push_back(consts[idx[i]]);
                add_instance(pc.index, std::move(tuple));
                size_t pos = n;
                while (pos > 0 && ++idx[pos - 1] == consts.size()) idx[--pos] = 0;
                if (pos == 0) break;
                if (res.set.instances.size() > opts.instance_limit) break;
            }
        } else {
            for (auto& c : consts)
                add_instance(pc.index, std::vector<TermRef>(n, c));
        }
        if (res.set.instances.size() > opts.instance_limit) {
            res.set.truncated = true;
            res.note = "instance limit reached while seeding";
            return res;
        }
    }

    while (true) {
        if (std::chrono::steady_clock::now() > deadline) {
            // Any model on hand predates the instances added after it was
            // found, so it certifies nothing; report resource exhaustion.
            res.verdict = Verdict{SolveStatus::Resource, std::nullopt};
            res.note = "timeout";
            return res;
        }
        GroundProblem problem;
        for (auto& inst : res.set.instances) problem.sentences.push_back(inst.sentence);
        SolveOptions sopts;
        sopts.max_conflicts = opts.max_conflicts;
        res.verdict = solve(problem, sopts);
#ifdef BHZ_CK_TRACE
        std::cerr << "[ck] round=" << res.rounds << " |A|=" << res.set.instances.size()
                  << " status="
                  << (res.verdict.sat() ? "sat" : res.verdict.unsat() ? "unsat" : "resource")
                  << (res.verdict.model ? " classes=" + std::to_string(res.verdict.model->num_classes)
                                        : std::string())
                  << "\n";
#endif
        if (res.verdict.unsat()) return res;
        if (res.verdict.status == SolveStatus::Resource) {
            res.note = "ground solver exceeded its conflict budget";
            return res;
        }

        ClassView view = class_view(*res.verdict.model);
        std::vector<Violation> violations;
        for (auto& pc : prepared) {
            if (!pc.admissible || !pc.refine) continue;
            std::vector<std::vector<unsigned>> ranges(pc.shape.vars.size());
            bool empty = false;
            for (size_t i = 0; i < pc.shape.vars.size(); i++) {
                for (unsigned cls = 0; cls < view.rep.size(); cls++)
                    if (guard_mode || view.depth[cls] + pc.shape.need[i] <= k)
                        ranges[i].push_back(cls);
                if (ranges[i].empty()) empty = true;
            }
            if (empty) continue; // nothing representable for some position
            sweep_conjunct(pc, ranges, view, opts.batch, violations);
        }
        if (violations.empty()) return res; // every in-bound instance holds

#ifdef BHZ_CK_TRACE
        std::cerr << "[ck]   violations=" << violations.size() << " at conjuncts";
        for (auto& viol : violations) std::cerr << " " << viol.conjunct;
        std::cerr << "\n";
#endif
        for (auto& viol : violations) add_instance(viol.conjunct, std::move(viol.tuple));
        if (res.set.instances.size() > opts.instance_limit) {
            res.set.truncated = true;
            res.verdict = Verdict{SolveStatus::Resource, std::nullopt};
            res.note = "instance limit reached during refinement";
            return res;
        }
        if (++res.rounds > opts.max_rounds) {
            res.verdict = Verdict{SolveStatus::Resource, std::nullopt};
            res.note = "refinement round limit reached";
            return res;
        }
    }
}

// Materialized-set encodings: build the whole instantiation set, solve once.
inline EngineResult run_set(const VerificationCondition& vc, unsigned k, bool approx,
                            const CheckOptions& opts) {
    EngineResult res;
    res.set = approx ? approx_instantiation_set(vc, k, opts.instance_limit)
                     : bounded_instantiation_set(vc, k, opts.instance_limit);
    GroundProblem problem;
    for (auto& inst : res.set.instances) problem.sentences.push_back(inst.sentence);
    SolveOptions sopts;
    sopts.max_conflicts = opts.max_conflicts;
    res.verdict = solve(problem, sopts);
    if (res.verdict.sat() && res.set.truncated) {
        // A satisfying assignment of a truncated set certifies nothing.
        res.verdict = Verdict{SolveStatus::Resource, std::nullopt};
        res.note = "instance limit reached before the set was complete";
    }
    return res;
}

// Decide one Skolemized condition at the given bound and assemble its row of
// the report.  `invariants` feed the boundary classification of open rows.
inline ObligationReport run_vc(const VerificationCondition& vc, unsigned k,
                               const CheckOptions& opts,
                               const std::vector<FormulaRef>& invariants) {
    ObligationReport rep;
    rep.kind = vc.kind;
    rep.action = vc.actionName.value_or("");
    rep.bound = k;
    rep.encoding = opts.encoding;
    rep.note = vc.note;
    rep.complete = vc.kind == VcKind::Initiation && !vc.note.empty();

    auto start = std::chrono::steady_clock::now();
    auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(opts.timeout_seconds));
    EngineResult run;
    switch (opts.encoding) {
        case Encoding::Lazy: run = run_lazy(vc, k, opts, false, deadline); break;
        case Encoding::Guard: run = run_lazy(vc, k, opts, true, deadline); break;
        case Encoding::Eager: run = run_set(vc, k, false, opts); break;
        case Encoding::Approx: run = run_set(vc, k, true, opts); break;
    }
    rep.rounds = run.rounds;
    rep.instances = run.set.instances.size();
    if (!run.note.empty()) rep.note = rep.note.empty() ? run.note : rep.note + "; " + run.note;

    if (run.verdict.unsat()) {
        rep.verdict = CheckVerdict::Proved;
    } else if (run.verdict.sat()) {
        rep.verdict = CheckVerdict::Unknown;
        PartialModel pm = quotient_model(run.verdict, run.set);
        if (confirm_counterexample(vc, pm))
            rep.note = rep.note.empty() ? "genuine counterexample"
                                        : rep.note + "; genuine counterexample";
        if (opts.with_boundary) rep.boundary = classify_boundary(invariants, pm);
        rep.partial = std::move(pm);
    } else {
        rep.verdict = CheckVerdict::Resource;
    }
    rep.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

inline bool report_order(const ObligationReport& a, const ObligationReport& b) {
    if (a.action != b.action) return a.action < b.action;
    return int(a.kind) < int(b.kind);
}

inline CheckVerdict aggregate(const std::vector<ObligationReport>& obligations) {
    CheckVerdict v = CheckVerdict::Proved;
    for (auto& o : obligations) {
        if (o.verdict == CheckVerdict::Resource) return CheckVerdict::Resource;
        if (o.verdict == CheckVerdict::Unknown) v = CheckVerdict::Unknown;
    }
    return v;
}

// The conditions a model owes under the given options, in report order.
inline std::vector<VerificationCondition> obligations_of(const ProgramModel& m,
                                                         const CheckOptions& opts) {
    std::vector<VerificationCondition> vcs;
    if (!opts.action.empty()) {
        vcs.push_back(consecution_vc(m, opts.action));
        return vcs;
    }
    vcs.push_back(initiation_vc(m));
    if (!m.safety.empty()) vcs.push_back(safety_vc(m));
    if (opts.per_action) {
        std::vector<std::string> names;
        for (auto& a : m.actions) names.push_back(a.name);
        std::sort(names.begin(), names.end());
        for (auto& n : names) vcs.push_back(consecution_vc(m, n));
    } else {
        vcs.push_back(consecution_vc(m));
    }
    return vcs;
}

} // namespace detail_ck

// ------------------------------------------------------------ entry points

// Decide every obligation of the model at instantiation depth k.  The model
// is validated and desugared here; validation diagnostics short-circuit to
// an ill-formed report.  The guard encoding is only defined at bound 1.
inline CheckReport check(const ProgramModel& m, unsigned k, const CheckOptions& opts = {}) {
    if (opts.encoding == Encoding::Guard && k != 1)
        throw std::invalid_argument("guard encoding is defined at bound 1");
    CheckReport report;
    report.bound = k;
    report.encoding = opts.encoding;
    ProgramModel d;
    try {
        d = desugar(m);
        report.diagnostics = validate(d);
    } catch (const std::invalid_argument& e) {
        report.diagnostics.push_back(e.what());
    }
    if (!report.diagnostics.empty()) {
        report.verdict = CheckVerdict::IllFormed;
        return report;
    }
    if (!opts.action.empty()) {
        bool known = false;
        for (auto& a : d.actions) known = known || a.name == opts.action;
        if (!known) {
            report.verdict = CheckVerdict::IllFormed;
            report.diagnostics.push_back("unknown action: " + opts.action);
            return report;
        }
    }
    for (auto& vc : detail_ck::obligations_of(d, opts)) {
        ObligationReport rep = detail_ck::run_vc(vc, k, opts, d.invariants);
        if (opts.find_minimal_bound && rep.verdict == CheckVerdict::Proved) {
            rep.minimal_proved_bound = k;
            unsigned lo = opts.encoding == Encoding::Guard ? 1 : 0;
            for (unsigned k2 = lo; k2 < k; k2++) {
                ObligationReport r2 = detail_ck::run_vc(vc, k2, opts, d.invariants);
                if (r2.verdict == CheckVerdict::Proved) {
                    rep.minimal_proved_bound = k2;
                    break;
                }
            }
        }
        report.obligations.push_back(std::move(rep));
    }
    std::stable_sort(report.obligations.begin(), report.obligations.end(),
                     detail_ck::report_order);
    report.verdict = detail_ck::aggregate(report.obligations);
    return report;
}

// Run check at every bound of [kmin, kmax].  An obligation proved at some
// bound stays proved at every later one (a refutation within depth k is a
// refutation within any larger depth), so later bounds reuse the earlier
// verdict instead of re-solving, which also fills minimal_proved_bound with
// the first bound of the sweep that proved the obligation.
inline std::vector<CheckReport> sweep(const ProgramModel& m, unsigned kmin, unsigned kmax,
                                      const CheckOptions& opts = {}) {
    if (kmin > kmax) throw std::invalid_argument("sweep: kmin exceeds kmax");
    std::vector<CheckReport> reports;
    std::map<std::pair<std::string, int>, unsigned> proved_at;
    for (unsigned k = kmin; k <= kmax; k++) {
        CheckReport report;
        report.bound = k;
        report.encoding = opts.encoding;
        ProgramModel d;
        try {
            d = desugar(m);
            report.diagnostics = validate(d);
        } catch (const std::invalid_argument& e) {
            report.diagnostics.push_back(e.what());
        }
        if (!report.diagnostics.empty()) {
            report.verdict = CheckVerdict::IllFormed;
            reports.push_back(std::move(report));
            continue;
        }
        for (auto& vc : detail_ck::obligations_of(d, opts)) {
            std::pair<std::string, int> key{vc.actionName.value_or(""), int(vc.kind)};
            auto it = proved_at.find(key);
            if (it != proved_at.end()) {
                ObligationReport rep;
                rep.kind = vc.kind;
                rep.action = key.first;
                rep.bound = k;
                rep.encoding = opts.encoding;
                rep.verdict = CheckVerdict::Proved;
                rep.complete = vc.kind == VcKind::Initiation && !vc.note.empty();
                rep.minimal_proved_bound = it->second;
                rep.note = "established at bound " + std::to_string(it->second);
                report.obligations.push_back(std::move(rep));
                continue;
            }
            ObligationReport rep = detail_ck::run_vc(vc, k, opts, d.invariants);
            if (rep.verdict == CheckVerdict::Proved) {
                proved_at.emplace(key, k);
                rep.minimal_proved_bound = k;
            }
            report.obligations.push_back(std::move(rep));
        }
        std::stable_sort(report.obligations.begin(), report.obligations.end(),
                         detail_ck::report_order);
        report.verdict = detail_ck::aggregate(report.obligations);
        reports.push_back(std::move(report));
    }
    return reports;
}

// --------------------------------------------------------------- rendering

// Machine-readable report.  Timings are excluded unless asked for: with the
// same input and options the rest of the document is reproducible
// byte-for-byte, and wall-clock noise would break that.
inline nlohmann::json render_json(const CheckReport& report, bool with_timings = false) {
    nlohmann::json doc;
    doc["schema"] = "bhz-report/1";
    doc["bound"] = report.bound;
    doc["encoding"] = to_cstring(report.encoding);
    doc["verdict"] = to_cstring(report.verdict);
    doc["diagnostics"] = report.diagnostics;
    doc["obligations"] = nlohmann::json::array();
    for (auto& o : report.obligations) {
        nlohmann::json row;
        row["kind"] = to_cstring(o.kind);
        row["action"] = o.action;
        row["bound"] = o.bound;
        row["encoding"] = to_cstring(o.encoding);
        row["verdict"] = to_cstring(o.verdict);
        row["complete"] = o.complete;
        if (o.minimal_proved_bound) row["minimalProvedBound"] = *o.minimal_proved_bound;
        if (!o.note.empty()) row["note"] = o.note;
        row["instances"] = o.instances;
        row["rounds"] = o.rounds;
        if (o.partial) {
            BoundaryReport empty;
            row["partialModel"] =
                render_json(*o.partial, o.boundary ? *o.boundary : empty);
        }
        if (with_timings) row["seconds"] = o.seconds;
        doc["obligations"].push_back(std::move(row));
    }
    return doc;
}

inline std::string render_text(const CheckReport& report) {
    std::string out;
    out += "bound " + std::to_string(report.bound) + " (" +
           to_cstring(report.encoding) + "): " + to_cstring(report.verdict) + "\n";
    for (auto& d : report.diagnostics) out += "  diagnostic: " + d + "\n";
    for (auto& o : report.obligations) {
        out += "  " + std::string(to_cstring(o.kind));
        if (!o.action.empty()) out += " [" + o.action + "]";
        out += ": " + std::string(to_cstring(o.verdict));
        if (o.minimal_proved_bound) out += " (bound " + std::to_string(*o.minimal_proved_bound) + ")";
        if (o.complete) out += " (complete)";
        if (!o.note.empty()) out += " -- " + o.note;
        out += "\n";
        if (o.partial && o.boundary) {
            std::string body = ::bhz::render_text(*o.partial, *o.boundary);
            size_t pos = 0;
            while (pos < body.size()) {
                size_t nl = body.find('\n', pos);
                if (nl == std::string::npos) nl = body.size();
                out += "    " + body.substr(pos, nl - pos) + "\n";
                pos = nl + 1;
            }
        }
    }
    return out;
}

} // namespace bhz
