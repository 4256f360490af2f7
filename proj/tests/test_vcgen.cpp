// Weakest preconditions, transition relations, and verification conditions,
// cross-checked against the explicit-semantics interpreter oracle.

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "bhz/vcgen.hpp"
#include "oracles.hpp"
#include "sources.hpp"

using namespace bhz;
using bhz_test_sources::kClientServer;
using bhz_test_sources::kLeaderSketch;
using bhz_test_sources::kToy;

namespace {

// Shared miniature vocabulary for the hand-built command tests.
const Symbol R = relation_sym("r", 1);
const Symbol P = relation_sym("p", 1);
const Symbol V = constant_sym("v");
const Symbol W = constant_sym("w");

Vocabulary mini_vocab() {
    Vocabulary voc;
    voc.add(R);
    voc.add(V);
    voc.add(W);
    return voc;
}

Vocabulary with_primes(const Vocabulary& v) {
    Vocabulary out = v;
    for (auto& s : v.symbols())
        if (!s.primed) out.add(primed(s));
    return out;
}

std::string cmd_str(const CommandRef& c) {
    std::ostringstream os;
    detail_fe::print_cmd(os, c, 0);
    return os.str();
}

// A small pool-based generator of desugared commands over mini_vocab().
struct CommandGen {
    std::mt19937 rng;
    std::vector<FormulaRef> update_bodies; // QF, free var x
    std::vector<FormulaRef> assume_bodies; // exists*-forall*
    std::vector<FormulaRef> posts;

    explicit CommandGen(unsigned seed) : rng(seed) {
        TermRef x = mk_var("x"), y = mk_var("y");
        TermRef v = mk_const(V), w = mk_const(W);
        update_bodies = {
            mk_eq(x, v),
            mk_atom(R, {x}),
            mk_or(mk_atom(R, {x}), mk_eq(x, w)),
            mk_and(mk_atom(R, {x}), mk_not(mk_eq(x, v))),
            mk_false(),
        };
        assume_bodies = {
            mk_atom(R, {v}),
            mk_exists("y", mk_atom(R, {y})),
            mk_forall("y", mk_or(mk_atom(R, {y}), mk_eq(y, v))),
            mk_eq(v, w),
        };
        posts = {
            mk_atom(R, {v}),
            mk_exists("y", mk_and(mk_atom(R, {y}), mk_not(mk_eq(y, v)))),
            mk_implies(mk_atom(R, {w}), mk_atom(R, {v})),
            mk_forall("y", mk_atom(R, {y})),
        };
    }

    template <class T> const T& pick(const std::vector<T>& xs) {
        return xs[std::uniform_int_distribution<size_t>(0, xs.size() - 1)(rng)];
    }

    CommandRef leaf(bool allow_abort) {
        switch (std::uniform_int_distribution<int>(0, allow_abort ? 5 : 4)(rng)) {
            case 0: return mk_skip();
            case 1: return mk_assume(pick(assume_bodies));
            case 2: return mk_rel_update(R, {"x"}, pick(update_bodies));
            case 3: return mk_havoc("v");
            case 4: return mk_havoc("w");
            default: return mk_abort();
        }
    }

    CommandRef command(int depth, bool allow_abort = true) {
        if (depth == 0 || std::uniform_int_distribution<int>(0, 9)(rng) < 4)
            return leaf(allow_abort);
        CommandRef a = command(depth - 1, allow_abort);
        CommandRef b = command(depth - 1, allow_abort);
        return std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? mk_seq(a, b)
                                                                  : mk_choice(a, b);
    }
};

} // namespace

TEST_CASE("weakest precondition rule table") {
    TermRef x = mk_var("x"), v = mk_const(V), w = mk_const(W);
    FormulaRef q = mk_atom(R, {v});

    SECTION("skip leaves the postcondition unchanged") {
        CHECK(struct_eq(wp(mk_skip(), q), q));
    }
    SECTION("abort has no precondition") {
        CHECK(struct_eq(wp(mk_abort(), q), mk_false()));
    }
    SECTION("assume becomes an implication") {
        FormulaRef cond = mk_exists("y", mk_atom(R, {mk_var("y")}));
        CHECK(to_string(wp(mk_assume(cond), q)) == "((exists y. r(y)) -> r(v))");
    }
    SECTION("update substitutes its body atom-wise") {
        CommandRef upd = mk_rel_update(R, {"x"}, mk_eq(x, v));
        CHECK(to_string(wp(upd, mk_atom(R, {w}))) == "(w = v)");
    }
    SECTION("axioms guard updates") {
        CommandRef upd = mk_rel_update(R, {"x"}, mk_eq(x, v));
        FormulaRef ax = mk_atom(P, {v});
        CHECK(to_string(wp(upd, mk_atom(R, {w}), ax)) == "(p(v) -> (w = v))");
    }
    SECTION("primed atoms are inert under updates") {
        CommandRef upd = mk_rel_update(R, {"x"}, mk_eq(x, v));
        FormulaRef qp = mk_atom(primed(R), {w});
        CHECK(struct_eq(wp(upd, qp), qp));
    }
    SECTION("havoc quantifies a fresh variable") {
        CHECK(to_string(wp(mk_havoc("v"), mk_atom(P, {v}))) == "(forall v_0. p(v_0))");
    }
    SECTION("the axiom guard is substituted along with the havoc target") {
        FormulaRef ax = mk_atom(P, {v});
        CHECK(to_string(wp(mk_havoc("v"), mk_atom(R, {v}), ax)) ==
              "(forall v_0. (p(v_0) -> r(v_0)))");
    }
    SECTION("choice is the conjunction of both branches") {
        CommandRef c1 = mk_assume(mk_atom(R, {v}));
        CommandRef c2 = mk_rel_update(R, {"x"}, mk_eq(x, w));
        FormulaRef expect = mk_and(wp(c1, q), wp(c2, q));
        CHECK(struct_eq(wp(mk_choice(c1, c2), q), expect));
    }
    SECTION("sugar is rejected") {
        CHECK_THROWS_AS(wp(mk_local("z"), q), std::invalid_argument);
    }
}

TEST_CASE("weakest precondition of an update-then-assume sequence") {
    TermRef x = mk_var("x"), v = mk_const(V);
    CommandRef c = mk_seq(mk_rel_update(R, {"x"}, mk_eq(x, v)),
                          mk_assume(mk_exists("y", mk_atom(R, {mk_var("y")}))));
    FormulaRef q = mk_atom(R, {v});
    FormulaRef w = wp(c, q);
    CHECK(to_string(w) == "((exists y. (y = v)) -> (v = v))");

    // The formula agrees with the operational reading on every structure of
    // size at most 2.
    Vocabulary voc;
    voc.add(R);
    voc.add(V);
    for (unsigned n = 1; n <= 2; n++) {
        bool ok = true;
        oracle::for_each_model(voc, n, [&](const oracle::FiniteModel& m) {
            if (oracle::eval_formula(m, {}, w) != oracle::wp_holds(c, q, m, nullptr)) ok = false;
            return ok;
        });
        CHECK(ok);
    }
}

TEST_CASE("weakest preconditions agree with the interpreter on random commands") {
    CommandGen gen(2024);
    Vocabulary voc = mini_vocab();
    FormulaRef ax = mk_exists("y", mk_atom(R, {mk_var("y")}));
    for (int iter = 0; iter < 60; iter++) {
        CommandRef c = gen.command(3);
        FormulaRef q = gen.pick(gen.posts);
        FormulaRef axioms = (iter % 3 == 0) ? ax : nullptr;
        FormulaRef w = wp(c, q, axioms);
        for (unsigned n = 1; n <= 2; n++) {
            bool ok = true;
            oracle::for_each_model(voc, n, [&](const oracle::FiniteModel& m) {
                bool lhs = oracle::eval_formula(m, {}, w);
                bool rhs = oracle::wp_holds(c, q, m, axioms);
                if (lhs != rhs) ok = false;
                return ok;
            });
            INFO("iter " << iter << " size " << n << " cmd/post:\n"
                         << cmd_str(c) << "\n"
                         << to_string(q));
            REQUIRE(ok);
        }
    }
}

TEST_CASE("weakest preconditions preserve forall-exists postconditions") {
    CommandGen gen(77);
    TermRef a = mk_var("a"), b = mk_var("b");
    TermRef v = mk_const(V), w = mk_const(W);
    std::vector<FormulaRef> matrices = {
        mk_implies(mk_atom(R, {a}), mk_eq(b, a)),
        mk_or(mk_atom(R, {b}), mk_eq(b, v)),
        mk_and(mk_implies(mk_atom(R, {a}), mk_atom(R, {b})), mk_not(mk_eq(b, w))),
    };
    FormulaRef ax = mk_exists("y", mk_atom(R, {mk_var("y")}));
    for (int iter = 0; iter < 120; iter++) {
        FormulaRef q = mk_forall("a", mk_exists("b", gen.pick(matrices)));
        REQUIRE(in_ae(q));
        CommandRef c = gen.command(3);
        FormulaRef axioms = (iter % 2 == 0) ? ax : nullptr;
        FormulaRef result = wp(c, q, axioms);
        INFO("iter " << iter << ":\n" << cmd_str(c) << "\nwp = "
                     << to_string(result));
        REQUIRE(in_ae(result));
    }
}

TEST_CASE("frame identity equates every symbol with its primed copy") {
    SECTION("relation and constant") {
        Vocabulary voc;
        voc.add(relation_sym("r", 2));
        voc.add(V);
        CHECK(to_string(frame_identity(voc)) ==
              "((forall x_0. (forall x_1. (r(x_0, x_1) <-> r'(x_0, x_1)))) & (v = v'))");
    }
    SECTION("single unary relation") {
        Vocabulary voc;
        voc.add(R);
        CHECK(to_string(frame_identity(voc)) == "(forall x_0. (r(x_0) <-> r'(x_0)))");
    }
    SECTION("function symbols are rejected") {
        Vocabulary voc;
        voc.add(function_sym("f", 1));
        CHECK_THROWS_AS(frame_identity(voc), std::invalid_argument);
    }
}

TEST_CASE("transition relation of skip is the frame identity") {
    Vocabulary voc;
    voc.add(R);
    voc.add(V);
    FormulaRef d = delta_of_command(mk_skip(), voc);
    CHECK(oracle::equivalent_upto(d, frame_identity(voc), with_primes(voc), 2));
    CHECK(in_epr(d));
}

TEST_CASE("transition relation of abort is total") {
    Vocabulary voc;
    voc.add(R);
    CHECK(oracle::valid_upto(delta_of_command(mk_abort(), voc), with_primes(voc), 2));
}

TEST_CASE("transition relation of havoc frames everything else") {
    Vocabulary voc;
    voc.add(R);
    voc.add(V);
    CommandRef c = mk_havoc("v");
    for (FormulaRef axioms : {FormulaRef(), FormulaRef(mk_atom(R, {mk_const(V)}))}) {
        FormulaRef d = delta_of_command(c, voc, axioms);
        for (unsigned n = 1; n <= 2; n++) {
            bool ok = true;
            oracle::for_each_model(with_primes(voc), n, [&](const oracle::FiniteModel& m) {
                if (oracle::eval_formula(m, {}, d) != oracle::can_reach_primed(c, m, axioms))
                    ok = false;
                return ok;
            });
            CHECK(ok);
        }
    }
}

TEST_CASE("transition relations agree with the interpreter on random commands") {
    CommandGen gen(411);
    Vocabulary voc = mini_vocab();
    Vocabulary joint = with_primes(voc);
    FormulaRef ax = mk_exists("y", mk_atom(R, {mk_var("y")}));
    for (int iter = 0; iter < 40; iter++) {
        CommandRef c = gen.command(2);
        FormulaRef axioms = (iter % 4 == 0) ? ax : nullptr;
        FormulaRef d = delta_of_command(c, voc, axioms);
        for (unsigned n = 1; n <= 2; n++) {
            bool ok = true;
            oracle::for_each_model(joint, n, [&](const oracle::FiniteModel& m) {
                bool lhs = oracle::eval_formula(m, {}, d);
                bool rhs = oracle::can_reach_primed(c, m, axioms);
                if (lhs != rhs) ok = false;
                return ok;
            });
            INFO("iter " << iter << " size " << n << ":\n" << cmd_str(c));
            REQUIRE(ok);
        }
    }
}

TEST_CASE("per-action transition relations classify as exists*-forall*") {
    for (const char* src : {kClientServer, kLeaderSketch}) {
        ProgramModel m = desugar(parse(src));
        REQUIRE(validate(m).empty());
        ProgramDelta pd = delta_of_program(m);
        for (auto& [name, d] : pd.per_action) {
            INFO("action " << name);
            CHECK(in_epr(d));
        }
        CHECK(in_epr(pd.whole));
    }
}

TEST_CASE("program transition relation is the disjunction over actions") {
    SECTION("client-server has a three-way disjunction and no axioms") {
        ProgramModel m = desugar(parse(kClientServer));
        ProgramDelta pd = delta_of_program(m);
        CHECK(pd.per_action.size() == 3);
        CHECK(pd.axioms == nullptr);
        REQUIRE(pd.whole->op == FOp::Or);
        CHECK(pd.whole->kids.size() == 3);
        CHECK(pd.per_action[0].first == "new_request");
        CHECK(pd.per_action[1].first == "respond");
        CHECK(pd.per_action[2].first == "check");
    }
    SECTION("leader sketch has two actions under a top-level axiom") {
        ProgramModel m = desugar(parse(kLeaderSketch));
        ProgramDelta pd = delta_of_program(m);
        CHECK(pd.per_action.size() == 2);
        REQUIRE(pd.axioms != nullptr);
        CHECK(pd.whole->op == FOp::And);

        // Semantically the whole relation is the union of the per-action ones.
        std::mt19937 rng(5);
        Vocabulary joint = with_primes(m.vocab);
        for (int i = 0; i < 30; i++) {
            oracle::FiniteModel fm = oracle::random_model(rng, joint, 2 + i % 2);
            bool whole = oracle::eval_formula(fm, {}, pd.whole);
            bool any = false;
            for (auto& [name, d] : pd.per_action)
                any = any || oracle::eval_formula(fm, {}, d);
            CHECK(whole == any);
        }
    }
    SECTION("a one-action program needs no disjunction") {
        ProgramModel m = desugar(parse("relation p(1)\nvariable v\n"
                                       "action a { p(x) := p(x) | x = v }"));
        ProgramDelta pd = delta_of_program(m);
        REQUIRE(pd.per_action.size() == 1);
        CHECK(struct_eq(pd.whole, pd.per_action[0].second));
    }
}

namespace {

// Count Skolem symbols in a verification condition by origin and kind.
struct SkCounts {
    int pre_funcs = 0, pre_consts = 0, delta_consts = 0, post_consts = 0, named = 0;
};

SkCounts count_skolems(const VerificationCondition& vc) {
    SkCounts n;
    for (auto& [name, origin] : vc.skolemOrigin) {
        const Symbol* s = vc.vocab.find(name);
        REQUIRE(s != nullptr);
        switch (origin) {
            case SkOrigin::InvariantPre:
                (s->kind == SymKind::Function ? n.pre_funcs : n.pre_consts)++;
                break;
            case SkOrigin::Delta: n.delta_consts++; break;
            case SkOrigin::InvariantPost: n.post_consts++; break;
            case SkOrigin::Named: n.named++; break;
        }
    }
    return n;
}

std::vector<SkOrigin> tags(const VerificationCondition& vc) {
    std::vector<SkOrigin> out;
    for (auto& c : vc.conjuncts) out.push_back(c.tag);
    return out;
}

} // namespace

TEST_CASE("consecution condition for the client-server model") {
    ProgramModel m = desugar(parse(kClientServer));
    REQUIRE(validate(m).empty());

    SECTION("whole-program form") {
        VerificationCondition vc = consecution_vc(m);
        CHECK(vc.kind == VcKind::Consecution);
        CHECK(!vc.actionName.has_value());
        // Two invariant conjuncts after desugaring (the declared one plus the
        // abort flag), one transition conjunct, one negated-post conjunct.
        CHECK(tags(vc) == std::vector<SkOrigin>{SkOrigin::InvariantPre, SkOrigin::InvariantPre,
                                                SkOrigin::Delta, SkOrigin::InvariantPost});
        SkCounts n = count_skolems(vc);
        // The forall u,p / exists q invariant yields one binary Skolem
        // function; the negated primed invariant yields two Skolem constants.
        CHECK(n.pre_funcs == 1);
        CHECK(n.pre_consts == 0);
        CHECK(n.post_consts == 2);
        // Action locals surface as existentials of the transition relation:
        // new_request havocs u,q; respond havocs u,q,p; check havocs u,p and
        // its negated guard contributes one more witness.
        CHECK(n.delta_consts == 8);
        const Symbol* f = nullptr;
        for (auto& [name, origin] : vc.skolemOrigin)
            if (origin == SkOrigin::InvariantPre) f = vc.vocab.find(name);
        REQUIRE(f != nullptr);
        CHECK(f->arity == 2);
    }
    SECTION("per-action forms") {
        CHECK(count_skolems(consecution_vc(m, "new_request")).delta_consts == 2);
        CHECK(count_skolems(consecution_vc(m, "respond")).delta_consts == 3);
        CHECK(count_skolems(consecution_vc(m, "check")).delta_consts == 3);
        VerificationCondition vc = consecution_vc(m, "check");
        CHECK(vc.actionName == "check");
        SkCounts n = count_skolems(vc);
        CHECK(n.pre_funcs == 1);
        CHECK(n.post_consts == 2);
        CHECK_THROWS_AS(consecution_vc(m, "nope"), std::invalid_argument);
    }
    SECTION("every conjunct is a prenex universal sentence over the joint vocabulary") {
        VerificationCondition vc = consecution_vc(m);
        for (auto& c : vc.conjuncts) {
            CHECK(in_universal(c.formula));
            CHECK(free_vars(c.formula).empty());
            for (auto& s : consts(c.formula)) CHECK(vc.vocab.contains(s.name, s.primed));
            for (auto& s : rels(c.formula)) CHECK(vc.vocab.contains(s.name, s.primed));
        }
    }
}

TEST_CASE("a missing invariant makes consecution trivially unsatisfiable") {
    ProgramModel m = desugar(parse("relation p(1)\nvariable v\n"
                                   "action a { p(x) := p(x) | x = v }"));
    VerificationCondition vc = consecution_vc(m);
    REQUIRE(vc.conjuncts.size() == 2);
    CHECK(tags(vc) == std::vector<SkOrigin>{SkOrigin::Delta, SkOrigin::InvariantPost});
    CHECK(struct_eq(vc.conjuncts.back().formula, mk_false()));
}

TEST_CASE("initiation and safety condition shapes") {
    SECTION("initiation carries the initial condition and the negated invariant") {
        ProgramModel m = desugar(parse(kToy));
        REQUIRE(validate(m).empty());
        VerificationCondition vc = initiation_vc(m);
        CHECK(vc.kind == VcKind::Initiation);
        CHECK(tags(vc) == std::vector<SkOrigin>{SkOrigin::Delta, SkOrigin::InvariantPost});
        // Universal invariant, universal initial condition: decidable outright.
        CHECK(!vc.note.empty());
        // Empty p cannot violate the invariant.
        CHECK(!oracle::sat_upto(vc.formula(), vc.vocab, 3).has_value());
    }
    SECTION("initiation for the abort-flag initial condition") {
        ProgramModel m = desugar(parse(kClientServer));
        VerificationCondition vc = initiation_vc(m);
        CHECK(tags(vc) == std::vector<SkOrigin>{SkOrigin::Delta, SkOrigin::InvariantPost});
    }
    SECTION("safety pairs the invariant with the negated property") {
        ProgramModel m = desugar(parse(kClientServer));
        VerificationCondition vc = safety_vc(m);
        CHECK(vc.kind == VcKind::Safety);
        CHECK(tags(vc) == std::vector<SkOrigin>{SkOrigin::InvariantPre, SkOrigin::InvariantPre,
                                                SkOrigin::InvariantPost});
        // The property here is just the absence of the abort flag, which the
        // invariant includes verbatim, so the condition is unsatisfiable.
        CHECK(!oracle::sat_upto(vc.formula(), vc.vocab, 2).has_value());
    }
}

TEST_CASE("consecution satisfiability splits across actions") {
    ProgramModel m = desugar(parse(kToy));
    REQUIRE(validate(m).empty());
    auto sat = [](const VerificationCondition& vc) {
        return oracle::sat_upto(vc.formula(), vc.vocab, 3);
    };
    // `add` only ever inserts the tracked element: inductive.
    CHECK(!sat(consecution_vc(m, "add")).has_value());
    // `bad_add` inserts an arbitrary element: a two-element structure breaks it.
    CHECK(sat(consecution_vc(m, "bad_add")) == 2);
    // The whole-program condition is satisfiable exactly because some action's is.
    CHECK(sat(consecution_vc(m)) == 2);
}

TEST_CASE("skolemization-aware consecution") {
    SECTION("requires a universal invariant") {
        ProgramModel m = desugar(parse(kClientServer));
        CHECK_THROWS_WITH(skolem_aware_vc(m, "check"),
                          Catch::Matchers::ContainsSubstring("universal"));
    }
    SECTION("without instrumented locals it matches ordinary consecution") {
        ProgramModel m = desugar(parse(kToy));
        for (const char* action : {"add", "bad_add"}) {
            VerificationCondition ord = consecution_vc(m, action);
            VerificationCondition ska = skolem_aware_vc(m, action);
            CHECK(ska.kind == VcKind::SkolemAware);
            // Skolemization is satisfiability-preserving size by size, so the
            // two encodings agree on their smallest model size.
            auto a = oracle::sat_upto(ord.formula(), ord.vocab, 3);
            auto b = oracle::sat_upto(ska.formula(), ska.vocab, 3);
            INFO("action " << action);
            CHECK(a == b);
        }
    }
    SECTION("the negated post-state conjunct is ground") {
        ProgramModel m = desugar(parse(kToy));
        VerificationCondition vc = skolem_aware_vc(m, "add");
        REQUIRE(!vc.conjuncts.empty());
        FormulaRef post = vc.conjuncts.back().formula;
        CHECK(!has_quantifiers(post));
        // The shared constant is named after the invariant's bound variable.
        bool found = false;
        for (auto& s : consts(post)) found = found || (s.name == "sk_x");
        CHECK(found);
        CHECK(vc.skolemOrigin.at("sk_x") == SkOrigin::InvariantPost);
    }
    SECTION("an sk_ local shares its constant with the post-state witness") {
        ProgramModel m = desugar(parse(R"(
relation p(1)
relation q(1)
invariant forall x. p(x) -> q(x)
action promote {
  local sk_x := *;
  assume p(sk_x);
  q(y) := q(y) | y = sk_x
}
)"));
        REQUIRE(validate(m).empty());
        VerificationCondition vc = skolem_aware_vc(m, "promote");
        CHECK(vc.skolemOrigin.at("sk_x") == SkOrigin::Named);
        REQUIRE(vc.conjuncts.size() == 3);
        FormulaRef dhat = vc.conjuncts[1].formula;
        FormulaRef post = vc.conjuncts[2].formula;
        auto mentions_sk = [](const FormulaRef& f) {
            for (auto& s : consts(f))
                if (s.name == "sk_x") return true;
            return false;
        };
        // One constant, visible on both sides of the condition.
        CHECK(mentions_sk(dhat));
        CHECK(mentions_sk(post));
        // Growing q preserves the invariant, shared witness or not.
        CHECK(!oracle::sat_upto(vc.formula(), vc.vocab, 2).has_value());
        VerificationCondition ord = consecution_vc(m, "promote");
        CHECK(!oracle::sat_upto(ord.formula(), ord.vocab, 2).has_value());
    }
}
