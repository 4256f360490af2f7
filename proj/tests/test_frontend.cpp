// Surface language: parsing, scoping, desugaring, validation, printing.

#include <catch2/catch_amalgamated.hpp>

#include "bhz/frontend.hpp"
#include "sources.hpp"

using namespace bhz;
using bhz_test_sources::kClientServer;
using bhz_test_sources::kLeaderSketch;

namespace {

bool core_only(const CommandRef& c) {
    switch (c->op) {
        case CmdOp::Local:
        case CmdOp::If:
        case CmdOp::Insert:
        case CmdOp::Remove: return false;
        case CmdOp::Seq:
        case CmdOp::Choice: return core_only(c->c1) && core_only(c->c2);
        default: return true;
    }
}

// Flatten a seq-tree into its atomic commands, in order.
void flatten(const CommandRef& c, std::vector<CommandRef>& out) {
    if (c->op == CmdOp::Seq) {
        flatten(c->c1, out);
        flatten(c->c2, out);
    } else {
        out.push_back(c);
    }
}

} // namespace

TEST_CASE("parsing the client-server source") {
    ProgramModel m = parse(kClientServer);
    REQUIRE(m.actions.size() == 3);
    CHECK(m.actions[0].name == "new_request");
    CHECK(m.actions[1].name == "respond");
    CHECK(m.actions[2].name == "check");
    CHECK(m.relations.size() == 3);
    CHECK(m.invariants.size() == 1);
    CHECK(classify(m.invariants[0]) == QuantClass::AE);
    CHECK(m.actions[1].params == std::vector<std::string>{"u", "q", "p"});
}

TEST_CASE("parsing a minimal model") {
    ProgramModel m = parse("action a { skip }");
    REQUIRE(m.actions.size() == 1);
    CHECK(m.actions[0].body->op == CmdOp::Skip);
    CHECK(m.relations.empty());
}

TEST_CASE("parsing the leader-election sketch") {
    ProgramModel m = parse(kLeaderSketch);
    REQUIRE(m.actions.size() == 2);
    CHECK(m.actions[0].name == "send_packet");
    CHECK(m.actions[1].name == "receive_packet");
    REQUIRE(m.axioms.size() == 1);
    CHECK(classify(m.axioms[0]) == QuantClass::EPR);
}

TEST_CASE("parse errors carry line and column") {
    try {
        parse("relation r(2)\naction a {\n  assume q(x)\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("3:") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("relation r(two)"), ParseError);
    CHECK_THROWS_AS(parse("relation r(1)\nrelation r(1)"), ParseError);
    CHECK_THROWS_AS(parse("action a { r(x) := true }"), ParseError); // undeclared r
    CHECK_THROWS_AS(parse("variable v\naction a { v := true }"), ParseError);
}

TEST_CASE("reserved identifiers are rejected in declarations") {
    CHECK_THROWS_AS(parse("relation error(0)"), ParseError);
    CHECK_THROWS_AS(parse("variable sk_witness"), ParseError);
    CHECK_THROWS_AS(parse("relation inst_r(1)"), ParseError);
    // ... but locals may use the sk_/inst_ prefixes (instrumentation output).
    ProgramModel m = parse("relation p(1)\naction a { local inst_0 := *; assume p(inst_0) }");
    CHECK(m.actions.size() == 1);
    CHECK_THROWS_AS(parse("action a { local error := * }"), ParseError);
}

TEST_CASE("local scoping") {
    // A local is visible after its introduction, within the enclosing block.
    CHECK_NOTHROW(parse("relation p(1)\naction a { local v := *; assume p(v) }"));
    // Not before it.
    CHECK_THROWS_AS(parse("relation p(1)\naction a { assume p(v); local v := * }"), ParseError);
    // Not after its block closes.
    CHECK_THROWS_AS(
        parse("relation p(1)\naction a { { local v := *; skip }; assume p(v) }"), ParseError);
    // Duplicates in one block are rejected; shadowing globals is rejected.
    CHECK_THROWS_AS(parse("action a { local v := *; local v := * }"), ParseError);
    CHECK_THROWS_AS(parse("variable g\naction a { local g := * }"), ParseError);
    CHECK_THROWS_AS(parse("variable g\naction a(g) { skip }"), ParseError);

    // Same surface name in sibling blocks maps to distinct constants.
    ProgramModel m = desugar(parse(
        "relation p(1)\naction a { { local v := *; assume p(v) }; { local v := *; assume p(v) } }"));
    REQUIRE(m.actions[0].locals.size() == 2);
    CHECK(m.actions[0].locals[0].name != m.actions[0].locals[1].name);
}

TEST_CASE("quantified variables cannot shadow symbols") {
    CHECK_THROWS_AS(parse("variable c\ninit forall c. c = c"), ParseError);
    CHECK_THROWS_AS(parse("relation p(1)\naction a(u) { assume forall u. p(u) }"), ParseError);
}

TEST_CASE("desugar: if-else becomes assume-guarded choice") {
    ProgramModel m = desugar(parse(
        "relation p(1)\nvariable c\naction a { if p(c) { skip } else { abort } }"));
    const CommandRef& b0 = m.actions[0].body;
    REQUIRE(b0->op == CmdOp::Choice);
    std::vector<CommandRef> then_cmds, else_cmds;
    flatten(b0->c1, then_cmds);
    flatten(b0->c2, else_cmds);
    REQUIRE(then_cmds.size() == 2);
    CHECK(then_cmds[0]->op == CmdOp::Assume);
    CHECK(to_string(then_cmds[0]->body) == "p(c)");
    REQUIRE(else_cmds.size() == 2);
    CHECK(else_cmds[0]->op == CmdOp::Assume);
    CHECK(to_string(else_cmds[0]->body) == "!p(c)");
    // The abort branch sets `error`.
    CHECK(then_cmds[1]->op == CmdOp::Skip);
    CHECK(else_cmds[1]->op == CmdOp::RelUpdate);
    CHECK(else_cmds[1]->rel.name == "error");
    CHECK(to_string(else_cmds[1]->body) == "true");
}

TEST_CASE("desugar: if without else gets a skip branch") {
    ProgramModel m = desugar(parse("relation p(0)\naction a { if p { skip } }"));
    const CommandRef& b = m.actions[0].body;
    REQUIRE(b->op == CmdOp::Choice);
    std::vector<CommandRef> else_cmds;
    flatten(b->c2, else_cmds);
    REQUIRE(else_cmds.size() == 2);
    CHECK(else_cmds[0]->op == CmdOp::Assume);
    CHECK(else_cmds[1]->op == CmdOp::Skip);
}

TEST_CASE("desugar: insert and remove expand to whole-relation updates") {
    ProgramModel m = desugar(parse(
        "relation r(2)\nvariable a\nvariable b\n"
        "action ins { r.insert(a, b) }\n"
        "action grd { r.insert(a, b | a = b) }\n"
        "action rem { r.remove(a, b) }"));
    auto& ins = m.actions[0].body;
    REQUIRE(ins->op == CmdOp::RelUpdate);
    CHECK(ins->rel.name == "r");
    CHECK(ins->params == std::vector<std::string>{"x_0", "x_1"});
    CHECK(to_string(ins->body) == "(r(x_0, x_1) | ((x_0 = a) & (x_1 = b)))");
    auto& grd = m.actions[1].body;
    CHECK(to_string(grd->body) == "(r(x_0, x_1) | ((x_0 = a) & (x_1 = b) & (a = b)))");
    auto& rem = m.actions[2].body;
    CHECK(to_string(rem->body) == "(r(x_0, x_1) & !((x_0 = a) & (x_1 = b)))");
}

TEST_CASE("desugar: action parameters become leading havocked locals") {
    ProgramModel m = desugar(parse("relation p(1)\naction a(u, v) { assume p(u) & p(v) }"));
    const Action& a = m.actions[0];
    REQUIRE(a.locals.size() == 2);
    CHECK(a.locals[0].name == "u");
    CHECK(a.locals[1].name == "v");
    std::vector<CommandRef> cmds;
    flatten(a.body, cmds);
    REQUIRE(cmds.size() == 3);
    CHECK(cmds[0]->op == CmdOp::Havoc);
    CHECK(cmds[0]->var == "u");
    CHECK(cmds[1]->op == CmdOp::Havoc);
    CHECK(cmds[1]->var == "v");
    CHECK(cmds[2]->op == CmdOp::Assume);
}

TEST_CASE("desugar: abort materializes the error relation exactly once") {
    ProgramModel m = desugar(parse("action a { abort }\naction b { abort }"));
    CHECK(m.uses_error);
    REQUIRE(m.vocab.contains("error"));
    CHECK(m.vocab.find("error")->arity == 0);
    // !error conjoined to inits, invariants, and safety — once.
    REQUIRE(m.inits.size() == 1);
    CHECK(to_string(m.inits[0]) == "!error");
    REQUIRE(m.invariants.size() == 1);
    CHECK(to_string(m.invariants[0]) == "!error");
    REQUIRE(m.safety.size() == 1);
    CHECK(to_string(m.safety[0]) == "!error");

    ProgramModel noabort = desugar(parse("action a { skip }"));
    CHECK_FALSE(noabort.uses_error);
    CHECK_FALSE(noabort.vocab.contains("error"));
}

TEST_CASE("desugar: idempotent and core-only") {
    for (const char* src : {kClientServer, kLeaderSketch}) {
        ProgramModel m = desugar(parse(src));
        for (auto& a : m.actions) CHECK(core_only(a.body));
        ProgramModel m2 = desugar(m);
        CHECK(m2.actions.size() == m.actions.size());
        for (size_t i = 0; i < m.actions.size(); i++) {
            std::ostringstream s1, s2;
            detail_fe::print_cmd(s1, m.actions[i].body, 0);
            detail_fe::print_cmd(s2, m2.actions[i].body, 0);
            CHECK(s1.str() == s2.str());
        }
        CHECK(m2.inits.size() == m.inits.size());
    }
}

TEST_CASE("validate: conforming model has no diagnostics") {
    CHECK(validate(desugar(parse(kClientServer))).empty());
    CHECK(validate(desugar(parse(kLeaderSketch))).empty());
}

TEST_CASE("validate: assume must be exists*-forall*") {
    ProgramModel m = desugar(parse(
        "relation e(2)\naction a { assume forall x. exists y. e(x, y) }"));
    auto diags = validate(m);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("exists*-forall*") != std::string::npos);
    // Universal and existential assumes are fine.
    CHECK(validate(desugar(parse("relation e(2)\naction a { assume exists x. forall y. e(x, y) }")))
              .empty());
}

TEST_CASE("validate: update bodies must be quantifier-free") {
    ProgramModel m = desugar(parse(
        "relation r(1)\nrelation e(2)\naction a { r(x) := exists y. e(x, y) }"));
    auto diags = validate(m);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("quantifier-free") != std::string::npos);
}

TEST_CASE("validate: open assume is flagged") {
    // An if-condition with a stray variable never parses (undeclared), so an
    // open assume can only be produced by hand-built ASTs.
    ProgramModel m = desugar(parse("relation p(1)\naction a { skip }"));
    Action& a = m.actions[0];
    a.body = mk_assume(mk_atom(relation_sym("p", 1), {mk_var("x")}));
    auto diags = validate(m);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("closed") != std::string::npos);
}

TEST_CASE("nullary relation update and havoc forms") {
    ProgramModel m = parse("relation f(0)\nvariable v\naction a { f := false; v := * }");
    std::vector<CommandRef> cmds;
    flatten(m.actions[0].body, cmds);
    REQUIRE(cmds.size() == 2);
    CHECK(cmds[0]->op == CmdOp::RelUpdate);
    CHECK(cmds[0]->params.empty());
    CHECK(to_string(cmds[0]->body) == "false");
    CHECK(cmds[1]->op == CmdOp::Havoc);
    CHECK(cmds[1]->var == "v");
}

TEST_CASE("explicit choice with braced operands") {
    ProgramModel m = parse("relation p(0)\naction a { { assume p; skip } | { skip } }");
    const CommandRef& b = m.actions[0].body;
    REQUIRE(b->op == CmdOp::Choice);
    CHECK(b->c1->op == CmdOp::Seq);
    CHECK(b->c2->op == CmdOp::Skip);
}

TEST_CASE("print and reparse is stable") {
    for (const char* src : {kClientServer, kLeaderSketch}) {
        ProgramModel m1 = parse(src);
        std::string printed = print_model(m1);
        ProgramModel m2 = parse(printed);
        CHECK(print_model(m2) == printed);
        CHECK(m2.actions.size() == m1.actions.size());
    }
}

TEST_CASE("standalone formula parsing") {
    Vocabulary v;
    v.add(relation_sym("p", 1));
    v.add(constant_sym("c"));
    auto f = parse_formula("forall x. p(x) -> x = c", v);
    CHECK(to_string(f) == "(forall x. (p(x) -> (x = c)))");
    // Round-trips through the printer.
    CHECK(to_string(parse_formula(to_string(f), v)) == to_string(f));
    CHECK_THROWS_AS(parse_formula("p(c) & q(c)", v), ParseError);

    // Primed symbols and functions need explicit opt-in (two-vocabulary use).
    Vocabulary v2 = v;
    v2.add(relation_sym("p", 1, true));
    v2.add(function_sym("sk_w_0", 1));
    CHECK_THROWS_AS(parse_formula("p'(c)", v2), ParseError);
    FormulaParseOptions opts;
    opts.allow_primed = true;
    opts.allow_functions = true;
    CHECK(to_string(parse_formula("p'(c) & p(sk_w_0(c))", v2, opts)) == "(p'(c) & p(sk_w_0(c)))");
}

TEST_CASE("formula operator precedence and associativity") {
    Vocabulary v;
    v.add(relation_sym("a", 0));
    v.add(relation_sym("b", 0));
    v.add(relation_sym("c", 0));
    CHECK(to_string(parse_formula("a | b & c", v)) == "(a | (b & c))");
    CHECK(to_string(parse_formula("a -> b -> c", v)) == "(a -> (b -> c))");
    CHECK(to_string(parse_formula("!a & b", v)) == "(!a & b)");
    CHECK(to_string(parse_formula("a & b -> c", v)) == "((a & b) -> c)");
    CHECK(to_string(parse_formula("a <-> b -> c", v)) == "(a <-> (b -> c))");
}
