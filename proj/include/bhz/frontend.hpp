#pragma once

// Surface language: lexer, parser, validator, and desugaring.
//
// A model file declares a relational vocabulary and a transition system:
//
//   relation req(2)          # relation with arity
//   variable c               # program variable (a logical constant)
//   axiom <formula>          # EPR-shaped background assumption
//   init <formula>           # initial-state sentence
//   invariant <formula>      # candidate inductive invariant conjunct
//   safety <formula>         # safety property conjunct
//   action name(p, q) { … }  # named transition
//
// Commands inside an action body:
//
//   skip | abort | assume F | v := * | r(x, y) := F | r := F (nullary)
//   local v := *             # scoped fresh constant, havocked
//   r.insert(t, u | F)       # add tuples; guard F optional
//   r.remove(t, u | F)       # remove tuples
//   if F { C } else { C }    # else branch optional
//   C ; C                    # sequencing
//   { C } | { C }            # nondeterministic choice
//
// `#` starts a comment; newlines are whitespace.  `assume`, `:=` bodies and
// if-conditions extend maximally to the right, so choice operands are
// conventionally braced.  Desugaring lowers every command to the seven core
// forms (skip, abort, relation update, havoc, assume, seq, choice), turns
// action parameters into leading havocked locals, and encodes `abort` as a
// reserved nullary relation `error` set to true, with !error conjoined to the
// initial condition, the invariant, and the safety property.

#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bhz/fol.hpp"

namespace bhz {

// ---------------------------------------------------------------- commands

enum class CmdOp {
    // Core forms (the only ones surviving desugar):
    Skip, Abort, RelUpdate, Havoc, Assume, Seq, Choice,
    // Sugar forms:
    Local, If, Insert, Remove
};

struct CommandNode;
using CommandRef = std::shared_ptr<const CommandNode>;

struct CommandNode {
    CmdOp op;
    Symbol rel;                      // RelUpdate / Insert / Remove
    std::vector<std::string> params; // RelUpdate: variables bound in body
    FormulaRef body;                 // RelUpdate body / Assume / If condition / Insert,Remove guard (may be null)
    std::vector<TermRef> terms;      // Insert / Remove tuple
    std::string var;                 // Havoc / Local constant name
    CommandRef c1, c2;               // Seq, Choice both; If: then / optional else
};

inline CommandRef mk_skip() {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::Skip;
    return n;
}
inline CommandRef mk_abort() {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::Abort;
    return n;
}
inline CommandRef mk_rel_update(Symbol r, std::vector<std::string> params, FormulaRef body) {
    if (r.kind != SymKind::Relation || r.arity != params.size())
        throw std::invalid_argument("relation update: arity mismatch for " + r.name);
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::RelUpdate;
    n->rel = std::move(r);
    n->params = std::move(params);
    n->body = std::move(body);
    return n;
}
inline CommandRef mk_havoc(std::string var) {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::Havoc;
    n->var = std::move(var);
    return n;
}
inline CommandRef mk_assume(FormulaRef phi) {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::Assume;
    n->body = std::move(phi);
    return n;
}
inline CommandRef mk_seq(CommandRef a, CommandRef b) {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::Seq;
    n->c1 = std::move(a);
    n->c2 = std::move(b);
    return n;
}
inline CommandRef mk_seq(std::vector<CommandRef> cs) {
    if (cs.empty()) return mk_skip();
    CommandRef out = cs.back();
    for (size_t i = cs.size() - 1; i-- > 0;) out = mk_seq(cs[i], out);
    return out;
}
inline CommandRef mk_choice(CommandRef a, CommandRef b) {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::Choice;
    n->c1 = std::move(a);
    n->c2 = std::move(b);
    return n;
}
inline CommandRef mk_local(std::string var) {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::Local;
    n->var = std::move(var);
    return n;
}
inline CommandRef mk_if(FormulaRef cond, CommandRef then_c, CommandRef else_c = nullptr) {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::If;
    n->body = std::move(cond);
    n->c1 = std::move(then_c);
    n->c2 = std::move(else_c);
    return n;
}
inline CommandRef mk_insert(Symbol r, std::vector<TermRef> terms, FormulaRef guard = nullptr) {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::Insert;
    n->rel = std::move(r);
    n->terms = std::move(terms);
    n->body = std::move(guard);
    return n;
}
inline CommandRef mk_remove(Symbol r, std::vector<TermRef> terms, FormulaRef guard = nullptr) {
    auto n = std::make_shared<CommandNode>();
    n->op = CmdOp::Remove;
    n->rel = std::move(r);
    n->terms = std::move(terms);
    n->body = std::move(guard);
    return n;
}

// ------------------------------------------------------------------ model

struct Action {
    std::string name;
    std::vector<std::string> params; // surface parameter names
    CommandRef body;
    std::vector<Symbol> locals;      // filled by desugar: params + local constants
};

struct ProgramModel {
    Vocabulary vocab;                // persistent state symbols only (no locals)
    std::vector<Symbol> relations;   // declaration order
    std::vector<Symbol> variables;   // program variables, declaration order
    std::vector<FormulaRef> axioms;
    std::vector<FormulaRef> inits;
    std::vector<FormulaRef> invariants;
    std::vector<FormulaRef> safety;
    std::vector<Action> actions;
    bool desugared = false;
    bool uses_error = false;         // `error` relation materialized

    const Action* find_action(const std::string& name) const {
        for (auto& a : actions)
            if (a.name == name) return &a;
        return nullptr;
    }
};

// A source-position-carrying error (lexical, syntactic, or resolution).
struct ParseError : std::runtime_error {
    unsigned line, col;
    ParseError(unsigned line_, unsigned col_, const std::string& msg)
        : std::runtime_error(std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
          line(line_), col(col_) {}
};

inline const std::string kErrorRelName = "error";
inline bool reserved_decl_name(const std::string& n) {
    return n == kErrorRelName || n.rfind("sk_", 0) == 0 || n.rfind("inst_", 0) == 0;
}

// ------------------------------------------------------------------ lexer

namespace detail_fe {

enum class Tok { Ident, Int, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    bool primed = false; // ident followed by '
    unsigned line = 1, col = 1;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : m_src(src) { advance(); }

    const Token& peek() const { return m_tok; }
    Token next() {
        Token t = m_tok;
        advance();
        return t;
    }

  private:
    void advance() {
        while (m_pos < m_src.size()) {
            char c = m_src[m_pos];
            if (c == '#') {
                while (m_pos < m_src.size() && m_src[m_pos] != '\n') m_pos++;
            } else if (c == '\n') {
                m_pos++;
                m_line++;
                m_col = 1;
            } else if (std::isspace((unsigned char)c)) {
                m_pos++;
                m_col++;
            } else {
                break;
            }
        }
        m_tok = Token{};
        m_tok.line = m_line;
        m_tok.col = m_col;
        if (m_pos >= m_src.size()) {
            m_tok.kind = Tok::End;
            return;
        }
        char c = m_src[m_pos];
        if (std::isalpha((unsigned char)c) || c == '_') {
            size_t start = m_pos;
            while (m_pos < m_src.size() &&
                   (std::isalnum((unsigned char)m_src[m_pos]) || m_src[m_pos] == '_'))
                take();
            m_tok.kind = Tok::Ident;
            m_tok.text = m_src.substr(start, m_pos - start);
            if (m_pos < m_src.size() && m_src[m_pos] == '\'') {
                take();
                m_tok.primed = true;
            }
            return;
        }
        if (std::isdigit((unsigned char)c)) {
            size_t start = m_pos;
            while (m_pos < m_src.size() && std::isdigit((unsigned char)m_src[m_pos])) take();
            m_tok.kind = Tok::Int;
            m_tok.text = m_src.substr(start, m_pos - start);
            return;
        }
        m_tok.kind = Tok::Punct;
        auto two = m_src.substr(m_pos, 2);
        auto three = m_src.substr(m_pos, 3);
        if (three == "<->") {
            m_tok.text = three;
        } else if (two == "->" || two == ":=" || two == "!=") {
            m_tok.text = two;
        } else {
            m_tok.text = std::string(1, c);
        }
        for (size_t i = 0; i < m_tok.text.size(); i++) take();
    }
    void take() {
        m_pos++;
        m_col++;
    }

    const std::string& m_src;
    size_t m_pos = 0;
    unsigned m_line = 1, m_col = 1;
    Token m_tok;
};

inline const std::set<std::string> kKeywords = {
    "relation", "variable", "axiom", "init",  "invariant", "safety", "action", "skip",
    "abort",    "assume",   "local", "if",    "else",      "forall", "exists", "true",
    "false"};

// ----------------------------------------------------------------- parser

struct ParserOptions {
    bool allow_primed = false;    // permit primed symbols (two-vocabulary formulas)
    bool allow_functions = false; // permit function applications (Skolemized formulas)
};

class Parser {
  public:
    Parser(const std::string& src, ParserOptions opts = {}) : m_lex(src), m_opts(opts) {}

    ProgramModel parse_model() {
        ProgramModel m;
        m_model = &m;
        while (m_lex.peek().kind != Tok::End) {
            Token t = expect_ident_like("declaration keyword");
            if (t.text == "relation") {
                parse_relation_decl(t);
            } else if (t.text == "variable") {
                Token name = expect_plain_ident("variable name");
                check_decl_name(name);
                Symbol s = constant_sym(name.text);
                add_decl(name, s);
                m.variables.push_back(s);
            } else if (t.text == "axiom") {
                m.axioms.push_back(parse_formula());
            } else if (t.text == "init") {
                m.inits.push_back(parse_formula());
            } else if (t.text == "invariant") {
                m.invariants.push_back(parse_formula());
            } else if (t.text == "safety") {
                m.safety.push_back(parse_formula());
            } else if (t.text == "action") {
                parse_action();
            } else {
                throw ParseError(t.line, t.col, "expected a declaration, found '" + t.text + "'");
            }
        }
        return m;
    }

    // Standalone formula over the given vocabulary (no action context).
    FormulaRef parse_standalone_formula(const Vocabulary& v) {
        ProgramModel m;
        m.vocab = v;
        m_model = &m;
        FormulaRef f = parse_formula();
        Token t = m_lex.peek();
        if (t.kind != Tok::End)
            throw ParseError(t.line, t.col, "trailing input after formula: '" + t.text + "'");
        return f;
    }

  private:
    // ------------------------------------------------ declarations

    void parse_relation_decl(const Token& kw) {
        (void)kw;
        Token name = expect_plain_ident("relation name");
        check_decl_name(name);
        expect_punct("(");
        Token ar = m_lex.next();
        if (ar.kind != Tok::Int)
            throw ParseError(ar.line, ar.col, "expected relation arity (integer)");
        expect_punct(")");
        Symbol s = relation_sym(name.text, (unsigned)std::stoul(ar.text));
        add_decl(name, s);
        m_model->relations.push_back(s);
    }

    void check_decl_name(const Token& name) {
        if (kKeywords.count(name.text))
            throw ParseError(name.line, name.col, "'" + name.text + "' is a keyword");
        if (reserved_decl_name(name.text))
            throw ParseError(name.line, name.col,
                             "'" + name.text + "' is reserved (error, sk_*, inst_*)");
    }
    void add_decl(const Token& name, const Symbol& s) {
        if (m_model->vocab.contains(s.name))
            throw ParseError(name.line, name.col, "duplicate declaration of '" + s.name + "'");
        m_model->vocab.add(s);
    }

    void parse_action() {
        Token name = expect_plain_ident("action name");
        if (kKeywords.count(name.text))
            throw ParseError(name.line, name.col, "'" + name.text + "' is a keyword");
        for (auto& a : m_model->actions)
            if (a.name == name.text)
                throw ParseError(name.line, name.col, "duplicate action '" + name.text + "'");
        Action act;
        act.name = name.text;
        m_scopes.clear();
        m_action_names.clear();
        m_scopes.emplace_back(); // parameter scope
        if (peek_punct("(")) {   // parameter list is optional
            m_lex.next();
            if (!peek_punct(")")) {
                for (;;) {
                    Token p = expect_plain_ident("parameter name");
                    act.params.push_back(declare_local(p));
                    if (peek_punct(",")) {
                        m_lex.next();
                        continue;
                    }
                    break;
                }
            }
            expect_punct(")");
        }
        expect_punct("{");
        act.body = parse_command_until("}");
        expect_punct("}");
        m_scopes.clear();
        m_model->actions.push_back(std::move(act));
    }

    // ------------------------------------------------ local scoping

    // Declare a local (or parameter): the surface name maps to a unique
    // constant name within the action (first use keeps the surface name).
    std::string declare_local(const Token& name) {
        if (kKeywords.count(name.text))
            throw ParseError(name.line, name.col, "'" + name.text + "' is a keyword");
        if (m_model->vocab.contains(name.text))
            throw ParseError(name.line, name.col,
                             "local '" + name.text + "' shadows a declared symbol");
        if (name.text == kErrorRelName)
            throw ParseError(name.line, name.col, "'error' is reserved");
        if (m_scopes.back().count(name.text))
            throw ParseError(name.line, name.col,
                             "duplicate local '" + name.text + "' in the same block");
        std::string unique = fresh_name(name.text, m_action_names);
        m_action_names.insert(unique);
        m_scopes.back()[name.text] = unique;
        return unique;
    }

    const std::string* lookup_local(const std::string& name) const {
        for (auto it = m_scopes.rbegin(); it != m_scopes.rend(); ++it) {
            auto hit = it->find(name);
            if (hit != it->end()) return &hit->second;
        }
        return nullptr;
    }

    // ------------------------------------------------ commands

    CommandRef parse_command_until(const std::string& closer) {
        CommandRef left = parse_seq(closer);
        while (peek_punct("|")) {
            m_lex.next();
            CommandRef right = parse_seq(closer);
            left = mk_choice(left, right);
        }
        return left;
    }

    CommandRef parse_seq(const std::string& closer) {
        std::vector<CommandRef> cmds;
        cmds.push_back(parse_atom_command());
        while (peek_punct(";")) {
            m_lex.next();
            if (peek_punct(closer) || peek_punct("|")) break; // trailing ';'
            cmds.push_back(parse_atom_command());
        }
        return mk_seq(std::move(cmds));
    }

    CommandRef parse_atom_command() {
        Token t = m_lex.peek();
        if (t.kind == Tok::Punct && t.text == "{") {
            m_lex.next();
            m_scopes.emplace_back();
            CommandRef c = parse_command_until("}");
            m_scopes.pop_back();
            expect_punct("}");
            return c;
        }
        if (t.kind != Tok::Ident)
            throw ParseError(t.line, t.col, "expected a command, found '" + t.text + "'");
        if (t.text == "skip") {
            m_lex.next();
            return mk_skip();
        }
        if (t.text == "abort") {
            m_lex.next();
            return mk_abort();
        }
        if (t.text == "assume") {
            m_lex.next();
            return mk_assume(parse_formula());
        }
        if (t.text == "local") {
            m_lex.next();
            Token name = expect_plain_ident("local name");
            expect_punct(":=");
            expect_punct("*");
            return mk_local(declare_local(name));
        }
        if (t.text == "if") {
            m_lex.next();
            FormulaRef cond = parse_formula();
            CommandRef then_c = parse_block();
            CommandRef else_c;
            if (m_lex.peek().kind == Tok::Ident && m_lex.peek().text == "else") {
                m_lex.next();
                else_c = parse_block();
            }
            return mk_if(cond, then_c, else_c);
        }
        // Remaining: r(x,y) := F | v := * | r := F | r.insert(...) | r.remove(...)
        Token name = m_lex.next();
        if (name.primed)
            throw ParseError(name.line, name.col, "primed symbols cannot be assigned");
        if (peek_punct(".")) {
            m_lex.next();
            Token op = expect_plain_ident("insert or remove");
            const Symbol* r = m_model->vocab.find(name.text);
            if (!r || r->kind != SymKind::Relation)
                throw ParseError(name.line, name.col, "'" + name.text + "' is not a relation");
            expect_punct("(");
            std::vector<TermRef> terms;
            FormulaRef guard;
            if (!peek_punct(")")) {
                for (;;) {
                    terms.push_back(parse_term());
                    if (peek_punct(",")) {
                        m_lex.next();
                        continue;
                    }
                    break;
                }
                if (peek_punct("|")) {
                    m_lex.next();
                    guard = parse_formula();
                }
            }
            expect_punct(")");
            if (terms.size() != r->arity)
                throw ParseError(name.line, name.col, "arity mismatch for '" + name.text + "'");
            if (op.text == "insert") return mk_insert(*r, std::move(terms), guard);
            if (op.text == "remove") return mk_remove(*r, std::move(terms), guard);
            throw ParseError(op.line, op.col, "expected insert or remove");
        }
        if (peek_punct("(")) {
            // Relation update with explicit parameters.
            const Symbol* r = m_model->vocab.find(name.text);
            if (!r || r->kind != SymKind::Relation)
                throw ParseError(name.line, name.col, "'" + name.text + "' is not a relation");
            m_lex.next();
            std::vector<std::string> params;
            if (!peek_punct(")")) {
                for (;;) {
                    Token p = expect_plain_ident("update parameter");
                    if (m_model->vocab.contains(p.text) || lookup_local(p.text))
                        throw ParseError(p.line, p.col,
                                         "update parameter '" + p.text + "' shadows a symbol");
                    params.push_back(p.text);
                    if (peek_punct(",")) {
                        m_lex.next();
                        continue;
                    }
                    break;
                }
            }
            expect_punct(")");
            expect_punct(":=");
            m_update_params = &params;
            FormulaRef body = parse_formula();
            m_update_params = nullptr;
            if (params.size() != r->arity)
                throw ParseError(name.line, name.col, "arity mismatch for '" + name.text + "'");
            return mk_rel_update(*r, std::move(params), body);
        }
        expect_punct(":=");
        if (peek_punct("*")) {
            m_lex.next();
            // Havoc of a program variable or local.
            if (const std::string* local = lookup_local(name.text)) return mk_havoc(*local);
            const Symbol* s = m_model->vocab.find(name.text);
            if (s && s->kind == SymKind::Constant) return mk_havoc(s->name);
            throw ParseError(name.line, name.col,
                             "'" + name.text + "' is not a program variable or local");
        }
        // Nullary relation update.
        const Symbol* r = m_model->vocab.find(name.text);
        if (!r || r->kind != SymKind::Relation || r->arity != 0)
            throw ParseError(name.line, name.col,
                             "'" + name.text + "' is not a nullary relation (did you mean ':= *'?)");
        return mk_rel_update(*r, {}, parse_formula());
    }

    CommandRef parse_block() {
        expect_punct("{");
        m_scopes.emplace_back();
        CommandRef c = parse_command_until("}");
        m_scopes.pop_back();
        expect_punct("}");
        return c;
    }

    // ------------------------------------------------ formulas

    FormulaRef parse_formula() { return parse_iff(); }

    FormulaRef parse_iff() {
        FormulaRef l = parse_implies();
        while (peek_punct("<->")) {
            m_lex.next();
            l = mk_iff(l, parse_implies());
        }
        return l;
    }
    FormulaRef parse_implies() {
        FormulaRef l = parse_or();
        if (peek_punct("->")) {
            m_lex.next();
            return mk_implies(l, parse_implies()); // right-associative
        }
        return l;
    }
    FormulaRef parse_or() {
        FormulaRef l = parse_and();
        while (peek_punct("|")) {
            m_lex.next();
            l = mk_or(l, parse_and());
        }
        return l;
    }
    FormulaRef parse_and() {
        FormulaRef l = parse_unary();
        while (peek_punct("&")) {
            m_lex.next();
            l = mk_and(l, parse_unary());
        }
        return l;
    }
    FormulaRef parse_unary() {
        Token t = m_lex.peek();
        if (t.kind == Tok::Punct && t.text == "!") {
            m_lex.next();
            return mk_not(parse_unary());
        }
        if (t.kind == Tok::Ident && (t.text == "forall" || t.text == "exists")) {
            m_lex.next();
            std::vector<std::string> vars;
            for (;;) {
                Token v = expect_plain_ident("quantified variable");
                if (m_model->vocab.contains(v.text) || lookup_local(v.text))
                    throw ParseError(v.line, v.col,
                                     "quantified variable '" + v.text + "' shadows a symbol");
                vars.push_back(v.text);
                if (peek_punct(",")) {
                    m_lex.next();
                    continue;
                }
                break;
            }
            expect_punct(".");
            for (auto& v : vars) m_qvars.push_back(v);
            FormulaRef body = parse_iff(); // maximal scope
            m_qvars.resize(m_qvars.size() - vars.size());
            return t.text == "forall" ? mk_forall(vars, body) : mk_exists(vars, body);
        }
        return parse_atom_or_eq();
    }

    FormulaRef parse_atom_or_eq() {
        Token t = m_lex.peek();
        if (t.kind == Tok::Punct && t.text == "(") {
            m_lex.next();
            FormulaRef f = parse_formula();
            expect_punct(")");
            return f;
        }
        if (t.kind == Tok::Ident && t.text == "true" && !t.primed) {
            m_lex.next();
            return mk_true();
        }
        if (t.kind == Tok::Ident && t.text == "false" && !t.primed) {
            m_lex.next();
            return mk_false();
        }
        if (t.kind != Tok::Ident)
            throw ParseError(t.line, t.col, "expected a formula, found '" + t.text + "'");
        // Parse an applied-or-bare identifier, then decide equality vs atom.
        Token name = m_lex.next();
        std::vector<TermRef> args;
        bool applied = false;
        if (peek_punct("(")) {
            applied = true;
            m_lex.next();
            if (!peek_punct(")")) {
                for (;;) {
                    args.push_back(parse_term());
                    if (peek_punct(",")) {
                        m_lex.next();
                        continue;
                    }
                    break;
                }
            }
            expect_punct(")");
        }
        if (peek_punct("=") || peek_punct("!=")) {
            bool neg = m_lex.next().text == "!=";
            TermRef lhs = resolve_term(name, applied, args);
            TermRef rhs = parse_term();
            FormulaRef eq = mk_eq(lhs, rhs);
            return neg ? mk_not(eq) : eq;
        }
        // Atom position: must be a relation.
        const Symbol* r = m_model->vocab.find(name.text, name.primed);
        if (!r || r->kind != SymKind::Relation)
            throw ParseError(name.line, name.col,
                             "'" + display_of(name) + "' is not a declared relation");
        if (name.primed && !m_opts.allow_primed)
            throw ParseError(name.line, name.col, "primed symbols are not allowed here");
        if (r->arity != args.size())
            throw ParseError(name.line, name.col, "arity mismatch for '" + display_of(name) + "'");
        return mk_atom(*r, std::move(args));
    }

    TermRef parse_term() {
        Token t = m_lex.next();
        if (t.kind != Tok::Ident)
            throw ParseError(t.line, t.col, "expected a term, found '" + t.text + "'");
        std::vector<TermRef> args;
        bool applied = false;
        if (peek_punct("(")) {
            applied = true;
            m_lex.next();
            if (!peek_punct(")")) {
                for (;;) {
                    args.push_back(parse_term());
                    if (peek_punct(",")) {
                        m_lex.next();
                        continue;
                    }
                    break;
                }
            }
            expect_punct(")");
        }
        return resolve_term(t, applied, args);
    }

    TermRef resolve_term(const Token& name, bool applied, std::vector<TermRef>& args) {
        if (applied) {
            const Symbol* f = m_model->vocab.find(name.text, name.primed);
            if (!f || f->kind != SymKind::Function)
                throw ParseError(name.line, name.col,
                                 "'" + display_of(name) + "' is not a declared function");
            if (!m_opts.allow_functions)
                throw ParseError(name.line, name.col, "function applications are not allowed here");
            if (name.primed && !m_opts.allow_primed)
                throw ParseError(name.line, name.col, "primed symbols are not allowed here");
            if (f->arity != args.size())
                throw ParseError(name.line, name.col,
                                 "arity mismatch for '" + display_of(name) + "'");
            return mk_app(*f, std::move(args));
        }
        if (!name.primed) {
            // Innermost first: quantified variables, update parameters, locals.
            for (auto it = m_qvars.rbegin(); it != m_qvars.rend(); ++it)
                if (*it == name.text) return mk_var(name.text);
            if (m_update_params)
                for (auto& p : *m_update_params)
                    if (p == name.text) return mk_var(name.text);
            if (const std::string* local = lookup_local(name.text))
                return mk_const(constant_sym(*local));
        }
        const Symbol* c = m_model->vocab.find(name.text, name.primed);
        if (!c || c->kind != SymKind::Constant)
            throw ParseError(name.line, name.col,
                             "undeclared identifier '" + display_of(name) + "'");
        if (name.primed && !m_opts.allow_primed)
            throw ParseError(name.line, name.col, "primed symbols are not allowed here");
        return mk_const(*c);
    }

    // ------------------------------------------------ token helpers

    static std::string display_of(const Token& t) { return t.primed ? t.text + "'" : t.text; }

    bool peek_punct(const std::string& p) const {
        return m_lex.peek().kind == Tok::Punct && m_lex.peek().text == p;
    }
    void expect_punct(const std::string& p) {
        Token t = m_lex.next();
        if (t.kind != Tok::Punct || t.text != p)
            throw ParseError(t.line, t.col, "expected '" + p + "', found '" + t.text + "'");
    }
    Token expect_ident_like(const char* what) {
        Token t = m_lex.next();
        if (t.kind != Tok::Ident)
            throw ParseError(t.line, t.col, std::string("expected ") + what);
        return t;
    }
    Token expect_plain_ident(const char* what) {
        Token t = expect_ident_like(what);
        if (t.primed) throw ParseError(t.line, t.col, std::string("expected ") + what);
        return t;
    }

    Lexer m_lex;
    ParserOptions m_opts;
    ProgramModel* m_model = nullptr;
    std::vector<std::map<std::string, std::string>> m_scopes; // local surface -> unique
    std::set<std::string> m_action_names;                     // unique names used in action
    std::vector<std::string> m_qvars;                         // quantified variables in scope
    const std::vector<std::string>* m_update_params = nullptr;
};

} // namespace detail_fe

// ------------------------------------------------------------- public API

inline ProgramModel parse(const std::string& source) {
    detail_fe::Parser p(source);
    return p.parse_model();
}

struct FormulaParseOptions {
    bool allow_primed = false;
    bool allow_functions = false;
};

inline FormulaRef parse_formula(const std::string& source, const Vocabulary& vocab,
                                FormulaParseOptions opts = {}) {
    detail_fe::ParserOptions po;
    po.allow_primed = opts.allow_primed;
    po.allow_functions = opts.allow_functions;
    detail_fe::Parser p(source, po);
    return p.parse_standalone_formula(vocab);
}

// ---------------------------------------------------------------- desugar

namespace detail_fe {

struct DesugarCtx {
    std::vector<Symbol>* locals;
    bool* saw_abort;
    Symbol error_rel;
};

inline CommandRef desugar_cmd(const CommandRef& c, DesugarCtx& ctx) {
    switch (c->op) {
        case CmdOp::Skip:
        case CmdOp::Havoc:
        case CmdOp::Assume:
        case CmdOp::RelUpdate: return c;
        case CmdOp::Abort:
            *ctx.saw_abort = true;
            return mk_rel_update(ctx.error_rel, {}, mk_true());
        case CmdOp::Local:
            ctx.locals->push_back(constant_sym(c->var));
            return mk_havoc(c->var);
        case CmdOp::Seq: {
            CommandRef a = desugar_cmd(c->c1, ctx); // evaluate in program order
            CommandRef b = desugar_cmd(c->c2, ctx);
            return mk_seq(std::move(a), std::move(b));
        }
        case CmdOp::Choice: {
            CommandRef a = desugar_cmd(c->c1, ctx);
            CommandRef b = desugar_cmd(c->c2, ctx);
            return mk_choice(std::move(a), std::move(b));
        }
        case CmdOp::If: {
            CommandRef then_c = mk_seq(mk_assume(c->body), desugar_cmd(c->c1, ctx));
            CommandRef else_c =
                mk_seq(mk_assume(mk_not(c->body)), c->c2 ? desugar_cmd(c->c2, ctx) : mk_skip());
            return mk_choice(then_c, else_c);
        }
        case CmdOp::Insert:
        case CmdOp::Remove: {
            // r(x⃗) := r(x⃗) | (x⃗ = t⃗ & guard)   /   r(x⃗) := r(x⃗) & !(x⃗ = t⃗ & guard)
            std::set<std::string> avoid;
            for (auto& t : c->terms) {
                std::set<std::string> seen;
                std::vector<std::string> vs;
                detail::term_vars(t, vs, seen);
                avoid.insert(seen.begin(), seen.end());
            }
            if (c->body)
                for (auto& v : free_vars(c->body)) avoid.insert(v);
            std::vector<std::string> params;
            std::vector<TermRef> param_vars;
            for (unsigned i = 0; i < c->rel.arity; i++) {
                std::string x = fresh_name("x_" + std::to_string(i), avoid);
                avoid.insert(x);
                params.push_back(x);
                param_vars.push_back(mk_var(x));
            }
            std::vector<FormulaRef> eqs;
            for (unsigned i = 0; i < c->rel.arity; i++)
                eqs.push_back(mk_eq(param_vars[i], c->terms[i]));
            if (c->body) eqs.push_back(c->body);
            FormulaRef tuple_hit = mk_and(std::move(eqs));
            FormulaRef current = mk_atom(c->rel, param_vars);
            FormulaRef body = c->op == CmdOp::Insert ? mk_or(current, tuple_hit)
                                                     : mk_and(current, mk_not(tuple_hit));
            return mk_rel_update(c->rel, std::move(params), body);
        }
    }
    throw std::logic_error("desugar: unreachable");
}

} // namespace detail_fe

// Lower every action body to the seven core command forms; parameters become
// leading havocked locals; abort becomes `error := true` with !error conjoined
// to inits, invariants, and safety.  Idempotent.
inline ProgramModel desugar(const ProgramModel& input) {
    if (input.desugared) return input;
    ProgramModel m = input;
    Symbol error_rel = relation_sym(kErrorRelName, 0);
    bool saw_abort = false;
    for (auto& act : m.actions) {
        std::vector<CommandRef> prefix;
        for (auto& p : act.params) prefix.push_back(mk_local(p));
        prefix.push_back(act.body);
        CommandRef with_params = mk_seq(std::move(prefix));
        detail_fe::DesugarCtx ctx{&act.locals, &saw_abort, error_rel};
        act.locals.clear();
        act.body = detail_fe::desugar_cmd(with_params, ctx);
    }
    if (saw_abort && !m.uses_error) {
        m.uses_error = true;
        m.vocab.add(error_rel);
        m.relations.push_back(error_rel);
        FormulaRef ok = mk_not(mk_atom(error_rel, {}));
        m.inits.push_back(ok);
        m.invariants.push_back(ok);
        m.safety.push_back(ok);
    }
    m.desugared = true;
    return m;
}

// --------------------------------------------------------------- validate

// Quantifier-class and well-formedness diagnostics for a desugared model.
inline std::vector<std::string> validate(const ProgramModel& m) {
    std::vector<std::string> diags;
    auto closed = [&](const FormulaRef& f, const std::string& what) {
        if (!sentence(f)) diags.push_back(what + " must be closed: " + to_string(f));
    };
    if (!m.vocab.relational()) diags.push_back("vocabulary must be relational (no functions)");
    for (auto& a : m.axioms) {
        closed(a, "axiom");
        if (!in_epr(a)) diags.push_back("axiom must be exists*-forall*: " + to_string(a));
    }
    for (auto& f : m.inits) closed(f, "init");
    for (auto& f : m.invariants) closed(f, "invariant");
    for (auto& f : m.safety) closed(f, "safety");
    std::function<void(const CommandRef&, const std::string&)> check_cmd =
        [&](const CommandRef& c, const std::string& act) {
            switch (c->op) {
                case CmdOp::Assume:
                    if (!free_vars(c->body).empty())
                        diags.push_back("action " + act + ": assume must be closed: " +
                                        to_string(c->body));
                    else if (!in_epr(c->body))
                        diags.push_back("action " + act + ": assume must be exists*-forall*: " +
                                        to_string(c->body));
                    break;
                case CmdOp::RelUpdate: {
                    if (has_quantifiers(c->body))
                        diags.push_back("action " + act + ": update body must be quantifier-free: " +
                                        to_string(c->body));
                    auto fv = free_vars(c->body);
                    for (auto& p : c->params) fv.erase(p);
                    if (!fv.empty())
                        diags.push_back("action " + act + ": update body has stray variables: " +
                                        to_string(c->body));
                    break;
                }
                case CmdOp::Seq:
                case CmdOp::Choice:
                    check_cmd(c->c1, act);
                    check_cmd(c->c2, act);
                    break;
                case CmdOp::Local:
                case CmdOp::If:
                case CmdOp::Insert:
                case CmdOp::Remove:
                    diags.push_back("action " + act + ": sugar form survived desugaring");
                    break;
                default: break;
            }
        };
    for (auto& a : m.actions)
        if (a.body) check_cmd(a.body, a.name);
    return diags;
}

// ---------------------------------------------------------------- printing

namespace detail_fe {

inline void print_cmd(std::ostream& os, const CommandRef& c, int indent) {
    std::string pad(indent, ' ');
    switch (c->op) {
        case CmdOp::Skip: os << pad << "skip"; break;
        case CmdOp::Abort: os << pad << "abort"; break;
        case CmdOp::Assume: os << pad << "assume " << to_string(c->body); break;
        case CmdOp::Havoc: os << pad << c->var << " := *"; break;
        case CmdOp::Local: os << pad << "local " << c->var << " := *"; break;
        case CmdOp::RelUpdate:
            os << pad << c->rel.display();
            if (!c->params.empty()) {
                os << '(';
                for (size_t i = 0; i < c->params.size(); i++) {
                    if (i) os << ", ";
                    os << c->params[i];
                }
                os << ')';
            }
            os << " := " << to_string(c->body);
            break;
        case CmdOp::Insert:
        case CmdOp::Remove:
            os << pad << c->rel.display() << (c->op == CmdOp::Insert ? ".insert(" : ".remove(");
            for (size_t i = 0; i < c->terms.size(); i++) {
                if (i) os << ", ";
                os << to_string(c->terms[i]);
            }
            if (c->body) os << " | " << to_string(c->body);
            os << ')';
            break;
        case CmdOp::Seq:
            print_cmd(os, c->c1, indent);
            os << ";\n";
            print_cmd(os, c->c2, indent);
            break;
        case CmdOp::Choice:
            os << pad << "{\n";
            print_cmd(os, c->c1, indent + 2);
            os << '\n' << pad << "} | {\n";
            print_cmd(os, c->c2, indent + 2);
            os << '\n' << pad << "}";
            break;
        case CmdOp::If:
            os << pad << "if " << to_string(c->body) << " {\n";
            print_cmd(os, c->c1, indent + 2);
            os << '\n' << pad << "}";
            if (c->c2) {
                os << " else {\n";
                print_cmd(os, c->c2, indent + 2);
                os << '\n' << pad << "}";
            }
            break;
    }
}

} // namespace detail_fe

// Regenerate a parseable source file from a model (sugar prints as sugar).
inline std::string print_model(const ProgramModel& m) {
    std::ostringstream os;
    for (auto& r : m.relations) os << "relation " << r.name << "(" << r.arity << ")\n";
    for (auto& v : m.variables) os << "variable " << v.name << "\n";
    for (auto& f : m.axioms) os << "axiom " << to_string(f) << "\n";
    for (auto& f : m.inits) os << "init " << to_string(f) << "\n";
    for (auto& a : m.actions) {
        os << "action " << a.name << "(";
        // After desugaring, parameters are folded into the body as locals.
        if (!m.desugared)
            for (size_t i = 0; i < a.params.size(); i++) {
                if (i) os << ", ";
                os << a.params[i];
            }
        os << ") {\n";
        detail_fe::print_cmd(os, a.body, 2);
        os << "\n}\n";
    }
    for (auto& f : m.invariants) os << "invariant " << to_string(f) << "\n";
    for (auto& f : m.safety) os << "safety " << to_string(f) << "\n";
    return os.str();
}

} // namespace bhz
