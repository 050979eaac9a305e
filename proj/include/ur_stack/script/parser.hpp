#ifndef UR_STACK_SCRIPT_PARSER_HPP
#define UR_STACK_SCRIPT_PARSER_HPP

#include <memory>
#include <string>
#include <vector>

#include "ur_stack/script/ast.hpp"
#include "ur_stack/script/lexer.hpp"

namespace urstack::script {

// Recursive-descent parser over the token stream. Precedence, loosest
// first: or, and, not, comparisons, additive, multiplicative, unary minus,
// call/atom.
class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program parse_program() {
    Program p;
    skip_newlines();
    while (!at_eof()) {
      p.statements.push_back(parse_statement());
      skip_newlines();
    }
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at_eof() const { return peek().kind == TokenKind::Eof; }

  bool check_kw(const std::string& kw) const {
    return peek().kind == TokenKind::Keyword && peek().text == kw;
  }
  bool check_op(const std::string& op) const {
    return peek().kind == TokenKind::Op && peek().text == op;
  }
  void expect_op(const std::string& op) {
    if (!check_op(op)) throw ScriptError("expected '" + op + "'", peek().line);
    advance();
  }
  void expect_kw(const std::string& kw) {
    if (!check_kw(kw)) throw ScriptError("expected '" + kw + "'", peek().line);
    advance();
  }
  void expect_newline() {
    if (peek().kind != TokenKind::Newline && peek().kind != TokenKind::Eof)
      throw ScriptError("expected end of statement", peek().line);
    if (peek().kind == TokenKind::Newline) advance();
  }
  void skip_newlines() {
    while (peek().kind == TokenKind::Newline) advance();
  }

  StmtPtr parse_statement() {
    if (check_kw("def")) return parse_funcdef();
    if (check_kw("if")) return parse_if();
    if (check_kw("while")) return parse_while();
    if (check_kw("return")) return parse_return();

    if (peek().kind == TokenKind::Ident && peek(1).kind == TokenKind::Op &&
        peek(1).text == "=") {
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::Assign;
      s->line = peek().line;
      s->name = advance().text;
      advance();  // '='
      s->expr = parse_expr();
      expect_newline();
      return s;
    }

    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::ExprStmt;
    s->line = peek().line;
    s->expr = parse_expr();
    expect_newline();
    return s;
  }

  StmtPtr parse_funcdef() {
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::FuncDef;
    s->line = peek().line;
    expect_kw("def");
    if (peek().kind != TokenKind::Ident)
      throw ScriptError("expected function name", peek().line);
    s->name = advance().text;
    expect_op("(");
    if (!check_op(")")) {
      while (true) {
        if (peek().kind != TokenKind::Ident)
          throw ScriptError("expected parameter name", peek().line);
        s->params.push_back(advance().text);
        if (check_op(",")) {
          advance();
          continue;
        }
        break;
      }
    }
    expect_op(")");
    expect_op(":");
    s->body = parse_block();
    expect_kw("end");
    expect_newline();
    return s;
  }

  StmtPtr parse_if() {
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::If;
    s->line = peek().line;
    expect_kw("if");
    while (true) {
      ExprPtr cond = parse_expr();
      expect_op(":");
      auto body = parse_block();
      s->arms.emplace_back(std::move(cond), std::move(body));
      if (check_kw("elif")) {
        advance();
        continue;
      }
      break;
    }
    if (check_kw("else")) {
      advance();
      expect_op(":");
      s->else_body = parse_block();
    }
    expect_kw("end");
    expect_newline();
    return s;
  }

  StmtPtr parse_while() {
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::While;
    s->line = peek().line;
    expect_kw("while");
    s->cond = parse_expr();
    expect_op(":");
    s->body = parse_block();
    expect_kw("end");
    expect_newline();
    return s;
  }

  StmtPtr parse_return() {
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::Return;
    s->line = peek().line;
    expect_kw("return");
    if (peek().kind != TokenKind::Newline && peek().kind != TokenKind::Eof)
      s->expr = parse_expr();
    expect_newline();
    return s;
  }

  // Statements up to (not consuming) 'end' / 'elif' / 'else'.
  std::vector<StmtPtr> parse_block() {
    expect_newline();
    std::vector<StmtPtr> body;
    skip_newlines();
    while (!at_eof() && !check_kw("end") && !check_kw("elif") && !check_kw("else")) {
      body.push_back(parse_statement());
      skip_newlines();
    }
    if (at_eof()) throw ScriptError("expected 'end'", peek().line);
    return body;
  }

  // ---- expressions ----

  ExprPtr parse_expr() { return parse_or(); }

  ExprPtr make_binary(const std::string& op, ExprPtr lhs, ExprPtr rhs, int line) {
    auto e = std::make_unique<Expr>();
    e->kind = Expr::Kind::Binary;
    e->text = op;
    e->line = line;
    e->args.push_back(std::move(lhs));
    e->args.push_back(std::move(rhs));
    return e;
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (check_kw("or")) {
      int line = advance().line;
      lhs = make_binary("or", std::move(lhs), parse_and(), line);
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (check_kw("and")) {
      int line = advance().line;
      lhs = make_binary("and", std::move(lhs), parse_not(), line);
    }
    return lhs;
  }

  ExprPtr parse_not() {
    if (check_kw("not")) {
      int line = advance().line;
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Unary;
      e->text = "not";
      e->line = line;
      e->args.push_back(parse_not());
      return e;
    }
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_additive();
    while (check_op("==") || check_op("!=") || check_op("<") || check_op("<=") ||
           check_op(">") || check_op(">=")) {
      std::string op = peek().text;
      int line = advance().line;
      lhs = make_binary(op, std::move(lhs), parse_additive(), line);
    }
    return lhs;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (check_op("+") || check_op("-")) {
      std::string op = peek().text;
      int line = advance().line;
      lhs = make_binary(op, std::move(lhs), parse_multiplicative(), line);
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    while (check_op("*") || check_op("/")) {
      std::string op = peek().text;
      int line = advance().line;
      lhs = make_binary(op, std::move(lhs), parse_unary(), line);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (check_op("-")) {
      int line = advance().line;
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Unary;
      e->text = "-";
      e->line = line;
      e->args.push_back(parse_unary());
      return e;
    }
    return parse_atom();
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    auto e = std::make_unique<Expr>();
    e->line = t.line;
    switch (t.kind) {
      case TokenKind::Number:
        e->kind = Expr::Kind::Number;
        try {
          e->number = std::stod(t.text);
        } catch (const std::exception&) {
          throw ScriptError("bad numeric literal '" + t.text + "'", t.line);
        }
        advance();
        return e;
      case TokenKind::String:
        e->kind = Expr::Kind::String;
        e->text = t.text;
        advance();
        return e;
      case TokenKind::Keyword:
        if (t.text == "True" || t.text == "False") {
          e->kind = Expr::Kind::Bool;
          e->boolean = (t.text == "True");
          advance();
          return e;
        }
        throw ScriptError("unexpected keyword '" + t.text + "'", t.line);
      case TokenKind::Ident: {
        std::string name = advance().text;
        if (check_op("(")) {
          advance();
          e->kind = Expr::Kind::Call;
          e->text = name;
          if (!check_op(")")) {
            while (true) {
              e->args.push_back(parse_expr());
              if (check_op(",")) {
                advance();
                continue;
              }
              break;
            }
          }
          expect_op(")");
          return e;
        }
        e->kind = Expr::Kind::Var;
        e->text = name;
        return e;
      }
      case TokenKind::Op:
        if (t.text == "(") {
          advance();
          ExprPtr inner = parse_expr();
          expect_op(")");
          return inner;
        }
        throw ScriptError("unexpected '" + t.text + "'", t.line);
      default:
        throw ScriptError("unexpected end of input", t.line);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

inline Program parse(std::vector<Token> tokens) {
  return Parser(std::move(tokens)).parse_program();
}

inline Program parse_source(const std::string& source) { return parse(tokenize(source)); }

}  // namespace urstack::script

#endif  // UR_STACK_SCRIPT_PARSER_HPP
