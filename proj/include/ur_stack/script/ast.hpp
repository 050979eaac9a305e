#ifndef UR_STACK_SCRIPT_AST_HPP
#define UR_STACK_SCRIPT_AST_HPP

#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace urstack::script {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

struct Expr {
  enum class Kind { Number, String, Bool, Var, Unary, Binary, Call };
  Kind kind;
  int line = 1;

  double number = 0.0;
  std::string text;  // string literal, variable name, operator, call name
  bool boolean = false;
  std::vector<ExprPtr> args;  // unary: [operand]; binary: [lhs, rhs]; call: arguments
};

struct Stmt {
  enum class Kind { Assign, ExprStmt, If, While, Return, FuncDef };
  Kind kind;
  int line = 1;

  std::string name;  // assign target / function name
  ExprPtr expr;      // assign value, expression, return value (may be null)
  // If: arms[i] = {condition, body}; else_body may be empty.
  std::vector<std::pair<ExprPtr, std::vector<StmtPtr>>> arms;
  std::vector<StmtPtr> else_body;
  ExprPtr cond;                // while condition
  std::vector<StmtPtr> body;   // while / funcdef body
  std::vector<std::string> params;
};

struct Program {
  std::vector<StmtPtr> statements;  // FuncDefs and top-level statements in order
};

// ---------------------------------------------------------------------------
// Pretty printer. Round trip: parse(tokenize(pretty_print(p))) is an
// equivalent program.

namespace detail {

inline void print_expr(std::ostream& os, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << e.number;
      os << tmp.str();
      break;
    }
    case Expr::Kind::String: os << '"' << e.text << '"'; break;
    case Expr::Kind::Bool: os << (e.boolean ? "True" : "False"); break;
    case Expr::Kind::Var: os << e.text; break;
    case Expr::Kind::Unary:
      os << "(" << e.text << (e.text == "not" ? " " : "");
      print_expr(os, *e.args[0]);
      os << ")";
      break;
    case Expr::Kind::Binary:
      os << "(";
      print_expr(os, *e.args[0]);
      os << " " << e.text << " ";
      print_expr(os, *e.args[1]);
      os << ")";
      break;
    case Expr::Kind::Call:
      os << e.text << "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, *e.args[i]);
      }
      os << ")";
      break;
  }
}

inline void print_block(std::ostream& os, const std::vector<StmtPtr>& block, int indent);

inline void print_stmt(std::ostream& os, const Stmt& s, int indent) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  switch (s.kind) {
    case Stmt::Kind::Assign:
      os << pad << s.name << " = ";
      print_expr(os, *s.expr);
      os << "\n";
      break;
    case Stmt::Kind::ExprStmt:
      os << pad;
      print_expr(os, *s.expr);
      os << "\n";
      break;
    case Stmt::Kind::Return:
      os << pad << "return";
      if (s.expr) {
        os << " ";
        print_expr(os, *s.expr);
      }
      os << "\n";
      break;
    case Stmt::Kind::If:
      for (std::size_t i = 0; i < s.arms.size(); ++i) {
        os << pad << (i == 0 ? "if " : "elif ");
        print_expr(os, *s.arms[i].first);
        os << ":\n";
        print_block(os, s.arms[i].second, indent + 1);
      }
      if (!s.else_body.empty()) {
        os << pad << "else:\n";
        print_block(os, s.else_body, indent + 1);
      }
      os << pad << "end\n";
      break;
    case Stmt::Kind::While:
      os << pad << "while ";
      print_expr(os, *s.cond);
      os << ":\n";
      print_block(os, s.body, indent + 1);
      os << pad << "end\n";
      break;
    case Stmt::Kind::FuncDef:
      os << pad << "def " << s.name << "(";
      for (std::size_t i = 0; i < s.params.size(); ++i) {
        if (i) os << ", ";
        os << s.params[i];
      }
      os << "):\n";
      print_block(os, s.body, indent + 1);
      os << pad << "end\n";
      break;
  }
}

inline void print_block(std::ostream& os, const std::vector<StmtPtr>& block, int indent) {
  for (const auto& s : block) print_stmt(os, *s, indent);
}

}  // namespace detail

inline std::string pretty_print(const Program& p) {
  std::ostringstream os;
  detail::print_block(os, p.statements, 0);
  return os.str();
}

}  // namespace urstack::script

#endif  // UR_STACK_SCRIPT_AST_HPP
