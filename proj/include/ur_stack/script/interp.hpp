#ifndef UR_STACK_SCRIPT_INTERP_HPP
#define UR_STACK_SCRIPT_INTERP_HPP

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ur_stack/script/parser.hpp"
#include "ur_stack/wire/registers.hpp"

namespace urstack::script {

// Runtime values: none, number (double), string, bool. Integer registers
// coerce at the builtin boundary.
using Value = std::variant<std::monostate, double, std::string, bool>;

using HostFunction = std::function<Value(const std::vector<Value>&, int line)>;

inline bool truthy(const Value& v) {
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
  if (std::holds_alternative<double>(v)) return std::get<double>(v) != 0.0;
  if (std::holds_alternative<std::string>(v)) return !std::get<std::string>(v).empty();
  return false;
}

inline double as_number(const Value& v, int line) {
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? 1.0 : 0.0;
  throw ScriptError("expected a number", line);
}

inline int as_register_index(const Value& v, int line) {
  double d = as_number(v, line);
  int i = static_cast<int>(std::llround(d));
  if (i < 0 || i >= wire::kRegisterCount)
    throw ScriptError("register index out of range: " + std::to_string(i), line);
  return i;
}

// Execution environment: globals, builtin table, host hooks. Snippets can
// touch host state only through the builtins.
struct Env {
  std::map<std::string, Value> variables;
  std::map<std::string, HostFunction> builtins;
  std::map<std::string, const Stmt*> functions;  // FuncDefs by name

  std::function<void(double)> sleep_handler;       // simulated-time sleep
  std::function<void(const std::string&)> logger;  // textmsg sink
  double slept_total = 0.0;                        // default sleep accounting

  long step_budget = 1'000'000;  // statements per top-level invocation
};

inline void register_builtins(Env& env, wire::RegisterFile& regs,
                              const std::map<std::string, HostFunction>& extras = {}) {
  auto expect_arity = [](const std::vector<Value>& a, std::size_t n, const char* name,
                         int line) {
    if (a.size() != n)
      throw ScriptError(std::string(name) + " expects " + std::to_string(n) +
                            " argument(s), got " + std::to_string(a.size()),
                        line);
  };

  env.builtins["read_input_integer_register"] = [&regs, expect_arity](
                                                    const std::vector<Value>& a, int line) {
    expect_arity(a, 1, "read_input_integer_register", line);
    return Value(double(regs.get_int(wire::RegisterBank::InputInt, as_register_index(a[0], line))));
  };
  env.builtins["read_input_float_register"] = [&regs, expect_arity](
                                                  const std::vector<Value>& a, int line) {
    expect_arity(a, 1, "read_input_float_register", line);
    return Value(regs.get_float(wire::RegisterBank::InputFloat, as_register_index(a[0], line)));
  };
  env.builtins["write_output_integer_register"] = [&regs, expect_arity](
                                                      const std::vector<Value>& a, int line) {
    expect_arity(a, 2, "write_output_integer_register", line);
    regs.set_int(wire::RegisterBank::OutputInt, as_register_index(a[0], line),
                 static_cast<std::int32_t>(std::llround(as_number(a[1], line))));
    return Value{};
  };
  env.builtins["write_output_float_register"] = [&regs, expect_arity](
                                                    const std::vector<Value>& a, int line) {
    expect_arity(a, 2, "write_output_float_register", line);
    regs.set_float(wire::RegisterBank::OutputFloat, as_register_index(a[0], line),
                   as_number(a[1], line));
    return Value{};
  };
  env.builtins["sleep"] = [&env, expect_arity](const std::vector<Value>& a, int line) {
    expect_arity(a, 1, "sleep", line);
    double s = as_number(a[0], line);
    if (env.sleep_handler)
      env.sleep_handler(s);
    else
      env.slept_total += s;
    return Value{};
  };
  env.builtins["textmsg"] = [&env, expect_arity](const std::vector<Value>& a, int line) {
    expect_arity(a, 1, "textmsg", line);
    std::string msg;
    if (std::holds_alternative<std::string>(a[0]))
      msg = std::get<std::string>(a[0]);
    else if (std::holds_alternative<double>(a[0]))
      msg = std::to_string(std::get<double>(a[0]));
    else if (std::holds_alternative<bool>(a[0]))
      msg = std::get<bool>(a[0]) ? "True" : "False";
    if (env.logger) env.logger(msg);
    return Value{};
  };

  for (const auto& [name, fn] : extras) {
    if (env.builtins.count(name))
      throw std::invalid_argument("extra builtin collides with core builtin: " + name);
    env.builtins[name] = fn;
  }
}

// ---------------------------------------------------------------------------
// Tree-walking evaluator

class Interpreter {
 public:
  explicit Interpreter(Env& env) : env_(env) {}

  // Runs top-level statements (FuncDefs define). Returns the last
  // expression-statement value.
  Value run(const Program& p) {
    steps_left_ = env_.step_budget;
    for (const auto& s : p.statements)
      if (s->kind == Stmt::Kind::FuncDef) env_.functions[s->name] = s.get();
    Value last;
    for (const auto& s : p.statements) {
      if (s->kind == Stmt::Kind::FuncDef) continue;
      last = exec_stmt(*s, env_.variables);
    }
    return last;
  }

  // Calls a previously defined function by name.
  Value call_function(const std::string& name, const std::vector<Value>& args, int line = 0) {
    steps_left_ = env_.step_budget;
    return invoke(name, args, line);
  }

 private:
  struct ReturnSignal {
    Value value;
  };
  using Scope = std::map<std::string, Value>;

  void charge(int line) {
    if (--steps_left_ < 0) throw ScriptError("step budget exceeded", line);
  }

  Value exec_stmt(const Stmt& s, Scope& scope) {
    charge(s.line);
    switch (s.kind) {
      case Stmt::Kind::Assign:
        scope[s.name] = eval(*s.expr, scope);
        return Value{};
      case Stmt::Kind::ExprStmt:
        return eval(*s.expr, scope);
      case Stmt::Kind::Return:
        throw ReturnSignal{s.expr ? eval(*s.expr, scope) : Value{}};
      case Stmt::Kind::If: {
        for (const auto& [cond, body] : s.arms) {
          if (truthy(eval(*cond, scope))) {
            for (const auto& st : body) exec_stmt(*st, scope);
            return Value{};
          }
        }
        for (const auto& st : s.else_body) exec_stmt(*st, scope);
        return Value{};
      }
      case Stmt::Kind::While:
        while (truthy(eval(*s.cond, scope))) {
          charge(s.line);
          for (const auto& st : s.body) exec_stmt(*st, scope);
        }
        return Value{};
      case Stmt::Kind::FuncDef:
        env_.functions[s.name] = &s;
        return Value{};
    }
    return Value{};
  }

  Value invoke(const std::string& name, const std::vector<Value>& args, int line) {
    if (auto bit = env_.builtins.find(name); bit != env_.builtins.end())
      return bit->second(args, line);
    auto fit = env_.functions.find(name);
    if (fit == env_.functions.end())
      throw ScriptError("unknown function '" + name + "'", line);
    const Stmt& fn = *fit->second;
    if (args.size() != fn.params.size())
      throw ScriptError("'" + name + "' expects " + std::to_string(fn.params.size()) +
                            " argument(s), got " + std::to_string(args.size()),
                        line);
    Scope locals;
    for (std::size_t i = 0; i < args.size(); ++i) locals[fn.params[i]] = args[i];
    try {
      for (const auto& st : fn.body) exec_stmt(*st, locals);
    } catch (ReturnSignal& r) {
      return std::move(r.value);
    }
    return Value{};
  }

  Value eval(const Expr& e, Scope& scope) {
    switch (e.kind) {
      case Expr::Kind::Number: return e.number;
      case Expr::Kind::String: return e.text;
      case Expr::Kind::Bool: return e.boolean;
      case Expr::Kind::Var: {
        if (auto it = scope.find(e.text); it != scope.end()) return it->second;
        if (&scope != &env_.variables) {
          if (auto git = env_.variables.find(e.text); git != env_.variables.end())
            return git->second;
        }
        throw ScriptError("unknown identifier '" + e.text + "'", e.line);
      }
      case Expr::Kind::Unary: {
        if (e.text == "not") return !truthy(eval(*e.args[0], scope));
        return -as_number(eval(*e.args[0], scope), e.line);
      }
      case Expr::Kind::Binary: {
        const std::string& op = e.text;
        if (op == "and") {
          Value lhs = eval(*e.args[0], scope);
          return truthy(lhs) ? Value(truthy(eval(*e.args[1], scope))) : Value(false);
        }
        if (op == "or") {
          Value lhs = eval(*e.args[0], scope);
          return truthy(lhs) ? Value(true) : Value(truthy(eval(*e.args[1], scope)));
        }
        Value lv = eval(*e.args[0], scope);
        Value rv = eval(*e.args[1], scope);
        if (op == "==" || op == "!=") {
          bool eq = values_equal(lv, rv, e.line);
          return op == "==" ? eq : !eq;
        }
        if (op == "+" && std::holds_alternative<std::string>(lv) &&
            std::holds_alternative<std::string>(rv))
          return std::get<std::string>(lv) + std::get<std::string>(rv);
        double a = as_number(lv, e.line), b = as_number(rv, e.line);
        if (op == "+") return a + b;
        if (op == "-") return a - b;
        if (op == "*") return a * b;
        if (op == "/") {
          if (b == 0.0) throw ScriptError("division by zero", e.line);
          return a / b;
        }
        if (op == "<") return a < b;
        if (op == "<=") return a <= b;
        if (op == ">") return a > b;
        if (op == ">=") return a >= b;
        throw ScriptError("unknown operator '" + op + "'", e.line);
      }
      case Expr::Kind::Call: {
        std::vector<Value> args;
        args.reserve(e.args.size());
        for (const auto& a : e.args) args.push_back(eval(*a, scope));
        return invoke(e.text, args, e.line);
      }
    }
    return Value{};
  }

  static bool values_equal(const Value& a, const Value& b, int line) {
    if (std::holds_alternative<std::string>(a) && std::holds_alternative<std::string>(b))
      return std::get<std::string>(a) == std::get<std::string>(b);
    if (std::holds_alternative<std::monostate>(a) || std::holds_alternative<std::monostate>(b))
      return std::holds_alternative<std::monostate>(a) == std::holds_alternative<std::monostate>(b);
    return as_number(a, line) == as_number(b, line);
  }

  Env& env_;
  long steps_left_ = 0;
};

inline Value evaluate(const Program& p, Env& env) { return Interpreter(env).run(p); }

}  // namespace urstack::script

#endif  // UR_STACK_SCRIPT_INTERP_HPP
