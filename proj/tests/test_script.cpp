#include <catch2/catch_amalgamated.hpp>

#include "ur_stack/script/ast.hpp"
#include "ur_stack/script/interp.hpp"
#include "ur_stack/script/lexer.hpp"
#include "ur_stack/script/parser.hpp"
#include "ur_stack/wire/registers.hpp"

using namespace urstack::script;
using urstack::wire::RegisterBank;
using urstack::wire::RegisterFile;

namespace {

int error_line(const std::string& src) {
  try {
    parse_source(src);
  } catch (const ScriptError& e) {
    return e.line();
  }
  return -1;
}

double run_number(const std::string& src, Env& env) {
  Value v = evaluate(parse_source(src), env);
  return as_number(v, 0);
}

}  // namespace

TEST_CASE("syntax errors report the offending line (20-case corpus)") {
  struct Case {
    const char* src;
    int line;
  };
  const Case corpus[] = {
      {"x = \n", 1},
      {"if True\n  x = 1\nend\n", 1},
      {"def f(\nend\n", 1},
      {"x = 1 +\n", 1},
      {"x = (1 + 2\n", 1},
      {"def f():\nreturn 1\n", 3},
      {"while True:\nx = 1\n", 3},
      {"x = 1\ny = *2\n", 2},
      {"def 5():\nend\n", 1},
      {"if True:\nelse\nend\n", 2},
      {"x = \"abc\n", 1},
      {"x = 1 $\n", 1},
      {"x = 1\nif x >:\nend\n", 2},
      {"end\n", 1},
      {"def f():\nreturn 1\nend\nx = )\n", 4},
      {"while True:\n  f(1,\nend\n", 2},
      {"x = 1\nx = 2 3\n", 2},
      {"if True:\nx=1\nelif\nend\n", 3},
      {"def f(a,):\nend\n", 1},
      {"x = 1\ny = 2\nwhile x:\n z = \"q\nend\n", 4},
  };
  int idx = 0;
  for (const auto& c : corpus) {
    INFO("case " << idx << ": " << c.src);
    CHECK(error_line(c.src) == c.line);
    ++idx;
  }
}

TEST_CASE("snippet with register IO and a helper function runs") {
  RegisterFile regs;
  regs.set_int(RegisterBank::InputInt, 19, 40);
  Env env;
  register_builtins(env, regs);
  std::vector<std::string> log;
  env.logger = [&](const std::string& m) { log.push_back(m); };

  const char* src =
      "def sg_grip(width):\n"
      "  if width > 100:\n"
      "    width = 100\n"
      "  elif width < 0:\n"
      "    width = 0\n"
      "  end\n"
      "  sleep(0.1)\n"
      "  return width\n"
      "end\n"
      "\n"
      "def ext_256():\n"
      "  w = read_input_integer_register(19)\n"
      "  achieved = sg_grip(w)\n"
      "  write_output_integer_register(19, achieved)\n"
      "  textmsg(\"grip done\")\n"
      "end\n";
  Interpreter interp(env);
  Program prog = parse_source(src);
  interp.run(prog);
  interp.call_function("ext_256", {});
  CHECK(regs.get_int(RegisterBank::OutputInt, 19) == 40);
  CHECK(env.slept_total == 0.1);
  REQUIRE(log.size() == 1);
  CHECK(log[0] == "grip done");

  // clamp branches
  regs.set_int(RegisterBank::InputInt, 19, 150);
  interp.call_function("ext_256", {});
  CHECK(regs.get_int(RegisterBank::OutputInt, 19) == 100);
  regs.set_int(RegisterBank::InputInt, 19, -5);
  interp.call_function("ext_256", {});
  CHECK(regs.get_int(RegisterBank::OutputInt, 19) == 0);
}

TEST_CASE("arithmetic, comparison, and logic semantics") {
  RegisterFile regs;
  Env env;
  register_builtins(env, regs);
  CHECK(run_number("1 + 2 * 3\n", env) == 7.0);
  CHECK(run_number("(1 + 2) * 3\n", env) == 9.0);
  CHECK(run_number("-4 / 2\n", env) == -2.0);
  CHECK(run_number("x = 5\nx - 1\n", env) == 4.0);

  Env e;
  register_builtins(e, regs);
  Value v = evaluate(parse_source("1 < 2 and not (3 == 4)\n"), e);
  CHECK(truthy(v));
  Value w = evaluate(parse_source("False or 1 > 2\n"), e);
  CHECK_FALSE(truthy(w));
}

TEST_CASE("short-circuit evaluation skips the right operand") {
  RegisterFile regs;
  Env env;
  register_builtins(env, regs);
  const char* src =
      "def boom():\n"
      "  return 1 / 0\n"
      "end\n"
      "x = False and boom()\n"
      "y = True or boom()\n";
  CHECK_NOTHROW(evaluate(parse_source(src), env));
}

TEST_CASE("while loops, elif chains, and function returns") {
  RegisterFile regs;
  Env env;
  register_builtins(env, regs);
  const char* src =
      "def classify(n):\n"
      "  if n < 0:\n"
      "    return -1\n"
      "  elif n == 0:\n"
      "    return 0\n"
      "  else:\n"
      "    return 1\n"
      "  end\n"
      "end\n"
      "total = 0\n"
      "i = 0\n"
      "while i < 10:\n"
      "  total = total + classify(i - 5)\n"
      "  i = i + 1\n"
      "end\n"
      "total\n";
  CHECK(run_number(src, env) == -5 + 0 + 4);
}

TEST_CASE("runtime errors carry line numbers") {
  RegisterFile regs;
  Env env;
  register_builtins(env, regs);
  try {
    evaluate(parse_source("x = 1\ny = x / 0\n"), env);
    FAIL("expected division error");
  } catch (const ScriptError& e) {
    CHECK(e.line() == 2);
  }
  try {
    evaluate(parse_source("read_input_integer_register(99)\n"), env);
    FAIL("expected register range error");
  } catch (const ScriptError& e) {
    CHECK(e.line() == 1);
  }
  try {
    evaluate(parse_source("nosuchfn(1)\n"), env);
    FAIL("expected unknown function error");
  } catch (const ScriptError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("step budget halts a while True snippet") {
  RegisterFile regs;
  Env env;
  register_builtins(env, regs);
  env.step_budget = 10'000;
  CHECK_THROWS_AS(evaluate(parse_source("while True:\n  x = 1\nend\n"), env), ScriptError);
}

TEST_CASE("sleep uses the host handler when installed") {
  RegisterFile regs;
  Env env;
  register_builtins(env, regs);
  double total = 0.0;
  env.sleep_handler = [&](double s) { total += s; };
  evaluate(parse_source("sleep(0.5)\nsleep(0.25)\n"), env);
  CHECK(total == 0.75);
  CHECK(env.slept_total == 0.0);
}

TEST_CASE("extra builtins are injected and collisions rejected") {
  RegisterFile regs;
  Env env;
  std::vector<double> seen;
  std::map<std::string, HostFunction> extras;
  extras["probe"] = [&](const std::vector<Value>& a, int line) {
    seen.push_back(as_number(a.at(0), line));
    return Value{};
  };
  register_builtins(env, regs, extras);
  evaluate(parse_source("probe(3.5)\n"), env);
  REQUIRE(seen.size() == 1);
  CHECK(seen[0] == 3.5);

  Env env2;
  std::map<std::string, HostFunction> bad;
  bad["sleep"] = extras["probe"];
  CHECK_THROWS_AS(register_builtins(env2, regs, bad), std::invalid_argument);
}

TEST_CASE("pretty print round trips to a fixed point") {
  const char* src =
      "def f(a, b):\n"
      "  if a > b:\n"
      "    return a - b\n"
      "  else:\n"
      "    return b - a\n"
      "  end\n"
      "end\n"
      "x = f(2, 7)\n"
      "while x > 0:\n"
      "  x = x - 1\n"
      "  textmsg(\"tick\")\n"
      "end\n";
  std::string once = pretty_print(parse_source(src));
  std::string twice = pretty_print(parse_source(once));
  CHECK(once == twice);
  CHECK_FALSE(once.empty());
}
