#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vmtlc/formula.hpp"

using namespace vmtlc;

// ---------------------------------------------------------------------------
// Independent reference evaluator. Deliberately written as a separate
// recursion (ints and bools carried in one struct, no std::variant) so that a
// bug in evaluate() cannot hide in a shared helper.
// ---------------------------------------------------------------------------
namespace {

struct RVal {
  bool isBool;
  int64_t i;  // bools stored as 0/1
};

RVal refEval(const ExprPtr& e, const Valuation& val) {
  auto b = [](bool v) { return RVal{true, v ? 1 : 0}; };
  auto n = [](int64_t v) { return RVal{false, v}; };
  switch (e->kind) {
    case ExprKind::IntLit: return n(e->ival);
    case ExprKind::BoolLit: return b(e->bval);
    case ExprKind::Var: {
      auto it = val.find(e->name);
      if (it == val.end()) throw UnboundVariable(e->name);
      if (isInt(it->second)) return n(asInt(it->second));
      return b(asBool(it->second));
    }
    case ExprKind::Neg: return n(-refEval(e->args[0], val).i);
    case ExprKind::Not: return b(refEval(e->args[0], val).i == 0);
    case ExprKind::Ite: {
      RVal c = refEval(e->args[0], val);
      return refEval(c.i != 0 ? e->args[1] : e->args[2], val);
    }
    default: break;
  }
  RVal l = refEval(e->args[0], val);
  RVal r = refEval(e->args[1], val);
  switch (e->kind) {
    case ExprKind::Add: return n(l.i + r.i);
    case ExprKind::Sub: return n(l.i - r.i);
    case ExprKind::Mul: return n(l.i * r.i);
    case ExprKind::And: return b(l.i != 0 && r.i != 0);
    case ExprKind::Or: return b(l.i != 0 || r.i != 0);
    case ExprKind::Implies: return b(l.i == 0 || r.i != 0);
    case ExprKind::Iff: return b((l.i != 0) == (r.i != 0));
    case ExprKind::Eq: return b(l.i == r.i);
    case ExprKind::Ne: return b(l.i != r.i);
    case ExprKind::Lt: return b(l.i < r.i);
    case ExprKind::Le: return b(l.i <= r.i);
    case ExprKind::Gt: return b(l.i > r.i);
    case ExprKind::Ge: return b(l.i >= r.i);
    default: FAIL("unreachable"); return n(0);
  }
}

// Random well-sorted formula generator.
struct Gen {
  std::mt19937_64 rng;
  std::vector<std::string> intVars = {"x", "y", "z"};
  std::vector<std::string> boolVars = {"p", "q"};

  int64_t pickInt() { return (int64_t)(rng() % 21) - 10; }
  size_t pick(size_t n) { return rng() % n; }

  ExprPtr genInt(int depth) {
    if (depth == 0 || pick(4) == 0) {
      if (pick(2)) return mkInt(pickInt());
      return mkVar(intVars[pick(intVars.size())]);
    }
    switch (pick(5)) {
      case 0: return mkBin(ExprKind::Add, genInt(depth - 1), genInt(depth - 1));
      case 1: return mkBin(ExprKind::Sub, genInt(depth - 1), genInt(depth - 1));
      case 2: return mkBin(ExprKind::Mul, genInt(depth - 1), genInt(depth - 1));
      case 3: return mkUnary(ExprKind::Neg, genInt(depth - 1));
      default: return mkIte(genBool(depth - 1), genInt(depth - 1), genInt(depth - 1));
    }
  }

  ExprPtr genBool(int depth) {
    if (depth == 0 || pick(5) == 0) {
      if (pick(3) == 0) return mkBool(pick(2) != 0);
      return mkVar(boolVars[pick(boolVars.size())]);
    }
    switch (pick(8)) {
      case 0: return mkAnd(genBool(depth - 1), genBool(depth - 1));
      case 1: return mkOr(genBool(depth - 1), genBool(depth - 1));
      case 2: return mkImplies(genBool(depth - 1), genBool(depth - 1));
      case 3: return mkBin(ExprKind::Iff, genBool(depth - 1), genBool(depth - 1));
      case 4: return mkNot(genBool(depth - 1));
      case 5: return mkIte(genBool(depth - 1), genBool(depth - 1), genBool(depth - 1));
      case 6: {
        ExprKind cmp[] = {ExprKind::Eq, ExprKind::Ne, ExprKind::Lt,
                          ExprKind::Le, ExprKind::Gt, ExprKind::Ge};
        return mkBin(cmp[pick(6)], genInt(depth - 1), genInt(depth - 1));
      }
      default: {
        ExprKind k = pick(2) ? ExprKind::Eq : ExprKind::Ne;
        return mkBin(k, genBool(depth - 1), genBool(depth - 1));
      }
    }
  }

  Valuation genValuation() {
    Valuation v;
    for (auto& n : intVars) v[n] = Value{pickInt()};
    for (auto& n : boolVars) v[n] = Value{pick(2) != 0};
    return v;
  }
};

}  // namespace

TEST_CASE("formula evaluation basics") {
  Valuation v{{"x", Value{int64_t{3}}}, {"p", Value{true}}};
  CHECK(asInt(evaluate(parseFormula("x + 2 * 3"), v)) == 9);
  CHECK(asInt(evaluate(parseFormula("(x + 2) * 3"), v)) == 15);
  CHECK(evaluateBool(parseFormula("p => x >= 0"), v));
  CHECK(evaluateBool(parseFormula("!p || x == 3"), v));
  CHECK_FALSE(evaluateBool(parseFormula("p <=> x < 0"), v));
  CHECK(asInt(evaluate(parseFormula("ite(p, x, 0 - x)"), v)) == 3);
  CHECK_THROWS_AS(evaluate(parseFormula("w + 1"), v), UnboundVariable);
}

TEST_CASE("formula parser precedence and associativity") {
  CHECK(structEq(parseFormula("a => b => c"),
                 parseFormula("a => (b => c)")));
  CHECK(structEq(parseFormula("a && b || c"),
                 parseFormula("(a && b) || c")));
  CHECK(structEq(parseFormula("a || b => c && d"),
                 parseFormula("(a || b) => (c && d)")));
  CHECK(structEq(parseFormula("x - y - z"),
                 parseFormula("(x - y) - z")));
  CHECK_FALSE(structEq(parseFormula("x - (y - z)"), parseFormula("x - y - z")));
  CHECK_THROWS_AS(parseFormula(""), FormulaSyntaxError);
  CHECK_THROWS_AS(parseFormula("x +"), FormulaSyntaxError);
  CHECK_THROWS_AS(parseFormula("x == y == z"), FormulaSyntaxError);
}

TEST_CASE("print/parse roundtrip on random formulas") {
  Gen g;
  g.rng.seed(20240811);
  for (int i = 0; i < 2000; i++) {
    ExprPtr f = g.pick(2) ? g.genBool(4) : g.genInt(4);
    std::string text = printFormula(f);
    ExprPtr back = parseFormula(text);
    INFO("formula: " << text);
    CHECK(structEq(f, back));
  }
}

TEST_CASE("evaluate agrees with the reference evaluator") {
  Gen g;
  g.rng.seed(99173);
  for (int i = 0; i < 2000; i++) {
    ExprPtr f = g.pick(2) ? g.genBool(4) : g.genInt(4);
    Valuation v = g.genValuation();
    Value got = evaluate(f, v);
    RVal want = refEval(f, v);
    INFO("formula: " << printFormula(f));
    CHECK(isInt(got) == !want.isBool);
    CHECK(asNum(got) == want.i);
  }
}

TEST_CASE("substitute replaces free variables") {
  ExprPtr f = parseFormula("x + y >= 2 && p");
  std::map<std::string, ExprPtr> sub{{"x", mkInt(5)}, {"p", mkTrue()}};
  ExprPtr g = substitute(f, sub);
  CHECK(printFormula(g) == printFormula(parseFormula("5 + y >= 2 && true")));
  auto fv = freeVars(g);
  CHECK(fv == std::vector<std::string>{"y"});
}
