#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "vmtlc/chc.hpp"

using namespace vmtlc;
using namespace vmtlc::testing;

TEST_CASE("substitute_relations on a phiC5-style query") {
  // inv2(emptyPre, sum) with Sol[inv2] = sum >= 0; clause body also requires
  // emptyPre and sum < 0; head false.
  CHC c;
  c.kind = ClauseKind::Query;
  c.vars = {{"emptyPre", Sort::Bool}, {"sum", Sort::Int}};
  c.body = {Atom{"inv2", {"emptyPre", "sum"}}};
  c.constraint = parseFormula("emptyPre && sum < 0");
  c.head = std::nullopt;

  SolutionMap sol;
  sol["inv2"] = Solution{{"e", "s"}, parseFormula("s >= 0")};

  Formula f = substitute_relations(c, sol);
  CHECK(printFormula(f) == "sum >= 0 && (emptyPre && sum < 0) => false");

  // The interpretation leaves a falsifiable implication: sum >= 0 is too weak
  // only if some valuation satisfies the body; here none does, so the clause
  // holds for every ground valuation.
  for (int64_t s = -3; s <= 3; s++) {
    for (bool e : {false, true}) {
      Valuation v{{"emptyPre", Value{e}}, {"sum", Value{s}}};
      CHECK(evaluateBool(f, v) == evaluate_clause(c, sol, v));
    }
  }
}

TEST_CASE("clause with no relations keeps its constraint") {
  CHC c;
  c.kind = ClauseKind::Query;
  c.vars = {{"x", Sort::Int}};
  c.constraint = parseFormula("x < 0");
  Formula f = substitute_relations(c, {});
  Valuation v{{"x", Value{int64_t{-1}}}};
  CHECK_FALSE(evaluateBool(f, v));
  v["x"] = Value{int64_t{1}};
  CHECK(evaluateBool(f, v));
}

TEST_CASE("missing relation raises") {
  CHC c;
  c.kind = ClauseKind::Fact;
  c.constraint = mkTrue();
  c.head = Atom{"ghost", {}};
  CHECK_THROWS_AS(substitute_relations(c, {}), MissingRelation);
}

TEST_CASE("substitution commutes with evaluation on random clauses") {
  ClauseGen g(0xC0FFEE);
  for (int i = 0; i < 300; i++) {
    auto rels = g.genRelations();
    auto sol = g.genSolution(rels);
    CHC c = g.genClause(rels, g.fg.pick(2) == 0);
    Formula closed = substitute_relations(c, sol);
    for (int j = 0; j < 10; j++) {
      Valuation v = g.genValuation(c.vars);
      INFO("clause constraint: " << printFormula(c.constraint));
      CHECK(evaluateBool(closed, v) == evaluate_clause(c, sol, v));
    }
  }
}

TEST_CASE("encode_positive_example pins the point") {
  Relation rel;
  rel.name = "m_Set_remove";
  rel.kind = RelKind::ModularContract;
  rel.params = {{"emptyPre", Sort::Bool}, {"ret", Sort::Int}, {"emptyPost", Sort::Bool}};
  Valuation val{{"emptyPre", Value{false}},
                {"ret", Value{int64_t{5}}},
                {"emptyPost", Value{false}}};
  CHC fact = encode_positive_example(rel, val);
  CHECK(fact.kind == ClauseKind::Fact);
  CHECK(fact.body.empty());
  REQUIRE(fact.head.has_value());
  CHECK(fact.head->rel == rel.name);

  // Any solution consistent with the fact accepts the point.
  SolutionMap ok;
  ok[rel.name] = Solution{{"emptyPre", "ret", "emptyPost"},
                          parseFormula("emptyPre || ret >= 0")};
  CHECK(evaluate_clause(fact, ok, val));
  Valuation inner = val;
  CHECK(evaluateBool(ok[rel.name].formula, inner));

  SolutionMap bad;
  bad[rel.name] = Solution{{"emptyPre", "ret", "emptyPost"}, parseFormula("ret < 0")};
  CHECK_FALSE(evaluate_clause(fact, bad, val));
}

TEST_CASE("positive example over 0-ary relation") {
  Relation rel{"unit", RelKind::ModularContract, {}};
  CHC fact = encode_positive_example(rel, {});
  CHECK(fact.kind == ClauseKind::Fact);
  CHECK(evaluateBool(fact.constraint, {}));
  CHECK_THROWS_AS(
      encode_positive_example(rel, Valuation{{"x", Value{int64_t{1}}}}),
      ArityMismatch);
}

TEST_CASE("random positive examples satisfied by consistent solutions") {
  ClauseGen g(77);
  for (int i = 0; i < 100; i++) {
    auto rels = g.genRelations();
    const Relation& rel = rels[g.fg.pick(rels.size())];
    Valuation val = g.genValuation(rel.params);
    CHC fact = encode_positive_example(rel, val);
    // A solution that accepts exactly this point.
    std::vector<Formula> eqs;
    Solution s;
    for (auto& p : rel.params) {
      s.params.push_back(p.name);
      ExprPtr ground = isInt(val[p.name]) ? mkInt(asInt(val[p.name]))
                                          : mkBool(asBool(val[p.name]));
      eqs.push_back(mkEq(mkVar(p.name), ground));
    }
    s.formula = mkAndList(eqs);
    SolutionMap sol{{rel.name, s}};
    CHECK(evaluateBool(substitute_relations(fact, sol), val));
  }
}
