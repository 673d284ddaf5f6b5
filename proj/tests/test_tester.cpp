#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "vmtlc/tester.hpp"
#include "vmtlc/parser.hpp"
#include "vmtlc/typecheck.hpp"
#include "vmtlc/vcgen.hpp"

#include "helpers.hpp"

using namespace vmtlc;
using vmtlc::testing::benchPath;
using vmtlc::testing::makeSolution;
using vmtlc::testing::readFile;

namespace {

TypedProgram loadSetSum() {
  return typecheck(parseProgram(readFile(benchPath("set-sum"))));
}

}  // namespace

TEST_CASE("Sol(remove)=false is violated by the first successful remove") {
  auto tp = loadSetSum();
  SolutionMap sol;
  sol["m_Set_remove"].params = {"emptyPre", "ret", "emptyPost"};
  sol["m_Set_remove"].formula = mkFalse();
  auto prog = construct_test_program(tp, Mode::Modular, "remove", sol);
  TestConfig cfg;
  cfg.seed = 1;
  auto out = run_test_loop(prog, cfg);
  REQUIRE_FALSE(out.ok);
  REQUIRE(out.violation.has_value());
  CHECK(out.violation->name == "remove");
  // Valuation covers pre-observers, ret, and post-observers.
  CHECK(out.violation->valuation.count("emptyPre") == 1);
  CHECK(out.violation->valuation.count("ret") == 1);
  CHECK(out.violation->valuation.count("emptyPost") == 1);
  CHECK(out.violation->valuation.count("minPre") == 1);

  SECTION("the violating buffer replays to the same violation") {
    auto res = prog.execute(out.violation->buffer, cfg.fuel);
    REQUIRE(res.violation.has_value());
    CHECK(res.violation->valuation == out.violation->valuation);
  }
}

TEST_CASE("unconditional ret >= 0 on remove is falsified") {
  auto tp = loadSetSum();
  SolutionMap sol;
  sol["m_Set_remove"].params = {"ret"};
  sol["m_Set_remove"].formula = parseFormula("ret >= 0");
  auto prog = construct_test_program(tp, Mode::Modular, "remove", sol);
  TestConfig cfg;
  cfg.seed = 7;
  auto out = run_test_loop(prog, cfg);
  REQUIRE_FALSE(out.ok);
  CHECK(asNum(out.violation->valuation.at("ret")) < 0);
}

TEST_CASE("the full modular contract set passes testing on every method") {
  auto tp = loadSetSum();
  auto sys = generate_chcs(tp, Mode::Modular);
  SolutionMap sol = makeSolution(sys, vmtlc::testing::referenceModularContracts());
  TestConfig cfg;
  cfg.seed = 3;
  for (const std::string& m : {"init", "insert", "remove", "empty"}) {
    auto prog = construct_test_program(tp, Mode::Modular, m, sol);
    auto out = run_test_loop(prog, cfg);
    INFO("method " << m);
    CHECK(out.ok);
    CHECK(out.executions == cfg.maxExecs);
  }
}

TEST_CASE("the contextual contract set passes testing through the client") {
  auto tp = loadSetSum();
  auto sys = generate_chcs(tp, Mode::Contextual);
  SolutionMap sol = makeSolution(sys, vmtlc::testing::referenceContextualContracts());
  auto prog = construct_test_program(tp, Mode::Contextual, "", sol);
  TestConfig cfg;
  cfg.seed = 3;
  auto out = run_test_loop(prog, cfg);
  CHECK(out.ok);
  CHECK(out.executions == cfg.maxExecs);
}

TEST_CASE("all-true contracts are unfalsifiable in contextual mode") {
  auto tp = loadSetSum();
  auto sys = generate_chcs(tp, Mode::Contextual);
  auto prog = construct_test_program(tp, Mode::Contextual, "", initialSolution(sys));
  TestConfig cfg;
  cfg.maxExecs = 500;
  auto out = run_test_loop(prog, cfg);
  CHECK(out.ok);
}

TEST_CASE("a falsifiable contextual contract is caught at its site") {
  auto tp = loadSetSum();
  // c_1_insert: claim inserted values are at most 3 — the client lets any
  // nonnegative value through, so the fuzzer can exceed it.
  SolutionMap sol;
  sol["c_1_insert"].params = {"ival"};
  sol["c_1_insert"].formula = parseFormula("ival <= 3");
  auto prog = construct_test_program(tp, Mode::Contextual, "", sol);
  TestConfig cfg;
  cfg.seed = 11;
  auto out = run_test_loop(prog, cfg);
  REQUIRE_FALSE(out.ok);
  CHECK(out.violation->siteId == 1);
  CHECK(out.violation->name == "c_1_insert");
  CHECK(asNum(out.violation->valuation.at("ival")) > 3);
}

TEST_CASE("setup decoding covers every library method") {
  auto tp = loadSetSum();
  auto prog = construct_test_program(tp, Mode::Modular, "insert",
                                     SolutionMap{});
  std::mt19937_64 rng(99);
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::int64_t> buf;
    int len = 1 + (int)(rng() % 24);
    for (int k = 0; k < len; ++k) buf.push_back((std::int64_t)(rng() % 64) - 8);
    auto res = prog.execute(buf, 100000);
    for (const auto& s : res.setup) seen.insert(s.method);
  }
  for (const std::string& m : {"insert", "remove", "empty", "size", "min"})
    CHECK(seen.count(m) == 1);
}

TEST_CASE("setup sequences are capped at 16 operations") {
  auto tp = loadSetSum();
  auto prog = construct_test_program(tp, Mode::Modular, "insert", SolutionMap{});
  std::mt19937_64 rng(5);
  std::size_t maxSeen = 0;
  for (int i = 0; i < 500; ++i) {
    std::vector<std::int64_t> buf;
    for (int k = 0; k < 40; ++k) buf.push_back((std::int64_t)(rng() % 1000));
    auto res = prog.execute(buf, 1000000);
    maxSeen = std::max(maxSeen, res.setup.size());
  }
  CHECK(maxSeen == 16);
}

TEST_CASE("test loops are deterministic in (program, config)") {
  auto tp = loadSetSum();
  SolutionMap sol;
  sol["m_Set_remove"].params = {"ret"};
  sol["m_Set_remove"].formula = parseFormula("ret >= 0");
  auto prog = construct_test_program(tp, Mode::Modular, "remove", sol);
  TestConfig cfg;
  cfg.seed = 13;
  auto a = run_test_loop(prog, cfg);
  auto b = run_test_loop(prog, cfg);
  CHECK(a.ok == b.ok);
  CHECK(a.executions == b.executions);
  REQUIRE(a.violation.has_value());
  CHECK(a.violation->buffer == b.violation->buffer);
  CHECK(a.violation->valuation == b.violation->valuation);
}

TEST_CASE("a larger RB finds the same first violation") {
  auto tp = loadSetSum();
  SolutionMap sol;
  sol["m_Set_remove"].params = {"ret"};
  sol["m_Set_remove"].formula = parseFormula("ret >= 0");
  auto prog = construct_test_program(tp, Mode::Modular, "remove", sol);
  TestConfig small;
  small.seed = 21;
  small.maxExecs = 2000;
  auto a = run_test_loop(prog, small);
  REQUIRE_FALSE(a.ok);
  TestConfig big = small;
  big.maxExecs = 10000;
  auto b = run_test_loop(prog, big);
  REQUIRE_FALSE(b.ok);
  CHECK(a.executions == b.executions);
  CHECK(a.violation->buffer == b.violation->buffer);
}

TEST_CASE("unknown methods are rejected") {
  auto tp = loadSetSum();
  CHECK_THROWS_AS(
      construct_test_program(tp, Mode::Modular, "frobnicate", SolutionMap{}),
      UnknownMethod);
}

TEST_CASE("fuel exhaustion during testing is not a violation") {
  auto tp = loadSetSum();
  SolutionMap sol;
  sol["c_3_remove"].params = {"ret"};
  sol["c_3_remove"].formula = mkTrue();
  auto prog = construct_test_program(tp, Mode::Contextual, "", sol);
  TestConfig cfg;
  cfg.maxExecs = 200;
  cfg.fuel = 20;  // nearly everything runs out of fuel
  auto out = run_test_loop(prog, cfg);
  CHECK(out.ok);
  CHECK(out.executions == 200);
}
