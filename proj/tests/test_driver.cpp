// Outer synthesis loop: end-to-end convergence, replayability of the stored
// solution, deterministic machine reports, and the learner ablation.

#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include "vmtlc/driver.hpp"
#include "vmtlc/mutate.hpp"

#include "helpers.hpp"

using namespace vmtlc;
using namespace vmtlc::testing;

TEST_CASE("set-sum contextual seed 1 verifies and the solution replays") {
  TypedProgram tp = load_benchmark("set-sum");
  RunConfig cfg;
  cfg.seed = 1;
  RunReport rep = vmtlc::vmtlc(tp, cfg);
  REQUIRE(rep.verdict == RunVerdict::Verified);
  REQUIRE(rep.E >= 1);

  // Replay 1: the stored solution validates the CHC system.
  CHCSystem sys = generate_chcs(tp, Mode::Contextual);
  CheckResult chk = check_system(sys, rep.solution, cfg.backend);
  REQUIRE(chk.verdict == Verdict::Valid);

  // Replay 2: testing with the final round's seed finds no violation.
  TestConfig tcfg = cfg.tester;
  tcfg.seed = cfg.seed * 1000003ull + (std::uint64_t)rep.E;
  auto prog = construct_test_program(tp, Mode::Contextual, "", rep.solution);
  auto out = run_test_loop(prog, tcfg);
  REQUIRE(out.ok);
}

TEST_CASE("a client with no reachable violation verifies in round 1") {
  Program p = parseProgram(
      "class C { field x: int; init() { x = 0; }\n"
      "  method bump() { x = x + 1; }\n"
      "  observer get(): int { return x; } }\n"
      "client { main() { var c: C = new C(); c.bump();\n"
      "  var v: int = c.get(); assert(v >= 0); } }");
  RunConfig cfg;
  cfg.seed = 7;
  RunReport rep = vmtlc::vmtlc(typecheck(p), cfg);
  REQUIRE(rep.verdict == RunVerdict::Verified);
}

TEST_CASE("every shipped benchmark loads; unknown names are rejected") {
  for (const char* n : {"set-sum", "set-sum-nomin", "stack", "list-min",
                        "list-max", "token-bucket", "process-queue", "calendar"}) {
    TypedProgram tp = load_benchmark(n);
    REQUIRE(tp.program.findRoutine("main") != nullptr);
    REQUIRE_FALSE(generate_chcs(tp, Mode::Contextual).clauses.empty());
  }
  REQUIRE_THROWS_AS(load_benchmark("no-such-benchmark"), UnknownBenchmark);
}

TEST_CASE("machine reports are byte-identical across repeated runs") {
  TypedProgram tp = load_benchmark("stack");
  RunConfig cfg;
  cfg.seed = 1;
  RunReport a = vmtlc::vmtlc(tp, cfg);
  RunReport b = vmtlc::vmtlc(tp, cfg);
  std::string ra = report(a, ReportFormat::Machine);
  std::string rb = report(b, ReportFormat::Machine);
  REQUIRE(ra == rb);
  // The wall clock differs between runs but never reaches the machine text.
  REQUIRE(ra.find("elapsed") == std::string::npos);
}

TEST_CASE("machine report carries the versioned schema and round log") {
  TypedProgram tp = load_benchmark("set-sum");
  RunConfig cfg;
  cfg.seed = 1;
  RunReport rep = vmtlc::vmtlc(tp, cfg);
  rep.benchmark = "set-sum";
  auto j = nlohmann::json::parse(report(rep, ReportFormat::Machine));
  REQUIRE(j["schema"] == "vmtlc-report-v1");
  REQUIRE(j["verdict"] == "Verified");
  REQUIRE(j["mode"] == "contextual");
  REQUIRE(j["benchmark"] == "set-sum");
  REQUIRE(j["E"].get<int>() == rep.E);
  REQUIRE(j["I"].get<int>() == rep.I);
  REQUIRE(j["rounds"].size() == (std::size_t)rep.E);
  REQUIRE(j["solution"].contains("inv_1"));
  // Violations in earlier rounds are logged with their relation names.
  int totalViolations = 0;
  for (auto& r : j["rounds"]) totalViolations += r["violations"].get<int>();
  REQUIRE(totalViolations == j["posCex"].get<int>());
}

TEST_CASE("positive examples accumulate and never shrink across rounds") {
  TypedProgram tp = load_benchmark("set-sum");
  RunConfig cfg;
  cfg.seed = 1;
  RunReport rep = vmtlc::vmtlc(tp, cfg);
  REQUIRE(rep.verdict == RunVerdict::Verified);
  // Convergence required testing feedback: some round reported a violation.
  REQUIRE(rep.posCexCount > 0);
  REQUIRE(rep.E > 1);
  // The last round is clean by definition of Verified.
  REQUIRE(rep.rounds.back().violations == 0);
}

TEST_CASE("overfit learner needs strictly more rounds than the builtin") {
  TypedProgram tp = load_benchmark("set-sum");
  RunConfig builtin;
  builtin.seed = 1;
  RunReport rb = vmtlc::vmtlc(tp, builtin);
  REQUIRE(rb.verdict == RunVerdict::Verified);

  RunConfig overfit = builtin;
  overfit.learner = LearnerKind::Overfit;
  RunReport ro = vmtlc::vmtlc(tp, overfit);
  bool exhausted = ro.verdict == RunVerdict::TesterBudgetExhausted ||
                   ro.verdict == RunVerdict::LearnerTimeout;
  REQUIRE((exhausted || ro.E > rb.E));
}

TEST_CASE("modular synthesis on a planted mutant never verifies") {
  // Tight learner budget: the expected outcome is a timeout, not progress.
  Program m = apply_mutation(
      parseProgram(readFile(benchPath("set-sum"))), 1);
  RunConfig cfg;
  cfg.mode = Mode::Modular;
  cfg.seed = 1;
  cfg.learnerBudgetSeconds = 15.0;
  RunReport rep = vmtlc::vmtlc(typecheck(m), cfg);
  REQUIRE(rep.verdict != RunVerdict::Verified);
}

TEST_CASE("external learner command drives a full run") {
  // An external learner that echoes back "learn everything as true" on round
  // 0 and defers to protocol fallback afterwards exercises the plug-in path.
  std::string script = "/tmp/vmtlc_ext_stub.py";
  {
    std::ofstream f(script);
    f << "#!/usr/bin/env python3\n"
         "import json,sys\n"
         "req=json.loads(sys.stdin.readline())\n"
         "assert req['version']=='v1' and 'system' in req\n"
         "print(json.dumps({'version':'v1','solutions':{}}))\n";
  }
  // All-true contracts suffice here: the assertion is a tautology.
  Program p = parseProgram(
      "class C { field x: int; init() { x = 0; }\n"
      "  method bump() { x = x + 1; }\n"
      "  observer get(): int { return x; } }\n"
      "client { main() { var c: C = new C(); c.bump();\n"
      "  var v: int = c.get(); assert(v == v); } }");
  RunConfig cfg;
  cfg.learner = LearnerKind::External;
  cfg.externalCmd = "python3 " + script;
  cfg.seed = 3;
  RunReport rep = vmtlc::vmtlc(typecheck(p), cfg);
  // All-true is valid for this client, so one round suffices.
  REQUIRE(rep.verdict == RunVerdict::Verified);
}
