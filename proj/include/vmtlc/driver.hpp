#ifndef VMTLC_DRIVER_HPP
#define VMTLC_DRIVER_HPP

// Outer CEGIS loop: solve the CHC system modulo accumulated positive
// examples, test the candidate contracts, feed violations back as positive
// examples, repeat until the verifier and the tester jointly accept.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vmtlc/chc.hpp"
#include "vmtlc/learner.hpp"
#include "vmtlc/oracle.hpp"
#include "vmtlc/parser.hpp"
#include "vmtlc/tester.hpp"
#include "vmtlc/typecheck.hpp"
#include "vmtlc/vcgen.hpp"

#include <json.hpp>

namespace vmtlc {

struct UnknownBenchmark : std::runtime_error {
  explicit UnknownBenchmark(const std::string& n)
      : std::runtime_error("no benchmark named " + n) {}
};

struct RunConfig {
  Mode mode = Mode::Contextual;
  LearnerKind learner = LearnerKind::Builtin;
  std::string externalCmd;
  BackendConfig backend;
  double learnerBudgetSeconds = 120.0;
  int learnerIterationCap = 2000;
  // Per-round RB; budgetSeconds defaults to 500. The driver default trims
  // executions and fuel relative to the bare tester: rounds repeat, so the
  // joint budget dominates single-round depth.
  TestConfig tester{.maxExecs = 4000, .fuel = 20000};
  std::uint64_t seed = 0;
  int outerRoundCap = 25;
};

enum class RunVerdict { Verified, LearnerTimeout, TesterBudgetExhausted, Aborted };

inline std::string verdictName(RunVerdict v) {
  switch (v) {
    case RunVerdict::Verified: return "Verified";
    case RunVerdict::LearnerTimeout: return "LearnerTimeout";
    case RunVerdict::TesterBudgetExhausted: return "TesterBudgetExhausted";
    case RunVerdict::Aborted: return "Aborted";
  }
  return "Aborted";
}

struct RoundEvent {
  int round = 0;
  int learnerIterations = 0;
  int violations = 0;
  std::vector<std::string> violatedRelations;
};

struct RunReport {
  RunVerdict verdict = RunVerdict::Aborted;
  Mode mode = Mode::Contextual;
  std::string benchmark;  // optional tag for reports
  SolutionMap solution;   // final candidate (the verified one when Verified)
  int E = 0;              // outer rounds performed
  int I = 0;              // total learner iterations
  int posCexCount = 0;
  std::string failure;    // learner/abort detail
  std::vector<RoundEvent> rounds;
  double elapsedSeconds = 0.0;  // human report only, excluded from machine text
};

namespace detail {

// A modular violation pins the method's contract relation; a contextual one
// pins its call site's relation.
inline ICESample violationToPosCex(const CHCSystem& sys,
                                   const ContractViolation& v, Mode mode,
                                   const TypedProgram& tp) {
  std::string rel = v.name;
  if (mode == Mode::Modular) {
    for (const auto& c : tp.program.classes)
      if (c.findCallable(v.name)) {
        rel = contractRelName(Mode::Modular, -1, c.name, v.name);
        break;
      }
  }
  ICESample s;
  s.kind = SampleKind::Positive;
  SamplePoint p;
  p.rel = rel;
  const Relation* r = sys.findRelation(rel);
  if (r) {
    for (const auto& prm : r->params) {
      auto it = v.valuation.find(prm.name);
      p.point[prm.name] =
          it != v.valuation.end()
              ? it->second
              : (prm.sort == Sort::Bool ? Value(false) : Value(std::int64_t{0}));
    }
  } else {
    p.point = v.valuation;
  }
  s.points.push_back(p);
  s.origin = "tester";
  return s;
}

// The library methods whose contracts the modular tester exercises: every
// method with a contract relation in the system.
inline std::vector<std::string> testedMethods(const CHCSystem& sys) {
  std::vector<std::string> out;
  for (const auto& r : sys.relations) {
    if (r.kind != RelKind::ModularContract) continue;
    auto second = r.name.find('_', 2);  // m_<class>_<method>
    out.push_back(r.name.substr(second + 1));
  }
  return out;
}

}  // namespace detail

inline RunReport vmtlc(const TypedProgram& tp, const RunConfig& cfg) {
  RunReport rep;
  rep.mode = cfg.mode;
  auto start = std::chrono::steady_clock::now();
  CHCSystem sys = generate_chcs(tp, cfg.mode);

  LearnerConfig lcfg;
  lcfg.kind = cfg.learner;
  lcfg.externalCmd = cfg.externalCmd;
  lcfg.budgetSeconds = cfg.learnerBudgetSeconds;
  lcfg.iterationCap = cfg.learnerIterationCap;

  std::vector<ICESample> posCex;
  auto finish = [&](RunVerdict v) {
    rep.verdict = v;
    rep.posCexCount = (int)posCex.size();
    rep.elapsedSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return rep;
  };

  double learnerSpent = 0.0;  // the learner budget is shared across rounds
  for (int round = 1; round <= cfg.outerRoundCap; ++round) {
    rep.E = round;
    lcfg.budgetSeconds = cfg.learnerBudgetSeconds - learnerSpent;
    auto iceStart = std::chrono::steady_clock::now();
    IceResult ice = ice_chc_solve(sys, posCex, cfg.backend, lcfg);
    learnerSpent += std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - iceStart)
                        .count();
    rep.I += ice.iterations;
    RoundEvent ev;
    ev.round = round;
    ev.learnerIterations = ice.iterations;
    if (!ice.solution) {
      rep.failure = ice.failure;
      rep.rounds.push_back(ev);
      return finish(ice.failure == "LearnerTimeout" ? RunVerdict::LearnerTimeout
                                                    : RunVerdict::Aborted);
    }
    rep.solution = *ice.solution;

    TestConfig tcfg = cfg.tester;
    tcfg.seed = cfg.seed * 1000003ull + (std::uint64_t)round;
    bool anyViolation = false;
    if (cfg.mode == Mode::Modular) {
      // Each library method's contract is checked separately.
      for (const std::string& m : detail::testedMethods(sys)) {
        auto prog = construct_test_program(tp, Mode::Modular, m, rep.solution);
        auto out = run_test_loop(prog, tcfg);
        if (!out.ok) {
          anyViolation = true;
          ICESample s =
              detail::violationToPosCex(sys, *out.violation, cfg.mode, tp);
          posCex.push_back(s);
          ev.violations++;
          ev.violatedRelations.push_back(s.points[0].rel);
        }
      }
    } else {
      auto prog = construct_test_program(tp, Mode::Contextual, "", rep.solution);
      auto out = run_test_loop(prog, tcfg);
      if (!out.ok) {
        anyViolation = true;
        ICESample s =
            detail::violationToPosCex(sys, *out.violation, cfg.mode, tp);
        posCex.push_back(s);
        ev.violations++;
        ev.violatedRelations.push_back(s.points[0].rel);
      }
    }
    rep.rounds.push_back(ev);
    if (std::getenv("VMTLC_VERBOSE")) {
      std::fprintf(stderr, "round %d: iterations=%d violations=%d\n", round,
                   ev.learnerIterations, ev.violations);
      std::fflush(stderr);
    }
    if (!anyViolation) return finish(RunVerdict::Verified);
  }
  rep.failure = "outer round cap reached";
  return finish(RunVerdict::TesterBudgetExhausted);
}

// ---------------------------------------------------------------------------
// Benchmark corpus

inline std::string benchmarkDir() {
  if (const char* env = std::getenv("VMTLC_BENCH_DIR")) return env;
#ifdef VMTLC_BENCH_DIR
  return VMTLC_BENCH_DIR;
#else
  return "benchmarks";
#endif
}

inline TypedProgram load_benchmark(const std::string& name) {
  static const char* corpus[] = {"set-sum",      "set-sum-nomin", "stack",
                                 "list-min",     "list-max",      "token-bucket",
                                 "process-queue", "calendar"};
  bool known = false;
  for (auto c : corpus)
    if (name == c) known = true;
  if (!known) throw UnknownBenchmark(name);
  std::string path = benchmarkDir() + "/" + name + ".vml";
  std::ifstream f(path);
  if (!f) throw UnknownBenchmark(name + " (missing file " + path + ")");
  std::stringstream ss;
  ss << f.rdbuf();
  return typecheck(parseProgram(ss.str()));
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Machine, Human };

// Machine reports are deterministic: stable key order, no wall-clock fields.
inline std::string report(const RunReport& rep,
                          ReportFormat fmt = ReportFormat::Machine) {
  if (fmt == ReportFormat::Machine) {
    nlohmann::ordered_json j;
    j["schema"] = "vmtlc-report-v1";
    j["verdict"] = verdictName(rep.verdict);
    j["mode"] = modeName(rep.mode);
    if (!rep.benchmark.empty()) j["benchmark"] = rep.benchmark;
    j["E"] = rep.E;
    j["I"] = rep.I;
    j["posCex"] = rep.posCexCount;
    if (!rep.failure.empty()) j["failure"] = rep.failure;
    nlohmann::ordered_json sol = nlohmann::ordered_json::object();
    for (const auto& [name, s] : rep.solution)  // std::map: sorted, stable
      sol[name] = printFormula(s.formula);
    j["solution"] = sol;
    nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
    for (const auto& r : rep.rounds) {
      nlohmann::ordered_json rj;
      rj["round"] = r.round;
      rj["learnerIterations"] = r.learnerIterations;
      rj["violations"] = r.violations;
      rj["violatedRelations"] = r.violatedRelations;
      rounds.push_back(rj);
    }
    j["rounds"] = rounds;
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "verdict: " << verdictName(rep.verdict) << "\n";
  os << "mode: " << modeName(rep.mode) << "\n";
  if (!rep.benchmark.empty()) os << "benchmark: " << rep.benchmark << "\n";
  os << "outer rounds (E): " << rep.E << "\n";
  os << "learner iterations (I): " << rep.I << "\n";
  os << "positive examples from testing: " << rep.posCexCount << "\n";
  if (!rep.failure.empty()) os << "failure: " << rep.failure << "\n";
  os << "elapsed: " << rep.elapsedSeconds << " s\n";
  os << "contracts and invariants:\n";
  for (const auto& [name, s] : rep.solution)
    os << "  " << name << " -> " << printFormula(s.formula) << "\n";
  return os.str();
}

}  // namespace vmtlc

#endif  // VMTLC_DRIVER_HPP
