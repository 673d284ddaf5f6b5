// vmtlc command-line front end.
//
//   vmtlc run <file.vml | benchmark-name> [options]   synthesize + verify
//   vmtlc bench <benchmark-name> [options]            run a shipped benchmark
//   vmtlc mutate <file.vml> --template {1|2}          emit a mutated client
//
// `run` and `bench` write the machine report (JSON, schema vmtlc-report-v1)
// to --out when given and print the human summary to stdout. `mutate` prints
// the mutant program to stdout or writes it to --out.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "vmtlc/driver.hpp"
#include "vmtlc/mutate.hpp"

namespace {

vmtlc::TypedProgram loadTarget(const std::string& target) {
  std::ifstream f(target);
  if (f) {
    std::stringstream ss;
    ss << f.rdbuf();
    return vmtlc::typecheck(vmtlc::parseProgram(ss.str()));
  }
  return vmtlc::load_benchmark(target);
}

std::string targetTag(const std::string& target) {
  auto slash = target.find_last_of('/');
  std::string base = slash == std::string::npos ? target : target.substr(slash + 1);
  if (base.size() > 4 && base.substr(base.size() - 4) == ".vml")
    base = base.substr(0, base.size() - 4);
  return base;
}

struct RunOpts {
  std::string target;
  std::string mode = "contextual";
  std::string learner = "builtin";
  std::string backend = "auto";
  std::uint64_t seed = 0;
  int rbExecs = 4000;
  long long rbFuel = 20000;
  int maxSetupOps = 16;
  double learnerBudget = 120.0;
  std::string out;
};

void addRunFlags(CLI::App* cmd, RunOpts& o, bool withTarget) {
  if (withTarget)
    cmd->add_option("target", o.target, "benchmark name or .vml file")->required();
  cmd->add_option("--mode", o.mode, "modular|contextual (default contextual)")
      ->check(CLI::IsMember({"modular", "contextual"}));
  cmd->add_option("--learner", o.learner,
                  "builtin|overfit|external:<cmd> (default builtin)");
  cmd->add_option("--backend", o.backend, "smt|enum|auto (default auto)")
      ->check(CLI::IsMember({"smt", "enum", "auto"}));
  cmd->add_option("--seed", o.seed, "tester seed (default 0)");
  cmd->add_option("--rb-execs", o.rbExecs,
                  "fuzzer executions per round (default 4000)");
  cmd->add_option("--rb-fuel", o.rbFuel,
                  "interpreter fuel per execution (default 20000)");
  cmd->add_option("--max-setup-ops", o.maxSetupOps,
                  "modular harness setup-call cap (default 16)");
  cmd->add_option("--learner-budget", o.learnerBudget,
                  "learner wall-clock budget in seconds (default 120)");
  cmd->add_option("--out", o.out, "write the machine report to this file");
}

int doRun(const RunOpts& o, bool benchOnly) {
  using namespace vmtlc;
  TypedProgram tp =
      benchOnly ? load_benchmark(o.target) : loadTarget(o.target);

  RunConfig cfg;
  cfg.mode = o.mode == "modular" ? Mode::Modular : Mode::Contextual;
  if (o.learner == "builtin") {
    cfg.learner = LearnerKind::Builtin;
  } else if (o.learner == "overfit") {
    cfg.learner = LearnerKind::Overfit;
  } else if (o.learner.rfind("external:", 0) == 0) {
    cfg.learner = LearnerKind::External;
    cfg.externalCmd = o.learner.substr(9);
    if (cfg.externalCmd.empty()) {
      std::cerr << "error: --learner external: needs a command\n";
      return 2;
    }
  } else {
    std::cerr << "error: unknown learner '" << o.learner << "'\n";
    return 2;
  }
  cfg.backend.kind = o.backend == "smt"    ? BackendConfig::Kind::Smt
                     : o.backend == "enum" ? BackendConfig::Kind::Enum
                                           : BackendConfig::Kind::Auto;
  if (const char* smt = std::getenv("VMTLC_SMT")) cfg.backend.smtCmd = smt;
  if (cfg.backend.kind == BackendConfig::Kind::Smt && cfg.backend.smtCmd.empty()) {
    std::cerr << "error: --backend smt needs VMTLC_SMT to name a solver command\n";
    return 2;
  }
  cfg.seed = o.seed;
  cfg.learnerBudgetSeconds = o.learnerBudget;
  cfg.tester.maxExecs = o.rbExecs;
  cfg.tester.fuel = o.rbFuel;
  cfg.tester.maxSetupOps = o.maxSetupOps;

  RunReport rep = vmtlc::vmtlc(tp, cfg);
  rep.benchmark = targetTag(o.target);

  if (!o.out.empty()) {
    std::ofstream f(o.out);
    if (!f) {
      std::cerr << "error: cannot write " << o.out << "\n";
      return 2;
    }
    f << report(rep, ReportFormat::Machine);
  }
  std::cout << report(rep, ReportFormat::Human);
  return rep.verdict == RunVerdict::Verified ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contract and invariant synthesis with testing feedback"};
  app.require_subcommand(1);

  RunOpts runOpts;
  CLI::App* run = app.add_subcommand("run", "synthesize contracts for a program");
  addRunFlags(run, runOpts, true);

  RunOpts benchOpts;
  CLI::App* bench = app.add_subcommand("bench", "run a shipped benchmark");
  bench->add_option("name", benchOpts.target, "benchmark name")->required();
  addRunFlags(bench, benchOpts, false);

  std::string mutFile, mutOut;
  int mutTemplate = 1;
  CLI::App* mut = app.add_subcommand("mutate", "plant a rare-path bug in a client");
  mut->add_option("file", mutFile, ".vml file")->required();
  mut->add_option("--template", mutTemplate, "1 = rare branch in loop, 2 = after loop")
      ->check(CLI::IsMember({1, 2}));
  mut->add_option("--out", mutOut, "write the mutant here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return doRun(runOpts, false);
    if (bench->parsed()) return doRun(benchOpts, true);
    // mutate
    std::ifstream f(mutFile);
    if (!f) {
      std::cerr << "error: cannot open " << mutFile << "\n";
      return 2;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    vmtlc::Program mutant =
        vmtlc::apply_mutation(vmtlc::parseProgram(ss.str()), mutTemplate);
    std::string text = vmtlc::prettyPrint(mutant);
    if (!mutOut.empty()) {
      std::ofstream g(mutOut);
      if (!g) {
        std::cerr << "error: cannot write " << mutOut << "\n";
        return 2;
      }
      g << text;
    } else {
      std::cout << text;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
