#ifndef VMTLC_TESTER_HPP
#define VMTLC_TESTER_HPP

// Deterministic contract testing. Modular mode drives objects through
// buffer-decoded method sequences and checks one method's contract per
// execution; contextual mode runs the instrumented client with per-call-site
// checks. Buffers come from a seeded mutational fuzzer.

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vmtlc/chc.hpp"
#include "vmtlc/interp.hpp"
#include "vmtlc/oracle.hpp"
#include "vmtlc/typecheck.hpp"
#include "vmtlc/vcgen.hpp"

namespace vmtlc {

struct UnknownMethod : std::runtime_error {
  explicit UnknownMethod(const std::string& n)
      : std::runtime_error("no library method named " + n) {}
};

struct TestConfig {
  int maxExecs = 10000;           // RB: executions per loop
  std::int64_t fuel = 100000;     // RB: per-execution fuel
  int maxBufferLen = 64;          // RB: buffer length cap
  std::uint64_t seed = 0;
  int maxSetupOps = 16;
  double budgetSeconds = 500.0;   // per-round wall-clock safety cap
};

struct ContractViolation {
  std::string name;      // method (modular) or c_<site>_<method> (contextual)
  int siteId = -1;       // contextual only
  Valuation valuation;   // pre-observers, args, ret, post-observers
  std::vector<std::int64_t> buffer;  // replay input
};

struct TestOutcome {
  bool ok = true;
  std::optional<ContractViolation> violation;
  int executions = 0;   // number actually performed
};

// ---------------------------------------------------------------------------
// Test programs

namespace detail {

// Names the callables a modular setup sequence may invoke (every library
// method and observer; constructors run once up front).
inline std::vector<const MethodDecl*> setupOps(const ClassDecl& cls) {
  std::vector<const MethodDecl*> ops;
  for (const auto& m : cls.methods) ops.push_back(&m);
  for (const auto& o : cls.observers) ops.push_back(&o);
  return ops;
}

inline std::int64_t decodeIndex(std::int64_t v, std::int64_t n) {
  std::int64_t m = v % n;
  return m < 0 ? m + n : m;
}

}  // namespace detail

// Decoded shape of a modular test execution, exposed for coverage audits.
struct SetupStep {
  std::string method;
  std::vector<Value> args;
};

struct TestProgram {
  const TypedProgram* tp = nullptr;
  Mode mode = Mode::Modular;
  const ClassDecl* cls = nullptr;   // modular
  const MethodDecl* method = nullptr;  // modular: the method under test
  SolutionMap sol;

  struct ExecResult {
    std::optional<ContractViolation> violation;
    std::uint64_t fingerprint = 0;
    std::vector<SetupStep> setup;  // modular only, for audits
  };

  ExecResult execute(const std::vector<std::int64_t>& buffer,
                     std::int64_t fuel) const {
    return mode == Mode::Modular ? execModular(buffer, fuel)
                                 : execContextual(buffer, fuel);
  }

 private:
  static void readArgs(const MethodDecl& m, InputBuffer& buf,
                       std::vector<Value>& out) {
    for (const auto& p : m.params)
      out.push_back(p.sort == Sort::Bool ? Value(buf.next() % 2 != 0)
                                         : Value(buf.next()));
  }

  // Valuation over the contract relation's conventional parameter names.
  static Valuation contractValuation(const MethodDecl& m,
                                     const ObserverSnapshot& pre,
                                     const std::vector<Value>& args,
                                     const std::optional<Value>& ret,
                                     const ObserverSnapshot& post) {
    Valuation v;
    if (m.name != "init")
      for (const auto& [n, val] : pre) v[n + "Pre"] = val;
    for (std::size_t i = 0; i < m.params.size(); ++i)
      v[m.params[i].name] = args[i];
    if (ret) v["ret"] = *ret;
    for (const auto& [n, val] : post) v[n + "Post"] = val;
    return v;
  }

  bool contractHolds(const std::string& relName, const Valuation& v) const {
    auto it = sol.find(relName);
    if (it == sol.end()) return true;  // unconstrained relation
    Valuation inner;
    for (const auto& p : it->second.params) {
      auto f = v.find(p);
      inner[p] = f == v.end() ? Value(std::int64_t{0}) : f->second;
    }
    return evaluateBool(it->second.formula, inner);
  }

  ExecResult execModular(const std::vector<std::int64_t>& buffer,
                         std::int64_t fuel) const {
    ExecResult res;
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t x) { h ^= x; h *= 1099511628211ull; };
    InputBuffer buf{buffer};
    try {
      // Decode: constructor args, setup-op count, setup ops, N's args.
      ObjectState st = freshObject(*cls);
      std::vector<Value> ctorArgs;
      readArgs(cls->ctor, buf, ctorArgs);
      exec_method(*cls, st, "init", ctorArgs, fuel);

      auto ops = detail::setupOps(*cls);
      int setupCount = ops.empty()
                           ? 0
                           : (int)detail::decodeIndex(buf.next(), 17);
      for (int k = 0; k < setupCount; ++k) {
        const MethodDecl* op =
            ops[(std::size_t)detail::decodeIndex(buf.next(), (std::int64_t)ops.size())];
        std::vector<Value> args;
        readArgs(*op, buf, args);
        exec_method(*cls, st, op->name, args, fuel);
        mix(std::hash<std::string>{}(op->name));
        res.setup.push_back({op->name, args});
      }

      ObserverSnapshot pre = eval_observers(*cls, st, fuel);
      std::vector<Value> args;
      readArgs(*method, buf, args);
      std::optional<Value> ret;
      ObserverSnapshot post;
      if (method->name == "init") {
        ObjectState st2 = freshObject(*cls);
        ret = exec_method(*cls, st2, "init", args, fuel);
        post = eval_observers(*cls, st2, fuel);
      } else {
        ret = exec_method(*cls, st, method->name, args, fuel);
        post = eval_observers(*cls, st, fuel);
      }
      for (const auto& [n, v] : pre) { mix(n.size()); mix((std::uint64_t)asNum(v)); }
      for (const auto& a : args) mix((std::uint64_t)asNum(a));
      if (ret) mix((std::uint64_t)asNum(*ret));
      for (const auto& [n, v] : post) { mix(n.size()); mix((std::uint64_t)asNum(v)); }
      res.fingerprint = h;

      Valuation v = contractValuation(*method, pre, args, ret, post);
      std::string rel = contractRelName(Mode::Modular, -1, cls->name, method->name);
      if (!contractHolds(rel, v)) {
        ContractViolation cv;
        cv.name = method->name;
        cv.valuation = v;
        cv.buffer = buffer;
        res.violation = cv;
      }
    } catch (const FuelExhausted&) {
      // Bounded-resource semantics: no finding on this input.
      res.fingerprint = h ^ 0x5eedull;
    }
    return res;
  }

  ExecResult execContextual(const std::vector<std::int64_t>& buffer,
                            std::int64_t fuel) const {
    ExecResult res;
    std::optional<ContractViolation> found;
    CallHook hook = [&](const CallEvent& ev) {
      const ClassDecl* c = tp->program.findClass(ev.className);
      const MethodDecl* m = c->findCallable(ev.methodName);
      Valuation v = contractValuation(*m, ev.pre, ev.args, ev.ret, ev.post);
      std::string rel = contractRelName(Mode::Contextual, ev.siteId, "", ev.methodName);
      if (!contractHolds(rel, v)) {
        ContractViolation cv;
        cv.name = rel;
        cv.siteId = ev.siteId;
        cv.valuation = v;
        cv.buffer = buffer;
        found = cv;
        return false;  // first failing site ends the execution
      }
      return true;
    };
    Trace t = exec_client(*tp, InputBuffer{buffer}, hook, fuel);
    res.fingerprint = t.fingerprint();
    res.violation = found;
    return res;
  }
};

inline TestProgram construct_test_program(const TypedProgram& tp, Mode mode,
                                          const std::string& methodN,
                                          const SolutionMap& sol) {
  TestProgram p;
  p.tp = &tp;
  p.mode = mode;
  p.sol = sol;
  if (mode == Mode::Modular) {
    for (const auto& c : tp.program.classes) {
      if (const MethodDecl* m = c.findCallable(methodN)) {
        p.cls = &c;
        p.method = m;
        break;
      }
    }
    if (!p.method) throw UnknownMethod(methodN);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Algorithm 2 loop: seeded deterministic mutational fuzzing

namespace detail {

struct XorShift {
  std::uint64_t s;
  explicit XorShift(std::uint64_t seed) : s(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return s;
  }
  std::int64_t pick(std::int64_t n) { return (std::int64_t)(next() % (std::uint64_t)n); }
};

inline std::int64_t interestingValue(XorShift& rng) {
  static const std::int64_t table[] = {0, 1, -1, 2, 3, 5, 7, -2, 16, 100, -100};
  switch (rng.pick(4)) {
    case 0: return table[rng.pick(11)];
    case 1: return rng.pick(21) - 10;
    case 2: return rng.pick(201) - 100;
    default: return (std::int64_t)(rng.next() % 100000) - 50000;
  }
}

}  // namespace detail

inline TestOutcome run_test_loop(const TestProgram& prog,
                                 const TestConfig& cfg) {
  TestOutcome out;
  detail::XorShift rng(cfg.seed * 0x2545f4914f6cdd1dull + 0x9e3779b97f4a7c15ull);
  std::vector<std::vector<std::int64_t>> corpus = {{}, {0}, {1}, {2, 1, 1}};
  std::set<std::uint64_t> seen;
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < cfg.maxExecs; ++i) {
    if (std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count() > cfg.budgetSeconds)
      break;
    // Mutate a corpus entry: grow, tweak, truncate, or splice.
    std::vector<std::int64_t> buf =
        corpus[(std::size_t)rng.pick((std::int64_t)corpus.size())];
    int nMut = 1 + (int)rng.pick(3);
    for (int m = 0; m < nMut; ++m) {
      switch (rng.pick(4)) {
        case 0:  // append
          if ((int)buf.size() < cfg.maxBufferLen)
            buf.push_back(detail::interestingValue(rng));
          break;
        case 1:  // mutate one position
          if (!buf.empty())
            buf[(std::size_t)rng.pick((std::int64_t)buf.size())] =
                detail::interestingValue(rng);
          else
            buf.push_back(detail::interestingValue(rng));
          break;
        case 2:  // truncate tail
          if (!buf.empty()) buf.resize((std::size_t)rng.pick((std::int64_t)buf.size() + 1));
          break;
        default: {  // splice with another corpus entry
          const auto& other =
              corpus[(std::size_t)rng.pick((std::int64_t)corpus.size())];
          std::size_t cut = (std::size_t)rng.pick((std::int64_t)buf.size() + 1);
          buf.resize(cut);
          for (std::size_t k = 0; k < other.size() &&
                                  (int)buf.size() < cfg.maxBufferLen;
               ++k)
            buf.push_back(other[k]);
          break;
        }
      }
    }
    ++out.executions;
    auto res = prog.execute(buf, cfg.fuel);
    if (res.violation) {
      out.ok = false;
      out.violation = res.violation;
      return out;
    }
    if (seen.insert(res.fingerprint).second && corpus.size() < 4096)
      corpus.push_back(buf);  // new behavior: keep for further mutation
  }
  return out;
}

}  // namespace vmtlc

#endif  // VMTLC_TESTER_HPP
