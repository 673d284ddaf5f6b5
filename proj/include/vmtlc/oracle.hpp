#ifndef VMTLC_ORACLE__HPP__
#define VMTLC_ORACLE__HPP__

#include <algorithm>
#include <functional>
#include <set>

#include "vmtlc/smtlib.hpp"

namespace vmtlc {

// --- ICE samples ---------------------------------------------------------------

struct SamplePoint {
  std::string rel;
  Valuation point;  // over the relation's parameters

  bool operator==(const SamplePoint& o) const {
    return rel == o.rel && point == o.point;
  }
};

enum class SampleKind { Positive, HornImplication, NegativeGroup };

struct ICESample {
  SampleKind kind;
  // Positive: single entry in `points`. HornImplication: antecedents in
  // `points`, consequent in `consequent`. NegativeGroup: members in `points`.
  std::vector<SamplePoint> points;
  SamplePoint consequent;
  std::string origin;  // clause label, for reports

  bool operator==(const ICESample& o) const {
    return kind == o.kind && points == o.points &&
           (kind != SampleKind::HornImplication || consequent == o.consequent);
  }
};

inline bool solutionAccepts(const SolutionMap& sol, const SamplePoint& p) {
  auto it = sol.find(p.rel);
  if (it == sol.end()) throw MissingRelation(p.rel);
  Valuation inner;
  for (size_t i = 0; i < it->second.params.size(); i++) {
    auto f = p.point.find(it->second.params[i]);
    if (f == p.point.end()) throw ArityMismatch("sample point misses parameter");
    inner[it->second.params[i]] = f->second;
  }
  return evaluateBool(it->second.formula, inner);
}

// Consistency of a candidate solution with one ICE sample.
inline bool consistentWith(const SolutionMap& sol, const ICESample& s) {
  switch (s.kind) {
    case SampleKind::Positive:
      return solutionAccepts(sol, s.points[0]);
    case SampleKind::HornImplication: {
      for (auto& a : s.points)
        if (!solutionAccepts(sol, a)) return true;
      return solutionAccepts(sol, s.consequent);
    }
    case SampleKind::NegativeGroup: {
      for (auto& a : s.points)
        if (!solutionAccepts(sol, a)) return true;
      return false;
    }
  }
  return false;
}

// --- check results -------------------------------------------------------------

enum class Verdict { Valid, Counterexample, Unknown };

struct CheckResult {
  Verdict verdict = Verdict::Valid;
  ICESample sample;   // when Counterexample
  int clauseIdx = -1;
  std::string reason;  // when Unknown
};

struct BackendFailure : std::runtime_error {
  explicit BackendFailure(const std::string& m)
      : std::runtime_error("backend: " + m) {}
};

struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& m)
      : std::runtime_error("enumeration budget exceeded: " + m) {}
};

// --- bounded enumeration backend -------------------------------------------------

struct EnumVar {
  std::string name;
  Sort sort;
  int64_t lo, hi;  // bools use 0..1
  // Non-empty: enumerate exactly these values instead of the dense interval.
  std::vector<int64_t> vals;
};

struct EnumResult {
  bool sat = false;
  bool budgetHit = false;  // search stopped at the node cap without a model
  Valuation model;
};

namespace detail {

// Formulas compiled to an index-resolved tree evaluated over an int64 slot
// array (bools are 0/1); keeps the inner enumeration loop off std::map.
struct CNode {
  ExprKind kind;
  int64_t lit = 0;
  int var = -1;
  int a = -1, b = -1, c = -1;  // child indices
};

struct Compiled {
  std::vector<CNode> nodes;
  int root = -1;
  int maxVar = -1;  // highest slot index read

  int64_t eval(const std::vector<int64_t>& env) const { return evalAt(root, env); }

  int64_t evalAt(int i, const std::vector<int64_t>& env) const {
    const CNode& n = nodes[i];
    switch (n.kind) {
      case ExprKind::IntLit: return n.lit;
      case ExprKind::BoolLit: return n.lit;
      case ExprKind::Var: return env[n.var];
      case ExprKind::Neg: return -evalAt(n.a, env);
      case ExprKind::Not: return evalAt(n.a, env) ? 0 : 1;
      case ExprKind::Add: return evalAt(n.a, env) + evalAt(n.b, env);
      case ExprKind::Sub: return evalAt(n.a, env) - evalAt(n.b, env);
      case ExprKind::Mul: return evalAt(n.a, env) * evalAt(n.b, env);
      case ExprKind::And: return evalAt(n.a, env) && evalAt(n.b, env);
      case ExprKind::Or: return evalAt(n.a, env) || evalAt(n.b, env);
      case ExprKind::Implies: return !evalAt(n.a, env) || evalAt(n.b, env);
      case ExprKind::Iff: return (evalAt(n.a, env) != 0) == (evalAt(n.b, env) != 0);
      case ExprKind::Eq: return evalAt(n.a, env) == evalAt(n.b, env);
      case ExprKind::Ne: return evalAt(n.a, env) != evalAt(n.b, env);
      case ExprKind::Lt: return evalAt(n.a, env) < evalAt(n.b, env);
      case ExprKind::Le: return evalAt(n.a, env) <= evalAt(n.b, env);
      case ExprKind::Gt: return evalAt(n.a, env) > evalAt(n.b, env);
      case ExprKind::Ge: return evalAt(n.a, env) >= evalAt(n.b, env);
      case ExprKind::Ite:
        return evalAt(n.a, env) ? evalAt(n.b, env) : evalAt(n.c, env);
    }
    return 0;
  }
};

inline Compiled compile(const Formula& f, const std::map<std::string, int>& slots) {
  Compiled c;
  std::function<int(const ExprPtr&)> go = [&](const ExprPtr& e) -> int {
    CNode n;
    n.kind = e->kind;
    switch (e->kind) {
      case ExprKind::IntLit: n.lit = e->ival; break;
      case ExprKind::BoolLit: n.lit = e->bval ? 1 : 0; break;
      case ExprKind::Var: {
        auto it = slots.find(e->name);
        if (it == slots.end()) throw UnboundVariable(e->name);
        n.var = it->second;
        c.maxVar = std::max(c.maxVar, n.var);
        break;
      }
      default:
        if (e->args.size() > 0) n.a = go(e->args[0]);
        if (e->args.size() > 1) n.b = go(e->args[1]);
        if (e->args.size() > 2) n.c = go(e->args[2]);
        break;
    }
    c.nodes.push_back(n);
    return (int)c.nodes.size() - 1;
  };
  c.root = go(f);
  return c;
}

inline void flattenAnd(const Formula& f, std::vector<Formula>& out) {
  if (f->kind == ExprKind::And) {
    flattenAnd(f->args[0], out);
    flattenAnd(f->args[1], out);
    return;
  }
  out.push_back(f);
}

}  // namespace detail

// Exhaustive deterministic search for a model of the conjunction, in
// lexicographic order over the variable ranges (variables assigned in the
// given order, values ascending). Conjuncts are evaluated as soon as all of
// their variables are assigned, pruning the subtree on failure.
inline EnumResult enum_conjuncts(const std::vector<Formula>& conjuncts,
                                 const std::vector<EnumVar>& vars,
                                 uint64_t rangeProductCap = 1ull << 62,
                                 uint64_t nodeCap = 1ull << 62) {
  uint64_t product = 1;
  for (auto& v : vars) {
    uint64_t range = v.vals.empty() ? (uint64_t)(v.hi - v.lo + 1)
                                    : (uint64_t)v.vals.size();
    if (product > rangeProductCap / std::max<uint64_t>(range, 1))
      throw BudgetExceeded(std::to_string(vars.size()) + " variables");
    product *= range;
  }
  // Constraint-aware variable ordering: pick next the variable that closes
  // the most conjuncts (so they prune as early as possible), breaking ties
  // toward small remaining conjuncts and then input order. Equality chains
  // like x2 = x1 + r then sit adjacent in the assignment order instead of
  // forcing re-enumeration of every variable declared between them.
  std::vector<EnumVar> ordered;
  {
    std::vector<std::set<std::string>> need;
    for (auto& f : conjuncts) {
      auto fv = freeVars(f);
      need.emplace_back(fv.begin(), fv.end());
    }
    std::set<std::string> placed;
    std::vector<bool> used(vars.size(), false);
    for (size_t step = 0; step < vars.size(); step++) {
      size_t best = vars.size();
      long bestClosed = -1, bestTouch = -1;
      for (size_t i = 0; i < vars.size(); i++) {
        if (used[i]) continue;
        long closed = 0, touch = 0;
        for (auto& s : need) {
          if (!s.count(vars[i].name)) continue;
          std::size_t missing = 0;
          for (auto& n : s)
            if (!placed.count(n) && n != vars[i].name) missing++;
          if (missing == 0) closed++;
          touch -= (long)missing;  // prefer nearly-closed conjuncts
        }
        if (closed > bestClosed || (closed == bestClosed && touch > bestTouch)) {
          best = i;
          bestClosed = closed;
          bestTouch = touch;
        }
      }
      used[best] = true;
      placed.insert(vars[best].name);
      ordered.push_back(vars[best]);
    }
  }
  const std::vector<EnumVar>& vs = ordered;

  std::map<std::string, int> slots;
  for (size_t i = 0; i < vs.size(); i++) slots[vs[i].name] = (int)i;

  std::vector<detail::Compiled> comp;
  for (auto& f : conjuncts) comp.push_back(detail::compile(f, slots));
  // Bucket conjuncts by the last variable they need.
  std::vector<std::vector<const detail::Compiled*>> due(vs.size() + 1);
  for (auto& cf : comp) due[(size_t)(cf.maxVar + 1)].push_back(&cf);

  std::vector<int64_t> env(vs.size(), 0);
  EnumResult res;
  uint64_t nodes = 0;
  std::function<bool(size_t)> go = [&](size_t i) -> bool {
    // Deterministic work bound; stopping without a model reads as "no
    // counterexample within budget".
    if (++nodes > nodeCap) {
      res.budgetHit = true;
      return true;
    }
    for (auto* cf : due[i])
      if (!cf->eval(env)) return false;
    if (i == vs.size()) {
      res.sat = true;
      for (size_t k = 0; k < vs.size(); k++) {
        if (vs[k].sort == Sort::Bool) res.model[vs[k].name] = Value{env[k] != 0};
        else res.model[vs[k].name] = Value{env[k]};
      }
      return true;
    }
    if (!vs[i].vals.empty()) {
      for (int64_t v : vs[i].vals) {
        env[i] = v;
        if (go(i + 1)) return true;
      }
      return false;
    }
    for (int64_t v = vs[i].lo; v <= vs[i].hi; v++) {
      env[i] = v;
      if (go(i + 1)) return true;
    }
    return false;
  };
  go(0);
  return res;
}

// Single-formula front per the documented operation signature.
inline EnumResult enum_query(const Formula& f, const std::vector<EnumVar>& vars,
                             uint64_t rangeProductCap = 1ull << 62) {
  std::vector<Formula> cs;
  detail::flattenAnd(f, cs);
  return enum_conjuncts(cs, vars, rangeProductCap);
}

// --- clause checking -------------------------------------------------------------

struct BackendConfig {
  enum class Kind { Enum, Smt, Auto };
  Kind kind = Kind::Enum;
  std::string smtCmd;          // external solver command (Smt/Auto)
  int64_t enumSlack = 1;       // bound = [pool min - slack, pool max + slack]
  uint64_t rangeProductCap = 1ull << 62;
  // Above this many dense grid points the integer variables switch to a
  // sparse candidate grid (0, ±1, pool constants ±1, interval endpoints).
  // Counterexamples stay genuine (every model is re-checked); "Valid" then
  // means no counterexample on the sparse grid.
  uint64_t denseCap = 1ull << 22;
  // Hard cap on enumeration search nodes per clause; past it the search
  // stops and reports no counterexample found within budget.
  uint64_t nodeCap = 1ull << 23;
};

namespace detail {

inline std::vector<EnumVar> enumVarsFor(const CHC& chc, const CHCSystem& sys,
                                        int64_t slack, uint64_t denseCap) {
  int64_t lo = 0, hi = 0;
  for (auto& k : sys.constantPool) {
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  lo -= slack;
  hi += slack;
  std::vector<EnumVar> vars;
  uint64_t product = 1;
  bool overflow = false;
  for (auto& v : chc.vars) {
    if (v.sort == Sort::Bool) {
      vars.push_back({v.name, v.sort, 0, 1, {}});
      product = product > denseCap / 2 ? (overflow = true, denseCap + 1) : product * 2;
    } else {
      vars.push_back({v.name, v.sort, lo, hi, {}});
      uint64_t range = (uint64_t)(hi - lo + 1);
      product = product > denseCap / range ? (overflow = true, denseCap + 1)
                                           : product * range;
    }
  }
  if (overflow || product > denseCap) {
    std::set<int64_t> cand = {lo, hi, -1, 0, 1};
    for (auto& k : sys.constantPool)
      for (int64_t d : {k - 1, k, k + 1}) cand.insert(d);
    std::vector<int64_t> vals;
    for (int64_t c : cand)
      if (c >= lo && c <= hi) vals.push_back(c);
    // Small-magnitude values first: counterexamples cluster near zero, and
    // found models get minimized toward zero anyway.
    std::stable_sort(vals.begin(), vals.end(), [](int64_t a, int64_t b) {
      int64_t aa = a < 0 ? -a : a, ab = b < 0 ? -b : b;
      return aa != ab ? aa < ab : a < b;
    });
    for (auto& v : vars)
      if (v.sort != Sort::Bool) v.vals = vals;
  }
  return vars;
}

// Conjunctive negation of the clause under the solution: body-atom formulas,
// constraint conjuncts, and the negated head.
inline std::vector<Formula> negationConjuncts(const CHC& chc, const SolutionMap& sol) {
  std::vector<Formula> cs;
  for (auto& a : chc.body) flattenAnd(applySolution(a, sol), cs);
  flattenAnd(chc.constraint, cs);
  if (chc.head) cs.push_back(mkNot(applySolution(*chc.head, sol)));
  return cs;
}

inline bool falsifies(const std::vector<Formula>& cs, const Valuation& v) {
  for (auto& f : cs)
    if (!evaluateBool(f, v)) return false;
  return true;
}

// Shrink integer coordinates toward zero while the model keeps falsifying the
// clause; smaller ICE points generalize better.
inline void minimizeModel(const std::vector<Formula>& cs, Valuation& model) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& [name, val] : model) {
      if (!isInt(val)) continue;
      int64_t cur = asInt(val);
      while (cur != 0) {
        int64_t cand = cur > 0 ? cur - 1 : cur + 1;
        Valuation trial = model;
        trial[name] = Value{cand};
        if (!falsifies(cs, trial)) break;
        cur = cand;
        model[name] = Value{cand};
        changed = true;
      }
    }
  }
}

inline ICESample projectSample(const CHC& chc, const Valuation& model,
                               const CHCSystem& sys) {
  auto pointOf = [&](const Atom& a) {
    const Relation* r = sys.findRelation(a.rel);
    if (!r) throw MissingRelation(a.rel);
    SamplePoint p;
    p.rel = a.rel;
    for (size_t i = 0; i < r->params.size(); i++)
      p.point[r->params[i].name] = model.at(a.args[i]);
    return p;
  };
  ICESample s;
  s.origin = chc.label;
  switch (chc.kind) {
    case ClauseKind::Fact:
      s.kind = SampleKind::Positive;
      s.points = {pointOf(*chc.head)};
      return s;
    case ClauseKind::Inductive:
      s.kind = SampleKind::HornImplication;
      for (auto& a : chc.body) s.points.push_back(pointOf(a));
      s.consequent = pointOf(*chc.head);
      return s;
    case ClauseKind::Query:
      s.kind = SampleKind::NegativeGroup;
      for (auto& a : chc.body) s.points.push_back(pointOf(a));
      return s;
  }
  return s;
}

}  // namespace detail

inline CheckResult check_clause(const CHC& chc, const SolutionMap& sol,
                                const CHCSystem& sys, const BackendConfig& backend) {
  std::vector<Formula> cs = detail::negationConjuncts(chc, sol);
  auto fromModel = [&](Valuation model) {
    detail::minimizeModel(cs, model);
    CheckResult r;
    r.verdict = Verdict::Counterexample;
    r.sample = detail::projectSample(chc, model, sys);
    return r;
  };
  auto runEnum = [&]() -> CheckResult {
    auto vars = detail::enumVarsFor(chc, sys, backend.enumSlack, backend.denseCap);
    EnumResult e = enum_conjuncts(cs, vars, backend.rangeProductCap, backend.nodeCap);
    if (e.sat) return fromModel(std::move(e.model));
    return CheckResult{};  // Valid (within bounds)
  };
  if (backend.kind == BackendConfig::Kind::Enum) return runEnum();
  SmtResult smt = smt_query(mkAndList(cs), chc.vars, backend.smtCmd);
  if (smt.verdict == SmtVerdict::Unsat) return CheckResult{};
  if (smt.verdict == SmtVerdict::Sat) return fromModel(std::move(smt.model));
  if (backend.kind == BackendConfig::Kind::Auto) return runEnum();
  CheckResult r;
  r.verdict = Verdict::Unknown;
  r.reason = "solver answered unknown";
  return r;
}

// First failing clause in program order.
inline CheckResult check_system(const CHCSystem& sys, const SolutionMap& sol,
                                const BackendConfig& backend) {
  for (size_t i = 0; i < sys.clauses.size(); i++) {
    CheckResult r = check_clause(sys.clauses[i], sol, sys, backend);
    if (r.verdict != Verdict::Valid) {
      r.clauseIdx = (int)i;
      return r;
    }
  }
  return CheckResult{};
}

}  // namespace vmtlc

#endif
