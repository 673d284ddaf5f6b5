#ifndef VMTLC_CHC__HPP__
#define VMTLC_CHC__HPP__

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vmtlc/formula.hpp"

namespace vmtlc {

enum class Mode { Modular, Contextual };

inline std::string modeName(Mode m) {
  return m == Mode::Modular ? "modular" : "contextual";
}

enum class RelKind { Invariant, ModularContract, ContextualContract };

struct RelParam {
  std::string name;
  Sort sort;  // Int or Bool
};

// An unknown predicate: a loop invariant, a method contract (modular), or a
// call-site contract (contextual). Contract parameter order is fixed:
// receiver-observer pre values, method parameters, ret (when the method
// returns a value), receiver-observer post values. Constructors have no pre
// observers.
struct Relation {
  std::string name;
  RelKind kind;
  std::vector<RelParam> params;

  int paramIndex(const std::string& n) const {
    for (size_t i = 0; i < params.size(); i++)
      if (params[i].name == n) return (int)i;
    return -1;
  }
};

// Application of a relation to clause variables.
struct Atom {
  std::string rel;
  std::vector<std::string> args;
};

enum class ClauseKind { Fact, Inductive, Query };

struct CHC {
  ClauseKind kind;
  std::vector<RelParam> vars;  // universally quantified clause variables
  std::vector<Atom> body;
  Formula constraint;          // relation-free
  std::optional<Atom> head;    // nullopt means head `false` (query)
  std::string label;           // stable human-readable tag for reports
};

struct CHCSystem {
  Mode mode = Mode::Modular;
  std::vector<Relation> relations;
  std::vector<CHC> clauses;
  std::vector<int64_t> constantPool;

  const Relation* findRelation(const std::string& n) const {
    for (auto& r : relations)
      if (r.name == n) return &r;
    return nullptr;
  }
};

struct Solution {
  std::vector<std::string> params;
  Formula formula;  // free variables ⊆ params
};

// Interpretation of every relation in a system.
using SolutionMap = std::map<std::string, Solution>;

struct MissingRelation : std::runtime_error {
  std::string rel;
  explicit MissingRelation(const std::string& n)
      : std::runtime_error("no interpretation for relation: " + n), rel(n) {}
};

struct ArityMismatch : std::runtime_error {
  explicit ArityMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

// Sol[rel] with the relation's formal parameters renamed to the atom's
// argument variables.
inline Formula applySolution(const Atom& atom, const SolutionMap& sol) {
  auto it = sol.find(atom.rel);
  if (it == sol.end()) throw MissingRelation(atom.rel);
  const Solution& s = it->second;
  if (s.params.size() != atom.args.size())
    throw ArityMismatch("atom " + atom.rel + " has " +
                        std::to_string(atom.args.size()) + " arguments, solution has " +
                        std::to_string(s.params.size()) + " parameters");
  std::map<std::string, ExprPtr> sub;
  for (size_t i = 0; i < s.params.size(); i++)
    sub[s.params[i]] = mkVar(atom.args[i]);
  return substitute(s.formula, sub);
}

// Closed relation-free implication: body atoms (interpreted) and the
// constraint imply the interpreted head.
inline Formula substitute_relations(const CHC& chc, const SolutionMap& sol) {
  std::vector<Formula> lhs;
  for (auto& a : chc.body) lhs.push_back(applySolution(a, sol));
  lhs.push_back(chc.constraint);
  Formula head = chc.head ? applySolution(*chc.head, sol) : mkFalse();
  return mkImplies(mkAndList(lhs), head);
}

// Direct clause evaluation under a solution and a ground valuation of the
// clause variables (used as the oracle's ground semantics).
inline bool evaluate_clause(const CHC& chc, const SolutionMap& sol, const Valuation& v) {
  auto atomHolds = [&](const Atom& a) {
    auto it = sol.find(a.rel);
    if (it == sol.end()) throw MissingRelation(a.rel);
    const Solution& s = it->second;
    if (s.params.size() != a.args.size())
      throw ArityMismatch("atom " + a.rel + ": arity mismatch");
    Valuation inner;
    for (size_t i = 0; i < s.params.size(); i++) {
      auto f = v.find(a.args[i]);
      if (f == v.end()) throw UnboundVariable(a.args[i]);
      inner[s.params[i]] = f->second;
    }
    return evaluateBool(s.formula, inner);
  };
  for (auto& a : chc.body)
    if (!atomHolds(a)) return true;  // body false: clause holds
  if (!evaluateBool(chc.constraint, v)) return true;
  if (!chc.head) return false;  // query with true body
  return atomHolds(*chc.head);
}

// Fact clause pinning a relation to accept one ground point (positive
// counterexamples fed back from the tester).
inline CHC encode_positive_example(const Relation& rel, const Valuation& val) {
  CHC c;
  c.kind = ClauseKind::Fact;
  c.label = "fact:" + rel.name;
  std::vector<Formula> eqs;
  Atom head{rel.name, {}};
  for (auto& p : rel.params) {
    auto it = val.find(p.name);
    if (it == val.end())
      throw ArityMismatch("positive example for " + rel.name + " missing " + p.name);
    c.vars.push_back(p);
    head.args.push_back(p.name);
    ExprPtr ground = isInt(it->second) ? mkInt(asInt(it->second))
                                       : mkBool(asBool(it->second));
    eqs.push_back(mkEq(mkVar(p.name), ground));
  }
  if (val.size() != rel.params.size())
    throw ArityMismatch("positive example for " + rel.name + " has extra entries");
  c.constraint = mkAndList(eqs);
  c.head = head;
  return c;
}

// All-true candidate; the solver's starting point.
inline SolutionMap initialSolution(const CHCSystem& sys) {
  SolutionMap sol;
  for (auto& r : sys.relations) {
    Solution s;
    for (auto& p : r.params) s.params.push_back(p.name);
    s.formula = mkTrue();
    sol[r.name] = s;
  }
  return sol;
}

}  // namespace vmtlc

#endif
