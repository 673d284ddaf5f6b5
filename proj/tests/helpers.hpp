#ifndef VMTLC_TEST_HELPERS__HPP__
#define VMTLC_TEST_HELPERS__HPP__

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "vmtlc/chc.hpp"

namespace vmtlc::testing {

inline std::string readFile(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string benchPath(const std::string& name) {
  return std::string(VMTLC_BENCH_DIR) + "/" + name + ".vml";
}

// Random well-sorted formula generator over a given variable environment.
struct FormulaGen {
  std::mt19937_64 rng;
  std::vector<std::string> intVars;
  std::vector<std::string> boolVars;

  explicit FormulaGen(uint64_t seed) : rng(seed) {}

  size_t pick(size_t n) { return rng() % n; }
  int64_t smallInt() { return (int64_t)(rng() % 11) - 5; }

  ExprPtr genInt(int depth) {
    if (depth == 0 || pick(3) == 0 || intVars.empty()) {
      if (intVars.empty() || pick(2)) return mkInt(smallInt());
      return mkVar(intVars[pick(intVars.size())]);
    }
    switch (pick(4)) {
      case 0: return mkBin(ExprKind::Add, genInt(depth - 1), genInt(depth - 1));
      case 1: return mkBin(ExprKind::Sub, genInt(depth - 1), genInt(depth - 1));
      case 2: return mkUnary(ExprKind::Neg, genInt(depth - 1));
      default:
        // constant multiplier keeps the fragment linear
        return mkBin(ExprKind::Mul, mkInt(smallInt()), genInt(depth - 1));
    }
  }

  ExprPtr genBool(int depth) {
    if (depth == 0 || pick(5) == 0) {
      if (!boolVars.empty() && pick(2)) return mkVar(boolVars[pick(boolVars.size())]);
      if (pick(3) == 0) return mkBool(pick(2) != 0);
      ExprKind cmp[] = {ExprKind::Eq, ExprKind::Ne, ExprKind::Lt,
                        ExprKind::Le, ExprKind::Gt, ExprKind::Ge};
      return mkBin(cmp[pick(6)], genInt(1), genInt(1));
    }
    switch (pick(6)) {
      case 0: return mkAnd(genBool(depth - 1), genBool(depth - 1));
      case 1: return mkOr(genBool(depth - 1), genBool(depth - 1));
      case 2: return mkImplies(genBool(depth - 1), genBool(depth - 1));
      case 3: return mkBin(ExprKind::Iff, genBool(depth - 1), genBool(depth - 1));
      case 4: return mkNot(genBool(depth - 1));
      default: {
        ExprKind cmp[] = {ExprKind::Eq, ExprKind::Ne, ExprKind::Lt,
                          ExprKind::Le, ExprKind::Gt, ExprKind::Ge};
        return mkBin(cmp[pick(6)], genInt(depth - 1), genInt(depth - 1));
      }
    }
  }
};

// Random CHC system fixture: a few relations with small signatures, a random
// clause over them, and a random ground solution.
struct ClauseGen {
  FormulaGen fg;

  explicit ClauseGen(uint64_t seed) : fg(seed) {}

  std::vector<Relation> genRelations() {
    std::vector<Relation> rels;
    size_t nr = 1 + fg.pick(3);
    for (size_t r = 0; r < nr; r++) {
      Relation rel;
      rel.name = "r" + std::to_string(r);
      rel.kind = RelKind::Invariant;
      size_t np = 1 + fg.pick(3);
      for (size_t p = 0; p < np; p++) {
        Sort s = fg.pick(4) == 0 ? Sort::Bool : Sort::Int;
        rel.params.push_back({"p" + std::to_string(p), s});
      }
      rels.push_back(rel);
    }
    return rels;
  }

  SolutionMap genSolution(const std::vector<Relation>& rels) {
    SolutionMap sol;
    for (auto& r : rels) {
      FormulaGen g(fg.rng());
      for (auto& p : r.params)
        (p.sort == Sort::Int ? g.intVars : g.boolVars).push_back(p.name);
      Solution s;
      for (auto& p : r.params) s.params.push_back(p.name);
      s.formula = g.genBool(2);
      sol[r.name] = s;
    }
    return sol;
  }

  // Clause over a fresh variable pool; atoms applied to sort-matching vars.
  CHC genClause(const std::vector<Relation>& rels, bool query) {
    CHC c;
    std::vector<std::string> ints, bools;
    size_t nv = 3 + fg.pick(4);
    for (size_t i = 0; i < nv; i++) {
      Sort s = fg.pick(3) == 0 ? Sort::Bool : Sort::Int;
      std::string n = "x" + std::to_string(i);
      c.vars.push_back({n, s});
      (s == Sort::Int ? ints : bools).push_back(n);
    }
    // Guarantee at least one of each sort for atom argument selection.
    if (ints.empty()) {
      c.vars.push_back({"xi", Sort::Int});
      ints.push_back("xi");
    }
    if (bools.empty()) {
      c.vars.push_back({"xb", Sort::Bool});
      bools.push_back("xb");
    }
    auto atomFor = [&](const Relation& r) {
      Atom a{r.name, {}};
      for (auto& p : r.params) {
        auto& pool = p.sort == Sort::Int ? ints : bools;
        a.args.push_back(pool[fg.pick(pool.size())]);
      }
      return a;
    };
    size_t nb = fg.pick(3);
    for (size_t i = 0; i < nb; i++) c.body.push_back(atomFor(rels[fg.pick(rels.size())]));
    FormulaGen g(fg.rng());
    g.intVars = ints;
    g.boolVars = bools;
    c.constraint = g.genBool(2);
    if (!query) c.head = atomFor(rels[fg.pick(rels.size())]);
    c.kind = query ? ClauseKind::Query
                   : (c.body.empty() ? ClauseKind::Fact : ClauseKind::Inductive);
    c.label = "random";
    return c;
  }

  Valuation genValuation(const std::vector<RelParam>& vars) {
    Valuation v;
    for (auto& p : vars) {
      if (p.sort == Sort::Int) v[p.name] = Value{fg.smallInt()};
      else v[p.name] = Value{fg.pick(2) != 0};
    }
    return v;
  }
};

// Solution built from formula text per relation; params come from the system.
inline SolutionMap makeSolution(const CHCSystem& sys,
                                const std::map<std::string, std::string>& formulas) {
  SolutionMap sol;
  for (auto& r : sys.relations) {
    Solution s;
    for (auto& p : r.params) s.params.push_back(p.name);
    auto it = formulas.find(r.name);
    s.formula = it == formulas.end() ? mkTrue() : parseFormula(it->second);
    sol[r.name] = s;
  }
  return sol;
}

// Reference modular contract set for the set-sum benchmark.
inline std::map<std::string, std::string> referenceModularContracts() {
  return {
      {"m_Set_init", "emptyPost"},
      {"m_Set_insert", "(emptyPre || minPre >= 0) && ival >= 0 => minPost >= 0"},
      {"m_Set_empty", "(ret <=> emptyPre) && (emptyPost <=> emptyPre)"},
      {"m_Set_remove",
       "!emptyPre && minPre >= 0 => ret >= 0 && (emptyPost || minPost >= 0)"},
      {"inv_0", "S_empty || S_min >= 0"},
      {"inv_1", "sum >= 0 && (S_empty || S_min >= 0)"},
  };
}

// Reference contextual annotation table for set-sum (full set, including
// the init and empty rows that make the system valid).
inline std::map<std::string, std::string> referenceContextualContracts() {
  return {
      {"c_0_init", "emptyPost"},
      {"c_1_insert", "true"},
      {"c_2_empty", "(ret <=> emptyPre) && (emptyPost <=> emptyPre)"},
      {"c_3_remove", "emptyPre || ret >= 0"},
      {"inv_0", "true"},
      {"inv_1", "sum >= 0"},
  };
}

}  // namespace vmtlc::testing

#endif
