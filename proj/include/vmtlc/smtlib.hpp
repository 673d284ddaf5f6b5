#ifndef VMTLC_SMTLIB__HPP__
#define VMTLC_SMTLIB__HPP__

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "vmtlc/chc.hpp"

namespace vmtlc {

// --- Formula <-> SMT-LIB2 terms ----------------------------------------------

inline void smtPrintExpr(std::ostream& os, const ExprPtr& e) {
  auto bin = [&](const char* op) {
    os << "(" << op << " ";
    smtPrintExpr(os, e->args[0]);
    os << " ";
    smtPrintExpr(os, e->args[1]);
    os << ")";
  };
  switch (e->kind) {
    case ExprKind::IntLit:
      if (e->ival < 0) os << "(- " << -e->ival << ")";
      else os << e->ival;
      return;
    case ExprKind::BoolLit: os << (e->bval ? "true" : "false"); return;
    case ExprKind::Var: os << e->name; return;
    case ExprKind::Neg:
      os << "(- ";
      smtPrintExpr(os, e->args[0]);
      os << ")";
      return;
    case ExprKind::Not:
      os << "(not ";
      smtPrintExpr(os, e->args[0]);
      os << ")";
      return;
    case ExprKind::Add: bin("+"); return;
    case ExprKind::Sub: bin("-"); return;
    case ExprKind::Mul: bin("*"); return;
    case ExprKind::And: bin("and"); return;
    case ExprKind::Or: bin("or"); return;
    case ExprKind::Implies: bin("=>"); return;
    case ExprKind::Iff: bin("="); return;
    case ExprKind::Eq: bin("="); return;
    case ExprKind::Ne:
      os << "(not (= ";
      smtPrintExpr(os, e->args[0]);
      os << " ";
      smtPrintExpr(os, e->args[1]);
      os << "))";
      return;
    case ExprKind::Lt: bin("<"); return;
    case ExprKind::Le: bin("<="); return;
    case ExprKind::Gt: bin(">"); return;
    case ExprKind::Ge: bin(">="); return;
    case ExprKind::Ite:
      os << "(ite ";
      smtPrintExpr(os, e->args[0]);
      os << " ";
      smtPrintExpr(os, e->args[1]);
      os << " ";
      smtPrintExpr(os, e->args[2]);
      os << ")";
      return;
  }
}

inline std::string smtSortName(Sort s) { return s == Sort::Bool ? "Bool" : "Int"; }

inline void smtPrintAtom(std::ostream& os, const Atom& a) {
  if (a.args.empty()) {
    os << a.rel;
    return;
  }
  os << "(" << a.rel;
  for (auto& v : a.args) os << " " << v;
  os << ")";
}

// Without a solution: declare-rel/declare-var/rule script (Horn style).
// With a solution: closed assert-forall script per clause followed by
// (check-sat); `sat` then means every clause is valid under the solution.
inline std::string export_smtlib2(const CHCSystem& sys,
                                  const SolutionMap* solution = nullptr) {
  std::ostringstream os;
  os << "; mode: " << modeName(sys.mode) << "\n";
  if (!solution) {
    os << "(set-logic HORN)\n";
    for (auto& r : sys.relations) {
      os << "(declare-rel " << r.name << " (";
      for (size_t i = 0; i < r.params.size(); i++)
        os << (i ? " " : "") << smtSortName(r.params[i].sort);
      os << "))\n";
    }
    // declare-var once per (name, sort) pair across clauses
    std::set<std::pair<std::string, Sort>> seen;
    for (auto& c : sys.clauses)
      for (auto& v : c.vars)
        if (seen.insert({v.name, v.sort}).second)
          os << "(declare-var " << v.name << " " << smtSortName(v.sort) << ")\n";
    for (auto& c : sys.clauses) {
      os << "(rule (=> (and";
      for (auto& a : c.body) {
        os << " ";
        smtPrintAtom(os, a);
      }
      os << " ";
      smtPrintExpr(os, c.constraint);
      os << ") ";
      if (c.head) smtPrintAtom(os, *c.head);
      else os << "false";
      os << "))\n";
    }
    return os.str();
  }
  os << "(set-logic ALL)\n";
  for (auto& c : sys.clauses) {
    Formula closed = substitute_relations(c, *solution);
    if (c.vars.empty()) {
      os << "(assert ";
      smtPrintExpr(os, closed);
      os << ")\n";
      continue;
    }
    os << "(assert (forall (";
    for (size_t i = 0; i < c.vars.size(); i++)
      os << (i ? " (" : "(") << c.vars[i].name << " " << smtSortName(c.vars[i].sort)
         << ")";
    os << ") ";
    smtPrintExpr(os, closed);
    os << "))\n";
  }
  os << "(check-sat)\n";
  return os.str();
}

// --- s-expression reader -----------------------------------------------------

struct SExpr {
  bool atom = false;
  std::string text;            // when atom
  std::vector<SExpr> items;    // when list
};

struct SExprError : std::runtime_error {
  explicit SExprError(const std::string& m) : std::runtime_error("s-expr: " + m) {}
};

namespace detail {

inline void skipSexpWs(const std::string& s, size_t& i) {
  for (;;) {
    while (i < s.size() && isspace((unsigned char)s[i])) i++;
    if (i < s.size() && s[i] == ';') {
      while (i < s.size() && s[i] != '\n') i++;
      continue;
    }
    break;
  }
}

inline SExpr readSExprAt(const std::string& s, size_t& i) {
  skipSexpWs(s, i);
  if (i >= s.size()) throw SExprError("unexpected end of input");
  SExpr e;
  if (s[i] == '(') {
    i++;
    for (;;) {
      skipSexpWs(s, i);
      if (i >= s.size()) throw SExprError("unterminated list");
      if (s[i] == ')') {
        i++;
        return e;
      }
      e.items.push_back(readSExprAt(s, i));
    }
  }
  if (s[i] == ')') throw SExprError("unexpected ')'");
  e.atom = true;
  size_t j = i;
  while (j < s.size() && !isspace((unsigned char)s[j]) && s[j] != '(' && s[j] != ')' &&
         s[j] != ';')
    j++;
  e.text = s.substr(i, j - i);
  i = j;
  return e;
}

}  // namespace detail

inline std::vector<SExpr> readSExprs(const std::string& text) {
  std::vector<SExpr> out;
  size_t i = 0;
  for (;;) {
    detail::skipSexpWs(text, i);
    if (i >= text.size()) return out;
    out.push_back(detail::readSExprAt(text, i));
  }
}

// --- term import (covers this artifact's own exports) ------------------------

inline ExprPtr sexprToExpr(const SExpr& e) {
  if (e.atom) {
    const std::string& t = e.text;
    if (t == "true") return mkTrue();
    if (t == "false") return mkFalse();
    if (!t.empty() && (isdigit((unsigned char)t[0]) ||
                       (t[0] == '-' && t.size() > 1 && isdigit((unsigned char)t[1]))))
      return mkInt(std::stoll(t));
    return mkVar(t);
  }
  if (e.items.empty() || !e.items[0].atom) throw SExprError("bad application");
  const std::string& op = e.items[0].text;
  std::vector<ExprPtr> args;
  for (size_t i = 1; i < e.items.size(); i++) args.push_back(sexprToExpr(e.items[i]));
  auto fold = [&](ExprKind k) {
    if (args.empty()) throw SExprError("empty " + op);
    ExprPtr acc = args[0];
    for (size_t i = 1; i < args.size(); i++) acc = mkBin(k, acc, args[i]);
    return acc;
  };
  if (op == "+") return fold(ExprKind::Add);
  if (op == "*") return fold(ExprKind::Mul);
  if (op == "-") {
    if (args.size() == 1) return mkUnary(ExprKind::Neg, args[0]);
    return fold(ExprKind::Sub);
  }
  if (op == "and") return args.empty() ? mkTrue() : fold(ExprKind::And);
  if (op == "or") return args.empty() ? mkFalse() : fold(ExprKind::Or);
  if (op == "not") return mkNot(args[0]);
  if (op == "=>") return fold(ExprKind::Implies);
  if (op == "=") return mkBin(ExprKind::Eq, args[0], args[1]);
  if (op == "distinct") return mkBin(ExprKind::Ne, args[0], args[1]);
  if (op == "<") return mkBin(ExprKind::Lt, args[0], args[1]);
  if (op == "<=") return mkBin(ExprKind::Le, args[0], args[1]);
  if (op == ">") return mkBin(ExprKind::Gt, args[0], args[1]);
  if (op == ">=") return mkBin(ExprKind::Ge, args[0], args[1]);
  if (op == "ite") return mkIte(args[0], args[1], args[2]);
  throw SExprError("unknown operator " + op);
}

// Import of this artifact's own Horn export.
inline CHCSystem import_smtlib2(const std::string& text) {
  CHCSystem sys;
  std::map<std::string, Sort> varSorts;
  for (auto& top : readSExprs(text)) {
    if (top.atom || top.items.empty() || !top.items[0].atom) continue;
    const std::string& cmd = top.items[0].text;
    if (cmd == "declare-rel") {
      Relation r;
      r.name = top.items[1].text;
      r.kind = RelKind::Invariant;
      int k = 0;
      for (auto& s : top.items[2].items)
        r.params.push_back({"p" + std::to_string(k++),
                            s.text == "Bool" ? Sort::Bool : Sort::Int});
      if (r.name.rfind("m_", 0) == 0) r.kind = RelKind::ModularContract;
      if (r.name.rfind("c_", 0) == 0) r.kind = RelKind::ContextualContract;
      sys.relations.push_back(r);
    } else if (cmd == "declare-var") {
      varSorts[top.items[1].text] = top.items[2].text == "Bool" ? Sort::Bool : Sort::Int;
    } else if (cmd == "rule") {
      const SExpr& imp = top.items[1];
      if (imp.items.size() != 3 || imp.items[0].text != "=>")
        throw SExprError("rule is not an implication");
      CHC c;
      std::vector<Formula> cons;
      const SExpr& body = imp.items[1];
      if (body.items.empty() || body.items[0].text != "and")
        throw SExprError("rule body is not a conjunction");
      for (size_t i = 1; i < body.items.size(); i++) {
        const SExpr& it = body.items[i];
        std::string head = it.atom ? it.text : it.items[0].text;
        if (sys.findRelation(head)) {
          Atom a{head, {}};
          if (!it.atom)
            for (size_t j = 1; j < it.items.size(); j++) a.args.push_back(it.items[j].text);
          c.body.push_back(a);
        } else {
          cons.push_back(sexprToExpr(it));
        }
      }
      c.constraint = mkAndList(cons);
      const SExpr& h = imp.items[2];
      if (h.atom && h.text == "false") {
        c.kind = ClauseKind::Query;
      } else {
        Atom a{h.atom ? h.text : h.items[0].text, {}};
        if (!h.atom)
          for (size_t j = 1; j < h.items.size(); j++) a.args.push_back(h.items[j].text);
        c.head = a;
        c.kind = c.body.empty() ? ClauseKind::Fact : ClauseKind::Inductive;
      }
      auto add = [&](const std::string& n) {
        for (auto& v : c.vars)
          if (v.name == n) return;
        auto it = varSorts.find(n);
        if (it == varSorts.end()) throw SExprError("undeclared variable " + n);
        c.vars.push_back({n, it->second});
      };
      for (auto& a : c.body)
        for (auto& v : a.args) add(v);
      for (auto& v : freeVars(c.constraint)) add(v);
      if (c.head)
        for (auto& v : c.head->args) add(v);
      c.label = "imported";
      sys.clauses.push_back(std::move(c));
    }
  }
  return sys;
}

// --- external solver subprocess ----------------------------------------------

enum class SmtVerdict { Sat, Unsat, Unknown };

struct SmtResult {
  SmtVerdict verdict = SmtVerdict::Unknown;
  Valuation model;  // total on free vars when Sat
  std::string raw;
};

struct SolverCrash : std::runtime_error {
  explicit SolverCrash(const std::string& m) : std::runtime_error("solver: " + m) {}
};

namespace detail {

inline std::string runSubprocess(const std::string& command) {
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) throw SolverCrash("cannot spawn: " + command);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int rc = pclose(pipe);
  (void)rc;  // sat/unsat answers come with nonzero codes on some solvers
  return out;
}

inline int64_t modelValueInt(const SExpr& v) {
  if (v.atom) return std::stoll(v.text);
  if (!v.items.empty() && v.items[0].text == "-" && v.items.size() == 2)
    return -modelValueInt(v.items[1]);
  throw SExprError("unparsable model value");
}

}  // namespace detail

// Satisfiability of a closed quantifier-free query via an external solver
// command. The command receives the script path as its last argument.
inline SmtResult smt_query(const Formula& f, const std::vector<RelParam>& vars,
                           const std::string& solverCmd) {
  static int counter = 0;
  std::string path = "/tmp/vmtlc_query_" + std::to_string(getpid()) + "_" +
                     std::to_string(counter++) + ".smt2";
  {
    std::ofstream out(path);
    out << "(set-logic ALL)\n";
    for (auto& v : vars)
      out << "(declare-const " << v.name << " " << smtSortName(v.sort) << ")\n";
    out << "(assert ";
    smtPrintExpr(out, f);
    out << ")\n(check-sat)\n(get-model)\n";
  }
  std::string raw = detail::runSubprocess(solverCmd + " " + path + " 2>&1");
  std::remove(path.c_str());
  SmtResult res;
  res.raw = raw;
  std::istringstream lines(raw);
  std::string first;
  std::getline(lines, first);
  if (first == "unsat") {
    res.verdict = SmtVerdict::Unsat;
    return res;
  }
  if (first != "sat") {
    res.verdict = SmtVerdict::Unknown;
    return res;
  }
  res.verdict = SmtVerdict::Sat;
  std::string rest((std::istreambuf_iterator<char>(lines)),
                   std::istreambuf_iterator<char>());
  std::map<std::string, Sort> want;
  for (auto& v : vars) want[v.name] = v.sort;
  for (auto& top : readSExprs(rest)) {
    std::vector<const SExpr*> defs;
    if (!top.atom && !top.items.empty() && top.items[0].text == "model") {
      for (size_t i = 1; i < top.items.size(); i++) defs.push_back(&top.items[i]);
    } else if (!top.atom) {
      for (auto& it : top.items) defs.push_back(&it);
    }
    for (const SExpr* d : defs) {
      if (d->atom || d->items.size() < 5 || d->items[0].text != "define-fun") continue;
      const std::string& name = d->items[1].text;
      auto w = want.find(name);
      if (w == want.end()) continue;
      const SExpr& val = d->items[4];
      if (w->second == Sort::Bool) res.model[name] = Value{val.text == "true"};
      else res.model[name] = Value{detail::modelValueInt(val)};
    }
  }
  // The model must be total; pad defaults for solver-elided don't-cares.
  for (auto& v : vars)
    if (!res.model.count(v.name))
      res.model[v.name] = v.sort == Sort::Bool ? Value{false} : Value{int64_t{0}};
  return res;
}

}  // namespace vmtlc

#endif
