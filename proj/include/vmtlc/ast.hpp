#ifndef VMTLC_AST__HPP__
#define VMTLC_AST__HPP__

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vmtlc/formula.hpp"

namespace vmtlc {

struct SrcLoc {
  int line = 0;
  int col = 0;
  std::string str() const { return std::to_string(line) + ":" + std::to_string(col); }
};

// DSL expressions. A superset of the formula language: method calls on
// objects, auxiliary routine calls, nondet inputs, and list reads on
// library fields. Normalization hoists the impure atoms out before VC
// generation, so downstream code only sees the formula fragment.
enum class DExprKind {
  IntLit, BoolLit, Var,
  Unary,        // op in {Neg, Not}
  Binary,       // op in the formula binary kinds
  Ite,
  Nondet,       // nondet() or nondet(lo, hi)
  MethodCall,   // recv.callee(args)
  New,          // new callee(args)
  RoutineCall,  // callee(args), client auxiliary routine
  ListLen,      // len(field)
  ListGet       // getat(field, idx)
};

struct DExpr;
using DExprPtr = std::shared_ptr<DExpr>;

struct DExpr {
  DExprKind kind;
  ExprKind op = ExprKind::Add;  // Unary/Binary
  int64_t ival = 0;
  bool bval = false;
  std::string name;    // Var / list field
  std::string recv;    // MethodCall receiver variable
  std::string callee;  // method / class / routine name
  std::vector<DExprPtr> args;
  bool bounded = false;  // Nondet(lo,hi)
  int64_t lo = 0, hi = 0;
  SrcLoc loc;
  Sort sort = Sort::Int;    // filled in by the typechecker
  std::string classOf;      // Object sort: class name
  int siteId = -1;          // MethodCall/New: call-site id, dense program order
};

enum class StmtKind {
  VarDecl,   // var name : sort = expr;
  Assign,    // name = expr;
  ExprStmt,  // expr;  (void method call)
  If, While, Break,
  Assert, Assume,
  Return,
  ListPush,     // push(field, v)
  ListPop,      // popback(field)
  ListSet,      // setat(field, i, v)
  ListRemoveAt  // removeat(field, i)
};

struct Stmt;
using StmtPtr = std::shared_ptr<Stmt>;

struct Stmt {
  StmtKind kind;
  SrcLoc loc;
  std::string name;          // decl/assign target or list field
  Sort declSort = Sort::Int; // VarDecl
  std::string declClass;     // VarDecl of object sort
  DExprPtr expr;             // rhs / condition / asserted expr / index
  DExprPtr expr2;            // ListSet value / ListPush value
  std::vector<StmtPtr> body;     // if-then / while body
  std::vector<StmtPtr> elseBody; // if-else
  int loopId = -1;           // While: dense pre-order id
};

struct Param {
  std::string name;
  Sort sort;
  std::string classOf;  // Object sort only
  SrcLoc loc;
};

enum class FieldType { Int, Bool, List };

struct FieldDecl {
  std::string name;
  FieldType type;
  SrcLoc loc;
};

struct MethodDecl {
  std::string name;
  std::vector<Param> params;
  std::optional<Sort> ret;  // Int or Bool; nullopt for void
  std::vector<StmtPtr> body;
  bool isObserver = false;
  SrcLoc loc;
};

struct ClassDecl {
  std::string name;
  std::vector<FieldDecl> fields;
  MethodDecl ctor;  // name "init"
  std::vector<MethodDecl> methods;
  std::vector<MethodDecl> observers;
  SrcLoc loc;

  const MethodDecl* findCallable(const std::string& m) const {
    if (m == "init") return &ctor;
    for (auto& d : methods)
      if (d.name == m) return &d;
    for (auto& d : observers)
      if (d.name == m) return &d;
    return nullptr;
  }
  const FieldDecl* findField(const std::string& f) const {
    for (auto& d : fields)
      if (d.name == f) return &d;
    return nullptr;
  }
};

struct RoutineDecl {
  std::string name;
  std::vector<Param> params;
  std::optional<Sort> ret;
  std::vector<StmtPtr> body;
  SrcLoc loc;
};

struct ClientDecl {
  std::vector<RoutineDecl> routines;  // exactly one named "main"
};

struct Program {
  std::vector<ClassDecl> classes;
  ClientDecl client;

  const ClassDecl* findClass(const std::string& n) const {
    for (auto& c : classes)
      if (c.name == n) return &c;
    return nullptr;
  }
  const RoutineDecl* findRoutine(const std::string& n) const {
    for (auto& r : client.routines)
      if (r.name == n) return &r;
    return nullptr;
  }
};

// One entry per syntactic library call in the client, constructors included.
struct CallSite {
  int id;
  std::string className;
  std::string methodName;
  SrcLoc loc;
  std::vector<Param> inScope;  // client variables visible at the call
};

inline DExprPtr mkDInt(int64_t v, SrcLoc loc = {}) {
  auto e = std::make_shared<DExpr>();
  e->kind = DExprKind::IntLit;
  e->ival = v;
  e->loc = loc;
  return e;
}
inline DExprPtr mkDBool(bool v, SrcLoc loc = {}) {
  auto e = std::make_shared<DExpr>();
  e->kind = DExprKind::BoolLit;
  e->bval = v;
  e->loc = loc;
  return e;
}
inline DExprPtr mkDVar(const std::string& n, SrcLoc loc = {}) {
  auto e = std::make_shared<DExpr>();
  e->kind = DExprKind::Var;
  e->name = n;
  e->loc = loc;
  return e;
}
inline DExprPtr mkDUnary(ExprKind op, DExprPtr a) {
  if (op == ExprKind::Neg && a->kind == DExprKind::IntLit)
    return mkDInt(-a->ival, a->loc);
  auto e = std::make_shared<DExpr>();
  e->kind = DExprKind::Unary;
  e->op = op;
  e->loc = a->loc;
  e->args = {std::move(a)};
  return e;
}
inline DExprPtr mkDBin(ExprKind op, DExprPtr a, DExprPtr b) {
  auto e = std::make_shared<DExpr>();
  e->kind = DExprKind::Binary;
  e->op = op;
  e->loc = a->loc;
  e->args = {std::move(a), std::move(b)};
  return e;
}

inline DExprPtr cloneDExpr(const DExprPtr& e) {
  if (!e) return nullptr;
  auto c = std::make_shared<DExpr>(*e);
  for (auto& a : c->args) a = cloneDExpr(a);
  return c;
}

inline StmtPtr cloneStmt(const StmtPtr& s) {
  if (!s) return nullptr;
  auto c = std::make_shared<Stmt>(*s);
  c->expr = cloneDExpr(s->expr);
  c->expr2 = cloneDExpr(s->expr2);
  for (auto& b : c->body) b = cloneStmt(b);
  for (auto& b : c->elseBody) b = cloneStmt(b);
  return c;
}

inline std::vector<StmtPtr> cloneStmts(const std::vector<StmtPtr>& body) {
  std::vector<StmtPtr> out;
  out.reserve(body.size());
  for (auto& s : body) out.push_back(cloneStmt(s));
  return out;
}

inline Program cloneProgram(const Program& p) {
  Program c = p;
  for (auto& cls : c.classes) {
    cls.ctor.body = cloneStmts(cls.ctor.body);
    for (auto& m : cls.methods) m.body = cloneStmts(m.body);
    for (auto& m : cls.observers) m.body = cloneStmts(m.body);
  }
  for (auto& r : c.client.routines) r.body = cloneStmts(r.body);
  return c;
}

}  // namespace vmtlc

#endif
