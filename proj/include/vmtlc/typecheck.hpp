#ifndef VMTLC_TYPECHECK__HPP__
#define VMTLC_TYPECHECK__HPP__

#include <algorithm>
#include <map>
#include <set>

#include "vmtlc/ast.hpp"

namespace vmtlc {

struct TypeError : std::runtime_error {
  SrcLoc loc;
  TypeError(SrcLoc l, const std::string& msg)
      : std::runtime_error("type error at " + l.str() + ": " + msg), loc(l) {}
};

struct PurityError : std::runtime_error {
  std::string observer;
  SrcLoc loc;
  PurityError(const std::string& obs, SrcLoc l, const std::string& msg)
      : std::runtime_error("purity error in observer '" + obs + "' at " + l.str() +
                           ": " + msg),
        observer(obs), loc(l) {}
};

struct LoopInfo {
  int id;
  std::string routine;
  SrcLoc loc;
};

// Typechecked and normalized program. After normalization every method call,
// constructor, routine call, and nondet() in the client appears only as the
// full right-hand side of a VarDecl/Assign or as a bare ExprStmt; loop
// conditions, branch conditions, assertions and assumptions are pure formula
// expressions. Loop and call-site ids are dense pre-order over the client.
struct TypedProgram {
  Program program;
  std::vector<CallSite> callSites;
  std::vector<LoopInfo> loops;
  std::vector<int64_t> constantPool;  // sorted, unique; always contains 0 and 1
};

namespace detail {

struct VarInfo {
  Sort sort;
  std::string classOf;
};

enum class BodyCtx { Client, Routine, Method, Observer };

class Checker {
 public:
  explicit Checker(Program& p) : p_(p) {}

  void run() {
    std::set<std::string> classNames, routineNames;
    for (auto& c : p_.classes) {
      if (!classNames.insert(c.name).second)
        throw TypeError(c.loc, "duplicate class '" + c.name + "'");
    }
    for (auto& r : p_.client.routines) {
      if (!routineNames.insert(r.name).second)
        throw TypeError(r.loc, "duplicate routine '" + r.name + "'");
    }
    const RoutineDecl* main = p_.findRoutine("main");
    if (!main) throw TypeError({1, 1}, "client must declare a 'main' routine");
    if (!main->params.empty())
      throw TypeError(main->loc, "'main' takes no parameters");
    if (main->ret)
      throw TypeError(main->loc, "'main' returns no value");

    for (auto& c : p_.classes) checkClass(c);
    for (auto& r : p_.client.routines) checkRoutine(r);
  }

 private:
  Program& p_;
  const ClassDecl* curClass_ = nullptr;
  std::string curObserver_;
  BodyCtx ctx_ = BodyCtx::Client;
  std::optional<Sort> curRet_;
  int loopDepth_ = 0;
  std::vector<std::map<std::string, VarInfo>> scopes_;

  [[noreturn]] void purityOrType(SrcLoc l, const std::string& msg) {
    if (ctx_ == BodyCtx::Observer) throw PurityError(curObserver_, l, msg);
    throw TypeError(l, msg);
  }

  void openScope() { scopes_.emplace_back(); }
  void closeScope() { scopes_.pop_back(); }

  const VarInfo* lookup(const std::string& n) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(n);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  void declare(const std::string& n, VarInfo vi, SrcLoc l) {
    if (n.rfind("__", 0) == 0)
      throw TypeError(l, "identifiers starting with '__' are reserved");
    if (lookup(n)) throw TypeError(l, "redeclaration of '" + n + "'");
    scopes_.back()[n] = vi;
  }

  bool inLibrary() const { return ctx_ == BodyCtx::Method || ctx_ == BodyCtx::Observer; }

  static std::string sortName(Sort s) {
    return s == Sort::Int ? "int" : (s == Sort::Bool ? "bool" : "object");
  }

  void checkClass(const ClassDecl& c) {
    std::set<std::string> names;
    for (auto& f : c.fields)
      if (!names.insert(f.name).second)
        throw TypeError(f.loc, "duplicate field '" + f.name + "'");
    names.clear();
    names.insert("init");
    for (auto& m : c.methods)
      if (!names.insert(m.name).second)
        throw TypeError(m.loc, "duplicate method '" + m.name + "'");
    for (auto& m : c.observers) {
      if (!names.insert(m.name).second)
        throw TypeError(m.loc, "duplicate method '" + m.name + "'");
      if (!m.params.empty())
        throw TypeError(m.loc, "observers take no parameters");
    }

    curClass_ = &c;
    checkCallable(c.ctor, BodyCtx::Method);
    for (auto& m : c.methods) checkCallable(m, BodyCtx::Method);
    for (auto& m : c.observers) {
      curObserver_ = m.name;
      checkCallable(m, BodyCtx::Observer);
    }
    curClass_ = nullptr;
    curObserver_.clear();
  }

  void checkCallable(const MethodDecl& m, BodyCtx ctx) {
    ctx_ = ctx;
    curRet_ = m.ret;
    loopDepth_ = 0;
    scopes_.clear();
    openScope();
    for (auto& p : m.params) {
      if (p.sort == Sort::Object)
        throw TypeError(p.loc, "object parameters are not allowed");
      declare(p.name, {p.sort, ""}, p.loc);
    }
    checkBody(m.body);
    closeScope();
  }

  void checkRoutine(const RoutineDecl& r) {
    ctx_ = r.name == "main" ? BodyCtx::Client : BodyCtx::Routine;
    curRet_ = r.ret;
    loopDepth_ = 0;
    scopes_.clear();
    openScope();
    for (auto& p : r.params) declare(p.name, {p.sort, ""}, p.loc);
    checkBody(r.body);
    closeScope();
  }

  void checkBody(const std::vector<StmtPtr>& body) {
    openScope();
    for (auto& s : body) checkStmt(s);
    closeScope();
  }

  void checkStmt(const StmtPtr& s) {
    switch (s->kind) {
      case StmtKind::VarDecl: {
        Sort t = checkExpr(s->expr);
        if (t != s->declSort)
          throw TypeError(s->loc, "initializer for '" + s->name + "' has sort " +
                                      sortName(t) + ", expected " + sortName(s->declSort));
        std::string cls;
        if (s->declSort == Sort::Object) {
          if (!p_.findClass(s->declClass))
            throw TypeError(s->loc, "unknown class '" + s->declClass + "'");
          if (s->expr->classOf != s->declClass)
            throw TypeError(s->loc, "initializer constructs class '" +
                                        s->expr->classOf + "', expected '" +
                                        s->declClass + "'");
          cls = s->declClass;
        }
        declare(s->name, {s->declSort, cls}, s->loc);
        return;
      }
      case StmtKind::Assign: {
        const VarInfo* vi = lookup(s->name);
        if (!vi) {
          if (inLibrary() && curClass_) {
            const FieldDecl* f = curClass_->findField(s->name);
            if (f) {
              if (ctx_ == BodyCtx::Observer)
                purityOrType(s->loc, "assignment to field '" + s->name + "'");
              if (f->type == FieldType::List)
                throw TypeError(s->loc, "list fields are modified via builtins");
              Sort want = f->type == FieldType::Int ? Sort::Int : Sort::Bool;
              Sort t = checkExpr(s->expr);
              if (t != want)
                throw TypeError(s->loc, "cannot assign " + sortName(t) +
                                            " to field '" + s->name + "'");
              return;
            }
          }
          throw TypeError(s->loc, "assignment to undeclared '" + s->name + "'");
        }
        if (vi->sort == Sort::Object)
          throw TypeError(s->loc, "object variables are single-assignment");
        Sort t = checkExpr(s->expr);
        if (t != vi->sort)
          throw TypeError(s->loc, "cannot assign " + sortName(t) + " to '" +
                                      s->name + "' of sort " + sortName(vi->sort));
        return;
      }
      case StmtKind::ExprStmt: {
        if (s->expr->kind != DExprKind::MethodCall &&
            s->expr->kind != DExprKind::RoutineCall)
          throw TypeError(s->loc, "expression statement must be a call");
        checkCall(s->expr, /*allowVoid=*/true);
        return;
      }
      case StmtKind::If: {
        if (checkExpr(s->expr) != Sort::Bool)
          throw TypeError(s->expr->loc, "condition must be bool");
        checkBody(s->body);
        checkBody(s->elseBody);
        return;
      }
      case StmtKind::While: {
        if (checkExpr(s->expr) != Sort::Bool)
          throw TypeError(s->expr->loc, "condition must be bool");
        loopDepth_++;
        checkBody(s->body);
        loopDepth_--;
        return;
      }
      case StmtKind::Break:
        if (loopDepth_ == 0) throw TypeError(s->loc, "'break' outside of a loop");
        return;
      case StmtKind::Assert:
      case StmtKind::Assume: {
        if (inLibrary())
          throw TypeError(s->loc, "assert/assume only allowed in client code");
        if (checkExpr(s->expr) != Sort::Bool)
          throw TypeError(s->expr->loc, "assert/assume argument must be bool");
        return;
      }
      case StmtKind::Return: {
        if (curRet_) {
          if (!s->expr) throw TypeError(s->loc, "missing return value");
          Sort t = checkExpr(s->expr);
          if (t != *curRet_)
            throw TypeError(s->loc, "return sort " + sortName(t) + ", expected " +
                                        sortName(*curRet_));
        } else if (s->expr) {
          throw TypeError(s->loc, "unexpected return value");
        }
        return;
      }
      case StmtKind::ListPush:
      case StmtKind::ListPop:
      case StmtKind::ListSet:
      case StmtKind::ListRemoveAt: {
        if (!inLibrary())
          throw TypeError(s->loc, "list builtins only allowed in library code");
        if (ctx_ == BodyCtx::Observer)
          purityOrType(s->loc, "mutation of list field '" + s->name + "'");
        const FieldDecl* f = curClass_ ? curClass_->findField(s->name) : nullptr;
        if (!f || f->type != FieldType::List)
          throw TypeError(s->loc, "'" + s->name + "' is not a list field");
        if (s->expr && checkExpr(s->expr) != Sort::Int)
          throw TypeError(s->expr->loc, "list index must be int");
        if (s->expr2 && checkExpr(s->expr2) != Sort::Int)
          throw TypeError(s->expr2->loc, "list element must be int");
        return;
      }
    }
  }

  // Calls may be void only when allowVoid; returns the call's sort otherwise.
  Sort checkCall(const DExprPtr& e, bool allowVoid) {
    if (inLibrary())
      purityOrType(e->loc, "calls are not allowed in library code");
    if (e->kind == DExprKind::RoutineCall) {
      if (ctx_ == BodyCtx::Routine)
        throw TypeError(e->loc, "auxiliary routines cannot call routines");
      const RoutineDecl* r = p_.findRoutine(e->callee);
      if (!r) throw TypeError(e->loc, "unknown routine '" + e->callee + "'");
      if (r->name == "main") throw TypeError(e->loc, "'main' cannot be called");
      checkArgs(e, r->params);
      if (!r->ret) {
        if (!allowVoid) throw TypeError(e->loc, "void call used as a value");
        e->sort = Sort::Int;
        return Sort::Int;
      }
      e->sort = *r->ret;
      return e->sort;
    }
    // MethodCall
    if (ctx_ == BodyCtx::Routine)
      throw TypeError(e->loc, "auxiliary routines cannot use library objects");
    const VarInfo* vi = lookup(e->recv);
    if (!vi) throw TypeError(e->loc, "unknown variable '" + e->recv + "'");
    if (vi->sort != Sort::Object)
      throw TypeError(e->loc, "'" + e->recv + "' is not an object");
    const ClassDecl* c = p_.findClass(vi->classOf);
    const MethodDecl* m = c ? c->findCallable(e->callee) : nullptr;
    if (!m || e->callee == "init")
      throw TypeError(e->loc, "class '" + vi->classOf + "' has no method '" +
                                  e->callee + "'");
    checkArgs(e, m->params);
    e->classOf = vi->classOf;
    if (!m->ret) {
      if (!allowVoid) throw TypeError(e->loc, "void call used as a value");
      e->sort = Sort::Int;
      return Sort::Int;
    }
    e->sort = *m->ret;
    return e->sort;
  }

  void checkArgs(const DExprPtr& e, const std::vector<Param>& params) {
    if (e->args.size() != params.size())
      throw TypeError(e->loc, "'" + e->callee + "' expects " +
                                  std::to_string(params.size()) + " argument(s), got " +
                                  std::to_string(e->args.size()));
    for (size_t i = 0; i < e->args.size(); i++) {
      Sort t = checkExpr(e->args[i]);
      if (t != params[i].sort)
        throw TypeError(e->args[i]->loc,
                        "argument " + std::to_string(i + 1) + " of '" + e->callee +
                            "' has sort " + sortName(t) + ", expected " +
                            sortName(params[i].sort));
    }
  }

  Sort checkExpr(const DExprPtr& e) {
    switch (e->kind) {
      case DExprKind::IntLit: e->sort = Sort::Int; return Sort::Int;
      case DExprKind::BoolLit: e->sort = Sort::Bool; return Sort::Bool;
      case DExprKind::Var: {
        const VarInfo* vi = lookup(e->name);
        if (vi) {
          e->sort = vi->sort;
          e->classOf = vi->classOf;
          return vi->sort;
        }
        if (inLibrary() && curClass_) {
          const FieldDecl* f = curClass_->findField(e->name);
          if (f) {
            if (f->type == FieldType::List)
              throw TypeError(e->loc, "list field '" + e->name +
                                          "' is read via len/getat");
            e->sort = f->type == FieldType::Int ? Sort::Int : Sort::Bool;
            return e->sort;
          }
        }
        throw TypeError(e->loc, "unknown variable '" + e->name + "'");
      }
      case DExprKind::Unary: {
        Sort a = checkExpr(e->args[0]);
        Sort want = e->op == ExprKind::Not ? Sort::Bool : Sort::Int;
        if (a != want)
          throw TypeError(e->loc, std::string(e->op == ExprKind::Not ? "'!'" : "'-'") +
                                      " applied to " + sortName(a));
        e->sort = want;
        return want;
      }
      case DExprKind::Binary: {
        Sort a = checkExpr(e->args[0]);
        Sort b = checkExpr(e->args[1]);
        switch (e->op) {
          case ExprKind::Add: case ExprKind::Sub: case ExprKind::Mul:
            if (a != Sort::Int || b != Sort::Int)
              throw TypeError(e->loc, "arithmetic on non-int operands");
            e->sort = Sort::Int;
            return Sort::Int;
          case ExprKind::Lt: case ExprKind::Le: case ExprKind::Gt: case ExprKind::Ge:
            if (a != Sort::Int || b != Sort::Int)
              throw TypeError(e->loc, "comparison of non-int operands");
            e->sort = Sort::Bool;
            return Sort::Bool;
          case ExprKind::Eq: case ExprKind::Ne:
            if (a != b || a == Sort::Object)
              throw TypeError(e->loc, "'==' / '!=' operands must both be int or both bool");
            e->sort = Sort::Bool;
            return Sort::Bool;
          default:  // And, Or, Implies, Iff
            if (a != Sort::Bool || b != Sort::Bool)
              throw TypeError(e->loc, "logical operator on non-bool operands");
            e->sort = Sort::Bool;
            return Sort::Bool;
        }
      }
      case DExprKind::Ite: {
        if (checkExpr(e->args[0]) != Sort::Bool)
          throw TypeError(e->loc, "ite condition must be bool");
        Sort a = checkExpr(e->args[1]);
        Sort b = checkExpr(e->args[2]);
        if (a != b || a == Sort::Object)
          throw TypeError(e->loc, "ite branches must agree and be int or bool");
        e->sort = a;
        return a;
      }
      case DExprKind::Nondet: {
        if (inLibrary()) purityOrType(e->loc, "nondet() in library code");
        if (e->bounded && e->lo > e->hi)
          throw TypeError(e->loc, "empty nondet range");
        e->sort = Sort::Int;
        return Sort::Int;
      }
      case DExprKind::New: {
        if (inLibrary() || ctx_ == BodyCtx::Routine)
          purityOrType(e->loc, "object construction only allowed in 'main'");
        const ClassDecl* c = p_.findClass(e->callee);
        if (!c) throw TypeError(e->loc, "unknown class '" + e->callee + "'");
        checkArgs(e, c->ctor.params);
        e->sort = Sort::Object;
        e->classOf = e->callee;
        return Sort::Object;
      }
      case DExprKind::MethodCall:
      case DExprKind::RoutineCall:
        return checkCall(e, /*allowVoid=*/false);
      case DExprKind::ListLen:
      case DExprKind::ListGet: {
        if (!inLibrary())
          throw TypeError(e->loc, "list builtins only allowed in library code");
        const FieldDecl* f = curClass_ ? curClass_->findField(e->name) : nullptr;
        if (!f || f->type != FieldType::List)
          throw TypeError(e->loc, "'" + e->name + "' is not a list field");
        if (e->kind == DExprKind::ListGet && checkExpr(e->args[0]) != Sort::Int)
          throw TypeError(e->loc, "list index must be int");
        e->sort = Sort::Int;
        return Sort::Int;
      }
    }
    throw TypeError(e->loc, "malformed expression");
  }
};

// --- Normalization -----------------------------------------------------------

inline bool hoistable(const DExprPtr& e) {
  switch (e->kind) {
    case DExprKind::Nondet:
    case DExprKind::MethodCall:
    case DExprKind::New:
    case DExprKind::RoutineCall:
      return true;
    default:
      for (auto& a : e->args)
        if (hoistable(a)) return true;
      return false;
  }
}

class Normalizer {
 public:
  void normalizeClient(Program& p) {
    for (auto& r : p.client.routines) r.body = normBody(r.body);
  }

 private:
  int tmp_ = 0;

  std::string fresh() { return "__t" + std::to_string(tmp_++); }

  // Replaces impure subexpressions with temporaries bound in `pre`. When
  // keepTop is true a hoistable expression may remain as the top node (its
  // arguments are still purified).
  DExprPtr hoist(DExprPtr e, std::vector<StmtPtr>& pre, bool keepTop) {
    for (auto& a : e->args) a = hoist(a, pre, false);
    switch (e->kind) {
      case DExprKind::Nondet:
      case DExprKind::MethodCall:
      case DExprKind::New:
      case DExprKind::RoutineCall: {
        if (keepTop) return e;
        auto decl = std::make_shared<Stmt>();
        decl->kind = StmtKind::VarDecl;
        decl->loc = e->loc;
        decl->name = fresh();
        decl->declSort = e->sort;
        decl->declClass = e->classOf;
        decl->expr = e;
        pre.push_back(decl);
        auto v = mkDVar(decl->name, e->loc);
        v->sort = e->sort;
        v->classOf = e->classOf;
        return v;
      }
      default:
        return e;
    }
  }

  std::vector<StmtPtr> normBody(const std::vector<StmtPtr>& body) {
    std::vector<StmtPtr> out;
    for (auto& s : body) normStmt(s, out);
    return out;
  }

  void normStmt(const StmtPtr& s, std::vector<StmtPtr>& out) {
    switch (s->kind) {
      case StmtKind::VarDecl:
      case StmtKind::Assign:
      case StmtKind::ExprStmt:
        s->expr = hoist(s->expr, out, true);
        out.push_back(s);
        return;
      case StmtKind::Assert:
      case StmtKind::Assume:
        s->expr = hoist(s->expr, out, false);
        out.push_back(s);
        return;
      case StmtKind::Return:
        if (s->expr) s->expr = hoist(s->expr, out, false);
        out.push_back(s);
        return;
      case StmtKind::If: {
        s->expr = hoist(s->expr, out, false);
        s->body = normBody(s->body);
        s->elseBody = normBody(s->elseBody);
        out.push_back(s);
        return;
      }
      case StmtKind::While: {
        std::vector<StmtPtr> newBody;
        if (hoistable(s->expr)) {
          // while (c) { B }  with impure c becomes
          // while (true) { <hoisted>; if (!c') { break; } B }
          DExprPtr cond = hoist(s->expr, newBody, false);
          auto brk = std::make_shared<Stmt>();
          brk->kind = StmtKind::Break;
          brk->loc = s->expr->loc;
          auto guard = std::make_shared<Stmt>();
          guard->kind = StmtKind::If;
          guard->loc = s->expr->loc;
          guard->expr = mkDUnary(ExprKind::Not, cond);
          guard->expr->sort = Sort::Bool;
          guard->body = {brk};
          newBody.push_back(guard);
          auto tru = mkDBool(true, s->expr->loc);
          tru->sort = Sort::Bool;
          s->expr = tru;
        }
        for (auto& b : normBody(s->body)) newBody.push_back(b);
        s->body = std::move(newBody);
        out.push_back(s);
        return;
      }
      default:
        out.push_back(s);
        return;
    }
  }
};

// --- Loop / call-site numbering and the constant pool ------------------------

class Annotator {
 public:
  Annotator(Program& p, TypedProgram& tp) : p_(p), tp_(tp) {}

  void run() {
    for (auto& r : p_.client.routines) {
      scope_.clear();
      scope_.emplace_back();
      for (auto& prm : r.params) scope_.back().push_back(prm);
      routine_ = r.name;
      walk(r.body);
    }
    collectConstants();
  }

 private:
  Program& p_;
  TypedProgram& tp_;
  std::string routine_;
  int nextLoop_ = 0;
  int nextSite_ = 0;
  std::vector<std::vector<Param>> scope_;

  std::vector<Param> flatScope() const {
    std::vector<Param> out;
    for (auto& s : scope_)
      for (auto& v : s) out.push_back(v);
    return out;
  }

  void visitExpr(const DExprPtr& e) {
    if (e->kind == DExprKind::MethodCall || e->kind == DExprKind::New) {
      e->siteId = nextSite_++;
      CallSite cs;
      cs.id = e->siteId;
      cs.className = e->classOf;
      cs.methodName = e->kind == DExprKind::New ? "init" : e->callee;
      cs.loc = e->loc;
      cs.inScope = flatScope();
      tp_.callSites.push_back(cs);
    }
    for (auto& a : e->args) visitExpr(a);
  }

  void walk(const std::vector<StmtPtr>& body) {
    scope_.emplace_back();
    for (auto& s : body) {
      if (s->expr) visitExpr(s->expr);
      if (s->expr2) visitExpr(s->expr2);
      if (s->kind == StmtKind::VarDecl) {
        Param v;
        v.name = s->name;
        v.sort = s->declSort;
        v.classOf = s->declClass;
        v.loc = s->loc;
        scope_.back().push_back(v);
      } else if (s->kind == StmtKind::While) {
        s->loopId = nextLoop_++;
        tp_.loops.push_back({s->loopId, routine_, s->loc});
        walk(s->body);
      } else if (s->kind == StmtKind::If) {
        walk(s->body);
        walk(s->elseBody);
      }
    }
    scope_.pop_back();
  }

  void collectConstants() {
    std::set<int64_t> pool = {0, 1};
    auto visit = [&](auto&& self, const DExprPtr& e) -> void {
      if (!e) return;
      if (e->kind == DExprKind::IntLit) pool.insert(e->ival);
      if (e->kind == DExprKind::Nondet && e->bounded) {
        pool.insert(e->lo);
        pool.insert(e->hi);
      }
      for (auto& a : e->args) self(self, a);
    };
    auto visitBody = [&](auto&& self, const std::vector<StmtPtr>& body) -> void {
      for (auto& s : body) {
        visit(visit, s->expr);
        visit(visit, s->expr2);
        self(self, s->body);
        self(self, s->elseBody);
      }
    };
    for (auto& c : p_.classes) {
      visitBody(visitBody, c.ctor.body);
      for (auto& m : c.methods) visitBody(visitBody, m.body);
      for (auto& m : c.observers) visitBody(visitBody, m.body);
    }
    for (auto& r : p_.client.routines) visitBody(visitBody, r.body);
    tp_.constantPool.assign(pool.begin(), pool.end());
  }
};

}  // namespace detail

inline TypedProgram typecheck(const Program& input) {
  TypedProgram tp;
  tp.program = cloneProgram(input);
  detail::Checker(tp.program).run();
  detail::Normalizer().normalizeClient(tp.program);
  detail::Annotator(tp.program, tp).run();
  return tp;
}

inline std::vector<CallSite> enumerate_call_sites(const TypedProgram& tp) {
  return tp.callSites;
}

}  // namespace vmtlc

#endif
