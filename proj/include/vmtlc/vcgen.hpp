#ifndef VMTLC_VCGEN__HPP__
#define VMTLC_VCGEN__HPP__

#include <functional>

#include "vmtlc/chc.hpp"
#include "vmtlc/typecheck.hpp"

namespace vmtlc {

struct UnsupportedConstruct : std::runtime_error {
  SrcLoc loc;
  UnsupportedConstruct(SrcLoc l, const std::string& msg)
      : std::runtime_error("unsupported construct at " + l.str() + ": " + msg),
        loc(l) {}
};

inline std::string invariantRelName(int loopId) {
  return "inv_" + std::to_string(loopId);
}

inline std::string contractRelName(Mode mode, int siteId, const std::string& cls,
                                   const std::string& method) {
  if (mode == Mode::Modular) return "m_" + cls + "_" + method;
  return "c_" + std::to_string(siteId) + "_" + method;
}

namespace detail {

// Path-based weakest-precondition-style walk over the normalized client.
// Clauses are cut at loop heads; every library call contributes a contract
// atom; object state is carried as a tuple of observer snapshot variables.
class VCGen {
 public:
  VCGen(const TypedProgram& tp, Mode mode) : tp_(tp), mode_(mode) {
    sys_.mode = mode;
    sys_.constantPool = tp.constantPool;
  }

  CHCSystem run() {
    for (auto& r : tp_.program.client.routines)
      if (r.name != "main") prepareAuxRelation(r);
    for (auto& r : tp_.program.client.routines) walkRoutine(r);
    return std::move(sys_);
  }

 private:
  struct ObjSym {
    std::string className;
    std::vector<std::string> obsVars;  // current snapshot, declaration order
  };

  struct State {
    std::vector<Atom> body;
    std::vector<Formula> cons;
    std::map<std::string, ExprPtr> env;  // scalar program var -> term
    std::map<std::string, ObjSym> objs;
    std::vector<std::string> order;      // in-scope vars, declaration order
  };

  using Cont = std::function<void(State)>;

  const TypedProgram& tp_;
  Mode mode_;
  CHCSystem sys_;
  int fresh_ = 0;
  std::map<std::string, Sort> varSorts_;
  std::map<std::string, Sort> progSorts_;       // program var -> sort
  std::vector<Cont> breakConts_;
  // aux routine context: entry vars for the summary head, or empty for main
  std::vector<std::string> auxHeadArgs_;
  std::string auxRelName_;

  std::string fresh(const std::string& base, Sort s) {
    std::string n = base + "__" + std::to_string(fresh_++);
    varSorts_[n] = s;
    return n;
  }

  const ClassDecl& classOf(const std::string& name) {
    const ClassDecl* c = tp_.program.findClass(name);
    if (!c) throw std::logic_error("unknown class " + name);
    return *c;
  }

  // --- relation declarations ---

  Relation& declareRelation(Relation r) {
    for (auto& d : sys_.relations)
      if (d.name == r.name) return d;
    sys_.relations.push_back(std::move(r));
    return sys_.relations.back();
  }

  Relation& invariantRelation(int loopId, const State& st) {
    Relation r;
    r.name = invariantRelName(loopId);
    r.kind = RelKind::Invariant;
    for (auto& v : st.order) {
      auto o = st.objs.find(v);
      if (o != st.objs.end()) {
        const ClassDecl& c = classOf(o->second.className);
        for (auto& obs : c.observers)
          r.params.push_back({v + "_" + obs.name, *obs.ret});
      } else {
        r.params.push_back({v, progSorts_.at(v)});
      }
    }
    return declareRelation(r);
  }

  Relation& contractRelation(int siteId, const std::string& cls,
                             const std::string& method) {
    Relation r;
    r.name = contractRelName(mode_, siteId, cls, method);
    r.kind = mode_ == Mode::Modular ? RelKind::ModularContract
                                    : RelKind::ContextualContract;
    const ClassDecl& c = classOf(cls);
    const MethodDecl* m = c.findCallable(method);
    if (method != "init")
      for (auto& obs : c.observers) r.params.push_back({obs.name + "Pre", *obs.ret});
    for (auto& p : m->params) r.params.push_back({p.name, p.sort});
    if (m->ret) r.params.push_back({"ret", *m->ret});
    for (auto& obs : c.observers) r.params.push_back({obs.name + "Post", *obs.ret});
    return declareRelation(r);
  }

  void prepareAuxRelation(const RoutineDecl& r) {
    Relation rel;
    rel.name = "aux_" + r.name;
    rel.kind = RelKind::Invariant;
    for (auto& p : r.params) rel.params.push_back({p.name, p.sort});
    if (r.ret) rel.params.push_back({"ret", *r.ret});
    declareRelation(rel);
  }

  // --- clause emission ---

  // Atoms take variable vectors only; bind non-variable terms to fresh vars.
  std::string termToVar(const ExprPtr& t, const std::string& base, Sort s, State& st) {
    if (t->kind == ExprKind::Var) return t->name;
    std::string v = fresh(base, s);
    st.cons.push_back(mkEq(mkVar(v), t));
    return v;
  }

  void emitClause(const State& st, std::optional<Atom> head, const std::string& label) {
    CHC c;
    c.body = st.body;
    c.constraint = mkAndList(st.cons);
    c.head = head;
    c.kind = !head ? ClauseKind::Query
                   : (st.body.empty() ? ClauseKind::Fact : ClauseKind::Inductive);
    c.label = label;
    // Clause variables in first-occurrence order: body atoms, constraint, head.
    auto add = [&](const std::string& n) {
      for (auto& v : c.vars)
        if (v.name == n) return;
      auto it = varSorts_.find(n);
      if (it == varSorts_.end()) throw std::logic_error("unsorted clause var " + n);
      c.vars.push_back({n, it->second});
    };
    for (auto& a : c.body)
      for (auto& v : a.args) add(v);
    for (auto& v : freeVars(c.constraint)) add(v);
    if (c.head)
      for (auto& v : c.head->args) add(v);
    sys_.clauses.push_back(std::move(c));
  }

  // Arguments of the invariant atom for the current state.
  std::vector<std::string> invariantArgs(const Relation& rel, State& st) {
    std::vector<std::string> args;
    for (auto& v : st.order) {
      auto o = st.objs.find(v);
      if (o != st.objs.end()) {
        for (auto& ov : o->second.obsVars) args.push_back(ov);
      } else {
        args.push_back(termToVar(st.env.at(v), v, progSorts_.at(v), st));
      }
    }
    if (args.size() != rel.params.size())
      throw std::logic_error("invariant arity drift at " + rel.name);
    return args;
  }

  // --- expression translation (normalized: pure formula fragment + Var) ---

  ExprPtr translate(const DExprPtr& e, const State& st) {
    switch (e->kind) {
      case DExprKind::IntLit: return mkInt(e->ival);
      case DExprKind::BoolLit: return mkBool(e->bval);
      case DExprKind::Var: return st.env.at(e->name);
      case DExprKind::Unary: return mkUnary(e->op, translate(e->args[0], st));
      case DExprKind::Binary:
        if (e->op == ExprKind::Mul && e->args[0]->kind != DExprKind::IntLit &&
            e->args[1]->kind != DExprKind::IntLit)
          throw UnsupportedConstruct(e->loc, "non-linear multiplication");
        return mkBin(e->op, translate(e->args[0], st), translate(e->args[1], st));
      case DExprKind::Ite:
        return mkIte(translate(e->args[0], st), translate(e->args[1], st),
                     translate(e->args[2], st));
      default:
        throw UnsupportedConstruct(e->loc, "impure expression after normalization");
    }
  }

  // --- calls ---

  // Adds the contract atom for a call; returns the ret variable (if any).
  std::optional<std::string> emitCall(const DExprPtr& call, State& st) {
    bool isNew = call->kind == DExprKind::New;
    std::string cls = isNew ? call->callee : st.objs.at(call->recv).className;
    std::string method = isNew ? "init" : call->callee;
    const ClassDecl& c = classOf(cls);
    const MethodDecl* m = c.findCallable(method);
    Relation& rel = contractRelation(call->siteId, cls, method);

    Atom a{rel.name, {}};
    if (!isNew)
      for (auto& ov : st.objs.at(call->recv).obsVars) a.args.push_back(ov);
    for (size_t i = 0; i < call->args.size(); i++) {
      ExprPtr t = translate(call->args[i], st);
      a.args.push_back(termToVar(t, m->params[i].name, m->params[i].sort, st));
    }
    std::optional<std::string> retVar;
    if (m->ret) {
      retVar = fresh("ret", *m->ret);
      a.args.push_back(*retVar);
    }
    // Havoc: post-state observers are fresh, constrained only by the atom.
    // Observer calls are pure, so their post snapshot is the pre snapshot.
    std::string obj = isNew ? "" : call->recv;
    std::vector<std::string> post;
    if (m->isObserver) {
      post = st.objs.at(call->recv).obsVars;
    } else {
      for (auto& obs : c.observers)
        post.push_back(fresh((obj.empty() ? cls : obj) + "_" + obs.name, *obs.ret));
    }
    for (auto& v : post) a.args.push_back(v);
    if (!isNew) st.objs.at(call->recv).obsVars = post;
    st.body.push_back(a);
    if (isNew) {
      // caller binds the object variable via bindNew
      pendingNew_ = ObjSym{cls, post};
    }
    return retVar;
  }

  std::optional<std::string> emitRoutineCall(const DExprPtr& call, State& st) {
    const RoutineDecl* r = tp_.program.findRoutine(call->callee);
    Atom a{"aux_" + r->name, {}};
    for (size_t i = 0; i < call->args.size(); i++) {
      ExprPtr t = translate(call->args[i], st);
      a.args.push_back(termToVar(t, r->params[i].name, r->params[i].sort, st));
    }
    std::optional<std::string> retVar;
    if (r->ret) {
      retVar = fresh("ret", *r->ret);
      a.args.push_back(*retVar);
    }
    st.body.push_back(a);
    return retVar;
  }

  // --- statement walk ---

  void walkRoutine(const RoutineDecl& r) {
    State st;
    auxRelName_.clear();
    auxHeadArgs_.clear();
    progSorts_.clear();
    for (auto& p : r.params) {
      std::string v = fresh(p.name, p.sort);
      st.env[p.name] = mkVar(v);
      st.order.push_back(p.name);
      progSorts_[p.name] = p.sort;
      auxHeadArgs_.push_back(v);
    }
    bool isAux = r.name != "main";
    if (isAux) auxRelName_ = "aux_" + r.name;
    walkSeq(r.body, 0, std::move(st), [this, &r](State end) {
      if (!auxRelName_.empty() && !r.ret) emitAuxSummary(end, nullptr);
    });
  }

  void emitAuxSummary(State st, const ExprPtr* retTerm) {
    Atom head{auxRelName_, auxHeadArgs_};
    if (retTerm) {
      const Relation* rel = sys_.findRelation(auxRelName_);
      Sort rs = rel->params.back().sort;
      head.args.push_back(termToVar(*retTerm, "ret", rs, st));
    }
    emitClause(st, head, "summary:" + auxRelName_);
  }

  void walkSeq(const std::vector<StmtPtr>& stmts, size_t i, State st, const Cont& cont) {
    if (i == stmts.size()) {
      cont(std::move(st));
      return;
    }
    const StmtPtr& s = stmts[i];
    auto next = [&](State nst) { walkSeq(stmts, i + 1, std::move(nst), cont); };
    switch (s->kind) {
      case StmtKind::VarDecl: {
        progSorts_[s->name] = s->declSort;
        if (s->declSort == Sort::Object) {
          if (s->expr->kind == DExprKind::New) {
            emitCall(s->expr, st);
            st.objs[s->name] = pendingNew_;
          } else {
            throw UnsupportedConstruct(s->loc, "object aliasing");
          }
          st.order.push_back(s->name);
          next(std::move(st));
          return;
        }
        bindScalar(s, st);
        st.order.push_back(s->name);
        next(std::move(st));
        return;
      }
      case StmtKind::Assign:
        bindScalar(s, st);
        next(std::move(st));
        return;
      case StmtKind::ExprStmt:
        if (s->expr->kind == DExprKind::MethodCall) emitCall(s->expr, st);
        else if (s->expr->kind == DExprKind::RoutineCall) emitRoutineCall(s->expr, st);
        next(std::move(st));
        return;
      case StmtKind::Assume:
        st.cons.push_back(translate(s->expr, st));
        next(std::move(st));
        return;
      case StmtKind::Assert: {
        ExprPtr e = translate(s->expr, st);
        State q = st;
        q.cons.push_back(mkNot(e));
        emitClause(q, std::nullopt, "query@" + s->loc.str());
        st.cons.push_back(e);
        next(std::move(st));
        return;
      }
      case StmtKind::Return: {
        if (auxRelName_.empty()) return;  // main: path ends
        if (s->expr) {
          ExprPtr t = translate(s->expr, st);
          emitAuxSummary(std::move(st), &t);
        } else {
          emitAuxSummary(std::move(st), nullptr);
        }
        return;
      }
      case StmtKind::Break:
        breakConts_.back()(std::move(st));
        return;
      case StmtKind::If: {
        ExprPtr c = translate(s->expr, st);
        size_t scopeMark = st.order.size();
        State thenSt = st;
        thenSt.cons.push_back(c);
        State elseSt = std::move(st);
        elseSt.cons.push_back(mkNot(c));
        auto popScope = [scopeMark, &next](State b) {
          b.order.resize(scopeMark);
          next(std::move(b));
        };
        walkSeq(s->body, 0, std::move(thenSt), popScope);
        walkSeq(s->elseBody, 0, std::move(elseSt), popScope);
        return;
      }
      case StmtKind::While: {
        std::string relName = invariantRelation(s->loopId, st).name;
        // Entry clause into the invariant.
        {
          State entry = st;
          Atom head{relName, invariantArgs(*sys_.findRelation(relName), entry)};
          emitClause(entry, head, relName + "@" + s->loc.str());
        }
        // Segment restart: fresh variables named after the signature.
        State s0;
        s0.order = st.order;
        std::vector<std::string> seg;
        for (auto& p : sys_.findRelation(relName)->params)
          seg.push_back(fresh(p.name, p.sort));
        s0.body.push_back(Atom{relName, seg});
        size_t k = 0;
        for (auto& v : st.order) {
          auto o = st.objs.find(v);
          if (o != st.objs.end()) {
            ObjSym sym{o->second.className, {}};
            for (size_t j = 0; j < o->second.obsVars.size(); j++)
              sym.obsVars.push_back(seg[k++]);
            s0.objs[v] = sym;
          } else {
            s0.env[v] = mkVar(seg[k++]);
          }
        }
        bool condTrue = s->expr->kind == DExprKind::BoolLit && s->expr->bval;
        // Back edge.
        {
          State inSt = s0;
          if (!condTrue) inSt.cons.push_back(translate(s->expr, s0));
          size_t scopeMark = inSt.order.size();
          breakConts_.push_back([scopeMark, &next](State b) {
            b.order.resize(scopeMark);
            next(std::move(b));
          });
          walkSeq(s->body, 0, std::move(inSt),
                  [this, relName, scopeMark, s](State endSt) {
                    endSt.order.resize(scopeMark);
                    Atom head{relName,
                              invariantArgs(*sys_.findRelation(relName), endSt)};
                    emitClause(endSt, head, relName + "@back@" + s->loc.str());
                  });
          breakConts_.pop_back();
        }
        // Normal exit.
        if (!condTrue) {
          State outSt = std::move(s0);
          outSt.cons.push_back(mkNot(translate(s->expr, outSt)));
          next(std::move(outSt));
        }
        return;
      }
      default:
        throw UnsupportedConstruct(s->loc, "statement not allowed in client");
    }
  }

  void bindScalar(const StmtPtr& s, State& st) {
    switch (s->expr->kind) {
      case DExprKind::Nondet: {
        std::string v = fresh(s->name, Sort::Int);
        if (s->expr->bounded) {
          st.cons.push_back(mkGe(mkVar(v), mkInt(s->expr->lo)));
          st.cons.push_back(mkLe(mkVar(v), mkInt(s->expr->hi)));
        }
        st.env[s->name] = mkVar(v);
        return;
      }
      case DExprKind::MethodCall: {
        auto ret = emitCall(s->expr, st);
        st.env[s->name] = mkVar(*ret);
        return;
      }
      case DExprKind::RoutineCall: {
        auto ret = emitRoutineCall(s->expr, st);
        st.env[s->name] = mkVar(*ret);
        return;
      }
      case DExprKind::New:
        throw UnsupportedConstruct(s->loc, "object assigned to scalar");
      default:
        st.env[s->name] = translate(s->expr, st);
        return;
    }
  }

  ObjSym pendingNew_;
};

}  // namespace detail

inline CHCSystem generate_chcs(const TypedProgram& tp, Mode mode) {
  return detail::VCGen(tp, mode).run();
}

}  // namespace vmtlc

#endif
