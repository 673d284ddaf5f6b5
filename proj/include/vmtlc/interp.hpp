#ifndef VMTLC_INTERP_HPP
#define VMTLC_INTERP_HPP

// Deterministic interpreter for DSL programs: library method execution over
// concrete object state, observer snapshots, and client runs with
// nondeterminism resolved from an input buffer.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vmtlc/ast.hpp"
#include "vmtlc/typecheck.hpp"

namespace vmtlc {

struct FuelExhausted : std::runtime_error {
  FuelExhausted() : std::runtime_error("fuel exhausted") {}
};

struct PurityViolation : std::runtime_error {
  explicit PurityViolation(const std::string& obs)
      : std::runtime_error("observer mutated object state: " + obs) {}
};

struct InterpError : std::runtime_error {
  explicit InterpError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Runtime values and object state

using FieldValue = std::variant<std::int64_t, bool, std::vector<std::int64_t>>;

struct ObjectState {
  std::string className;
  std::map<std::string, FieldValue> fields;

  bool operator==(const ObjectState& o) const {
    return className == o.className && fields == o.fields;
  }
};

inline ObjectState freshObject(const ClassDecl& cls) {
  ObjectState st;
  st.className = cls.name;
  for (const auto& f : cls.fields) {
    switch (f.type) {
      case FieldType::Int: st.fields[f.name] = std::int64_t{0}; break;
      case FieldType::Bool: st.fields[f.name] = false; break;
      case FieldType::List: st.fields[f.name] = std::vector<std::int64_t>{}; break;
    }
  }
  return st;
}

struct InputBuffer {
  std::vector<std::int64_t> data;
  std::size_t cursor = 0;

  // Reads past the end yield 0 (canonical padding).
  std::int64_t next() { return cursor < data.size() ? data[cursor++] : 0; }
};

// nondet(lo,hi): total deterministic decoding of a raw buffer value.
inline std::int64_t decodeBounded(std::int64_t v, std::int64_t lo,
                                  std::int64_t hi) {
  std::int64_t r = hi - lo + 1;
  std::int64_t m = v % r;
  if (m < 0) m += r;
  return lo + m;
}

using ObserverSnapshot = std::map<std::string, Value>;

// ---------------------------------------------------------------------------
// Trace

struct CallEvent {
  int siteId = -1;
  std::string className;
  std::string methodName;
  ObserverSnapshot pre;   // empty for constructors
  std::vector<Value> args;
  std::optional<Value> ret;
  ObserverSnapshot post;
};

struct AssertEvent {
  SrcLoc loc;
  bool ok = true;
};

struct Trace {
  std::vector<CallEvent> calls;
  std::vector<AssertEvent> asserts;
  bool fuelExhausted = false;
  bool assertionFailed = false;
  SrcLoc failLoc;
  bool stoppedByHook = false;

  // Stable fingerprint of the event shape, used by the fuzzer to decide
  // whether a buffer exercised new behavior.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    auto mixValue = [&](const Value& v) {
      if (std::holds_alternative<bool>(v)) mix(std::get<bool>(v) ? 2 : 3);
      else mix(static_cast<std::uint64_t>(std::get<std::int64_t>(v)) * 2654435761u + 5);
    };
    for (const auto& c : calls) {
      mix(static_cast<std::uint64_t>(c.siteId) + 11);
      for (const auto& [n, v] : c.pre) { mix(n.size()); mixValue(v); }
      for (const auto& a : c.args) mixValue(a);
      if (c.ret) mixValue(*c.ret);
      for (const auto& [n, v] : c.post) { mix(n.size()); mixValue(v); }
    }
    for (const auto& a : asserts) {
      mix(static_cast<std::uint64_t>(a.loc.line) * 31 +
          static_cast<std::uint64_t>(a.loc.col));
      mix(a.ok ? 7 : 13);
    }
    mix(fuelExhausted ? 17 : 19);
    mix(assertionFailed ? 23 : 29);
    return h;
  }
};

// ---------------------------------------------------------------------------
// Library method interpretation

namespace detail {

struct BreakSignal {};
struct ReturnSignal { std::optional<Value> value; };

class MethodInterp {
 public:
  MethodInterp(const ClassDecl& cls, ObjectState& state, std::int64_t& fuel)
      : cls_(cls), state_(state), fuel_(fuel) {}

  std::optional<Value> run(const MethodDecl& m, const std::vector<Value>& args) {
    if (m.params.size() != args.size())
      throw InterpError("arity mismatch calling " + cls_.name + "." + m.name);
    for (std::size_t i = 0; i < m.params.size(); ++i)
      locals_[m.params[i].name] = args[i];
    try {
      execSeq(m.body);
    } catch (const ReturnSignal& r) {
      return r.value;
    }
    if (m.ret) throw InterpError(cls_.name + "." + m.name + " fell off without return");
    return std::nullopt;
  }

 private:
  void burn() {
    if (--fuel_ < 0) throw FuelExhausted();
  }

  std::vector<std::int64_t>& listField(const std::string& name) {
    auto it = state_.fields.find(name);
    if (it == state_.fields.end() ||
        !std::holds_alternative<std::vector<std::int64_t>>(it->second))
      throw InterpError("not a list field: " + name);
    return std::get<std::vector<std::int64_t>>(it->second);
  }

  Value eval(const DExprPtr& e) {
    switch (e->kind) {
      case DExprKind::IntLit: return e->ival;
      case DExprKind::BoolLit: return e->bval;
      case DExprKind::Var: {
        auto it = locals_.find(e->name);
        if (it != locals_.end()) return it->second;
        auto f = state_.fields.find(e->name);
        if (f == state_.fields.end()) throw InterpError("unbound name " + e->name);
        if (std::holds_alternative<std::int64_t>(f->second))
          return std::get<std::int64_t>(f->second);
        if (std::holds_alternative<bool>(f->second))
          return std::get<bool>(f->second);
        throw InterpError("list field read without accessor: " + e->name);
      }
      case DExprKind::Unary: {
        Value a = eval(e->args[0]);
        return e->op == ExprKind::Neg ? Value(-asNum(a)) : Value(!asBool(a));
      }
      case DExprKind::Binary: return evalBinary(e);
      case DExprKind::Ite:
        return asBool(eval(e->args[0])) ? eval(e->args[1]) : eval(e->args[2]);
      case DExprKind::ListLen:
        return static_cast<std::int64_t>(listField(e->name).size());
      case DExprKind::ListGet: {
        auto& xs = listField(e->name);
        std::int64_t i = asNum(eval(e->args[0]));
        // Library-defined totality: out-of-range reads yield 0.
        if (i < 0 || i >= static_cast<std::int64_t>(xs.size())) return std::int64_t{0};
        return xs[static_cast<std::size_t>(i)];
      }
      default:
        throw InterpError("construct not allowed in library code");
    }
  }

  Value evalBinary(const DExprPtr& e) {
    Value a = eval(e->args[0]);
    Value b = eval(e->args[1]);
    switch (e->op) {
      case ExprKind::Add: return asNum(a) + asNum(b);
      case ExprKind::Sub: return asNum(a) - asNum(b);
      case ExprKind::Mul: return asNum(a) * asNum(b);
      case ExprKind::Lt: return asNum(a) < asNum(b);
      case ExprKind::Le: return asNum(a) <= asNum(b);
      case ExprKind::Gt: return asNum(a) > asNum(b);
      case ExprKind::Ge: return asNum(a) >= asNum(b);
      case ExprKind::Eq: return a == b;
      case ExprKind::Ne: return !(a == b);
      case ExprKind::And: return asBool(a) && asBool(b);
      case ExprKind::Or: return asBool(a) || asBool(b);
      case ExprKind::Implies: return !asBool(a) || asBool(b);
      case ExprKind::Iff: return asBool(a) == asBool(b);
      default: throw InterpError("bad binary operator");
    }
  }

  void execSeq(const std::vector<StmtPtr>& body) {
    for (const auto& s : body) exec(s);
  }

  void exec(const StmtPtr& s) {
    burn();
    switch (s->kind) {
      case StmtKind::VarDecl:
      case StmtKind::Assign: {
        Value v = eval(s->expr);
        if (s->kind == StmtKind::VarDecl || locals_.count(s->name) > 0)
          locals_[s->name] = v;
        else {
          auto f = state_.fields.find(s->name);
          if (f == state_.fields.end()) throw InterpError("unbound target " + s->name);
          if (std::holds_alternative<bool>(f->second)) f->second = asBool(v);
          else f->second = asNum(v);
        }
        return;
      }
      case StmtKind::ExprStmt: eval(s->expr); return;
      case StmtKind::If:
        if (asBool(eval(s->expr))) execSeq(s->body);
        else execSeq(s->elseBody);
        return;
      case StmtKind::While:
        try {
          while (true) {
            burn();
            if (!asBool(eval(s->expr))) return;
            execSeq(s->body);
          }
        } catch (const BreakSignal&) {
          return;
        }
      case StmtKind::Break: throw BreakSignal{};
      case StmtKind::Return:
        throw ReturnSignal{s->expr ? std::optional<Value>(eval(s->expr))
                                   : std::nullopt};
      case StmtKind::ListPush:
        listField(s->name).push_back(asNum(eval(s->expr2)));
        return;
      case StmtKind::ListPop: {
        auto& xs = listField(s->name);
        if (!xs.empty()) xs.pop_back();
        return;
      }
      case StmtKind::ListSet: {
        auto& xs = listField(s->name);
        std::int64_t i = asNum(eval(s->expr));
        std::int64_t v = asNum(eval(s->expr2));
        if (i >= 0 && i < static_cast<std::int64_t>(xs.size()))
          xs[static_cast<std::size_t>(i)] = v;
        return;
      }
      case StmtKind::ListRemoveAt: {
        auto& xs = listField(s->name);
        std::int64_t i = asNum(eval(s->expr));
        if (i >= 0 && i < static_cast<std::int64_t>(xs.size()))
          xs.erase(xs.begin() + static_cast<std::ptrdiff_t>(i));
        return;
      }
      default:
        throw InterpError("construct not allowed in library code");
    }
  }

  const ClassDecl& cls_;
  ObjectState& state_;
  std::int64_t& fuel_;
  std::map<std::string, Value> locals_;
};

}  // namespace detail

inline std::optional<Value> exec_method(const ClassDecl& cls, ObjectState& state,
                                        const std::string& method,
                                        const std::vector<Value>& args,
                                        std::int64_t& fuel) {
  const MethodDecl* m = cls.findCallable(method);
  if (!m) throw InterpError("no method " + cls.name + "." + method);
  detail::MethodInterp mi(cls, state, fuel);
  return mi.run(*m, args);
}

// Snapshot of every declared observer; side-effect-freedom re-checked by
// comparing the full state before and after.
inline ObserverSnapshot eval_observers(const ClassDecl& cls,
                                       const ObjectState& state,
                                       std::int64_t& fuel) {
  ObserverSnapshot snap;
  for (const auto& obs : cls.observers) {
    ObjectState copy = state;
    detail::MethodInterp mi(cls, copy, fuel);
    auto v = mi.run(obs, {});
    if (!(copy == state)) throw PurityViolation(cls.name + "." + obs.name);
    if (!v) throw InterpError("observer returned no value: " + obs.name);
    snap[obs.name] = *v;
  }
  return snap;
}

// ---------------------------------------------------------------------------
// Client interpretation

// Hook: called after every library call (constructors included) with the
// event; returning false ends the execution (first failing site wins).
using CallHook = std::function<bool(const CallEvent&)>;

namespace detail {

struct StopSignal {};

class ClientInterp {
 public:
  ClientInterp(const TypedProgram& tp, InputBuffer& buf, const CallHook& hook,
               std::int64_t& fuel, Trace& trace)
      : tp_(tp), buf_(buf), hook_(hook), fuel_(fuel), trace_(trace) {}

  void runMain() {
    const RoutineDecl* m = tp_.program.findRoutine("main");
    if (!m) throw InterpError("client has no main");
    Frame f;
    execSeq(m->body, f);
  }

 private:
  struct Frame {
    std::map<std::string, Value> locals;
  };

  void burn() {
    if (--fuel_ < 0) throw FuelExhausted();
  }

  const ClassDecl& classOf(const std::string& name) const {
    const ClassDecl* c = tp_.program.findClass(name);
    if (!c) throw InterpError("no class " + name);
    return *c;
  }

  Value callLibrary(const DExprPtr& e, Frame& f) {
    // Normalized client code: every MethodCall/New is a call site.
    std::vector<Value> args;
    for (const auto& a : e->args) args.push_back(eval(a, f));
    CallEvent ev;
    ev.siteId = e->siteId;
    ev.methodName = e->callee;
    std::optional<Value> ret;
    if (e->kind == DExprKind::New) {
      const ClassDecl& cls = classOf(e->callee);
      ev.className = cls.name;
      ev.methodName = "init";
      ObjectState st = freshObject(cls);
      exec_method(cls, st, "init", args, fuel_);
      ev.post = eval_observers(cls, st, fuel_);
      pendingObject_ = std::move(st);
    } else {
      ObjectState& st = object(e->recv);
      const ClassDecl& cls = classOf(st.className);
      ev.className = cls.name;
      const MethodDecl* m = cls.findCallable(e->callee);
      if (!m) throw InterpError("no method " + cls.name + "." + e->callee);
      ev.pre = eval_observers(cls, st, fuel_);
      if (m->isObserver) {
        // Observers are pure: evaluate without mutating, post = pre state.
        ObjectState copy = st;
        detail::MethodInterp mi(cls, copy, fuel_);
        ret = mi.run(*m, args);
        if (!(copy == st)) throw PurityViolation(cls.name + "." + m->name);
      } else {
        ret = exec_method(cls, st, e->callee, args, fuel_);
      }
      ev.post = eval_observers(cls, st, fuel_);
    }
    ev.args = std::move(args);
    ev.ret = ret;
    trace_.calls.push_back(ev);
    if (hook_ && !hook_(ev)) {
      trace_.stoppedByHook = true;
      throw StopSignal{};
    }
    return ret ? *ret : Value(std::int64_t{0});
  }

  ObjectState& object(const std::string& name) {
    auto it = objects_.find(name);
    if (it == objects_.end()) throw InterpError("unbound object " + name);
    return it->second;
  }

  Value callRoutine(const DExprPtr& e, Frame& f) {
    const RoutineDecl* r = tp_.program.findRoutine(e->callee);
    if (!r) throw InterpError("no routine " + e->callee);
    Frame inner;
    for (std::size_t i = 0; i < r->params.size(); ++i)
      inner.locals[r->params[i].name] = eval(e->args[i], f);
    try {
      execSeq(r->body, inner);
    } catch (const ReturnSignal& rs) {
      return rs.value ? *rs.value : Value(std::int64_t{0});
    }
    return std::int64_t{0};
  }

  Value eval(const DExprPtr& e, Frame& f) {
    switch (e->kind) {
      case DExprKind::IntLit: return e->ival;
      case DExprKind::BoolLit: return e->bval;
      case DExprKind::Var: {
        auto it = f.locals.find(e->name);
        if (it == f.locals.end()) throw InterpError("unbound name " + e->name);
        return it->second;
      }
      case DExprKind::Unary: {
        Value a = eval(e->args[0], f);
        return e->op == ExprKind::Neg ? Value(-asNum(a)) : Value(!asBool(a));
      }
      case DExprKind::Binary: {
        Value a = eval(e->args[0], f);
        Value b = eval(e->args[1], f);
        switch (e->op) {
          case ExprKind::Add: return asNum(a) + asNum(b);
          case ExprKind::Sub: return asNum(a) - asNum(b);
          case ExprKind::Mul: return asNum(a) * asNum(b);
          case ExprKind::Lt: return asNum(a) < asNum(b);
          case ExprKind::Le: return asNum(a) <= asNum(b);
          case ExprKind::Gt: return asNum(a) > asNum(b);
          case ExprKind::Ge: return asNum(a) >= asNum(b);
          case ExprKind::Eq: return a == b;
          case ExprKind::Ne: return !(a == b);
          case ExprKind::And: return asBool(a) && asBool(b);
          case ExprKind::Or: return asBool(a) || asBool(b);
          case ExprKind::Implies: return !asBool(a) || asBool(b);
          case ExprKind::Iff: return asBool(a) == asBool(b);
          default: throw InterpError("bad binary operator");
        }
      }
      case DExprKind::Ite:
        return asBool(eval(e->args[0], f)) ? eval(e->args[1], f)
                                           : eval(e->args[2], f);
      case DExprKind::Nondet: {
        std::int64_t v = buf_.next();
        return e->bounded ? decodeBounded(v, e->lo, e->hi) : v;
      }
      case DExprKind::MethodCall:
      case DExprKind::New:
        return callLibrary(e, f);
      case DExprKind::RoutineCall:
        return callRoutine(e, f);
      default:
        throw InterpError("list accessor outside library code");
    }
  }

  void execSeq(const std::vector<StmtPtr>& body, Frame& f) {
    for (const auto& s : body) exec(s, f);
  }

  void exec(const StmtPtr& s, Frame& f) {
    burn();
    switch (s->kind) {
      case StmtKind::VarDecl:
        if (s->declSort == Sort::Object) {
          eval(s->expr, f);  // New: fills pendingObject_
          objects_[s->name] = std::move(*pendingObject_);
          pendingObject_.reset();
        } else {
          f.locals[s->name] = eval(s->expr, f);
        }
        return;
      case StmtKind::Assign:
        f.locals[s->name] = eval(s->expr, f);
        return;
      case StmtKind::ExprStmt: eval(s->expr, f); return;
      case StmtKind::If:
        if (asBool(eval(s->expr, f))) execSeq(s->body, f);
        else execSeq(s->elseBody, f);
        return;
      case StmtKind::While:
        try {
          while (true) {
            burn();
            if (!asBool(eval(s->expr, f))) return;
            execSeq(s->body, f);
          }
        } catch (const BreakSignal&) {
          return;
        }
      case StmtKind::Break: throw BreakSignal{};
      case StmtKind::Assume:
        // Concrete executions treat a failed assumption as a silent stop.
        if (!asBool(eval(s->expr, f))) throw StopSignal{};
        return;
      case StmtKind::Assert: {
        bool ok = asBool(eval(s->expr, f));
        trace_.asserts.push_back({s->loc, ok});
        if (!ok) {
          trace_.assertionFailed = true;
          trace_.failLoc = s->loc;
          throw StopSignal{};
        }
        return;
      }
      case StmtKind::Return:
        throw ReturnSignal{s->expr ? std::optional<Value>(eval(s->expr, f))
                                   : std::nullopt};
      default:
        throw InterpError("list mutation outside library code");
    }
  }

  const TypedProgram& tp_;
  InputBuffer& buf_;
  const CallHook& hook_;
  std::int64_t& fuel_;
  Trace& trace_;
  std::map<std::string, ObjectState> objects_;
  std::optional<ObjectState> pendingObject_;
};

}  // namespace detail

inline Trace exec_client(const TypedProgram& tp, InputBuffer buffer,
                         const CallHook& hook = nullptr,
                         std::int64_t fuel = 100000) {
  Trace trace;
  detail::ClientInterp ci(tp, buffer, hook, fuel, trace);
  try {
    ci.runMain();
  } catch (const FuelExhausted&) {
    trace.fuelExhausted = true;
  } catch (const detail::StopSignal&) {
    // assertion failure, failed assumption, or hook-requested stop
  } catch (const detail::ReturnSignal&) {
    // return from main
  }
  return trace;
}

}  // namespace vmtlc

#endif  // VMTLC_INTERP_HPP
