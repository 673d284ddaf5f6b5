#ifndef VMTLC_MUTATE_HPP
#define VMTLC_MUTATE_HPP

// Client mutation templates: hide an unsafe operation behind a rare path
// guarded by a consecutive-equal-input counter. Template 1 places the rare
// branch inside the nondeterministic loop, template 2 after it.

#include <stdexcept>
#include <string>
#include <vector>

#include "vmtlc/ast.hpp"

namespace vmtlc {

struct NoLoop : std::runtime_error {
  NoLoop() : std::runtime_error("client has no nondeterministic loop") {}
};

struct AlreadyMutated : std::runtime_error {
  AlreadyMutated() : std::runtime_error("client is already mutated") {}
};

namespace detail {

constexpr std::int64_t kMutConst = 7;     // input value the counter watches
constexpr std::int64_t kMutThreshold = 100;
constexpr std::int64_t kRareArg = -1000;  // injected unsafe argument
inline const char* kCounterName = "mcount";

inline bool isDirectNondet(const StmtPtr& s) {
  return (s->kind == StmtKind::VarDecl || s->kind == StmtKind::Assign) &&
         s->expr && s->expr->kind == DExprKind::Nondet;
}

inline bool containsName(const std::vector<StmtPtr>& body,
                         const std::string& name) {
  for (const auto& s : body) {
    if (s->name == name) return true;
    if (containsName(s->body, name) || containsName(s->elseBody, name))
      return true;
  }
  return false;
}

// First statement-level library call inside a block (recursively); the rare
// operation is this call with every integer argument replaced by kRareArg.
inline StmtPtr findCallStmt(const std::vector<StmtPtr>& body) {
  for (const auto& s : body) {
    if (s->kind == StmtKind::ExprStmt && s->expr &&
        s->expr->kind == DExprKind::MethodCall)
      return s;
    if (auto r = findCallStmt(s->body)) return r;
    if (auto r = findCallStmt(s->elseBody)) return r;
  }
  return nullptr;
}

inline StmtPtr rareOperation(const StmtPtr& callStmt) {
  StmtPtr rare = cloneStmt(callStmt);
  for (auto& a : rare->expr->args)
    if (a->sort == Sort::Int) a = mkDInt(kRareArg, a->loc);
  return rare;
}

inline StmtPtr mkAssignInt(const std::string& name, DExprPtr rhs) {
  auto s = std::make_shared<Stmt>();
  s->kind = StmtKind::Assign;
  s->name = name;
  s->expr = std::move(rhs);
  return s;
}

inline StmtPtr mkIfStmt(DExprPtr cond, std::vector<StmtPtr> then,
                        std::vector<StmtPtr> els) {
  auto s = std::make_shared<Stmt>();
  s->kind = StmtKind::If;
  s->expr = std::move(cond);
  s->body = std::move(then);
  s->elseBody = std::move(els);
  return s;
}

// count tracking: if (v == Const) { count = count + 1 } else { count = 0 }
inline StmtPtr counterUpdate(const std::string& v) {
  return mkIfStmt(
      mkDBin(ExprKind::Eq, mkDVar(v), mkDInt(kMutConst)),
      {mkAssignInt(kCounterName,
                   mkDBin(ExprKind::Add, mkDVar(kCounterName), mkDInt(1)))},
      {mkAssignInt(kCounterName, mkDInt(0))});
}

inline DExprPtr counterAtThreshold() {
  return mkDBin(ExprKind::Eq, mkDVar(kCounterName), mkDInt(kMutThreshold));
}

}  // namespace detail

inline Program apply_mutation(const Program& input, int templateId) {
  if (templateId != 1 && templateId != 2)
    throw std::invalid_argument("mutation template must be 1 or 2");
  Program p = cloneProgram(input);
  RoutineDecl* main = nullptr;
  for (auto& r : p.client.routines)
    if (r.name == "main") main = &r;
  if (!main) throw NoLoop();
  if (detail::containsName(main->body, detail::kCounterName))
    throw AlreadyMutated();

  // Locate the first loop that draws a nondeterministic input.
  std::size_t loopPos = 0;
  StmtPtr loop;
  std::size_t nondetPos = 0;
  for (std::size_t i = 0; i < main->body.size() && !loop; ++i) {
    const StmtPtr& s = main->body[i];
    if (s->kind != StmtKind::While) continue;
    for (std::size_t k = 0; k < s->body.size(); ++k)
      if (detail::isDirectNondet(s->body[k])) {
        loop = s;
        loopPos = i;
        nondetPos = k;
        break;
      }
  }
  if (!loop) throw NoLoop();
  const std::string inputVar = loop->body[nondetPos]->name;

  StmtPtr callStmt = detail::findCallStmt(loop->body);
  if (!callStmt) throw NoLoop();
  StmtPtr rare = detail::rareOperation(callStmt);

  // var mcount: int = 0; before the loop.
  auto decl = std::make_shared<Stmt>();
  decl->kind = StmtKind::VarDecl;
  decl->name = detail::kCounterName;
  decl->declSort = Sort::Int;
  decl->expr = mkDInt(0);
  main->body.insert(main->body.begin() + (std::ptrdiff_t)loopPos, decl);
  ++loopPos;

  if (templateId == 1) {
    // Inside the loop: counter update, then rare-vs-normal branch wrapping
    // the rest of the original body.
    std::vector<StmtPtr> rest(loop->body.begin() + (std::ptrdiff_t)nondetPos + 1,
                              loop->body.end());
    loop->body.resize(nondetPos + 1);
    loop->body.push_back(detail::counterUpdate(inputVar));
    loop->body.push_back(
        detail::mkIfStmt(detail::counterAtThreshold(), {rare}, rest));
  } else {
    // Counter maintained inside the loop; rare branch right after it.
    loop->body.insert(loop->body.begin() + (std::ptrdiff_t)nondetPos + 1,
                      detail::counterUpdate(inputVar));
    main->body.insert(main->body.begin() + (std::ptrdiff_t)loopPos + 1,
                      detail::mkIfStmt(detail::counterAtThreshold(), {rare}, {}));
  }
  return p;
}

}  // namespace vmtlc

#endif  // VMTLC_MUTATE_HPP
