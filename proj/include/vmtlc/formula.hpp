#ifndef VMTLC_FORMULA__HPP__
#define VMTLC_FORMULA__HPP__

#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <cstring>
#include <variant>
#include <vector>

namespace vmtlc {

enum class Sort { Int, Bool, Object };

inline std::string sortName(Sort s) {
  switch (s) {
    case Sort::Int: return "Int";
    case Sort::Bool: return "Bool";
    default: return "Object";
  }
}

// Ground values. Integers carry mathematical-integer intent but are executed
// and enumerated within configured bounds.
using Value = std::variant<int64_t, bool>;

inline bool isInt(const Value& v) { return std::holds_alternative<int64_t>(v); }
inline int64_t asInt(const Value& v) { return std::get<int64_t>(v); }
inline bool asBool(const Value& v) { return std::get<bool>(v); }

// Numeric view: booleans flatten to 0/1 (used by the octagon attribute space).
inline int64_t asNum(const Value& v) {
  return isInt(v) ? asInt(v) : (asBool(v) ? 1 : 0);
}

inline std::string valueToString(const Value& v) {
  if (isInt(v)) return std::to_string(asInt(v));
  return asBool(v) ? "true" : "false";
}

enum class ExprKind {
  IntLit, BoolLit, Var,
  Neg, Not,
  Add, Sub, Mul,
  And, Or, Implies, Iff,
  Eq, Ne, Lt, Le, Gt, Ge,
  Ite
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;
using Formula = ExprPtr;

struct Expr {
  ExprKind kind;
  int64_t ival = 0;     // IntLit
  bool bval = false;    // BoolLit
  std::string name;     // Var
  std::vector<ExprPtr> args;
};

inline ExprPtr mkInt(int64_t v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::IntLit;
  e->ival = v;
  return e;
}
inline ExprPtr mkBool(bool v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::BoolLit;
  e->bval = v;
  return e;
}
inline ExprPtr mkTrue() { return mkBool(true); }
inline ExprPtr mkFalse() { return mkBool(false); }
inline ExprPtr mkVar(const std::string& n) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Var;
  e->name = n;
  return e;
}
inline ExprPtr mkUnary(ExprKind k, ExprPtr a) {
  // Canonical form: negation of a literal is a negative literal.
  if (k == ExprKind::Neg && a->kind == ExprKind::IntLit) return mkInt(-a->ival);
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = {std::move(a)};
  return e;
}
inline ExprPtr mkBin(ExprKind k, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = {std::move(a), std::move(b)};
  return e;
}
inline ExprPtr mkIte(ExprPtr c, ExprPtr t, ExprPtr f) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Ite;
  e->args = {std::move(c), std::move(t), std::move(f)};
  return e;
}
inline ExprPtr mkNot(ExprPtr a) {
  return mkUnary(ExprKind::Not, std::move(a));
}
inline ExprPtr mkAnd(ExprPtr a, ExprPtr b) { return mkBin(ExprKind::And, std::move(a), std::move(b)); }
inline ExprPtr mkOr(ExprPtr a, ExprPtr b) { return mkBin(ExprKind::Or, std::move(a), std::move(b)); }
inline ExprPtr mkImplies(ExprPtr a, ExprPtr b) { return mkBin(ExprKind::Implies, std::move(a), std::move(b)); }
inline ExprPtr mkEq(ExprPtr a, ExprPtr b) { return mkBin(ExprKind::Eq, std::move(a), std::move(b)); }
inline ExprPtr mkLe(ExprPtr a, ExprPtr b) { return mkBin(ExprKind::Le, std::move(a), std::move(b)); }
inline ExprPtr mkGe(ExprPtr a, ExprPtr b) { return mkBin(ExprKind::Ge, std::move(a), std::move(b)); }

// Folds a list into a right-nested conjunction; empty list is `true`.
inline ExprPtr mkAndList(const std::vector<ExprPtr>& xs) {
  if (xs.empty()) return mkTrue();
  ExprPtr acc = xs.back();
  for (size_t i = xs.size() - 1; i-- > 0;) acc = mkAnd(xs[i], acc);
  return acc;
}
inline ExprPtr mkOrList(const std::vector<ExprPtr>& xs) {
  if (xs.empty()) return mkFalse();
  ExprPtr acc = xs.back();
  for (size_t i = xs.size() - 1; i-- > 0;) acc = mkOr(xs[i], acc);
  return acc;
}

inline bool structEq(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::IntLit: return a->ival == b->ival;
    case ExprKind::BoolLit: return a->bval == b->bval;
    case ExprKind::Var: return a->name == b->name;
    default: break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); i++)
    if (!structEq(a->args[i], b->args[i])) return false;
  return true;
}

inline void collectFreeVars(const ExprPtr& e, std::vector<std::string>& out) {
  if (e->kind == ExprKind::Var) {
    for (auto& n : out)
      if (n == e->name) return;
    out.push_back(e->name);
    return;
  }
  for (auto& a : e->args) collectFreeVars(a, out);
}
inline std::vector<std::string> freeVars(const ExprPtr& e) {
  std::vector<std::string> out;
  collectFreeVars(e, out);
  return out;
}

// Capture-free substitution of variables by expressions.
inline ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& sub) {
  if (e->kind == ExprKind::Var) {
    auto it = sub.find(e->name);
    return it == sub.end() ? e : it->second;
  }
  if (e->args.empty()) return e;
  auto n = std::make_shared<Expr>(*e);
  for (auto& a : n->args) a = substitute(a, sub);
  return n;
}

struct UnboundVariable : std::runtime_error {
  std::string var;
  explicit UnboundVariable(const std::string& n)
      : std::runtime_error("unbound variable: " + n), var(n) {}
};

// A total map from variable names to ground values.
using Valuation = std::map<std::string, Value>;

inline Value evaluate(const ExprPtr& e, const Valuation& val) {
  switch (e->kind) {
    case ExprKind::IntLit: return e->ival;
    case ExprKind::BoolLit: return e->bval;
    case ExprKind::Var: {
      auto it = val.find(e->name);
      if (it == val.end()) throw UnboundVariable(e->name);
      return it->second;
    }
    case ExprKind::Neg: return -asInt(evaluate(e->args[0], val));
    case ExprKind::Not: return !asBool(evaluate(e->args[0], val));
    case ExprKind::Add:
      return asInt(evaluate(e->args[0], val)) + asInt(evaluate(e->args[1], val));
    case ExprKind::Sub:
      return asInt(evaluate(e->args[0], val)) - asInt(evaluate(e->args[1], val));
    case ExprKind::Mul:
      return asInt(evaluate(e->args[0], val)) * asInt(evaluate(e->args[1], val));
    case ExprKind::And:
      return asBool(evaluate(e->args[0], val)) && asBool(evaluate(e->args[1], val));
    case ExprKind::Or:
      return asBool(evaluate(e->args[0], val)) || asBool(evaluate(e->args[1], val));
    case ExprKind::Implies:
      return !asBool(evaluate(e->args[0], val)) || asBool(evaluate(e->args[1], val));
    case ExprKind::Iff:
      return asBool(evaluate(e->args[0], val)) == asBool(evaluate(e->args[1], val));
    case ExprKind::Eq: {
      Value a = evaluate(e->args[0], val), b = evaluate(e->args[1], val);
      if (isInt(a) != isInt(b)) throw std::runtime_error("sort mismatch in =");
      return isInt(a) ? (asInt(a) == asInt(b)) : (asBool(a) == asBool(b));
    }
    case ExprKind::Ne: {
      Value a = evaluate(e->args[0], val), b = evaluate(e->args[1], val);
      if (isInt(a) != isInt(b)) throw std::runtime_error("sort mismatch in !=");
      return isInt(a) ? (asInt(a) != asInt(b)) : (asBool(a) != asBool(b));
    }
    case ExprKind::Lt:
      return asInt(evaluate(e->args[0], val)) < asInt(evaluate(e->args[1], val));
    case ExprKind::Le:
      return asInt(evaluate(e->args[0], val)) <= asInt(evaluate(e->args[1], val));
    case ExprKind::Gt:
      return asInt(evaluate(e->args[0], val)) > asInt(evaluate(e->args[1], val));
    case ExprKind::Ge:
      return asInt(evaluate(e->args[0], val)) >= asInt(evaluate(e->args[1], val));
    case ExprKind::Ite:
      return asBool(evaluate(e->args[0], val)) ? evaluate(e->args[1], val)
                                               : evaluate(e->args[2], val);
  }
  throw std::runtime_error("unreachable expr kind");
}

inline bool evaluateBool(const ExprPtr& e, const Valuation& val) {
  return asBool(evaluate(e, val));
}

// ---------------------------------------------------------------------------
// Text syntax.
//
//   iff:   a <=> b            (lowest precedence)
//   imp:   a => b             (right associative)
//   or:    a || b
//   and:   a && b
//   cmp:   == != <= >= < >    (non associative)
//   add:   + -
//   mul:   *
//   unary: ! -
//   atom:  int, true, false, ident, ite(c,a,b), ( e )
// ---------------------------------------------------------------------------

struct FormulaSyntaxError : std::runtime_error {
  size_t pos;
  FormulaSyntaxError(size_t p, const std::string& msg)
      : std::runtime_error("formula syntax error at " + std::to_string(p) + ": " + msg),
        pos(p) {}
};

namespace detail {

struct FTok {
  std::string text;
  size_t pos;
};

inline std::vector<FTok> flex(const std::string& s) {
  std::vector<FTok> out;
  size_t i = 0;
  auto two = [&](char a, char b) {
    return i + 1 < s.size() && s[i] == a && s[i + 1] == b;
  };
  while (i < s.size()) {
    if (isspace((unsigned char)s[i])) { i++; continue; }
    size_t start = i;
    if (i + 2 < s.size() && s[i] == '<' && s[i + 1] == '=' && s[i + 2] == '>') {
      out.push_back({"<=>", start}); i += 3; continue;
    }
    if (two('&', '&') || two('|', '|') || two('=', '>') || two('=', '=') ||
        two('!', '=') || two('<', '=') || two('>', '=')) {
      out.push_back({s.substr(i, 2), start}); i += 2; continue;
    }
    if (strchr("+-*!<>()=,", s[i])) {
      out.push_back({s.substr(i, 1), start}); i++; continue;
    }
    if (isdigit((unsigned char)s[i])) {
      size_t j = i;
      while (j < s.size() && isdigit((unsigned char)s[j])) j++;
      out.push_back({s.substr(i, j - i), start}); i = j; continue;
    }
    if (isalpha((unsigned char)s[i]) || s[i] == '_') {
      size_t j = i;
      while (j < s.size() && (isalnum((unsigned char)s[j]) || s[j] == '_')) j++;
      out.push_back({s.substr(i, j - i), start}); i = j; continue;
    }
    throw FormulaSyntaxError(start, "unexpected character '" + std::string(1, s[i]) + "'");
  }
  out.push_back({"", s.size()});  // EOF
  return out;
}

class FormulaParser {
 public:
  explicit FormulaParser(const std::string& s) : toks_(flex(s)) {}

  ExprPtr parse() {
    ExprPtr e = iff();
    if (!peek().text.empty())
      throw FormulaSyntaxError(peek().pos, "trailing input '" + peek().text + "'");
    return e;
  }

 private:
  std::vector<FTok> toks_;
  size_t i_ = 0;

  const FTok& peek() const { return toks_[i_]; }
  FTok next() { return toks_[i_++]; }
  bool accept(const std::string& t) {
    if (peek().text == t) { i_++; return true; }
    return false;
  }
  void expect(const std::string& t) {
    if (!accept(t))
      throw FormulaSyntaxError(peek().pos, "expected '" + t + "'");
  }

  ExprPtr iff() {
    ExprPtr e = imp();
    while (accept("<=>")) e = mkBin(ExprKind::Iff, e, imp());
    return e;
  }
  ExprPtr imp() {
    ExprPtr e = disj();
    if (accept("=>")) return mkBin(ExprKind::Implies, e, imp());
    return e;
  }
  ExprPtr disj() {
    ExprPtr e = conj();
    while (accept("||")) e = mkBin(ExprKind::Or, e, conj());
    return e;
  }
  ExprPtr conj() {
    ExprPtr e = cmp();
    while (accept("&&")) e = mkBin(ExprKind::And, e, cmp());
    return e;
  }
  ExprPtr cmp() {
    ExprPtr e = add();
    static const std::pair<const char*, ExprKind> ops[] = {
        {"==", ExprKind::Eq}, {"!=", ExprKind::Ne}, {"<=", ExprKind::Le},
        {">=", ExprKind::Ge}, {"<", ExprKind::Lt},  {">", ExprKind::Gt}};
    for (auto& [t, k] : ops)
      if (accept(t)) return mkBin(k, e, add());
    return e;
  }
  ExprPtr add() {
    ExprPtr e = mul();
    for (;;) {
      if (accept("+")) e = mkBin(ExprKind::Add, e, mul());
      else if (accept("-")) e = mkBin(ExprKind::Sub, e, mul());
      else return e;
    }
  }
  ExprPtr mul() {
    ExprPtr e = unary();
    while (accept("*")) e = mkBin(ExprKind::Mul, e, unary());
    return e;
  }
  ExprPtr unary() {
    if (accept("!")) return mkUnary(ExprKind::Not, unary());
    if (accept("-")) {
      ExprPtr a = unary();
      // Fold so that negative literals roundtrip through the printer.
      if (a->kind == ExprKind::IntLit) return mkInt(-a->ival);
      return mkUnary(ExprKind::Neg, a);
    }
    return atom();
  }
  ExprPtr atom() {
    FTok t = next();
    if (t.text.empty()) throw FormulaSyntaxError(t.pos, "unexpected end of input");
    if (t.text == "(") {
      ExprPtr e = iff();
      expect(")");
      return e;
    }
    if (isdigit((unsigned char)t.text[0])) return mkInt(std::stoll(t.text));
    if (t.text == "true") return mkTrue();
    if (t.text == "false") return mkFalse();
    if (t.text == "ite") {
      expect("(");
      ExprPtr c = iff();
      expect(",");
      ExprPtr a = iff();
      expect(",");
      ExprPtr b = iff();
      expect(")");
      return mkIte(c, a, b);
    }
    if (isalpha((unsigned char)t.text[0]) || t.text[0] == '_') return mkVar(t.text);
    throw FormulaSyntaxError(t.pos, "unexpected token '" + t.text + "'");
  }
};

inline int precOf(ExprKind k) {
  switch (k) {
    case ExprKind::Iff: return 1;
    case ExprKind::Implies: return 2;
    case ExprKind::Or: return 3;
    case ExprKind::And: return 4;
    case ExprKind::Eq: case ExprKind::Ne: case ExprKind::Lt:
    case ExprKind::Le: case ExprKind::Gt: case ExprKind::Ge: return 5;
    case ExprKind::Add: case ExprKind::Sub: return 6;
    case ExprKind::Mul: return 7;
    case ExprKind::Neg: case ExprKind::Not: return 8;
    default: return 9;
  }
}

inline const char* opToken(ExprKind k) {
  switch (k) {
    case ExprKind::Iff: return "<=>";
    case ExprKind::Implies: return "=>";
    case ExprKind::Or: return "||";
    case ExprKind::And: return "&&";
    case ExprKind::Eq: return "==";
    case ExprKind::Ne: return "!=";
    case ExprKind::Lt: return "<";
    case ExprKind::Le: return "<=";
    case ExprKind::Gt: return ">";
    case ExprKind::Ge: return ">=";
    case ExprKind::Add: return "+";
    case ExprKind::Sub: return "-";
    case ExprKind::Mul: return "*";
    default: return "?";
  }
}

inline void printExpr(std::ostream& os, const ExprPtr& e, int parentPrec) {
  int p = precOf(e->kind);
  switch (e->kind) {
    case ExprKind::IntLit: os << e->ival; return;
    case ExprKind::BoolLit: os << (e->bval ? "true" : "false"); return;
    case ExprKind::Var: os << e->name; return;
    case ExprKind::Not:
      os << "!";
      printExpr(os, e->args[0], p);
      return;
    case ExprKind::Neg:
      os << "-";
      printExpr(os, e->args[0], p);
      return;
    case ExprKind::Ite:
      os << "ite(";
      printExpr(os, e->args[0], 0);
      os << ", ";
      printExpr(os, e->args[1], 0);
      os << ", ";
      printExpr(os, e->args[2], 0);
      os << ")";
      return;
    default: break;
  }
  bool paren = p <= parentPrec;
  if (paren) os << "(";
  // Only left-assoc chains may drop parens on an equal-precedence left child.
  bool leftChain = e->kind == ExprKind::And || e->kind == ExprKind::Or ||
                   e->kind == ExprKind::Add || e->kind == ExprKind::Sub ||
                   e->kind == ExprKind::Mul;
  int lp = leftChain ? p - 1 : p;
  printExpr(os, e->args[0], lp);
  os << " " << opToken(e->kind) << " ";
  printExpr(os, e->args[1], p);
  if (paren) os << ")";
}

}  // namespace detail

inline Formula parseFormula(const std::string& text) {
  return detail::FormulaParser(text).parse();
}

inline std::string printFormula(const Formula& f) {
  std::ostringstream os;
  detail::printExpr(os, f, 0);
  return os.str();
}

}  // namespace vmtlc

#endif
