#ifndef VMTLC_PARSER__HPP__
#define VMTLC_PARSER__HPP__

#include <cctype>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "vmtlc/ast.hpp"

namespace vmtlc {

struct SyntaxError : std::runtime_error {
  SrcLoc loc;
  std::string expected;
  SyntaxError(SrcLoc l, const std::string& exp, const std::string& got)
      : std::runtime_error("syntax error at " + l.str() + ": expected " + exp +
                           ", got '" + got + "'"),
        loc(l), expected(exp) {}
};

namespace detail {

enum class TokKind { Ident, Int, Punct, Eof };

struct Token {
  TokKind kind;
  std::string text;
  SrcLoc loc;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& cur() const { return cur_; }

  void advance() {
    skipWs();
    cur_.loc = {line_, col_};
    if (i_ >= src_.size()) {
      cur_ = {TokKind::Eof, "", cur_.loc};
      return;
    }
    char c = src_[i_];
    if (isalpha((unsigned char)c) || c == '_') {
      size_t j = i_;
      while (j < src_.size() && (isalnum((unsigned char)src_[j]) || src_[j] == '_')) j++;
      cur_ = {TokKind::Ident, src_.substr(i_, j - i_), cur_.loc};
      bump(j - i_);
      return;
    }
    if (isdigit((unsigned char)c)) {
      size_t j = i_;
      while (j < src_.size() && isdigit((unsigned char)src_[j])) j++;
      cur_ = {TokKind::Int, src_.substr(i_, j - i_), cur_.loc};
      bump(j - i_);
      return;
    }
    static const char* twochar[] = {"&&", "||", "=>", "==", "!=", "<=", ">=", nullptr};
    if (i_ + 2 < src_.size() && !src_.compare(i_, 3, "<=>")) {
      cur_ = {TokKind::Punct, "<=>", cur_.loc};
      bump(3);
      return;
    }
    for (int k = 0; twochar[k]; k++) {
      if (i_ + 1 < src_.size() && !src_.compare(i_, 2, twochar[k])) {
        cur_ = {TokKind::Punct, twochar[k], cur_.loc};
        bump(2);
        return;
      }
    }
    if (strchr("+-*!<>()=,;:.{}", c)) {
      cur_ = {TokKind::Punct, std::string(1, c), cur_.loc};
      bump(1);
      return;
    }
    throw SyntaxError(cur_.loc, "a token", std::string(1, c));
  }

 private:
  void skipWs() {
    for (;;) {
      while (i_ < src_.size() && isspace((unsigned char)src_[i_])) bump(1);
      if (i_ + 1 < src_.size() && src_[i_] == '/' && src_[i_ + 1] == '/') {
        while (i_ < src_.size() && src_[i_] != '\n') bump(1);
        continue;
      }
      break;
    }
  }
  void bump(size_t n) {
    for (size_t k = 0; k < n && i_ < src_.size(); k++, i_++) {
      if (src_[i_] == '\n') { line_++; col_ = 1; }
      else col_++;
    }
  }

  std::string src_;
  size_t i_ = 0;
  int line_ = 1, col_ = 1;
  Token cur_;
};

class ProgramParser {
 public:
  explicit ProgramParser(const std::string& src) : lex_(src) {}

  Program parse() {
    Program p;
    while (at("class")) p.classes.push_back(parseClass());
    expect("client");
    expect("{");
    while (!at("}")) p.client.routines.push_back(parseRoutine());
    expect("}");
    if (!atEof()) throw SyntaxError(loc(), "end of file", cur().text);
    return p;
  }

 private:
  Lexer lex_;

  const Token& cur() const { return lex_.cur(); }
  SrcLoc loc() const { return cur().loc; }
  bool atEof() const { return cur().kind == TokKind::Eof; }
  bool at(const std::string& t) const { return cur().text == t && !atEof(); }
  bool accept(const std::string& t) {
    if (at(t)) { lex_.advance(); return true; }
    return false;
  }
  void expect(const std::string& t) {
    if (!accept(t)) throw SyntaxError(loc(), "'" + t + "'", atEof() ? "<eof>" : cur().text);
  }
  std::string expectIdent() {
    if (cur().kind != TokKind::Ident)
      throw SyntaxError(loc(), "identifier", atEof() ? "<eof>" : cur().text);
    std::string s = cur().text;
    lex_.advance();
    return s;
  }
  int64_t expectInt() {
    bool neg = accept("-");
    if (cur().kind != TokKind::Int)
      throw SyntaxError(loc(), "integer", atEof() ? "<eof>" : cur().text);
    int64_t v = std::stoll(cur().text);
    lex_.advance();
    return neg ? -v : v;
  }

  Sort parseValueSort() {
    if (accept("int")) return Sort::Int;
    if (accept("bool")) return Sort::Bool;
    throw SyntaxError(loc(), "'int' or 'bool'", cur().text);
  }

  std::vector<Param> parseParams() {
    std::vector<Param> ps;
    expect("(");
    if (!accept(")")) {
      do {
        Param p;
        p.loc = loc();
        p.name = expectIdent();
        expect(":");
        p.sort = parseValueSort();
        ps.push_back(p);
      } while (accept(","));
      expect(")");
    }
    return ps;
  }

  ClassDecl parseClass() {
    ClassDecl c;
    c.loc = loc();
    expect("class");
    c.name = expectIdent();
    expect("{");
    bool sawCtor = false;
    while (!accept("}")) {
      SrcLoc mloc = loc();
      if (accept("field")) {
        FieldDecl f;
        f.loc = mloc;
        f.name = expectIdent();
        expect(":");
        if (accept("int")) f.type = FieldType::Int;
        else if (accept("bool")) f.type = FieldType::Bool;
        else if (accept("list")) f.type = FieldType::List;
        else throw SyntaxError(loc(), "'int', 'bool' or 'list'", cur().text);
        expect(";");
        c.fields.push_back(f);
      } else if (accept("init")) {
        if (sawCtor) throw SyntaxError(mloc, "a single constructor", "init");
        sawCtor = true;
        c.ctor.loc = mloc;
        c.ctor.name = "init";
        c.ctor.params = parseParams();
        c.ctor.body = parseBlock();
      } else if (accept("method") || at("observer")) {
        bool obs = accept("observer");
        MethodDecl m;
        m.loc = mloc;
        m.isObserver = obs;
        m.name = expectIdent();
        m.params = parseParams();
        if (accept(":")) m.ret = parseValueSort();
        if (obs && !m.ret)
          throw SyntaxError(mloc, "a return sort on observer", m.name);
        m.body = parseBlock();
        (obs ? c.observers : c.methods).push_back(m);
      } else {
        throw SyntaxError(mloc, "'field', 'init', 'method' or 'observer'", cur().text);
      }
    }
    if (!sawCtor) throw SyntaxError(c.loc, "an 'init' constructor in class " + c.name, "}");
    return c;
  }

  RoutineDecl parseRoutine() {
    RoutineDecl r;
    r.loc = loc();
    r.name = expectIdent();
    r.params = parseParams();
    if (accept(":")) r.ret = parseValueSort();
    r.body = parseBlock();
    return r;
  }

  std::vector<StmtPtr> parseBlock() {
    expect("{");
    std::vector<StmtPtr> out;
    while (!accept("}")) out.push_back(parseStmt());
    return out;
  }

  StmtPtr parseStmt() {
    auto s = std::make_shared<Stmt>();
    s->loc = loc();
    if (accept("var")) {
      s->kind = StmtKind::VarDecl;
      s->name = expectIdent();
      expect(":");
      if (at("int") || at("bool")) {
        s->declSort = parseValueSort();
      } else {
        s->declSort = Sort::Object;
        s->declClass = expectIdent();
      }
      expect("=");
      s->expr = parseExpr();
      expect(";");
      return s;
    }
    if (accept("if")) {
      s->kind = StmtKind::If;
      expect("(");
      s->expr = parseExpr();
      expect(")");
      s->body = parseBlock();
      if (accept("else")) s->elseBody = parseBlock();
      return s;
    }
    if (accept("while")) {
      s->kind = StmtKind::While;
      expect("(");
      s->expr = parseExpr();
      expect(")");
      s->body = parseBlock();
      return s;
    }
    if (accept("break")) { s->kind = StmtKind::Break; expect(";"); return s; }
    if (accept("assert")) {
      s->kind = StmtKind::Assert;
      expect("(");
      s->expr = parseExpr();
      expect(")");
      expect(";");
      return s;
    }
    if (accept("assume")) {
      s->kind = StmtKind::Assume;
      expect("(");
      s->expr = parseExpr();
      expect(")");
      expect(";");
      return s;
    }
    if (accept("return")) {
      s->kind = StmtKind::Return;
      if (!at(";")) s->expr = parseExpr();
      expect(";");
      return s;
    }
    if (at("push") || at("popback") || at("setat") || at("removeat")) {
      std::string op = expectIdent();
      expect("(");
      s->name = expectIdent();
      if (op == "push") {
        s->kind = StmtKind::ListPush;
        expect(",");
        s->expr2 = parseExpr();
      } else if (op == "popback") {
        s->kind = StmtKind::ListPop;
      } else if (op == "setat") {
        s->kind = StmtKind::ListSet;
        expect(",");
        s->expr = parseExpr();
        expect(",");
        s->expr2 = parseExpr();
      } else {
        s->kind = StmtKind::ListRemoveAt;
        expect(",");
        s->expr = parseExpr();
      }
      expect(")");
      expect(";");
      return s;
    }
    // Assignment or expression statement.
    DExprPtr e = parseExpr();
    if (accept("=")) {
      if (e->kind != DExprKind::Var)
        throw SyntaxError(s->loc, "an assignable variable", "expression");
      s->kind = StmtKind::Assign;
      s->name = e->name;
      s->expr = parseExpr();
      expect(";");
      return s;
    }
    s->kind = StmtKind::ExprStmt;
    s->expr = e;
    expect(";");
    return s;
  }

  // Expression grammar mirrors the formula syntax (see formula.hpp) with the
  // DSL-only atoms added.
  DExprPtr parseExpr() { return parseIff(); }

  DExprPtr parseIff() {
    DExprPtr e = parseImp();
    while (accept("<=>")) e = mkDBin(ExprKind::Iff, e, parseImp());
    return e;
  }
  DExprPtr parseImp() {
    DExprPtr e = parseOr();
    if (accept("=>")) return mkDBin(ExprKind::Implies, e, parseImp());
    return e;
  }
  DExprPtr parseOr() {
    DExprPtr e = parseAnd();
    while (accept("||")) e = mkDBin(ExprKind::Or, e, parseAnd());
    return e;
  }
  DExprPtr parseAnd() {
    DExprPtr e = parseCmp();
    while (accept("&&")) e = mkDBin(ExprKind::And, e, parseCmp());
    return e;
  }
  DExprPtr parseCmp() {
    DExprPtr e = parseAdd();
    static const std::pair<const char*, ExprKind> ops[] = {
        {"==", ExprKind::Eq}, {"!=", ExprKind::Ne}, {"<=", ExprKind::Le},
        {">=", ExprKind::Ge}, {"<", ExprKind::Lt},  {">", ExprKind::Gt}};
    for (auto& [t, k] : ops)
      if (accept(t)) return mkDBin(k, e, parseAdd());
    return e;
  }
  DExprPtr parseAdd() {
    DExprPtr e = parseMul();
    for (;;) {
      if (accept("+")) e = mkDBin(ExprKind::Add, e, parseMul());
      else if (accept("-")) e = mkDBin(ExprKind::Sub, e, parseMul());
      else return e;
    }
  }
  DExprPtr parseMul() {
    DExprPtr e = parseUnary();
    while (accept("*")) e = mkDBin(ExprKind::Mul, e, parseUnary());
    return e;
  }
  DExprPtr parseUnary() {
    SrcLoc l = loc();
    if (accept("!")) { auto e = mkDUnary(ExprKind::Not, parseUnary()); e->loc = l; return e; }
    if (accept("-")) {
      DExprPtr a = parseUnary();
      if (a->kind == DExprKind::IntLit) return mkDInt(-a->ival, l);
      auto e = mkDUnary(ExprKind::Neg, a);
      e->loc = l;
      return e;
    }
    return parseAtom();
  }

  std::vector<DExprPtr> parseArgs() {
    std::vector<DExprPtr> args;
    expect("(");
    if (!accept(")")) {
      do args.push_back(parseExpr());
      while (accept(","));
      expect(")");
    }
    return args;
  }

  DExprPtr parseAtom() {
    SrcLoc l = loc();
    if (accept("(")) {
      DExprPtr e = parseExpr();
      expect(")");
      return e;
    }
    if (cur().kind == TokKind::Int) {
      int64_t v = std::stoll(cur().text);
      lex_.advance();
      return mkDInt(v, l);
    }
    if (accept("true")) return mkDBool(true, l);
    if (accept("false")) return mkDBool(false, l);
    if (accept("ite")) {
      expect("(");
      DExprPtr c = parseExpr();
      expect(",");
      DExprPtr a = parseExpr();
      expect(",");
      DExprPtr b = parseExpr();
      expect(")");
      auto e = std::make_shared<DExpr>();
      e->kind = DExprKind::Ite;
      e->args = {c, a, b};
      e->loc = l;
      return e;
    }
    if (accept("nondet")) {
      auto e = std::make_shared<DExpr>();
      e->kind = DExprKind::Nondet;
      e->loc = l;
      expect("(");
      if (!accept(")")) {
        e->bounded = true;
        e->lo = expectInt();
        expect(",");
        e->hi = expectInt();
        expect(")");
      }
      return e;
    }
    if (accept("new")) {
      auto e = std::make_shared<DExpr>();
      e->kind = DExprKind::New;
      e->loc = l;
      e->callee = expectIdent();
      e->args = parseArgs();
      return e;
    }
    if (accept("len")) {
      auto e = std::make_shared<DExpr>();
      e->kind = DExprKind::ListLen;
      e->loc = l;
      expect("(");
      e->name = expectIdent();
      expect(")");
      return e;
    }
    if (accept("getat")) {
      auto e = std::make_shared<DExpr>();
      e->kind = DExprKind::ListGet;
      e->loc = l;
      expect("(");
      e->name = expectIdent();
      expect(",");
      e->args.push_back(parseExpr());
      expect(")");
      return e;
    }
    if (cur().kind == TokKind::Ident) {
      std::string id = expectIdent();
      if (accept(".")) {
        auto e = std::make_shared<DExpr>();
        e->kind = DExprKind::MethodCall;
        e->loc = l;
        e->recv = id;
        e->callee = expectIdent();
        e->args = parseArgs();
        return e;
      }
      if (at("(")) {
        auto e = std::make_shared<DExpr>();
        e->kind = DExprKind::RoutineCall;
        e->loc = l;
        e->callee = id;
        e->args = parseArgs();
        return e;
      }
      return mkDVar(id, l);
    }
    throw SyntaxError(l, "an expression", atEof() ? "<eof>" : cur().text);
  }
};

}  // namespace detail

inline Program parseProgram(const std::string& source) {
  return detail::ProgramParser(source).parse();
}

// ---------------------------------------------------------------------------
// Pretty printer. parseProgram(prettyPrint(p)) is structurally identical to p.
// ---------------------------------------------------------------------------

namespace detail {

inline void printDExpr(std::ostream& os, const DExprPtr& e, int parentPrec);

inline void printDArgs(std::ostream& os, const std::vector<DExprPtr>& args) {
  os << "(";
  for (size_t i = 0; i < args.size(); i++) {
    if (i) os << ", ";
    printDExpr(os, args[i], 0);
  }
  os << ")";
}

inline void printDExpr(std::ostream& os, const DExprPtr& e, int parentPrec) {
  switch (e->kind) {
    case DExprKind::IntLit: os << e->ival; return;
    case DExprKind::BoolLit: os << (e->bval ? "true" : "false"); return;
    case DExprKind::Var: os << e->name; return;
    case DExprKind::Nondet:
      os << "nondet(";
      if (e->bounded) os << e->lo << ", " << e->hi;
      os << ")";
      return;
    case DExprKind::MethodCall:
      os << e->recv << "." << e->callee;
      printDArgs(os, e->args);
      return;
    case DExprKind::New:
      os << "new " << e->callee;
      printDArgs(os, e->args);
      return;
    case DExprKind::RoutineCall:
      os << e->callee;
      printDArgs(os, e->args);
      return;
    case DExprKind::ListLen: os << "len(" << e->name << ")"; return;
    case DExprKind::ListGet:
      os << "getat(" << e->name << ", ";
      printDExpr(os, e->args[0], 0);
      os << ")";
      return;
    case DExprKind::Ite:
      os << "ite(";
      printDExpr(os, e->args[0], 0);
      os << ", ";
      printDExpr(os, e->args[1], 0);
      os << ", ";
      printDExpr(os, e->args[2], 0);
      os << ")";
      return;
    case DExprKind::Unary: {
      int p = precOf(e->op);
      os << (e->op == ExprKind::Not ? "!" : "-");
      printDExpr(os, e->args[0], p);
      return;
    }
    case DExprKind::Binary: {
      int p = precOf(e->op);
      bool paren = p <= parentPrec;
      if (paren) os << "(";
      bool leftChain = e->op == ExprKind::And || e->op == ExprKind::Or ||
                       e->op == ExprKind::Add || e->op == ExprKind::Sub ||
                       e->op == ExprKind::Mul;
      printDExpr(os, e->args[0], leftChain ? p - 1 : p);
      os << " " << opToken(e->op) << " ";
      printDExpr(os, e->args[1], p);
      if (paren) os << ")";
      return;
    }
  }
}

inline void indent(std::ostream& os, int n) {
  for (int i = 0; i < n; i++) os << "  ";
}

inline void printStmts(std::ostream& os, const std::vector<StmtPtr>& body, int ind);

inline void printStmt(std::ostream& os, const StmtPtr& s, int ind) {
  indent(os, ind);
  switch (s->kind) {
    case StmtKind::VarDecl:
      os << "var " << s->name << ": "
         << (s->declSort == Sort::Object ? s->declClass
                                         : (s->declSort == Sort::Int ? "int" : "bool"))
         << " = ";
      printDExpr(os, s->expr, 0);
      os << ";\n";
      return;
    case StmtKind::Assign:
      os << s->name << " = ";
      printDExpr(os, s->expr, 0);
      os << ";\n";
      return;
    case StmtKind::ExprStmt:
      printDExpr(os, s->expr, 0);
      os << ";\n";
      return;
    case StmtKind::If:
      os << "if (";
      printDExpr(os, s->expr, 0);
      os << ") {\n";
      printStmts(os, s->body, ind + 1);
      indent(os, ind);
      os << "}";
      if (!s->elseBody.empty()) {
        os << " else {\n";
        printStmts(os, s->elseBody, ind + 1);
        indent(os, ind);
        os << "}";
      }
      os << "\n";
      return;
    case StmtKind::While:
      os << "while (";
      printDExpr(os, s->expr, 0);
      os << ") {\n";
      printStmts(os, s->body, ind + 1);
      indent(os, ind);
      os << "}\n";
      return;
    case StmtKind::Break: os << "break;\n"; return;
    case StmtKind::Assert:
      os << "assert(";
      printDExpr(os, s->expr, 0);
      os << ");\n";
      return;
    case StmtKind::Assume:
      os << "assume(";
      printDExpr(os, s->expr, 0);
      os << ");\n";
      return;
    case StmtKind::Return:
      os << "return";
      if (s->expr) {
        os << " ";
        printDExpr(os, s->expr, 0);
      }
      os << ";\n";
      return;
    case StmtKind::ListPush:
      os << "push(" << s->name << ", ";
      printDExpr(os, s->expr2, 0);
      os << ");\n";
      return;
    case StmtKind::ListPop: os << "popback(" << s->name << ");\n"; return;
    case StmtKind::ListSet:
      os << "setat(" << s->name << ", ";
      printDExpr(os, s->expr, 0);
      os << ", ";
      printDExpr(os, s->expr2, 0);
      os << ");\n";
      return;
    case StmtKind::ListRemoveAt:
      os << "removeat(" << s->name << ", ";
      printDExpr(os, s->expr, 0);
      os << ");\n";
      return;
  }
}

inline void printStmts(std::ostream& os, const std::vector<StmtPtr>& body, int ind) {
  for (auto& s : body) printStmt(os, s, ind);
}

inline void printParams(std::ostream& os, const std::vector<Param>& ps) {
  os << "(";
  for (size_t i = 0; i < ps.size(); i++) {
    if (i) os << ", ";
    os << ps[i].name << ": " << (ps[i].sort == Sort::Int ? "int" : "bool");
  }
  os << ")";
}

inline void printMethod(std::ostream& os, const MethodDecl& m, int ind) {
  indent(os, ind);
  if (m.name == "init" && !m.isObserver) os << "init";
  else os << (m.isObserver ? "observer " : "method ") << m.name;
  printParams(os, m.params);
  if (m.ret) os << ": " << (*m.ret == Sort::Int ? "int" : "bool");
  os << " {\n";
  printStmts(os, m.body, ind + 1);
  indent(os, ind);
  os << "}\n";
}

}  // namespace detail

inline std::string prettyPrint(const Program& p) {
  std::ostringstream os;
  for (auto& c : p.classes) {
    os << "class " << c.name << " {\n";
    for (auto& f : c.fields) {
      detail::indent(os, 1);
      os << "field " << f.name << ": "
         << (f.type == FieldType::Int ? "int"
                                      : (f.type == FieldType::Bool ? "bool" : "list"))
         << ";\n";
    }
    detail::printMethod(os, c.ctor, 1);
    for (auto& m : c.methods) detail::printMethod(os, m, 1);
    for (auto& m : c.observers) detail::printMethod(os, m, 1);
    os << "}\n\n";
  }
  os << "client {\n";
  for (auto& r : p.client.routines) {
    detail::indent(os, 1);
    os << r.name;
    detail::printParams(os, r.params);
    if (r.ret) os << ": " << (*r.ret == Sort::Int ? "int" : "bool");
    os << " {\n";
    detail::printStmts(os, r.body, 2);
    detail::indent(os, 1);
    os << "}\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace vmtlc

#endif
