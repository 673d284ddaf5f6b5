#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "vmtlc/interp.hpp"
#include "vmtlc/parser.hpp"
#include "vmtlc/typecheck.hpp"

#include "helpers.hpp"

using namespace vmtlc;
using vmtlc::testing::benchPath;
using vmtlc::testing::readFile;

namespace {

TypedProgram loadSetSum() {
  return typecheck(parseProgram(readFile(benchPath("set-sum"))));
}

}  // namespace

TEST_CASE("input buffer pads with zeros past the end") {
  InputBuffer buf{{5, -3}};
  CHECK(buf.next() == 5);
  CHECK(buf.next() == -3);
  CHECK(buf.next() == 0);
  CHECK(buf.next() == 0);
}

TEST_CASE("bounded nondet decoding is total and in range") {
  CHECK(decodeBounded(0, 2, 5) == 2);
  CHECK(decodeBounded(7, 2, 5) == 5);
  CHECK(decodeBounded(-1, 2, 5) == 5);
  CHECK(decodeBounded(-9, 0, 3) == 3);
  for (std::int64_t v = -50; v <= 50; ++v) {
    std::int64_t d = decodeBounded(v, -2, 2);
    CHECK(d >= -2);
    CHECK(d <= 2);
    CHECK(d == decodeBounded(v, -2, 2));  // deterministic
  }
}

TEST_CASE("exec_method drives the Set library") {
  auto tp = loadSetSum();
  const ClassDecl& cls = *tp.program.findClass("Set");
  std::int64_t fuel = 10000;
  ObjectState st = freshObject(cls);
  exec_method(cls, st, "init", {}, fuel);

  SECTION("empty on a fresh object is true and leaves state unchanged") {
    ObjectState before = st;
    auto r = exec_method(cls, st, "empty", {}, fuel);
    REQUIRE(r.has_value());
    CHECK(asBool(*r));
    CHECK(st == before);
  }

  SECTION("insert(5) makes min=5 and empty=false") {
    exec_method(cls, st, "insert", {std::int64_t{5}}, fuel);
    auto snap = eval_observers(cls, st, fuel);
    CHECK(asBool(snap.at("empty")) == false);
    CHECK(asNum(snap.at("size")) == 1);
    CHECK(asNum(snap.at("min")) == 5);
  }

  SECTION("remove returns the last pushed element") {
    exec_method(cls, st, "insert", {std::int64_t{2}}, fuel);
    exec_method(cls, st, "insert", {std::int64_t{9}}, fuel);
    auto r = exec_method(cls, st, "remove", {}, fuel);
    REQUIRE(r.has_value());
    CHECK(asNum(*r) == 9);
    CHECK(asNum(eval_observers(cls, st, fuel).at("size")) == 1);
  }
}

TEST_CASE("observer snapshots on a fresh Set and after insert") {
  auto tp = loadSetSum();
  const ClassDecl& cls = *tp.program.findClass("Set");
  std::int64_t fuel = 100000;
  ObjectState st = freshObject(cls);
  exec_method(cls, st, "init", {}, fuel);
  auto s0 = eval_observers(cls, st, fuel);
  CHECK(asBool(s0.at("empty")));
  CHECK(asNum(s0.at("size")) == 0);
  CHECK(asNum(s0.at("min")) == 0);  // library-defined sentinel on empty
  exec_method(cls, st, "insert", {std::int64_t{5}}, fuel);
  auto s1 = eval_observers(cls, st, fuel);
  CHECK_FALSE(asBool(s1.at("empty")));
  CHECK(asNum(s1.at("size")) == 1);
  CHECK(asNum(s1.at("min")) == 5);
  // Purity: snapshot twice in a row is identical.
  CHECK(eval_observers(cls, st, fuel) == s1);
}

TEST_CASE("reference model agrees with the DSL Set on random sequences") {
  auto tp = loadSetSum();
  const ClassDecl& cls = *tp.program.findClass("Set");
  std::mt19937_64 rng(42);
  for (int seq = 0; seq < 10000; ++seq) {
    std::int64_t fuel = 1000000;
    ObjectState st = freshObject(cls);
    exec_method(cls, st, "init", {}, fuel);
    std::vector<std::int64_t> ref;  // stack-ordered inserted values
    int len = (int)(rng() % 21);
    for (int k = 0; k < len; ++k) {
      if (ref.empty() || rng() % 3 != 0) {
        std::int64_t v = (std::int64_t)(rng() % 41) - 20;
        exec_method(cls, st, "insert", {v}, fuel);
        ref.push_back(v);
      } else {
        auto r = exec_method(cls, st, "remove", {}, fuel);
        REQUIRE(r.has_value());
        CHECK(asNum(*r) == ref.back());
        ref.pop_back();
      }
      auto snap = eval_observers(cls, st, fuel);
      CHECK(asBool(snap.at("empty")) == ref.empty());
      CHECK(asNum(snap.at("size")) == (std::int64_t)ref.size());
      std::int64_t m =
          ref.empty() ? 0 : *std::min_element(ref.begin(), ref.end());
      CHECK(asNum(snap.at("min")) == m);
    }
  }
}

TEST_CASE("dynamic purity check catches a mutating observer") {
  // Assembled directly (the typechecker rejects this statically).
  ClassDecl cls;
  cls.name = "Bad";
  cls.fields.push_back({"x", FieldType::Int, {}});
  MethodDecl obs;
  obs.name = "peek";
  obs.ret = Sort::Int;
  obs.isObserver = true;
  auto asg = std::make_shared<Stmt>();
  asg->kind = StmtKind::Assign;
  asg->name = "x";
  asg->expr = mkDInt(1);
  auto ret = std::make_shared<Stmt>();
  ret->kind = StmtKind::Return;
  ret->expr = mkDVar("x");
  obs.body = {asg, ret};
  cls.observers.push_back(obs);
  cls.ctor.name = "init";
  ObjectState st = freshObject(cls);
  std::int64_t fuel = 100;
  CHECK_THROWS_AS(eval_observers(cls, st, fuel), PurityViolation);
}

TEST_CASE("client run on buffer [2,3,4] sums to 7 with passing asserts") {
  auto tp = loadSetSum();
  Trace t = exec_client(tp, InputBuffer{{2, 3, 4}});
  CHECK_FALSE(t.fuelExhausted);
  CHECK_FALSE(t.assertionFailed);
  REQUIRE(t.asserts.size() == 1);
  CHECK(t.asserts[0].ok);
  int inserts = 0, removes = 0, inits = 0;
  std::int64_t sum = 0;
  for (auto& c : t.calls) {
    if (c.methodName == "insert") ++inserts;
    if (c.methodName == "init") ++inits;
    if (c.methodName == "remove") {
      ++removes;
      sum += asNum(*c.ret);
    }
  }
  CHECK(inits == 1);
  CHECK(inserts == 2);
  CHECK(removes == 2);
  CHECK(sum == 7);
}

TEST_CASE("client run on buffer [0] skips both loops") {
  auto tp = loadSetSum();
  Trace t = exec_client(tp, InputBuffer{{0}});
  CHECK_FALSE(t.assertionFailed);
  REQUIRE(t.asserts.size() == 1);
  CHECK(t.asserts[0].ok);
  for (auto& c : t.calls) CHECK(c.methodName != "insert");
}

TEST_CASE("negative inputs are filtered by the client guard") {
  auto tp = loadSetSum();
  // N=3, values -5 (skipped), 2, -1 (skipped): only one insert.
  Trace t = exec_client(tp, InputBuffer{{3, -5, 2, -1}});
  int inserts = 0;
  for (auto& c : t.calls)
    if (c.methodName == "insert") ++inserts;
  CHECK(inserts == 1);
  CHECK(t.asserts[0].ok);
}

TEST_CASE("identical buffers produce identical traces") {
  auto tp = loadSetSum();
  InputBuffer b{{4, 7, -2, 9, 3, 1}};
  Trace t1 = exec_client(tp, b);
  Trace t2 = exec_client(tp, b);
  CHECK(t1.fingerprint() == t2.fingerprint());
  CHECK(t1.calls.size() == t2.calls.size());
  CHECK(t1.asserts.size() == t2.asserts.size());
}

TEST_CASE("fuel exhaustion is reported, never a violation") {
  auto tp = loadSetSum();
  Trace t = exec_client(tp, InputBuffer{{1000000, 1}}, nullptr, /*fuel=*/50);
  CHECK(t.fuelExhausted);
  CHECK_FALSE(t.assertionFailed);
}

TEST_CASE("fuel monotonicity: smaller-fuel trace is a prefix") {
  auto tp = loadSetSum();
  InputBuffer b{{5, 1, 2, 3, 4, 5}};
  Trace small = exec_client(tp, b, nullptr, 60);
  Trace big = exec_client(tp, b, nullptr, 100000);
  REQUIRE(small.fuelExhausted);
  REQUIRE(small.calls.size() <= big.calls.size());
  for (std::size_t i = 0; i < small.calls.size(); ++i) {
    CHECK(small.calls[i].siteId == big.calls[i].siteId);
    CHECK(small.calls[i].args == big.calls[i].args);
  }
}

TEST_CASE("per-call-site hooks see pre/post snapshots and can stop the run") {
  auto tp = loadSetSum();
  std::vector<int> sites;
  CallHook hook = [&](const CallEvent& ev) {
    sites.push_back(ev.siteId);
    if (ev.methodName == "insert") {
      CHECK(ev.args.size() == 1);
      CHECK(ev.pre.count("empty") == 1);
      CHECK(ev.post.count("min") == 1);
    }
    if (ev.methodName == "init") CHECK(ev.pre.empty());
    return true;
  };
  Trace t = exec_client(tp, InputBuffer{{2, 3, 4}}, hook);
  CHECK(sites.size() == t.calls.size());
  CHECK(sites[0] == 0);  // constructor site first

  SECTION("a false-returning hook ends execution at that call") {
    int count = 0;
    CallHook stopper = [&](const CallEvent&) { return ++count < 3; };
    Trace ts = exec_client(tp, InputBuffer{{2, 3, 4}}, stopper);
    CHECK(ts.stoppedByHook);
    CHECK(ts.calls.size() == 3);
    CHECK(ts.asserts.empty());
  }
}

TEST_CASE("assertion failures carry the location and end the run") {
  // A client whose assert fails on this input.
  std::string src = R"(
class Cell {
  field v: int;
  init() { }
  method set(x: int) { v = x; }
  observer get(): int { return v; }
}
client {
  main() {
    var c: Cell = new Cell();
    var n: int = nondet();
    c.set(n);
    assert(c.get() >= 0);
  }
}
)";
  auto tp = typecheck(parseProgram(src));
  Trace t = exec_client(tp, InputBuffer{{-4}});
  CHECK(t.assertionFailed);
  REQUIRE(t.asserts.size() == 1);
  CHECK_FALSE(t.asserts[0].ok);
  CHECK(t.failLoc.line > 0);
  Trace ok = exec_client(tp, InputBuffer{{4}});
  CHECK_FALSE(ok.assertionFailed);
}
