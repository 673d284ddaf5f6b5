#ifndef VMTLC_LEARNER_HPP
#define VMTLC_LEARNER_HPP

// Generalizing CHC solver: decision-tree ICE learner over octagonal
// attributes, the learn/check inner loop, and the external-learner
// plug-in boundary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <unistd.h>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmtlc/chc.hpp"
#include "vmtlc/formula.hpp"
#include "vmtlc/oracle.hpp"
#include "vmtlc/smtlib.hpp"

#include <json.hpp>

namespace vmtlc {

struct Contradiction : std::runtime_error {
  explicit Contradiction(const std::string& what) : std::runtime_error(what) {}
};

struct AttributeInsufficient : std::runtime_error {
  explicit AttributeInsufficient(const std::string& rel)
      : std::runtime_error("no attribute separates mixed samples on " + rel),
        relation(rel) {}
  std::string relation;
};

struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Attributes

struct AttributeSet {
  std::vector<Relation> relations;
  // Per relation: integer-valued terms over its parameters. Boolean
  // parameters are flattened to 0/1 via ite.
  std::map<std::string, std::vector<Formula>> attrs;
  std::vector<std::int64_t> constantPool;
};

namespace detail {

inline Formula numericSlot(const RelParam& p) {
  Formula v = mkVar(p.name);
  if (p.sort == Sort::Bool) return mkIte(v, mkInt(1), mkInt(0));
  return v;
}

// True iff the term is the 0/1 flattening of a single boolean variable.
inline bool isBoolSlot(const Formula& f, std::string* name = nullptr) {
  if (f->kind != ExprKind::Ite) return false;
  if (f->args[0]->kind != ExprKind::Var) return false;
  if (!structEq(f->args[1], mkInt(1)) || !structEq(f->args[2], mkInt(0)))
    return false;
  if (name) *name = f->args[0]->name;
  return true;
}

}  // namespace detail

inline AttributeSet build_attributes(
    const CHCSystem& sys,
    const std::map<std::string, std::vector<Formula>>& extraTerms = {}) {
  AttributeSet as;
  as.relations = sys.relations;
  as.constantPool = sys.constantPool;
  for (const auto& rel : sys.relations) {
    std::vector<Formula> terms;
    std::vector<Formula> slots;
    slots.reserve(rel.params.size());
    for (const auto& p : rel.params) slots.push_back(detail::numericSlot(p));
    for (const auto& s : slots) terms.push_back(s);
    for (std::size_t i = 0; i < slots.size(); ++i)
      for (std::size_t j = i + 1; j < slots.size(); ++j) {
        terms.push_back(mkBin(ExprKind::Add, slots[i], slots[j]));
        terms.push_back(mkBin(ExprKind::Sub, slots[i], slots[j]));
      }
    auto it = extraTerms.find(rel.name);
    if (it != extraTerms.end())
      for (const auto& t : it->second) terms.push_back(t);
    as.attrs[rel.name] = std::move(terms);
  }
  return as;
}

// ---------------------------------------------------------------------------
// Sample sets

struct SampleSet {
  std::vector<ICESample> samples;  // deduplicated, arrival order

  bool add(const ICESample& s) {
    for (const auto& e : samples)
      if (e == s) return false;
    samples.push_back(s);
    return true;
  }
  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// ---------------------------------------------------------------------------
// Decision-tree learner

namespace detail {

inline std::int64_t attrValueAt(const Formula& term, const Valuation& point) {
  return asNum(evaluate(term, point));
}

// Atom construction with readability rewrites: a pure boolean slot compared
// against a threshold collapses to the variable or its negation.
inline Formula atomLe(const Formula& term, std::int64_t t) {
  std::string bname;
  if (isBoolSlot(term, &bname)) {
    if (t >= 1) return mkTrue();
    if (t <= -1) return mkFalse();
    return mkUnary(ExprKind::Not, mkVar(bname));
  }
  return mkBin(ExprKind::Le, term, mkInt(t));
}

inline Formula atomGt(const Formula& term, std::int64_t t) {
  std::string bname;
  if (isBoolSlot(term, &bname)) {
    if (t >= 1) return mkFalse();
    if (t <= -1) return mkTrue();
    return mkVar(bname);
  }
  // Integer semantics: ¬(x ≤ t) ⟺ x ≥ t+1.
  return mkBin(ExprKind::Ge, term, mkInt(t + 1));
}

struct PointArena {
  // Distinct (relation, point) pairs, ids in first-arrival order.
  std::vector<std::pair<std::string, Valuation>> points;
  std::map<std::pair<std::string, Valuation>, int> index;

  int intern(const SamplePoint& sp) {
    auto key = std::make_pair(sp.rel, sp.point);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(points.size());
    points.push_back(key);
    index.emplace(std::move(key), id);
    return id;
  }
};

enum class Label : std::int8_t { Unknown = -1, Reject = 0, Accept = 1 };

struct LabelConstraints {
  std::vector<int> positives;                          // must accept
  std::vector<std::pair<std::vector<int>, int>> horns; // antecedents ⇒ consequent
  std::vector<std::vector<int>> negGroups;             // at least one reject
};

// Propagate forced labels to fixpoint. Returns false on contradiction.
inline bool propagateLabels(const LabelConstraints& cs,
                            std::vector<Label>& lab) {
  for (int p : cs.positives) {
    if (lab[p] == Label::Reject) return false;
    lab[p] = Label::Accept;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [ante, cons] : cs.horns) {
      int unknownAnte = 0, rejectAnte = 0, lastUnknown = -1;
      for (int a : ante) {
        if (lab[a] == Label::Unknown) { ++unknownAnte; lastUnknown = a; }
        else if (lab[a] == Label::Reject) ++rejectAnte;
      }
      if (rejectAnte > 0) continue;  // implication vacuously satisfiable
      if (unknownAnte == 0) {
        if (lab[cons] == Label::Reject) return false;
        if (lab[cons] == Label::Unknown) { lab[cons] = Label::Accept; changed = true; }
      } else if (unknownAnte == 1 && lab[cons] == Label::Reject) {
        if (lab[lastUnknown] == Label::Accept) return false;
        if (lab[lastUnknown] == Label::Unknown) { lab[lastUnknown] = Label::Reject; changed = true; }
      }
    }
    for (const auto& grp : cs.negGroups) {
      int unknowns = 0, rejects = 0, lastUnknown = -1;
      for (int g : grp) {
        if (lab[g] == Label::Unknown) { ++unknowns; lastUnknown = g; }
        else if (lab[g] == Label::Reject) ++rejects;
      }
      if (rejects > 0) continue;
      if (unknowns == 0) return false;  // every member accepted
      if (unknowns == 1) { lab[lastUnknown] = Label::Reject; changed = true; }
    }
  }
  return true;
}

// Depth-first endpoint labeling: default-accept first, flip on failure,
// bounded total decision budget.
inline bool searchLabels(const LabelConstraints& cs, std::vector<Label> lab,
                         std::vector<Label>& out, long& budget) {
  if (--budget < 0) return false;
  if (!propagateLabels(cs, lab)) return false;
  int pick = -1;
  for (std::size_t i = 0; i < lab.size(); ++i)
    if (lab[i] == Label::Unknown) { pick = static_cast<int>(i); break; }
  if (pick < 0) { out = lab; return true; }
  for (Label v : {Label::Accept, Label::Reject}) {
    std::vector<Label> next = lab;
    next[pick] = v;
    if (searchLabels(cs, std::move(next), out, budget)) return true;
  }
  return false;
}

struct SplitCandidate {
  int attrIdx = -1;
  std::int64_t threshold = 0;
  double score = 0.0;
};

inline double entropy(int acc, int rej) {
  int n = acc + rej;
  if (n == 0 || acc == 0 || rej == 0) return 0.0;
  double pa = double(acc) / n, pr = double(rej) / n;
  return -(pa * std::log2(pa) + pr * std::log2(pr));
}

// Grow one tree over the relation's labeled points; returns the denoted
// formula.  pts: (attribute-values, accept?) rows.
inline Formula growTree(const std::string& relName,
                        const std::vector<Formula>& attrs,
                        const std::vector<std::int64_t>& thresholdPool,
                        const std::vector<std::pair<std::vector<std::int64_t>, bool>>& rows,
                        const std::vector<int>& idx) {
  int acc = 0, rej = 0;
  for (int i : idx) (rows[i].second ? acc : rej)++;
  if (rej == 0) return mkTrue();
  if (acc == 0) return mkFalse();

  SplitCandidate best;
  bool haveBest = false;
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    // Candidate thresholds: pool constants plus values (±1) at node points.
    std::set<std::int64_t> cand(thresholdPool.begin(), thresholdPool.end());
    for (int i : idx) {
      std::int64_t v = rows[i].first[a];
      cand.insert(v - 1);
      cand.insert(v);
      cand.insert(v + 1);
    }
    for (std::int64_t t : cand) {
      int lAcc = 0, lRej = 0, rAcc = 0, rRej = 0;
      for (int i : idx) {
        bool left = rows[i].first[a] <= t;
        if (left) (rows[i].second ? lAcc : lRej)++;
        else (rows[i].second ? rAcc : rRej)++;
      }
      int lN = lAcc + lRej, rN = rAcc + rRej;
      if (lN == 0 || rN == 0) continue;  // no split
      double score = (lN * entropy(lAcc, lRej) + rN * entropy(rAcc, rRej)) /
                     (lN + rN);
      if (!haveBest || score < best.score - 1e-12 ||
          (std::abs(score - best.score) <= 1e-12 &&
           (static_cast<int>(a) < best.attrIdx ||
            (static_cast<int>(a) == best.attrIdx && t < best.threshold)))) {
        best = {static_cast<int>(a), t, score};
        haveBest = true;
      }
    }
  }
  if (!haveBest) throw AttributeInsufficient(relName);

  std::vector<int> lIdx, rIdx;
  for (int i : idx)
    (rows[i].first[best.attrIdx] <= best.threshold ? lIdx : rIdx).push_back(i);
  Formula cond = atomLe(attrs[best.attrIdx], best.threshold);
  Formula ncond = atomGt(attrs[best.attrIdx], best.threshold);
  Formula L = growTree(relName, attrs, thresholdPool, rows, lIdx);
  Formula R = growTree(relName, attrs, thresholdPool, rows, rIdx);
  if (L->kind == ExprKind::BoolLit && L->bval) {
    if (R->kind == ExprKind::BoolLit && !R->bval) return cond;
    return mkBin(ExprKind::Or, cond, R);
  }
  if (L->kind == ExprKind::BoolLit && !L->bval) {
    if (R->kind == ExprKind::BoolLit && R->bval) return ncond;
    return mkBin(ExprKind::And, ncond, R);
  }
  if (R->kind == ExprKind::BoolLit && !R->bval)
    return mkBin(ExprKind::And, cond, L);
  if (R->kind == ExprKind::BoolLit && R->bval)
    return mkBin(ExprKind::Or, ncond, L);
  return mkBin(ExprKind::Or, mkBin(ExprKind::And, cond, L),
                  mkBin(ExprKind::And, ncond, R));
}

// Count atoms: comparison nodes plus bare boolean leaves in the boolean
// skeleton.  true/false count zero.
inline int countAtoms(const Formula& f) {
  switch (f->kind) {
    case ExprKind::BoolLit: return 0;
    case ExprKind::And: case ExprKind::Or: case ExprKind::Implies:
    case ExprKind::Iff:
      return countAtoms(f->args[0]) + countAtoms(f->args[1]);
    case ExprKind::Not: return countAtoms(f->args[0]);
    default: return 1;  // comparison or boolean variable
  }
}

}  // namespace detail

inline SolutionMap label_and_learn(const SampleSet& samples,
                                   const AttributeSet& attributes) {
  detail::PointArena arena;
  detail::LabelConstraints cs;
  for (const auto& s : samples.samples) {
    switch (s.kind) {
      case SampleKind::Positive:
        cs.positives.push_back(arena.intern(s.points[0]));
        break;
      case SampleKind::HornImplication: {
        std::vector<int> ante;
        for (const auto& p : s.points) ante.push_back(arena.intern(p));
        cs.horns.emplace_back(std::move(ante), arena.intern(s.consequent));
        break;
      }
      case SampleKind::NegativeGroup: {
        std::vector<int> grp;
        for (const auto& p : s.points) grp.push_back(arena.intern(p));
        cs.negGroups.push_back(std::move(grp));
        break;
      }
    }
  }

  std::vector<detail::Label> init(arena.points.size(), detail::Label::Unknown);
  std::vector<detail::Label> labels;
  long budget = 200000;
  if (!detail::searchLabels(cs, std::move(init), labels, budget))
    throw Contradiction("no endpoint labeling satisfies the sample set");

  // Threshold pool: program constants plus every sample coordinate ±1
  // (per-attribute values at node points are added during tree growth).
  std::vector<std::int64_t> thresholds(attributes.constantPool.begin(),
                                       attributes.constantPool.end());
  for (const auto& [key, id] : arena.index) {
    (void)id;
    for (const auto& [name, value] : key.second) {
      (void)name;
      std::int64_t v = asNum(value);
      thresholds.push_back(v - 1);
      thresholds.push_back(v);
      thresholds.push_back(v + 1);
    }
  }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  SolutionMap sol;
  std::map<std::string, std::vector<std::pair<std::vector<std::int64_t>, bool>>>
      rowsByRel;
  for (std::size_t id = 0; id < arena.points.size(); ++id) {
    const auto& [rel, point] = arena.points[id];
    const auto& attrs = attributes.attrs.at(rel);
    std::vector<std::int64_t> vals;
    vals.reserve(attrs.size());
    for (const auto& t : attrs) vals.push_back(detail::attrValueAt(t, point));
    rowsByRel[rel].emplace_back(std::move(vals),
                                labels[id] == detail::Label::Accept);
  }
  for (const auto& rel : attributes.relations) {
    Solution s;
    for (const auto& p : rel.params) s.params.push_back(p.name);
    auto it = rowsByRel.find(rel.name);
    if (it == rowsByRel.end()) {
      s.formula = mkTrue();
    } else {
      std::vector<int> idx(it->second.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
      s.formula = detail::growTree(rel.name, attributes.attrs.at(rel.name),
                                   thresholds, it->second, idx);
    }
    sol[rel.name] = std::move(s);
  }

  // Minimality pass: per relation, in declaration order, adopt the first
  // smaller candidate (true, false, then single octagon atoms by attribute
  // index, threshold, polarity) that stays consistent with every sample.
  for (const auto& rel : attributes.relations) {
    Solution& cur = sol[rel.name];
    int curAtoms = detail::countAtoms(cur.formula);
    if (curAtoms == 0) continue;
    auto tryCandidate = [&](const Formula& f) {
      Formula saved = cur.formula;
      cur.formula = f;
      for (const auto& smp : samples.samples)
        if (!consistentWith(sol, smp)) { cur.formula = saved; return false; }
      return true;
    };
    if (tryCandidate(mkTrue())) continue;
    if (tryCandidate(mkFalse())) continue;
    if (curAtoms <= 1) continue;
    bool done = false;
    const auto& attrs = attributes.attrs.at(rel.name);
    for (std::size_t a = 0; a < attrs.size() && !done; ++a)
      for (std::int64_t t : thresholds) {
        if (tryCandidate(detail::atomLe(attrs[a], t)) ||
            tryCandidate(detail::atomGt(attrs[a], t))) {
          done = true;
          break;
        }
      }
  }
  return sol;
}

// Overfitting ablation: contract relations get the exact disjunction of
// their positive points; invariant relations are learned normally.
inline SolutionMap overfit_learn(const SampleSet& samples,
                                 const AttributeSet& attributes) {
  SolutionMap sol = label_and_learn(samples, attributes);
  for (const auto& rel : attributes.relations) {
    if (rel.kind != RelKind::ModularContract &&
        rel.kind != RelKind::ContextualContract)
      continue;
    Formula disj = mkFalse();
    for (const auto& s : samples.samples) {
      if (s.kind != SampleKind::Positive || s.points[0].rel != rel.name)
        continue;
      Formula conj = mkTrue();
      for (const auto& p : rel.params) {
        auto it = s.points[0].point.find(p.name);
        if (it == s.points[0].point.end()) continue;
        Formula v = mkVar(p.name);
        Formula c = p.sort == Sort::Bool
                        ? (asBool(it->second) ? v : mkUnary(ExprKind::Not, v))
                        : mkBin(ExprKind::Eq, v, mkInt(asNum(it->second)));
        conj = structEq(conj, mkTrue()) ? c : mkBin(ExprKind::And, conj, c);
      }
      disj = structEq(disj, mkFalse()) ? conj
                                       : mkBin(ExprKind::Or, disj, conj);
    }
    sol[rel.name].formula = disj;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Algorithm 1: the learner–oracle inner loop

enum class LearnerKind { Builtin, Overfit, External };

struct LearnerConfig {
  LearnerKind kind = LearnerKind::Builtin;
  std::string externalCmd;  // for LearnerKind::External
  double budgetSeconds = 1000.0;
  int iterationCap = 2000;
  std::map<std::string, std::vector<Formula>> extraTerms;
};

struct IceResult {
  std::optional<SolutionMap> solution;  // set iff check_system said Valid
  int iterations = 0;                   // learner rounds consumed (I)
  std::string failure;                  // reason when !solution
  SampleSet samples;                    // final ℰ
};

// External plug-in protocol v1 (one JSON line each way).
inline nlohmann::json sampleToJson(const ICESample& s) {
  nlohmann::json j;
  j["kind"] = s.kind == SampleKind::Positive ? "positive"
              : s.kind == SampleKind::HornImplication ? "horn"
                                                      : "negative";
  auto pointJson = [](const SamplePoint& p) {
    nlohmann::json pj;
    pj["rel"] = p.rel;
    nlohmann::json vj = nlohmann::json::object();
    for (const auto& [name, value] : p.point) {
      if (std::holds_alternative<bool>(value)) vj[name] = std::get<bool>(value);
      else vj[name] = std::get<std::int64_t>(value);
    }
    pj["point"] = vj;
    return pj;
  };
  j["points"] = nlohmann::json::array();
  for (const auto& p : s.points) j["points"].push_back(pointJson(p));
  if (s.kind == SampleKind::HornImplication) j["consequent"] = pointJson(s.consequent);
  return j;
}

inline SolutionMap external_learner_round(const std::string& endpoint,
                                          const CHCSystem& sys,
                                          const SampleSet& samples,
                                          int round) {
  nlohmann::json req;
  req["version"] = "v1";
  req["round"] = round;
  req["mode"] = modeName(sys.mode);
  req["system"] = export_smtlib2(sys);
  req["samples"] = nlohmann::json::array();
  for (const auto& s : samples.samples) req["samples"].push_back(sampleToJson(s));

  std::string base = "/tmp/vmtlc_ext_" + std::to_string(::getpid()) + "_" +
                     std::to_string(round);
  std::string reqPath = base + ".req", respPath = base + ".resp";
  {
    std::ofstream out(reqPath);
    out << req.dump() << "\n";
  }
  std::string cmd = endpoint + " < " + reqPath + " > " + respPath + " 2>/dev/null";
  int rc = std::system(cmd.c_str());
  if (rc != 0) throw ProtocolError("endpoint exited with status " + std::to_string(rc));
  std::ifstream in(respPath);
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw ProtocolError("endpoint produced no response line");
  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response is not valid JSON: ") + e.what());
  }
  if (!resp.contains("solutions") || !resp["solutions"].is_object())
    throw ProtocolError("response lacks a solutions object");

  SolutionMap sol = initialSolution(sys);
  for (const auto& [name, text] : resp["solutions"].items()) {
    const Relation* rel = sys.findRelation(name);
    if (!rel) throw ProtocolError("unknown relation in response: " + name);
    if (!text.is_string()) throw ProtocolError("formula for " + name + " is not a string");
    try {
      sol[name].formula = parseFormula(text.get<std::string>());
    } catch (const FormulaSyntaxError& e) {
      throw ParseError("formula for " + name + ": " + e.what());
    }
  }
  return sol;
}

inline IceResult ice_chc_solve(const CHCSystem& sys,
                               const std::vector<ICESample>& poscex,
                               const BackendConfig& backend,
                               const LearnerConfig& cfg = {}) {
  IceResult res;
  for (const auto& p : poscex) res.samples.add(p);  // ℰ ← PosCex
  AttributeSet attrs = build_attributes(sys, cfg.extraTerms);
  SolutionMap candidate = initialSolution(sys);
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };
  // The initial all-true candidate already accepts every positive example;
  // learn from ℰ up front only when it contains richer sample kinds.
  bool needLearn = false;
  for (const auto& s : res.samples.samples)
    if (s.kind != SampleKind::Positive) needLearn = true;
  for (int iter = 0; iter < cfg.iterationCap; ++iter) {
    if (elapsed() > cfg.budgetSeconds) {
      res.failure = "LearnerTimeout";
      return res;
    }
    ++res.iterations;
    if (needLearn || iter > 0) {
      try {
        if (cfg.kind == LearnerKind::External) {
          try {
            candidate = external_learner_round(cfg.externalCmd, sys,
                                               res.samples, iter);
          } catch (const ProtocolError&) {
            candidate = label_and_learn(res.samples, attrs);
          } catch (const ParseError&) {
            candidate = label_and_learn(res.samples, attrs);
          }
        } else if (cfg.kind == LearnerKind::Overfit) {
          candidate = overfit_learn(res.samples, attrs);
        } else {
          candidate = label_and_learn(res.samples, attrs);
        }
      } catch (const Contradiction& e) {
        res.failure = std::string("Contradiction: ") + e.what();
        return res;
      } catch (const AttributeInsufficient& e) {
        res.failure = std::string("AttributeInsufficient: ") + e.what();
        return res;
      }
    }
    CheckResult chk = check_system(sys, candidate, backend);
    if (std::getenv("VMTLC_VERBOSE")) {
      std::fprintf(stderr, "    ice iter=%d samples=%zu verdict=%s origin=%s\n",
                   iter, res.samples.samples.size(),
                   chk.verdict == Verdict::Valid          ? "Valid"
                   : chk.verdict == Verdict::Counterexample ? "Cex"
                                                            : "Unknown",
                   chk.verdict == Verdict::Counterexample
                       ? chk.sample.origin.c_str()
                       : "");
      std::fflush(stderr);
    }
    if (chk.verdict == Verdict::Valid) {
      res.solution = candidate;
      return res;
    }
    if (chk.verdict == Verdict::Unknown) {
      res.failure = "oracle Unknown: " + chk.reason;
      return res;
    }
    res.samples.add(chk.sample);  // ℰ grows monotonically
  }
  res.failure = "LearnerTimeout";
  return res;
}

}  // namespace vmtlc

#endif  // VMTLC_LEARNER_HPP
