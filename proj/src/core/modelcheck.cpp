#include "modelcheck.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace triguard {

namespace {

using Env = std::vector<std::pair<std::string, int>>;

int env_lookup(const Env& env, const std::string& name) {
  for (auto it = env.rbegin(); it != env.rend(); ++it)
    if (it->first == name) return it->second;
  fail(ErrorKind::Domain, "unassigned free variable " + name);
}

int term_value(const Structure& s, const Env& env, const Term& t) {
  if (t.is_var()) return env_lookup(env, t.name);
  return s.constant_element(t.constant_index);
}

bool eval_rec(const Structure& s, const Formula& f, Env& env) {
  switch (f.kind()) {
    case NodeKind::Atom: {
      Tup t;
      for (const auto& a : f.args()) t.push(term_value(s, env, a));
      return s.has_fact(f.rel(), t);
    }
    case NodeKind::Equal:
      return term_value(s, env, f.lhs()) == term_value(s, env, f.rhs());
    case NodeKind::Not:
      return !eval_rec(s, f.child(), env);
    case NodeKind::And:
      return eval_rec(s, f.child(0), env) && eval_rec(s, f.child(1), env);
    case NodeKind::Or:
      return eval_rec(s, f.child(0), env) || eval_rec(s, f.child(1), env);
    case NodeKind::Implies:
      return !eval_rec(s, f.child(0), env) || eval_rec(s, f.child(1), env);
    case NodeKind::Iff:
      return eval_rec(s, f.child(0), env) == eval_rec(s, f.child(1), env);
    case NodeKind::Forall:
    case NodeKind::Exists: {
      bool universal = f.kind() == NodeKind::Forall;
      size_t depth = env.size();
      for (const auto& v : f.qvars()) env.emplace_back(v, 0);
      // Iterate assignments of the quantified block over the domain.
      const auto& dom = s.domain();
      if (dom.empty()) fail(ErrorKind::Domain, "evaluation over an empty domain");
      std::vector<size_t> idx(f.qvars().size(), 0);
      for (;;) {
        for (size_t i = 0; i < idx.size(); ++i) env[depth + i].second = dom[idx[i]];
        bool v = eval_rec(s, f.body(), env);
        if (universal ? !v : v) {
          env.resize(depth);
          return !universal;
        }
        size_t i = idx.size();
        while (i > 0 && idx[i - 1] + 1 == dom.size()) idx[--i] = 0;
        if (i == 0) break;
        ++idx[i - 1];
      }
      env.resize(depth);
      return universal;
    }
  }
  fail(ErrorKind::Domain, "unreachable");
}

}  // namespace

bool evaluate(const Structure& s, const Formula& f, const std::map<std::string, int>& assignment) {
  for (const auto& v : f.free_vars())
    if (!assignment.count(v)) fail(ErrorKind::Domain, "unassigned free variable " + v);
  for (const auto& [name, e] : assignment)
    if (!s.in_domain(e)) fail(ErrorKind::Domain, "assignment maps " + name + " outside the domain");
  Env env(assignment.begin(), assignment.end());
  return eval_rec(s, f, env);
}

bool evaluate_env(const Structure& s, const Formula& f, EvalEnv& env) {
  return eval_rec(s, f, env);
}

bool CheckViolation::operator<(const CheckViolation& o) const {
  if (conjunct != o.conjunct) return conjunct < o.conjunct;
  if (tuple != o.tuple) return tuple < o.tuple;
  return static_cast<int>(kind) < static_cast<int>(o.kind);
}

std::string CheckReport::to_json() const {
  auto kind_name = [](ViolationKind k) {
    switch (k) {
      case ViolationKind::MissingWitness: return "missing-witness";
      case ViolationKind::ForallViolation: return "forall-violation";
      case ViolationKind::NonTransitive: return "non-transitive";
      case ViolationKind::MissingUEdge: return "missing-U-edge";
      case ViolationKind::MissingAux: return "missing-aux";
    }
    return "?";
  };
  std::ostringstream os;
  os << "{\"verdict\":" << (verdict ? "true" : "false") << ",\"violations\":[";
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) os << ",";
    os << "{\"conjunct\":" << violations[i].conjunct << ",\"tuple\":[";
    for (size_t j = 0; j < violations[i].tuple.size(); ++j) {
      if (j) os << ",";
      os << violations[i].tuple[j];
    }
    os << "],\"kind\":\"" << kind_name(violations[i].kind) << "\"}";
  }
  os << "]}";
  return os.str();
}

namespace {

// Slot-resolved view of an atomic guard: per argument position, either a
// fixed element (constants) or a variable slot.
struct GuardPattern {
  int rel = -1;          // -1: trivial equality guard
  std::string eq_var;    // variable of a trivial guard
  std::vector<int> slot; // per position: index into the variable list, or -1
  std::vector<int> fixed;

  static GuardPattern compile(const Structure& s, const Formula& guard,
                              const std::vector<std::string>& vars) {
    GuardPattern p;
    if (guard.kind() == NodeKind::Equal) {
      if (!guard.trivial_eq())
        fail(ErrorKind::Shape, "only trivial equalities x=x may guard a conjunct");
      p.eq_var = guard.lhs().name;
      return p;
    }
    p.rel = guard.rel();
    for (const auto& t : guard.args()) {
      if (t.is_var()) {
        auto it = std::find(vars.begin(), vars.end(), t.name);
        p.slot.push_back(it == vars.end() ? -2 : static_cast<int>(it - vars.begin()));
        p.fixed.push_back(-1);
        if (it == vars.end())
          fail(ErrorKind::Shape, "guard variable " + t.name + " is not quantified");
      } else {
        p.slot.push_back(-1);
        p.fixed.push_back(s.constant_element(t.constant_index));
      }
    }
    return p;
  }

  // Matches a fact against the pattern, filling `vals` (one per variable).
  bool match(const Tup& fact, std::vector<int>& vals) const {
    for (int i = 0; i < fact.size(); ++i) {
      int sl = slot[static_cast<size_t>(i)];
      if (sl == -1) {
        if (fact[i] != fixed[static_cast<size_t>(i)]) return false;
      } else {
        int& v = vals[static_cast<size_t>(sl)];
        if (v == -1)
          v = fact[i];
        else if (v != fact[i])
          return false;
      }
    }
    return true;
  }
};

// Enumerates assignments of `vars` satisfying the guard; unconstrained
// variables (possible only when they are vacuous) are bound to the least
// element.
template <typename Fn>
void for_each_guard_instance(const Structure& s, const Formula& guard,
                             const std::vector<std::string>& vars, Fn&& fn) {
  if (s.domain().empty()) return;
  GuardPattern p = GuardPattern::compile(s, guard, vars);
  std::vector<int> vals(vars.size(), -1);
  if (p.rel < 0) {
    auto it = std::find(vars.begin(), vars.end(), p.eq_var);
    size_t slot = it == vars.end() ? 0 : static_cast<size_t>(it - vars.begin());
    for (int e : s.domain()) {
      std::fill(vals.begin(), vals.end(), s.domain()[0]);
      vals[slot] = e;
      if (!fn(vals)) return;
    }
    return;
  }
  for (const auto& f : s.facts(p.rel)) {
    std::fill(vals.begin(), vals.end(), -1);
    if (!p.match(f, vals)) continue;
    for (auto& v : vals)
      if (v == -1) v = s.domain()[0];
    if (!fn(vals)) return;
  }
}

Env make_env(const std::vector<std::string>& uvars, const std::vector<int>& uvals,
             const std::vector<std::string>& evars = {}, const Tup& evals = Tup{}) {
  Env env;
  env.reserve(uvars.size() + evars.size());
  for (size_t i = 0; i < uvars.size(); ++i) env.emplace_back(uvars[i], uvals[i]);
  for (size_t i = 0; i < evars.size(); ++i) env.emplace_back(evars[i], evals[static_cast<int>(i)]);
  return env;
}

bool matrix_holds(const Structure& s, const Formula& matrix, Env& env) {
  if (matrix.empty()) return true;
  return eval_rec(s, matrix, env);
}

// Witness lookup machinery for one forall-exists conjunct.
class WitnessFinder {
 public:
  WitnessFinder(const Structure& s, const AEConjunct& c) : s_(s), c_(c) {
    relevant_.assign(c.uvars.size(), false);
    std::vector<std::string> used;
    auto mark = [&](const Formula& f) {
      if (f.empty()) return;
      const auto& fv = f.free_vars();
      used.insert(used.end(), fv.begin(), fv.end());
    };
    mark(c.eguard);
    mark(c.matrix);
    for (size_t i = 0; i < c.uvars.size(); ++i)
      relevant_[i] = std::find(used.begin(), used.end(), c.uvars[i]) != used.end();

    if (c.eguard.kind() == NodeKind::Equal) {
      trivial_ = true;
      return;
    }
    // Bucket the existential guard's facts by their uvar-bound positions.
    const auto& args = c.eguard.args();
    for (const auto& t : args) {
      if (t.is_var()) {
        auto u = std::find(c.uvars.begin(), c.uvars.end(), t.name);
        if (u != c.uvars.end()) {
          pos_.push_back({Kind::BoundU, static_cast<int>(u - c.uvars.begin()), -1});
          continue;
        }
        auto e = std::find(c.evars.begin(), c.evars.end(), t.name);
        if (e == c.evars.end())
          fail(ErrorKind::Shape, "existential guard variable " + t.name + " is unbound");
        pos_.push_back({Kind::FreeE, static_cast<int>(e - c.evars.begin()), -1});
      } else {
        pos_.push_back({Kind::Fixed, -1, s.constant_element(t.constant_index)});
      }
    }
    for (const auto& f : s_.facts(c.eguard.rel())) {
      bool ok = true;
      Tup key;
      for (size_t i = 0; i < pos_.size(); ++i) {
        if (pos_[i].kind == Kind::Fixed && f[static_cast<int>(i)] != pos_[i].elem) {
          ok = false;
          break;
        }
        if (pos_[i].kind == Kind::BoundU) key.push(f[static_cast<int>(i)]);
      }
      if (ok) buckets_[key].push_back(f);
    }
  }

  bool has_witness(const std::vector<int>& uvals) {
    Tup memo_key;
    for (size_t i = 0; i < uvals.size(); ++i)
      if (relevant_[i]) memo_key.push(uvals[i]);
    auto m = memo_.find(memo_key);
    if (m != memo_.end()) return m->second;
    bool found = search(uvals);
    memo_[memo_key] = found;
    return found;
  }

 private:
  bool search(const std::vector<int>& uvals) {
    Env env = make_env(c_.uvars, uvals);
    size_t base = env.size();
    for (const auto& e : c_.evars) env.emplace_back(e, 0);
    if (trivial_) {
      // Trivial existential guard: candidates range over the domain for the
      // guard's variable; other evars are vacuous.
      size_t slot = 0;
      for (size_t i = 0; i < c_.evars.size(); ++i) {
        env[base + i].second = s_.domain()[0];
        if (c_.evars[i] == c_.eguard.lhs().name) slot = i;
      }
      for (int e : s_.domain()) {
        env[base + slot].second = e;
        if (matrix_holds(s_, c_.matrix, env)) return true;
      }
      return false;
    }
    Tup key;
    for (size_t i = 0; i < pos_.size(); ++i)
      if (pos_[i].kind == Kind::BoundU) key.push(uvals[static_cast<size_t>(pos_[i].index)]);
    auto it = buckets_.find(key);
    if (it == buckets_.end()) return false;
    for (const auto& f : it->second) {
      bool ok = true;
      for (size_t i = 0; i < c_.evars.size(); ++i) env[base + i].second = -1;
      for (size_t i = 0; i < pos_.size(); ++i) {
        if (pos_[i].kind != Kind::FreeE) continue;
        int& v = env[base + static_cast<size_t>(pos_[i].index)].second;
        int fv = f[static_cast<int>(i)];
        if (v == -1)
          v = fv;
        else if (v != fv) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      for (size_t i = 0; i < c_.evars.size(); ++i)
        if (env[base + i].second == -1) env[base + i].second = s_.domain()[0];
      if (matrix_holds(s_, c_.matrix, env)) return true;
    }
    return false;
  }

  enum class Kind { BoundU, FreeE, Fixed };
  struct Pos {
    Kind kind;
    int index;
    int elem;
  };

  const Structure& s_;
  const AEConjunct& c_;
  std::vector<bool> relevant_;
  bool trivial_ = false;
  std::vector<Pos> pos_;
  std::unordered_map<Tup, std::vector<Tup>, TupHash> buckets_;
  std::unordered_map<Tup, bool, TupHash> memo_;
};

// Pure positive conjunction over one relation marks the closure conjuncts.
bool pure_positive_conjunction_of(const Formula& m, int rel) {
  if (m.empty()) return false;
  if (m.kind() == NodeKind::Atom) return m.rel() == rel;
  if (m.kind() == NodeKind::And)
    return pure_positive_conjunction_of(m.child(0), rel) &&
           pure_positive_conjunction_of(m.child(1), rel);
  return false;
}

}  // namespace

CheckReport check_model(const Structure& s, const NormalFormSentence& nf, CheckFlags flags,
                        int max_violations) {
  nf.validate();
  if (nf.sig->relation_count() > s.sig().relation_count())
    fail(ErrorKind::Signature, "structure signature does not cover the sentence's");
  for (int r = 0; r < nf.sig->relation_count(); ++r)
    if (nf.sig->relation(r).name != s.sig().relation(r).name)
      fail(ErrorKind::Signature, "structure and sentence signatures disagree");

  CheckReport report;
  auto add = [&](CheckViolation v) {
    if (static_cast<int>(report.violations.size()) < max_violations)
      report.violations.push_back(std::move(v));
  };

  for (size_t ci = 0; ci < nf.ae.size(); ++ci) {
    const AEConjunct& c = nf.ae[ci];
    WitnessFinder finder(s, c);
    for_each_guard_instance(s, c.guard, c.uvars, [&](const std::vector<int>& uvals) {
      if (!finder.has_witness(uvals))
        add({static_cast<int>(ci), uvals, ViolationKind::MissingWitness});
      return static_cast<int>(report.violations.size()) < max_violations;
    });
  }
  for (size_t ci = 0; ci < nf.a.size(); ++ci) {
    const AConjunct& c = nf.a[ci];
    ViolationKind kind = ViolationKind::ForallViolation;
    if (s.sig().has_universal() && pure_positive_conjunction_of(c.matrix, s.sig().universal()))
      kind = ViolationKind::MissingUEdge;
    else if (s.sig().has_aux() && pure_positive_conjunction_of(c.matrix, s.sig().aux()))
      kind = ViolationKind::MissingAux;
    for_each_guard_instance(s, c.guard, c.uvars, [&](const std::vector<int>& uvals) {
      Env env = make_env(c.uvars, uvals);
      if (!matrix_holds(s, c.matrix, env))
        add({static_cast<int>(nf.ae.size() + ci), uvals, kind});
      return static_cast<int>(report.violations.size()) < max_violations;
    });
  }

  if (flags.ubiquitous) {
    if (!s.sig().has_universal()) fail(ErrorKind::Signature, "no universal symbol to check");
    int u = s.sig().universal();
    size_t n = s.domain().size();
    if (s.facts(u).size() != n * n) {
      for (int a : s.domain()) {
        for (int b : s.domain()) {
          if (!s.has_fact(u, Tup{a, b})) {
            add({-1, {a, b}, ViolationKind::MissingUEdge});
            if (static_cast<int>(report.violations.size()) >= max_violations) break;
          }
        }
        if (static_cast<int>(report.violations.size()) >= max_violations) break;
      }
    }
  }
  if (flags.transitive) {
    for (int t : s.sig().transitive_relations()) {
      std::unordered_map<int, std::vector<int>> adj;
      for (const auto& f : s.facts(t)) adj[f[0]].push_back(f[1]);
      for (const auto& f : s.facts(t)) {
        auto it = adj.find(f[1]);
        if (it == adj.end()) continue;
        for (int c : it->second) {
          if (!s.has_fact(t, Tup{f[0], c})) {
            add({-1, {f[0], f[1], c}, ViolationKind::NonTransitive});
            if (static_cast<int>(report.violations.size()) >= max_violations) break;
          }
        }
      }
    }
  }

  std::sort(report.violations.begin(), report.violations.end());
  report.violations.erase(std::unique(report.violations.begin(), report.violations.end(),
                                      [](const CheckViolation& a, const CheckViolation& b) {
                                        return !(a < b) && !(b < a);
                                      }),
                          report.violations.end());
  report.verdict = report.violations.empty();
  return report;
}

std::optional<Tup> find_witness(const Structure& s, const AEConjunct& c, const Tup& abar) {
  if (static_cast<int>(c.uvars.size()) != abar.size())
    fail(ErrorKind::Domain, "guard tuple length mismatch");
  std::vector<int> uvals = abar.to_vector();
  {
    Env env = make_env(c.uvars, uvals);
    if (!matrix_holds(s, c.guard, env))
      fail(ErrorKind::Domain, "guard not satisfied by the given tuple");
  }
  const auto& dom = s.domain();
  size_t k = c.evars.size();
  std::vector<size_t> idx(k, 0);
  if (dom.empty()) return std::nullopt;
  for (;;) {
    Tup b;
    for (size_t i = 0; i < k; ++i) b.push(dom[idx[i]]);
    Env env = make_env(c.uvars, uvals, c.evars, b);
    if (matrix_holds(s, c.eguard, env) && matrix_holds(s, c.matrix, env)) return b;
    size_t i = k;
    while (i > 0 && idx[i - 1] + 1 == dom.size()) idx[--i] = 0;
    if (i == 0) break;
    ++idx[i - 1];
  }
  return std::nullopt;
}

}  // namespace triguard
