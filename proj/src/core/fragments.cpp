#include "fragments.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace triguard {

namespace {

bool covers(const Formula& guard, const std::vector<std::string>& vars) {
  const auto& g = guard.free_vars();
  for (const auto& v : vars)
    if (!std::binary_search(g.begin(), g.end(), v)) return false;
  return true;
}

void flatten_conj(const Formula& f, std::vector<Formula>& out) {
  if (f.kind() == NodeKind::And) {
    flatten_conj(f.child(0), out);
    flatten_conj(f.child(1), out);
  } else {
    out.push_back(f);
  }
}

}  // namespace

std::optional<GuardedShape> match_guarded(NodeKind q, const Formula& body) {
  if (q == NodeKind::Forall) {
    if (body.kind() != NodeKind::Implies) return std::nullopt;
    const Formula& g = body.child(0);
    const Formula& m = body.child(1);
    if (!g.is_atomic() || !covers(g, m.free_vars())) return std::nullopt;
    return GuardedShape{g, m};
  }
  if (body.is_atomic()) return GuardedShape{body, Formula()};
  if (body.kind() != NodeKind::And) return std::nullopt;
  std::vector<Formula> parts;
  flatten_conj(body, parts);
  for (size_t i = 0; i < parts.size(); ++i) {
    if (!parts[i].is_atomic()) continue;
    std::vector<std::string> rest_vars;
    std::vector<Formula> rest;
    for (size_t j = 0; j < parts.size(); ++j) {
      if (j == i) continue;
      rest.push_back(parts[j]);
      const auto& fv = parts[j].free_vars();
      rest_vars.insert(rest_vars.end(), fv.begin(), fv.end());
    }
    std::sort(rest_vars.begin(), rest_vars.end());
    rest_vars.erase(std::unique(rest_vars.begin(), rest_vars.end()), rest_vars.end());
    if (!covers(parts[i], rest_vars)) continue;
    return GuardedShape{parts[i], rest.empty() ? Formula() : Formula::conjoin(rest)};
  }
  return std::nullopt;
}

namespace {

// Per-fragment syntactic rules.
struct FragRules {
  bool equality_free = false;         // only trivial x=x guards admitted
  bool unguarded_two_var = false;     // TGF rule for <=2 free variables
  bool transitive_guards_only = false;
  bool needs_universal = false;
  bool constant_free = false;
};

class FragmentChecker {
 public:
  FragmentChecker(const Signature& sig, const FragRules& rules, std::vector<Violation>& out)
      : sig_(sig), rules_(rules), out_(out) {}

  void run(const Formula& f) {
    if (rules_.needs_universal && !sig_.has_universal())
      out_.push_back({"root", "signature declares no universal symbol"});
    if (rules_.constant_free && sig_.constant_count() > 0)
      out_.push_back({"root", "constants are not allowed in this fragment"});
    visit(f, "root", false);
  }

 private:
  void violation(const std::string& path, const std::string& rule) {
    out_.push_back({path, rule});
  }

  // `as_guard` marks atoms sitting in a recognized guard position.
  void visit(const Formula& f, const std::string& path, bool as_guard) {
    switch (f.kind()) {
      case NodeKind::Atom:
        if (rules_.transitive_guards_only && sig_.is_transitive(f.rel()) && !as_guard)
          violation(path, "transitive symbol " + f.rel_name() + " outside a guard");
        return;
      case NodeKind::Equal:
        if (rules_.equality_free && !f.trivial_eq())
          violation(path, "equality is not allowed in this fragment");
        return;
      case NodeKind::Not:
        visit(f.child(), path + ".0", false);
        return;
      case NodeKind::And:
      case NodeKind::Or:
      case NodeKind::Implies:
      case NodeKind::Iff:
        visit(f.child(0), path + ".0", false);
        visit(f.child(1), path + ".1", false);
        return;
      case NodeKind::Forall:
      case NodeKind::Exists: {
        auto shape = match_guarded(f.kind(), f.body());
        if (shape) {
          // Guard must be a relational atom or a trivial equality; a guard
          // x=x is only admissible when the matrix has at most one free
          // variable.
          bool guard_ok = shape->guard.kind() == NodeKind::Atom || shape->guard.trivial_eq();
          if (shape->guard.kind() == NodeKind::Equal && !shape->guard.trivial_eq()) {
            guard_ok = false;
          }
          if (guard_ok) {
            visit(shape->guard, path + ".guard", true);
            if (!shape->matrix.empty()) visit(shape->matrix, path + ".body", false);
            return;
          }
        }
        // Unguarded quantification.
        int frees = static_cast<int>(f.body().free_vars().size());
        if (frees <= 1) {
          visit(f.body(), path + ".body", false);
          return;
        }
        if (rules_.unguarded_two_var && frees <= 2) {
          visit(f.body(), path + ".body", false);
          return;
        }
        violation(path, "unguarded quantifier over a subformula with " + std::to_string(frees) +
                            " free variables");
        visit(f.body(), path + ".body", false);
        return;
      }
    }
  }

  const Signature& sig_;
  const FragRules& rules_;
  std::vector<Violation>& out_;
};

void check(const Formula& f, const Signature& sig, const FragRules& rules,
           std::vector<Violation>& out, bool& flag) {
  FragmentChecker(sig, rules, out).run(f);
  flag = out.empty();
}

void json_violations(std::ostringstream& os, const char* name, bool flag,
                     const std::vector<Violation>& vs, bool& first) {
  if (!first) os << ",";
  first = false;
  os << "\"" << name << "\":{\"member\":" << (flag ? "true" : "false") << ",\"violations\":[";
  for (size_t i = 0; i < vs.size(); ++i) {
    if (i) os << ",";
    os << "{\"path\":\"" << vs[i].path << "\",\"rule\":\"" << vs[i].rule << "\"}";
  }
  os << "]}";
}

}  // namespace

std::string FragmentReport::to_json() const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  json_violations(os, "GF", gf, gf_violations, first);
  json_violations(os, "TGF", tgf, tgf_violations, first);
  json_violations(os, "GFU", gfu, gfu_violations, first);
  json_violations(os, "GF+TG", gftg, gftg_violations, first);
  json_violations(os, "GFU+TG", gfutg, gfutg_violations, first);
  json_violations(os, "TGF+TG", tgftg, tgftg_violations, first);
  os << "}";
  return os.str();
}

FragmentReport classify_fragment(const Formula& f, const Signature& sig) {
  FragmentReport r;
  FragRules gf;
  check(f, sig, gf, r.gf_violations, r.gf);

  FragRules tgf;
  tgf.equality_free = true;
  tgf.unguarded_two_var = true;
  check(f, sig, tgf, r.tgf_violations, r.tgf);

  FragRules gfu;
  gfu.needs_universal = true;
  check(f, sig, gfu, r.gfu_violations, r.gfu);

  FragRules gftg;
  gftg.transitive_guards_only = true;
  gftg.constant_free = true;
  check(f, sig, gftg, r.gftg_violations, r.gftg);

  FragRules gfutg;
  gfutg.transitive_guards_only = true;
  gfutg.constant_free = true;
  gfutg.needs_universal = true;
  check(f, sig, gfutg, r.gfutg_violations, r.gfutg);

  FragRules tgftg;
  tgftg.transitive_guards_only = true;
  tgftg.constant_free = true;
  tgftg.equality_free = true;
  tgftg.unguarded_two_var = true;
  check(f, sig, tgftg, r.tgftg_violations, r.tgftg);
  return r;
}

namespace {

std::set<std::string> all_var_names(const Formula& f) {
  std::set<std::string> out;
  switch (f.kind()) {
    case NodeKind::Atom:
    case NodeKind::Equal:
      for (const auto& t : f.args())
        if (t.is_var()) out.insert(t.name);
      return out;
    case NodeKind::Forall:
    case NodeKind::Exists: {
      out = all_var_names(f.body());
      for (const auto& v : f.qvars()) out.insert(v);
      return out;
    }
    default:
      for (int i = 0; i < f.child_count(); ++i) {
        auto k = all_var_names(f.child(i));
        out.insert(k.begin(), k.end());
      }
      return out;
  }
}

std::string fresh_var(std::set<std::string>& used, const std::string& stem) {
  if (!used.count(stem)) {
    used.insert(stem);
    return stem;
  }
  for (int i = 2;; ++i) {
    std::string cand = stem + "_" + std::to_string(i);
    if (!used.count(cand)) {
      used.insert(cand);
      return cand;
    }
  }
}

Formula guard_unguarded(const Formula& f, const Signature& sig) {
  switch (f.kind()) {
    case NodeKind::Atom:
    case NodeKind::Equal:
      return f;
    case NodeKind::Not:
      return Formula::negate(guard_unguarded(f.child(), sig));
    case NodeKind::Forall:
    case NodeKind::Exists: {
      if (auto shape = match_guarded(f.kind(), f.body())) {
        if (shape->matrix.empty()) return f;
        Formula matrix = guard_unguarded(shape->matrix, sig);
        if (matrix == shape->matrix) return f;
        Formula body = f.kind() == NodeKind::Forall ? Formula::implies(shape->guard, matrix)
                                                    : Formula::land(shape->guard, matrix);
        return Formula::quant(f.kind(), f.qvars(), body);
      }
      Formula body = guard_unguarded(f.body(), sig);
      const auto& frees = body.free_vars();
      Formula guard;
      if (frees.size() >= 2) {
        if (frees.size() > 2)
          fail(ErrorKind::Fragment, "unguarded quantifier over " + std::to_string(frees.size()) +
                                        " free variables is not TGF");
        if (!sig.has_universal())
          fail(ErrorKind::Fragment, "signature declares no universal symbol");
        const auto& u = sig.relation(sig.universal());
        guard = Formula::atom(sig.universal(), u.name,
                              {Term::var(frees[0]), Term::var(frees[1])});
      } else {
        std::string v = frees.empty() ? f.qvars().front() : frees[0];
        guard = Formula::equal(Term::var(v), Term::var(v));
      }
      Formula guarded_body = f.kind() == NodeKind::Forall ? Formula::implies(guard, body)
                                                          : Formula::land(guard, body);
      return Formula::quant(f.kind(), f.qvars(), guarded_body);
    }
    default:
      return Formula::conn(f.kind(), guard_unguarded(f.child(0), sig),
                           guard_unguarded(f.child(1), sig));
  }
}

}  // namespace

Formula tgf_to_gfu(const Formula& f, const Signature& sig) {
  FragmentReport r = classify_fragment(f, sig);
  if (!r.tgf)
    fail(ErrorKind::Fragment, "input is not a TGF formula: " +
                                  (r.tgf_violations.empty() ? std::string("unknown")
                                                            : r.tgf_violations[0].rule));
  if (!sig.has_universal()) fail(ErrorKind::Fragment, "signature declares no universal symbol");
  return guard_unguarded(f, sig);
}

Formula gfu_to_tgf(const Formula& f, const Signature& sig) {
  if (f.has_nontrivial_equality())
    fail(ErrorKind::Fragment, "formula uses equality beyond trivial guards");
  if (!sig.has_universal()) fail(ErrorKind::Fragment, "signature declares no universal symbol");
  std::set<std::string> used = all_var_names(f);
  std::string vx = fresh_var(used, "x");
  std::string vy = fresh_var(used, "y");
  const auto& u = sig.relation(sig.universal());
  Formula ub = Formula::forall(
      {vx, vy}, Formula::atom(sig.universal(), u.name, {Term::var(vx), Term::var(vy)}));
  return Formula::land(f, ub);
}

}  // namespace triguard
