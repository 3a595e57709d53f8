#include "normalform.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "fragments.hpp"

namespace triguard {

Formula AEConjunct::to_formula() const {
  Formula inner = matrix.empty() ? eguard : Formula::land(eguard, matrix);
  Formula block = Formula::exists(evars, inner);
  return Formula::forall(uvars, Formula::implies(guard, block));
}

Formula AConjunct::to_formula() const {
  return Formula::forall(uvars, Formula::implies(guard, matrix));
}

Formula NormalFormSentence::to_formula() const {
  std::vector<Formula> parts;
  for (const auto& c : ae) parts.push_back(c.to_formula());
  for (const auto& c : a) parts.push_back(c.to_formula());
  if (parts.empty())
    return Formula::forall({"x"}, Formula::implies(Formula::equal(Term::var("x"), Term::var("x")),
                                                   Formula::equal(Term::var("x"), Term::var("x"))));
  return Formula::conjoin(parts);
}

namespace {

bool subset(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) == b.end()) return false;
  return true;
}

void check_guard(const Formula& g, const std::vector<std::string>& allowed, const char* what) {
  if (g.empty()) fail(ErrorKind::Shape, std::string(what) + " is missing");
  if (g.kind() == NodeKind::Equal) {
    if (!g.trivial_eq())
      fail(ErrorKind::Shape, std::string(what) + " may be an equality only as a trivial x=x");
    return;
  }
  if (g.kind() != NodeKind::Atom) fail(ErrorKind::Shape, std::string(what) + " must be atomic");
  if (!subset(g.free_vars(), allowed))
    fail(ErrorKind::Shape, std::string(what) + " mentions a variable outside its quantifier block");
}

void flatten(const Formula& f, NodeKind k, std::vector<Formula>& out) {
  if (f.kind() == k) {
    flatten(f.child(0), k, out);
    flatten(f.child(1), k, out);
  } else {
    out.push_back(f);
  }
}

}  // namespace

void NormalFormSentence::validate() const {
  for (const auto& c : ae) {
    if (c.uvars.empty() || c.evars.empty())
      fail(ErrorKind::Shape, "forall-exists conjunct needs both variable tuples nonempty");
    for (const auto& u : c.uvars)
      if (std::find(c.evars.begin(), c.evars.end(), u) != c.evars.end())
        fail(ErrorKind::Shape, "variable quantified twice in one conjunct");
    check_guard(c.guard, c.uvars, "outer guard");
    std::vector<std::string> both = c.uvars;
    both.insert(both.end(), c.evars.begin(), c.evars.end());
    check_guard(c.eguard, both, "existential guard");
    if (c.eguard.kind() == NodeKind::Equal &&
        std::find(c.evars.begin(), c.evars.end(), c.eguard.lhs().name) == c.evars.end())
      fail(ErrorKind::Shape, "trivial existential guard must bind an existential variable");
    if (!c.matrix.empty()) {
      if (!c.matrix.is_quantifier_free()) fail(ErrorKind::Shape, "matrix must be quantifier-free");
      if (!subset(c.matrix.free_vars(), c.eguard.free_vars()))
        fail(ErrorKind::Shape, "existential guard does not cover the matrix");
    }
    // The outer guard must cover the free variables of the existential part.
    std::vector<std::string> part = c.eguard.free_vars();
    if (!c.matrix.empty()) {
      const auto& mv = c.matrix.free_vars();
      part.insert(part.end(), mv.begin(), mv.end());
    }
    std::vector<std::string> outer;
    for (const auto& v : part)
      if (std::find(c.evars.begin(), c.evars.end(), v) == c.evars.end()) outer.push_back(v);
    if (!subset(outer, c.guard.free_vars()))
      fail(ErrorKind::Shape, "outer guard does not cover the existential part");
  }
  for (const auto& c : a) {
    if (c.uvars.empty()) fail(ErrorKind::Shape, "forall conjunct needs variables");
    check_guard(c.guard, c.uvars, "guard");
    if (c.matrix.empty()) fail(ErrorKind::Shape, "forall conjunct needs a matrix");
    if (!c.matrix.is_quantifier_free()) fail(ErrorKind::Shape, "matrix must be quantifier-free");
    if (!subset(c.matrix.free_vars(), c.guard.free_vars()))
      fail(ErrorKind::Shape, "guard does not cover the matrix");
  }
}

bool NormalFormSentence::uses_equality_beyond_trivial_guards() const {
  for (const auto& c : ae)
    if ((!c.matrix.empty() && c.matrix.has_nontrivial_equality()) ||
        (c.guard.kind() == NodeKind::Equal && !c.guard.trivial_eq()) ||
        (c.eguard.kind() == NodeKind::Equal && !c.eguard.trivial_eq()))
      return true;
  for (const auto& c : a)
    if (c.matrix.has_nontrivial_equality() ||
        (c.guard.kind() == NodeKind::Equal && !c.guard.trivial_eq()))
      return true;
  return false;
}

void NormalFormSentence::validate_tg_shape() const {
  validate();
  if (!sig->has_aux()) fail(ErrorKind::Shape, "enhanced form needs an aux symbol");
  auto transitive_atom = [&](const Formula& g) {
    return g.kind() == NodeKind::Atom && sig->is_transitive(g.rel());
  };
  for (const auto& c : ae) {
    if (c.tg == TgClass::None) fail(ErrorKind::Shape, "untagged forall-exists conjunct");
    if (transitive_atom(c.guard)) fail(ErrorKind::Shape, "transitive outer guard remains");
    if (!c.matrix.empty() && c.matrix.mentions_transitive(*sig))
      fail(ErrorKind::Shape, "matrix mentions a transitive symbol");
    if (c.tg == TgClass::Tr) {
      if (!transitive_atom(c.eguard))
        fail(ErrorKind::Shape, "tr-conjunct without transitive existential guard");
      if (c.uvars.size() != 1) fail(ErrorKind::Shape, "tr-conjunct outer guard must be unary");
    } else if (transitive_atom(c.eguard)) {
      fail(ErrorKind::Shape, "ntr-conjunct with transitive existential guard");
    }
  }
  for (const auto& c : a)
    if (c.matrix.mentions_transitive(*sig))
      fail(ErrorKind::Shape, "forall matrix mentions a transitive symbol");
  // The Aux closure conjunct must cover every relation.
  std::set<int> covered;
  for (const auto& c : a) {
    if (c.guard.kind() != NodeKind::Atom) continue;
    std::vector<Formula> parts;
    flatten(c.matrix, NodeKind::And, parts);
    bool pure_aux = true;
    for (const auto& p : parts)
      if (p.kind() != NodeKind::Atom || p.rel() != sig->aux()) pure_aux = false;
    if (pure_aux) covered.insert(c.guard.rel());
  }
  for (int r = 0; r < sig->relation_count(); ++r)
    if (!covered.count(r))
      fail(ErrorKind::Shape, "missing Aux closure conjunct for relation " + sig->relation(r).name);
}

std::optional<NormalFormSentence> recognize_normal_form(const Formula& f, SigPtr sig) {
  if (!f.is_sentence()) return std::nullopt;
  std::vector<Formula> conj;
  flatten(f, NodeKind::And, conj);
  NormalFormSentence nf;
  nf.sig = std::move(sig);
  for (const auto& c : conj) {
    if (c.kind() != NodeKind::Forall) return std::nullopt;
    Formula guard, rest;
    if (auto shape = match_guarded(NodeKind::Forall, c.body())) {
      guard = shape->guard;
      rest = shape->matrix;
    } else if (c.body().free_vars().size() <= 1 &&
               (c.body().is_quantifier_free() || c.body().kind() == NodeKind::Exists)) {
      const auto& fv = c.body().free_vars();
      std::string v = fv.empty() ? c.qvars().front() : fv[0];
      guard = Formula::equal(Term::var(v), Term::var(v));
      rest = c.body();
    } else {
      return std::nullopt;
    }
    if (rest.empty()) return std::nullopt;
    if (rest.kind() == NodeKind::Exists) {
      auto inner = match_guarded(NodeKind::Exists, rest.body());
      if (!inner) return std::nullopt;
      if (!inner->matrix.empty() && !inner->matrix.is_quantifier_free()) return std::nullopt;
      AEConjunct ae;
      ae.uvars = c.qvars();
      ae.guard = guard;
      ae.evars = rest.qvars();
      ae.eguard = inner->guard;
      ae.matrix = inner->matrix;
      nf.ae.push_back(std::move(ae));
    } else if (rest.is_quantifier_free()) {
      AConjunct a;
      a.uvars = c.qvars();
      a.guard = guard;
      a.matrix = rest;
      nf.a.push_back(std::move(a));
    } else {
      return std::nullopt;
    }
  }
  try {
    nf.validate();
  } catch (const Error&) {
    return std::nullopt;
  }
  return nf;
}

// ---------------------------------------------------------------------------
// Lemma 1 realization. The sentence is desugared to NNF; every closed
// quantified block (in either polarity) and every ground literal becomes a
// "unit". Disjuncts correspond to truth assignments of the units that satisfy
// the sentence's boolean skeleton, enumerated in binary order. Within a unit,
// open quantified subblocks are renamed to fresh guarded symbols with
// one-directional defining conjuncts; closed subblocks are replaced by their
// assigned truth value.
// ---------------------------------------------------------------------------

namespace {

Formula desugar(const Formula& f) {
  switch (f.kind()) {
    case NodeKind::Atom:
    case NodeKind::Equal:
      return f;
    case NodeKind::Not:
      return Formula::negate(desugar(f.child()));
    case NodeKind::Implies:
      return Formula::lor(Formula::negate(desugar(f.child(0))), desugar(f.child(1)));
    case NodeKind::Iff: {
      Formula a = desugar(f.child(0)), b = desugar(f.child(1));
      return Formula::land(Formula::lor(Formula::negate(a), b),
                           Formula::lor(Formula::negate(b), a));
    }
    case NodeKind::And:
    case NodeKind::Or:
      return Formula::conn(f.kind(), desugar(f.child(0)), desugar(f.child(1)));
    case NodeKind::Forall:
    case NodeKind::Exists:
      return Formula::quant(f.kind(), f.qvars(), desugar(f.body()));
  }
  fail(ErrorKind::Shape, "unreachable");
}

Formula nnf(const Formula& f, bool neg) {
  switch (f.kind()) {
    case NodeKind::Atom:
    case NodeKind::Equal:
      return neg ? Formula::negate(f) : f;
    case NodeKind::Not:
      return nnf(f.child(), !neg);
    case NodeKind::And:
    case NodeKind::Or: {
      NodeKind k = f.kind();
      if (neg) k = (k == NodeKind::And) ? NodeKind::Or : NodeKind::And;
      return Formula::conn(k, nnf(f.child(0), neg), nnf(f.child(1), neg));
    }
    case NodeKind::Forall:
    case NodeKind::Exists: {
      NodeKind k = f.kind();
      if (neg) k = (k == NodeKind::Forall) ? NodeKind::Exists : NodeKind::Forall;
      return Formula::quant(k, f.qvars(), nnf(f.body(), neg));
    }
    default:
      fail(ErrorKind::Shape, "desugar before nnf");
  }
}

// Three-valued formula used while substituting unit truth values.
struct Simp {
  enum Tag { True, False, Some } tag;
  Formula f;

  static Simp truth(bool b) { return {b ? True : False, Formula()}; }
  static Simp of(Formula g) { return {Some, std::move(g)}; }
};

Simp simp_and(Simp a, Simp b) {
  if (a.tag == Simp::False || b.tag == Simp::False) return Simp::truth(false);
  if (a.tag == Simp::True) return b;
  if (b.tag == Simp::True) return a;
  return Simp::of(Formula::land(a.f, b.f));
}

Simp simp_or(Simp a, Simp b) {
  if (a.tag == Simp::True || b.tag == Simp::True) return Simp::truth(true);
  if (a.tag == Simp::False) return b;
  if (b.tag == Simp::False) return a;
  return Simp::of(Formula::lor(a.f, b.f));
}

std::set<std::string> collect_var_names(const Formula& f) {
  std::set<std::string> out;
  std::function<void(const Formula&)> go = [&](const Formula& g) {
    switch (g.kind()) {
      case NodeKind::Atom:
      case NodeKind::Equal:
        for (const auto& t : g.args())
          if (t.is_var()) out.insert(t.name);
        return;
      case NodeKind::Forall:
      case NodeKind::Exists:
        for (const auto& v : g.qvars()) out.insert(v);
        go(g.body());
        return;
      default:
        for (int i = 0; i < g.child_count(); ++i) go(g.child(i));
        return;
    }
  };
  go(f);
  return out;
}

}  // namespace

struct NormalFormEnumerator::Impl {
  struct Unit {
    bool ground;      // ground literal instead of a quantified block
    Formula formula;  // block in positive NNF, or the positive ground atom
  };
  struct Leaf {
    int unit;
    bool flipped;
  };
  struct SkelNode {
    enum Kind { LeafK, AndK, OrK } kind;
    int a = -1, b = -1;
    Leaf leaf{};
  };

  SigPtr sig0;
  std::shared_ptr<Signature> sig;
  std::vector<Unit> units;
  std::map<std::string, int> unit_index;
  std::vector<SkelNode> skeleton;
  int skel_root = -1;
  uint64_t mask = 0;
  uint64_t mask_end = 0;
  bool done = false;
  std::optional<NormalFormSentence> fixpoint;
  int next_fresh = 1;
  std::map<std::string, int> site_symbols;
  std::string wvar;  // fresh variable for simulated existential conjuncts

  explicit Impl(Formula sentence, SigPtr input_sig) : sig0(std::move(input_sig)) {
    if (!sentence.is_sentence()) fail(ErrorKind::Shape, "input is not a sentence");
    sig = std::make_shared<Signature>(*sig0);
    if (auto nf = recognize_normal_form(sentence, sig)) {
      fixpoint = std::move(nf);
      return;
    }
    auto used = collect_var_names(sentence);
    wvar = "w";
    for (int i = 2; used.count(wvar); ++i) wvar = "w_" + std::to_string(i);
    Formula base = nnf(desugar(sentence), false);
    skel_root = build_skeleton(base);
    if (units.size() > 24) fail(ErrorKind::Shape, "too many sentence-level units");
    mask_end = uint64_t(1) << units.size();
  }

  // --- unit registration ---------------------------------------------------

  int register_block(const Formula& block_nnf, bool& flipped) {
    std::string key = block_nnf.print();
    auto it = unit_index.find(key);
    if (it != unit_index.end()) {
      flipped = false;
      return it->second;
    }
    Formula dual = nnf(Formula::negate(block_nnf), false);
    std::string dual_key = dual.print();
    auto jt = unit_index.find(dual_key);
    if (jt != unit_index.end()) {
      flipped = true;
      return jt->second;
    }
    units.push_back({false, block_nnf});
    int id = static_cast<int>(units.size()) - 1;
    unit_index[key] = id;
    flipped = false;
    // Closed blocks nested in either orientation become units as well.
    scan_nested(block_nnf.body());
    scan_nested(dual.body());
    return id;
  }

  int register_ground(const Formula& lit, bool& flipped) {
    Formula pos = lit.kind() == NodeKind::Not ? lit.child() : lit;
    flipped = lit.kind() == NodeKind::Not;
    std::string key = pos.print();
    auto it = unit_index.find(key);
    if (it != unit_index.end()) return it->second;
    units.push_back({true, pos});
    int id = static_cast<int>(units.size()) - 1;
    unit_index[key] = id;
    return id;
  }

  void scan_nested(const Formula& f) {
    switch (f.kind()) {
      case NodeKind::Atom:
      case NodeKind::Equal:
        return;
      case NodeKind::Not:
        scan_nested(f.child());
        return;
      case NodeKind::Forall:
      case NodeKind::Exists:
        if (f.is_sentence()) {
          bool flipped;
          register_block(f, flipped);
        } else {
          scan_nested(f.body());
        }
        return;
      default:
        scan_nested(f.child(0));
        scan_nested(f.child(1));
        return;
    }
  }

  int build_skeleton(const Formula& f) {
    switch (f.kind()) {
      case NodeKind::And:
      case NodeKind::Or: {
        int a = build_skeleton(f.child(0));
        int b = build_skeleton(f.child(1));
        skeleton.push_back({f.kind() == NodeKind::And ? SkelNode::AndK : SkelNode::OrK, a, b, {}});
        return static_cast<int>(skeleton.size()) - 1;
      }
      case NodeKind::Forall:
      case NodeKind::Exists: {
        bool flipped;
        int u = register_block(f, flipped);
        skeleton.push_back({SkelNode::LeafK, -1, -1, {u, flipped}});
        return static_cast<int>(skeleton.size()) - 1;
      }
      case NodeKind::Atom:
      case NodeKind::Equal:
      case NodeKind::Not: {
        if (!f.is_sentence()) fail(ErrorKind::Shape, "free variable at sentence level");
        bool flipped;
        int u = register_ground(f, flipped);
        skeleton.push_back({SkelNode::LeafK, -1, -1, {u, flipped}});
        return static_cast<int>(skeleton.size()) - 1;
      }
      default:
        fail(ErrorKind::Shape, "unexpected connective after desugaring");
    }
  }

  bool eval_skeleton(int node, uint64_t m) const {
    const SkelNode& n = skeleton[static_cast<size_t>(node)];
    switch (n.kind) {
      case SkelNode::LeafK: {
        bool v = (m >> n.leaf.unit) & 1;
        return n.leaf.flipped ? !v : v;
      }
      case SkelNode::AndK:
        return eval_skeleton(n.a, m) && eval_skeleton(n.b, m);
      case SkelNode::OrK:
        return eval_skeleton(n.a, m) || eval_skeleton(n.b, m);
    }
    return false;
  }

  // --- fresh symbols ---------------------------------------------------------

  int site_symbol(const std::string& site, int arity) {
    auto it = site_symbols.find(site);
    if (it != site_symbols.end()) {
      if (sig->arity(it->second) != arity)
        fail(ErrorKind::Construction, "renaming site changed arity across masks");
      return it->second;
    }
    std::string name = "_nf" + std::to_string(next_fresh++);
    int rel = sig->add_relation(name, arity);
    site_symbols[site] = rel;
    return rel;
  }

  // --- compilation -----------------------------------------------------------

  // Replaces proper closed subblocks by their assigned truth and simplifies.
  Simp substitute_units(const Formula& f, uint64_t m) {
    switch (f.kind()) {
      case NodeKind::Atom:
      case NodeKind::Equal:
      case NodeKind::Not:
        return Simp::of(f);
      case NodeKind::And:
        return simp_and(substitute_units(f.child(0), m), substitute_units(f.child(1), m));
      case NodeKind::Or:
        return simp_or(substitute_units(f.child(0), m), substitute_units(f.child(1), m));
      case NodeKind::Forall:
      case NodeKind::Exists: {
        if (f.is_sentence()) {
          bool flipped;
          int u = register_block(f, flipped);
          bool v = (m >> u) & 1;
          return Simp::truth(flipped ? !v : v);
        }
        Simp body = substitute_units(f.body(), m);
        if (body.tag == Simp::Some) {
          if (body.f == f.body()) return Simp::of(f);
          return Simp::of(Formula::quant(f.kind(), f.qvars(), body.f));
        }
        // A quantifier over a constant body collapses (domains are nonempty).
        return body;
      }
      default:
        fail(ErrorKind::Shape, "unexpected connective in substitution");
    }
  }

  struct GuardSplit {
    Formula guard;
    Formula rest;  // may be empty (true)
  };

  std::optional<GuardSplit> split_parts(std::vector<Formula>& parts, bool negated_guard,
                                        NodeKind join) {
    for (size_t i = 0; i < parts.size(); ++i) {
      Formula g = parts[i];
      if (negated_guard) {
        if (g.kind() != NodeKind::Not) continue;
        g = g.child();
      }
      bool usable = g.kind() == NodeKind::Atom || (g.kind() == NodeKind::Equal && g.trivial_eq());
      if (!usable) continue;
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
      if (!subset(rest_vars, g.free_vars())) continue;
      Formula rest_f;
      if (!rest.empty())
        rest_f = join == NodeKind::And ? Formula::conjoin(rest) : Formula::disjoin(rest);
      return GuardSplit{g, rest_f};
    }
    return std::nullopt;
  }

  std::optional<GuardSplit> split_exists(const Formula& body) {
    std::vector<Formula> parts;
    flatten(body, NodeKind::And, parts);
    return split_parts(parts, false, NodeKind::And);
  }

  std::optional<GuardSplit> split_forall(const Formula& body) {
    std::vector<Formula> parts;
    flatten(body, NodeKind::Or, parts);
    return split_parts(parts, true, NodeKind::Or);
  }

  std::vector<std::string> live_qvars(const std::vector<std::string>& vars, const Formula& body) {
    std::vector<std::string> out;
    const auto& fv = body.free_vars();
    for (const auto& v : vars)
      if (std::binary_search(fv.begin(), fv.end(), v)) out.push_back(v);
    return out;
  }

  // Renames open quantified blocks bottom-up to fresh guarded atoms with
  // one-directional defining conjuncts. Site strings keep symbol allocation
  // deterministic across masks.
  Formula rename_blocks(const Formula& f, uint64_t m, const std::string& site,
                        std::vector<AEConjunct>& ae, std::vector<AConjunct>& a) {
    switch (f.kind()) {
      case NodeKind::Atom:
      case NodeKind::Equal:
      case NodeKind::Not:
        return f;
      case NodeKind::And:
      case NodeKind::Or:
        return Formula::conn(f.kind(), rename_blocks(f.child(0), m, site + "0", ae, a),
                             rename_blocks(f.child(1), m, site + "1", ae, a));
      case NodeKind::Forall:
      case NodeKind::Exists: {
        if (f.is_sentence()) fail(ErrorKind::Construction, "unsubstituted closed block");
        Formula body = rename_blocks(f.body(), m, site + "q", ae, a);
        std::vector<std::string> qv = live_qvars(f.qvars(), body);
        if (qv.empty()) return body;
        std::vector<std::string> frees;
        for (const auto& v : body.free_vars())
          if (std::find(qv.begin(), qv.end(), v) == qv.end()) frees.push_back(v);
        int h = site_symbol(site + "H", static_cast<int>(frees.size()));
        std::vector<Term> hargs;
        for (const auto& v : frees) hargs.push_back(Term::var(v));
        Formula hatom = Formula::atom(h, sig->relation(h).name, hargs);
        if (f.kind() == NodeKind::Exists) {
          AEConjunct c;
          c.uvars = frees;
          c.guard = hatom;
          c.evars = qv;
          if (auto gs = split_exists(body)) {
            c.eguard = gs->guard;
            c.matrix = gs->rest;
          } else if (body.free_vars().size() <= 1) {
            c.eguard = Formula::equal(Term::var(qv[0]), Term::var(qv[0]));
            c.matrix = body;
          } else {
            fail(ErrorKind::Fragment, "unguarded existential block over " +
                                          std::to_string(body.free_vars().size()) +
                                          " free variables");
          }
          ae.push_back(std::move(c));
        } else {
          AConjunct c;
          c.uvars = frees;
          c.uvars.insert(c.uvars.end(), qv.begin(), qv.end());
          if (auto gs = split_forall(body)) {
            c.guard = gs->guard;
            c.matrix = gs->rest.empty() ? Formula::negate(hatom)
                                        : Formula::lor(Formula::negate(hatom), gs->rest);
          } else if (body.free_vars().size() <= 1) {
            std::string v = body.free_vars().empty() ? qv[0] : body.free_vars()[0];
            c.guard = Formula::equal(Term::var(v), Term::var(v));
            c.matrix = Formula::lor(Formula::negate(hatom), body);
          } else {
            fail(ErrorKind::Fragment, "unguarded universal block over " +
                                          std::to_string(body.free_vars().size()) +
                                          " free variables");
          }
          a.push_back(std::move(c));
        }
        return hatom;
      }
      default:
        fail(ErrorKind::Shape, "unexpected connective during renaming");
    }
  }

  void emit_unsat(std::vector<AConjunct>& a) {
    AConjunct c;
    c.uvars = {wvar};
    c.guard = Formula::equal(Term::var(wvar), Term::var(wvar));
    c.matrix = Formula::negate(Formula::equal(Term::var(wvar), Term::var(wvar)));
    a.push_back(std::move(c));
  }

  // Asserts a closed quantifier-free formula.
  void emit_qf(const Formula& f, std::vector<AConjunct>& a) {
    AConjunct c;
    c.uvars = {wvar};
    c.guard = Formula::equal(Term::var(wvar), Term::var(wvar));
    c.matrix = f;
    a.push_back(std::move(c));
  }

  // Asserts one closed quantified block under the given unit assignment.
  void emit_block(const Formula& f, uint64_t m, const std::string& site,
                  std::vector<AEConjunct>& ae, std::vector<AConjunct>& a) {
    Simp sb = substitute_units(f.body(), m);
    if (sb.tag != Simp::Some) {
      if (sb.tag == Simp::False) emit_unsat(a);
      return;  // trivially true otherwise
    }
    Formula body = rename_blocks(sb.f, m, site + "q", ae, a);
    std::vector<std::string> qv = live_qvars(f.qvars(), body);
    if (qv.empty()) {
      if (!body.is_quantifier_free())
        fail(ErrorKind::Construction, "renaming left a quantifier behind");
      emit_qf(body, a);
      return;
    }
    if (f.kind() == NodeKind::Forall) {
      AConjunct c;
      c.uvars = qv;
      if (auto gs = split_forall(body)) {
        c.guard = gs->guard;
        c.matrix = gs->rest.empty()
                       ? Formula::negate(Formula::equal(Term::var(qv[0]), Term::var(qv[0])))
                       : gs->rest;
      } else if (body.free_vars().size() <= 1) {
        std::string v = body.free_vars().empty() ? qv[0] : body.free_vars()[0];
        c.guard = Formula::equal(Term::var(v), Term::var(v));
        c.matrix = body;
      } else {
        fail(ErrorKind::Fragment, "unguarded universal sentence block");
      }
      a.push_back(std::move(c));
      return;
    }
    // Existential sentence: simulate by a forall-exists conjunct.
    auto gs = split_exists(body);
    if (!gs && body.free_vars().size() > 1)
      fail(ErrorKind::Fragment, "unguarded existential sentence block");
    Formula eguard = gs ? gs->guard : Formula::equal(Term::var(qv[0]), Term::var(qv[0]));
    Formula matrix = gs ? gs->rest : body;
    bool transitive_guard = eguard.kind() == NodeKind::Atom && sig->is_transitive(eguard.rel());
    if (transitive_guard) {
      // Keep the transitive atom in guard position: name the subblock over
      // one of its variables, then simulate the outer existential.
      std::string pivot = eguard.free_vars().front();
      std::vector<std::string> inner_vars;
      for (const auto& v : qv)
        if (v != pivot) inner_vars.push_back(v);
      int hsym = site_symbol(site + "T", 1);
      Formula hatom = Formula::atom(hsym, sig->relation(hsym).name, {Term::var(pivot)});
      if (!inner_vars.empty()) {
        AEConjunct def;
        def.uvars = {pivot};
        def.guard = hatom;
        def.evars = inner_vars;
        def.eguard = eguard;
        def.matrix = matrix;
        ae.push_back(std::move(def));
      } else {
        // T(y,y) guard: re-express through a guarded equality witness.
        std::string y2 = pivot + "_w";
        while (collect_var_names(matrix.empty() ? eguard : matrix).count(y2)) y2 += "_";
        AEConjunct def;
        def.uvars = {pivot};
        def.guard = hatom;
        def.evars = {y2};
        def.eguard = Formula::atom(eguard.rel(), eguard.rel_name(),
                                   {Term::var(pivot), Term::var(y2)});
        Formula eq = Formula::equal(Term::var(y2), Term::var(pivot));
        def.matrix = matrix.empty() ? eq : Formula::land(eq, matrix);
        ae.push_back(std::move(def));
      }
      int g = site_symbol(site + "G", 2);
      AEConjunct sim;
      sim.uvars = {wvar};
      sim.guard = Formula::equal(Term::var(wvar), Term::var(wvar));
      sim.evars = {pivot};
      sim.eguard = Formula::atom(g, sig->relation(g).name, {Term::var(wvar), Term::var(pivot)});
      sim.matrix = hatom;
      ae.push_back(std::move(sim));
      return;
    }
    int g = site_symbol(site + "G", static_cast<int>(qv.size()) + 1);
    std::vector<Term> gargs{Term::var(wvar)};
    for (const auto& v : qv) gargs.push_back(Term::var(v));
    AEConjunct sim;
    sim.uvars = {wvar};
    sim.guard = Formula::equal(Term::var(wvar), Term::var(wvar));
    sim.evars = qv;
    sim.eguard = Formula::atom(g, sig->relation(g).name, gargs);
    sim.matrix = matrix.empty() ? eguard : Formula::land(eguard, matrix);
    ae.push_back(std::move(sim));
  }

  void encode_unit(int u, bool value, uint64_t m, std::vector<AEConjunct>& ae,
                   std::vector<AConjunct>& a) {
    const Unit& unit = units[static_cast<size_t>(u)];
    std::string site = "u" + std::to_string(u) + (value ? "+" : "-");
    if (unit.ground) {
      emit_qf(value ? unit.formula : Formula::negate(unit.formula), a);
      return;
    }
    Formula block = value ? unit.formula : nnf(Formula::negate(unit.formula), false);
    emit_block(block, m, site, ae, a);
  }

  std::optional<NormalFormSentence> next() {
    if (fixpoint) {
      if (done) return std::nullopt;
      done = true;
      NormalFormSentence nf = *fixpoint;
      return nf;
    }
    while (mask < mask_end) {
      uint64_t m = mask++;
      if (!eval_skeleton(skel_root, m)) continue;
      NormalFormSentence nf;
      for (size_t u = 0; u < units.size(); ++u)
        encode_unit(static_cast<int>(u), (m >> u) & 1, m, nf.ae, nf.a);
      if (nf.ae.empty() && nf.a.empty()) {
        AConjunct c;
        c.uvars = {wvar};
        c.guard = Formula::equal(Term::var(wvar), Term::var(wvar));
        c.matrix = Formula::equal(Term::var(wvar), Term::var(wvar));
        nf.a.push_back(std::move(c));
      }
      nf.sig = std::make_shared<Signature>(*sig);
      nf.validate();
      return nf;
    }
    return std::nullopt;
  }
};

NormalFormEnumerator::NormalFormEnumerator(Formula sentence, SigPtr sig)
    : impl_(std::make_unique<Impl>(std::move(sentence), std::move(sig))) {}
NormalFormEnumerator::~NormalFormEnumerator() = default;
NormalFormEnumerator::NormalFormEnumerator(NormalFormEnumerator&&) noexcept = default;
NormalFormEnumerator& NormalFormEnumerator::operator=(NormalFormEnumerator&&) noexcept = default;

SigPtr NormalFormEnumerator::extended_signature() const {
  return std::make_shared<Signature>(*impl_->sig);
}

std::optional<NormalFormSentence> NormalFormEnumerator::next() { return impl_->next(); }

// ---------------------------------------------------------------------------
// Enhanced transitive-guard normal form (shape (5)).
// ---------------------------------------------------------------------------

NormalFormSentence enhance_tg_normal_form(const NormalFormSentence& nf) {
  nf.validate();
  auto sig = std::make_shared<Signature>(*nf.sig);
  if (!sig->has_aux()) sig->set_aux("_Aux");
  int aux = sig->aux();
  const std::string& aux_name = sig->relation(aux).name;

  NormalFormSentence out;
  out.a = nf.a;
  auto transitive_atom = [&](const Formula& g) {
    return g.kind() == NodeKind::Atom && sig->is_transitive(g.rel());
  };

  std::vector<AEConjunct> ae = nf.ae;
  int idx = 0;
  for (auto& c : ae) {
    ++idx;
    if (!transitive_atom(c.guard)) continue;
    // Transitive outer guard: swap in a fresh non-transitive symbol and keep
    // the transitive atom behind a forall-conjunct.
    std::string gname = sig->fresh_name("G" + std::to_string(idx));
    int g = sig->add_relation(gname, static_cast<int>(c.guard.args().size()));
    Formula gatom = Formula::atom(g, gname, c.guard.args());
    AConjunct link;
    link.uvars = c.uvars;
    link.guard = c.guard;
    link.matrix = gatom;
    out.a.push_back(std::move(link));
    c.guard = gatom;
  }
  idx = 0;
  for (auto& c : ae) {
    ++idx;
    c.tg = transitive_atom(c.eguard) ? TgClass::Tr : TgClass::Ntr;
    if (c.tg != TgClass::Tr || c.uvars.size() == 1) continue;
    // Route the conjunct through a fresh unary symbol over the one universal
    // variable the existential part depends on.
    std::string xj;
    for (const auto& v : c.eguard.free_vars())
      if (std::find(c.uvars.begin(), c.uvars.end(), v) != c.uvars.end()) xj = v;
    if (xj.empty() && !c.matrix.empty())
      for (const auto& v : c.matrix.free_vars())
        if (std::find(c.uvars.begin(), c.uvars.end(), v) != c.uvars.end()) xj = v;
    if (xj.empty()) xj = c.uvars.front();
    int j = static_cast<int>(std::find(c.uvars.begin(), c.uvars.end(), xj) - c.uvars.begin()) + 1;
    std::string gname = sig->fresh_name("G" + std::to_string(idx) + "_" + std::to_string(j));
    int g = sig->add_relation(gname, 1);
    Formula gatom = Formula::atom(g, gname, {Term::var(xj)});
    AConjunct bridge;
    bridge.uvars = c.uvars;
    bridge.guard = c.guard;
    bridge.matrix = gatom;
    out.a.push_back(std::move(bridge));
    c.uvars = {xj};
    c.guard = gatom;
  }
  out.ae = std::move(ae);

  static const char* names[kMaxArity] = {"x", "y", "z", "u", "v", "t"};
  for (int r = 0; r < sig->relation_count(); ++r) {
    int k = sig->arity(r);
    std::vector<std::string> vars(names, names + k);
    std::vector<Term> args;
    for (const auto& v : vars) args.push_back(Term::var(v));
    std::vector<Formula> auxes;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        auxes.push_back(Formula::atom(aux, aux_name, {Term::var(vars[static_cast<size_t>(i)]),
                                                      Term::var(vars[static_cast<size_t>(j)])}));
    AConjunct c;
    c.uvars = vars;
    c.guard = Formula::atom(r, sig->relation(r).name, args);
    c.matrix = Formula::conjoin(auxes);
    bool dup = false;
    for (const auto& e : out.a)
      if (e.uvars == c.uvars && e.guard == c.guard && e.matrix == c.matrix) dup = true;
    if (!dup) out.a.push_back(std::move(c));
  }

  out.sig = sig;
  for (auto& c : out.ae)
    if (!c.matrix.empty() && c.matrix.mentions_transitive(*sig))
      fail(ErrorKind::Fragment, "matrix mentions a transitive symbol; input is outside the fragment");
  out.validate_tg_shape();
  return out;
}

}  // namespace triguard
