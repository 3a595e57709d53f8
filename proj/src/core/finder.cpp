#include "finder.hpp"

#include <algorithm>
#include <functional>

namespace triguard {

namespace {

enum : int8_t { V_FALSE = 0, V_TRUE = 1, V_UNKNOWN = 2 };

// Ground formula over atom ids, with equalities resolved at compile time.
struct GroundF {
  enum Op : uint8_t { FALSE_, TRUE_, ATOM, NATOM, AND, OR } op;
  int a = -1, b = -1;  // atom id, or child node indices
};

class GroundPool {
 public:
  std::vector<GroundF> nodes;

  int mk(GroundF n) {
    nodes.push_back(n);
    return static_cast<int>(nodes.size()) - 1;
  }
  int mk_const(bool v) { return mk({v ? GroundF::TRUE_ : GroundF::FALSE_, -1, -1}); }
  int mk_atom(int atom, bool positive) {
    return mk({positive ? GroundF::ATOM : GroundF::NATOM, atom, -1});
  }
  int mk_bin(GroundF::Op op, int a, int b) {
    const GroundF& na = nodes[static_cast<size_t>(a)];
    const GroundF& nb = nodes[static_cast<size_t>(b)];
    if (op == GroundF::AND) {
      if (na.op == GroundF::FALSE_ || nb.op == GroundF::FALSE_) return mk_const(false);
      if (na.op == GroundF::TRUE_) return b;
      if (nb.op == GroundF::TRUE_) return a;
    } else {
      if (na.op == GroundF::TRUE_ || nb.op == GroundF::TRUE_) return mk_const(true);
      if (na.op == GroundF::FALSE_) return b;
      if (nb.op == GroundF::FALSE_) return a;
    }
    return mk({op, a, b});
  }

  int8_t eval(int id, const std::vector<int8_t>& val) const {
    const GroundF& n = nodes[static_cast<size_t>(id)];
    switch (n.op) {
      case GroundF::FALSE_: return V_FALSE;
      case GroundF::TRUE_: return V_TRUE;
      case GroundF::ATOM: return val[static_cast<size_t>(n.a)];
      case GroundF::NATOM: {
        int8_t v = val[static_cast<size_t>(n.a)];
        return v == V_UNKNOWN ? V_UNKNOWN : (v == V_TRUE ? V_FALSE : V_TRUE);
      }
      case GroundF::AND: {
        int8_t x = eval(n.a, val), y = eval(n.b, val);
        if (x == V_FALSE || y == V_FALSE) return V_FALSE;
        if (x == V_TRUE && y == V_TRUE) return V_TRUE;
        return V_UNKNOWN;
      }
      case GroundF::OR: {
        int8_t x = eval(n.a, val), y = eval(n.b, val);
        if (x == V_TRUE || y == V_TRUE) return V_TRUE;
        if (x == V_FALSE && y == V_FALSE) return V_FALSE;
        return V_UNKNOWN;
      }
    }
    return V_UNKNOWN;
  }

  void atoms_of(int id, std::vector<int>& out) const {
    const GroundF& n = nodes[static_cast<size_t>(id)];
    switch (n.op) {
      case GroundF::ATOM:
      case GroundF::NATOM:
        out.push_back(n.a);
        return;
      case GroundF::AND:
      case GroundF::OR:
        atoms_of(n.a, out);
        atoms_of(n.b, out);
        return;
      default:
        return;
    }
  }

  // Collects atoms still unknown under `val`, up to `cap` distinct ones.
  void unknown_atoms(int id, const std::vector<int8_t>& val, std::vector<int>& out,
                     size_t cap) const {
    if (out.size() >= cap) return;
    const GroundF& n = nodes[static_cast<size_t>(id)];
    switch (n.op) {
      case GroundF::ATOM:
      case GroundF::NATOM:
        if (val[static_cast<size_t>(n.a)] == V_UNKNOWN &&
            std::find(out.begin(), out.end(), n.a) == out.end())
          out.push_back(n.a);
        return;
      case GroundF::AND:
      case GroundF::OR:
        unknown_atoms(n.a, val, out, cap);
        unknown_atoms(n.b, val, out, cap);
        return;
      default:
        return;
    }
  }
};

struct AInst {
  int guard_atom;  // -1: trivially true
  int matrix;      // GroundF id
};

struct AEInst {
  int guard_atom;               // -1: trivially true
  std::vector<int> candidates;  // GroundF ids, one per witness tuple
};

// One search problem at a fixed domain size and constant interpretation.
class Search {
 public:
  Search(const NormalFormSentence& nf, const SearchConfig& cfg, int n,
         const std::map<std::string, int>& cmap, SearchStats* stats)
      : nf_(nf), cfg_(cfg), n_(n), cmap_(cmap), stats_(stats), sig_(*nf.sig) {
    offsets_.resize(static_cast<size_t>(sig_.relation_count()) + 1, 0);
    for (int r = 0; r < sig_.relation_count(); ++r) {
      long long cnt = 1;
      for (int i = 0; i < sig_.arity(r); ++i) cnt *= n_;
      offsets_[static_cast<size_t>(r) + 1] = offsets_[static_cast<size_t>(r)] + static_cast<int>(cnt);
    }
    val_.assign(static_cast<size_t>(offsets_.back()), V_UNKNOWN);
    watch_.resize(val_.size());
    compile();
  }

  // Runs the search; calls `yield` per model; returns false when interrupted.
  bool run(const std::function<bool(Structure)>& yield) {
    if (!preassign()) return true;
    // Initial sweep establishes consistency of constraints that no
    // assignment will ever touch (constant matrices, empty candidate lists).
    for (size_t i = 0; i < a_.size(); ++i)
      if (!check_a(static_cast<int>(i))) return true;
    for (size_t i = 0; i < ae_.size(); ++i)
      if (!check_ae(static_cast<int>(i))) return true;
    if (!flush_queue()) return true;
    return dpll(yield);
  }

 private:
  int atom_id(int rel, const Tup& t) const {
    int acc = 0;
    for (int i = 0; i < t.size(); ++i) acc = acc * n_ + t[i];
    return offsets_[static_cast<size_t>(rel)] + acc;
  }

  void atom_tuple(int id, int& rel, Tup& t) const {
    rel = static_cast<int>(std::upper_bound(offsets_.begin(), offsets_.end(), id) -
                           offsets_.begin()) - 1;
    int acc = id - offsets_[static_cast<size_t>(rel)];
    int a = sig_.arity(rel);
    t = Tup{};
    for (int i = 0; i < a; ++i) t.push(0);
    for (int i = a - 1; i >= 0; --i) {
      t[i] = acc % n_;
      acc /= n_;
    }
  }

  int resolve_term(const Term& t, const std::vector<std::string>& vars,
                   const std::vector<int>& vals) const {
    if (!t.is_var()) return cmap_.at(sig_.constant(t.constant_index));
    for (size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == t.name) return vals[i];
    fail(ErrorKind::Construction, "unbound variable " + t.name + " in finder compile");
  }

  int compile_formula(const Formula& f, const std::vector<std::string>& vars,
                      const std::vector<int>& vals) {
    switch (f.kind()) {
      case NodeKind::Atom: {
        Tup t;
        for (const auto& a : f.args()) t.push(resolve_term(a, vars, vals));
        return pool_.mk_atom(atom_id(f.rel(), t), true);
      }
      case NodeKind::Equal:
        return pool_.mk_const(resolve_term(f.lhs(), vars, vals) ==
                              resolve_term(f.rhs(), vars, vals));
      case NodeKind::Not: {
        int c = compile_formula(f.child(), vars, vals);
        const GroundF& nc = pool_.nodes[static_cast<size_t>(c)];
        if (nc.op == GroundF::TRUE_) return pool_.mk_const(false);
        if (nc.op == GroundF::FALSE_) return pool_.mk_const(true);
        if (nc.op == GroundF::ATOM) return pool_.mk_atom(nc.a, false);
        if (nc.op == GroundF::NATOM) return pool_.mk_atom(nc.a, true);
        // Push negation inward to keep the pool NNF-only.
        return negate_node(c);
      }
      case NodeKind::And:
        return pool_.mk_bin(GroundF::AND, compile_formula(f.child(0), vars, vals),
                            compile_formula(f.child(1), vars, vals));
      case NodeKind::Or:
        return pool_.mk_bin(GroundF::OR, compile_formula(f.child(0), vars, vals),
                            compile_formula(f.child(1), vars, vals));
      case NodeKind::Implies:
        return pool_.mk_bin(GroundF::OR, negate_node(compile_formula(f.child(0), vars, vals)),
                            compile_formula(f.child(1), vars, vals));
      case NodeKind::Iff: {
        int a = compile_formula(f.child(0), vars, vals);
        int b = compile_formula(f.child(1), vars, vals);
        return pool_.mk_bin(GroundF::OR, pool_.mk_bin(GroundF::AND, a, b),
                            pool_.mk_bin(GroundF::AND, negate_node(a), negate_node(b)));
      }
      default:
        fail(ErrorKind::Shape, "quantifier inside a matrix");
    }
  }

  int negate_node(int id) {
    const GroundF& n = pool_.nodes[static_cast<size_t>(id)];
    switch (n.op) {
      case GroundF::TRUE_: return pool_.mk_const(false);
      case GroundF::FALSE_: return pool_.mk_const(true);
      case GroundF::ATOM: return pool_.mk_atom(n.a, false);
      case GroundF::NATOM: return pool_.mk_atom(n.a, true);
      case GroundF::AND: {
        int a = negate_node(n.a), b = negate_node(n.b);
        return pool_.mk_bin(GroundF::OR, a, b);
      }
      case GroundF::OR: {
        int a = negate_node(n.a), b = negate_node(n.b);
        return pool_.mk_bin(GroundF::AND, a, b);
      }
    }
    return pool_.mk_const(false);
  }

  // Enumerates assignments of `vars` over the domain.
  template <typename Fn>
  void for_each_assignment(size_t k, std::vector<int>& vals, Fn&& fn) {
    if (k == vals.size()) {
      fn();
      return;
    }
    for (int e = 0; e < n_; ++e) {
      vals[k] = e;
      for_each_assignment(k + 1, vals, fn);
    }
  }

  int compile_guard(const Formula& guard, const std::vector<std::string>& vars,
                    const std::vector<int>& vals) {
    if (guard.kind() == NodeKind::Equal) return -1;  // trivial guard
    Tup t;
    for (const auto& a : guard.args()) t.push(resolve_term(a, vars, vals));
    return atom_id(guard.rel(), t);
  }

  void watch_atoms(int gf, int constraint, bool ae) {
    std::vector<int> atoms;
    pool_.atoms_of(gf, atoms);
    std::sort(atoms.begin(), atoms.end());
    atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
    for (int a : atoms) {
      auto& w = watch_[static_cast<size_t>(a)];
      int code = ae ? (constraint | (1 << 30)) : constraint;
      if (w.empty() || w.back() != code) w.push_back(code);
    }
  }

  void compile() {
    for (const auto& c : nf_.a) {
      std::vector<int> vals(c.uvars.size(), 0);
      for_each_assignment(0, vals, [&] {
        int guard = compile_guard(c.guard, c.uvars, vals);
        int m = compile_formula(c.matrix, c.uvars, vals);
        const GroundF& nm = pool_.nodes[static_cast<size_t>(m)];
        if (nm.op == GroundF::TRUE_) return;
        a_.push_back({guard, m});
        int idx = static_cast<int>(a_.size()) - 1;
        if (guard >= 0) watch_[static_cast<size_t>(guard)].push_back(idx);
        watch_atoms(m, idx, false);
      });
    }
    for (const auto& c : nf_.ae) {
      std::vector<int> vals(c.uvars.size(), 0);
      for_each_assignment(0, vals, [&] {
        AEInst inst;
        inst.guard_atom = compile_guard(c.guard, c.uvars, vals);
        std::vector<std::string> all = c.uvars;
        all.insert(all.end(), c.evars.begin(), c.evars.end());
        std::vector<int> evals(c.evars.size(), 0);
        std::vector<int> both = vals;
        both.resize(all.size());
        std::function<void(size_t)> rec = [&](size_t k) {
          if (k == c.evars.size()) {
            int g = c.eguard.kind() == NodeKind::Equal
                        ? pool_.mk_const(true)
                        : compile_formula(c.eguard, all, both);
            int m = c.matrix.empty() ? pool_.mk_const(true) : compile_formula(c.matrix, all, both);
            int cand = pool_.mk_bin(GroundF::AND, g, m);
            const GroundF& nc = pool_.nodes[static_cast<size_t>(cand)];
            if (nc.op != GroundF::FALSE_) inst.candidates.push_back(cand);
            return;
          }
          for (int e = 0; e < n_; ++e) {
            both[c.uvars.size() + k] = e;
            rec(k + 1);
          }
        };
        rec(0);
        ae_.push_back(std::move(inst));
        int idx = static_cast<int>(ae_.size()) - 1;
        if (ae_.back().guard_atom >= 0)
          watch_[static_cast<size_t>(ae_.back().guard_atom)].push_back(idx | (1 << 30));
        for (int cand : ae_.back().candidates) watch_atoms(cand, idx, true);
      });
    }
    // Hard-wired transitivity clauses keep assignments closed during search.
    if (cfg_.transitive) {
      for (int t : sig_.transitive_relations()) {
        for (int x = 0; x < n_; ++x)
          for (int y = 0; y < n_; ++y)
            for (int z = 0; z < n_; ++z) {
              if (x == z && x == y) continue;
              int axy = atom_id(t, Tup{x, y});
              int ayz = atom_id(t, Tup{y, z});
              int axz = atom_id(t, Tup{x, z});
              int m = pool_.mk_bin(
                  GroundF::OR, pool_.mk_atom(axy, false),
                  pool_.mk_bin(GroundF::OR, pool_.mk_atom(ayz, false), pool_.mk_atom(axz, true)));
              a_.push_back({-1, m});
              watch_atoms(m, static_cast<int>(a_.size()) - 1, false);
            }
      }
    }
    if (cfg_.ramified) {
      const auto& ts = sig_.transitive_relations();
      for (size_t i = 0; i < ts.size(); ++i)
        for (size_t j = i + 1; j < ts.size(); ++j)
          for (int x = 0; x < n_; ++x)
            for (int y = x + 1; y < n_; ++y) {
              int ti = pool_.mk_bin(GroundF::OR, pool_.mk_atom(atom_id(ts[i], Tup{x, y}), true),
                                    pool_.mk_atom(atom_id(ts[i], Tup{y, x}), true));
              int tj = pool_.mk_bin(GroundF::OR, pool_.mk_atom(atom_id(ts[j], Tup{x, y}), true),
                                    pool_.mk_atom(atom_id(ts[j], Tup{y, x}), true));
              int m = negate_node(pool_.mk_bin(GroundF::AND, ti, tj));
              a_.push_back({-1, m});
              watch_atoms(m, static_cast<int>(a_.size()) - 1, false);
            }
    }
  }

  bool assign(int atom, int8_t v) {
    int8_t& cur = val_[static_cast<size_t>(atom)];
    if (cur != V_UNKNOWN) return cur == v;
    cur = v;
    trail_.push_back(atom);
    queue_.push_back(atom);
    return true;
  }

  // Relations that occur only positively and only inside existential parts
  // (the eguard or the matrix of forall-exists conjuncts) can be made total
  // without affecting satisfiability: guards of other conjuncts never see
  // them and witnesses only get easier. This collapses the fresh simulation
  // symbols introduced by normalization.
  void collect_pure_existential(std::vector<bool>& pure) const {
    pure.assign(static_cast<size_t>(sig_.relation_count()), true);
    std::vector<bool> occurs(static_cast<size_t>(sig_.relation_count()), false);
    // polarity: +1 positive only, -1 negative only, 0 mixed context.
    std::function<void(const Formula&, bool, bool)> scan =
        [&](const Formula& f, bool positive, bool existential_part) {
          switch (f.kind()) {
            case NodeKind::Atom:
              occurs[static_cast<size_t>(f.rel())] = true;
              if (!positive || !existential_part) pure[static_cast<size_t>(f.rel())] = false;
              return;
            case NodeKind::Equal:
              return;
            case NodeKind::Not:
              scan(f.child(), !positive, existential_part);
              return;
            case NodeKind::And:
            case NodeKind::Or:
              scan(f.child(0), positive, existential_part);
              scan(f.child(1), positive, existential_part);
              return;
            case NodeKind::Implies:
              scan(f.child(0), !positive, existential_part);
              scan(f.child(1), positive, existential_part);
              return;
            case NodeKind::Iff:
              scan(f.child(0), true, false);
              scan(f.child(0), false, false);
              scan(f.child(1), true, false);
              scan(f.child(1), false, false);
              return;
            default:
              fail(ErrorKind::Shape, "quantifier inside a matrix");
          }
        };
    for (const auto& c : nf_.a) {
      scan(c.guard, true, false);
      scan(c.matrix, true, false);
    }
    for (const auto& c : nf_.ae) {
      scan(c.guard, true, false);
      if (c.eguard.kind() == NodeKind::Atom) scan(c.eguard, true, true);
      if (!c.matrix.empty()) scan(c.matrix, true, true);
    }
    for (int r = 0; r < sig_.relation_count(); ++r)
      if (!occurs[static_cast<size_t>(r)]) pure[static_cast<size_t>(r)] = false;
    if (cfg_.transitive)
      for (int t : sig_.transitive_relations()) pure[static_cast<size_t>(t)] = false;
    if (cfg_.ramified)
      for (int t : sig_.transitive_relations()) pure[static_cast<size_t>(t)] = false;
    if (cfg_.max_distinct_elements_per_fact)
      for (int r = 0; r < sig_.relation_count(); ++r)
        if (sig_.arity(r) > *cfg_.max_distinct_elements_per_fact)
          pure[static_cast<size_t>(r)] = false;
    if (cfg_.expand_base)
      for (int r = 0; r < cfg_.expand_base->sig().relation_count(); ++r)
        pure[static_cast<size_t>(r)] = false;
  }

  bool preassign() {
    std::vector<bool> pure;
    collect_pure_existential(pure);
    for (int r = 0; r < sig_.relation_count(); ++r) {
      if (!pure[static_cast<size_t>(r)]) continue;
      for (int id = offsets_[static_cast<size_t>(r)]; id < offsets_[static_cast<size_t>(r) + 1];
           ++id)
        if (!assign(id, V_TRUE)) return false;
    }
    if (cfg_.ubiquitous && sig_.has_universal()) {
      int u = sig_.universal();
      for (int x = 0; x < n_; ++x)
        for (int y = 0; y < n_; ++y)
          if (!assign(atom_id(u, Tup{x, y}), V_TRUE)) return false;
    }
    if (cfg_.max_distinct_elements_per_fact) {
      int cap = *cfg_.max_distinct_elements_per_fact;
      for (int r = 0; r < sig_.relation_count(); ++r) {
        if (sig_.arity(r) <= cap) continue;
        for (int id = offsets_[static_cast<size_t>(r)]; id < offsets_[static_cast<size_t>(r) + 1];
             ++id) {
          int rel;
          Tup t;
          atom_tuple(id, rel, t);
          std::vector<int> d = t.to_vector();
          std::sort(d.begin(), d.end());
          d.erase(std::unique(d.begin(), d.end()), d.end());
          if (static_cast<int>(d.size()) > cap && !assign(id, V_FALSE)) return false;
        }
      }
    }
    if (cfg_.expand_base) {
      const Structure& base = *cfg_.expand_base;
      for (int r = 0; r < base.sig().relation_count(); ++r) {
        for (int id = offsets_[static_cast<size_t>(r)]; id < offsets_[static_cast<size_t>(r) + 1];
             ++id) {
          int rel;
          Tup t;
          atom_tuple(id, rel, t);
          if (!assign(id, base.has_fact(r, t) ? V_TRUE : V_FALSE)) return false;
        }
      }
    }
    return flush_queue();
  }

  // Propagates every queued assignment through its watchers.
  bool flush_queue() {
    while (!queue_.empty()) {
      int atom = queue_.back();
      queue_.pop_back();
      for (int code : watch_[static_cast<size_t>(atom)]) {
        bool is_ae = code & (1 << 30);
        int idx = code & ~(1 << 30);
        if (is_ae ? !check_ae(idx) : !check_a(idx)) return false;
      }
    }
    return true;
  }

  int8_t guard_val(int guard_atom) const {
    return guard_atom < 0 ? static_cast<int8_t>(V_TRUE) : val_[static_cast<size_t>(guard_atom)];
  }

  bool check_a(int idx) {
    const AInst& inst = a_[static_cast<size_t>(idx)];
    int8_t g = guard_val(inst.guard_atom);
    if (g == V_FALSE) return true;
    int8_t m = pool_.eval(inst.matrix, val_);
    if (m == V_TRUE) return true;
    if (m == V_FALSE) {
      if (g == V_TRUE) return false;       // conflict
      return assign(inst.guard_atom, V_FALSE) && true;
    }
    if (g == V_TRUE) {
      // Unit-style propagation: a single unknown atom with a forced value.
      std::vector<int> unknowns;
      pool_.unknown_atoms(inst.matrix, val_, unknowns, 2);
      if (unknowns.size() == 1) {
        int atom = unknowns[0];
        val_[static_cast<size_t>(atom)] = V_TRUE;
        int8_t with_true = pool_.eval(inst.matrix, val_);
        val_[static_cast<size_t>(atom)] = V_FALSE;
        int8_t with_false = pool_.eval(inst.matrix, val_);
        val_[static_cast<size_t>(atom)] = V_UNKNOWN;
        if (with_true == V_FALSE && with_false == V_FALSE) return false;
        if (with_true == V_FALSE) return assign(atom, V_FALSE);
        if (with_false == V_FALSE) return assign(atom, V_TRUE);
      }
    }
    return true;
  }

  bool check_ae(int idx) {
    const AEInst& inst = ae_[static_cast<size_t>(idx)];
    int8_t g = guard_val(inst.guard_atom);
    if (g == V_FALSE) return true;
    int open = -1;
    int open_count = 0;
    for (int cand : inst.candidates) {
      int8_t v = pool_.eval(cand, val_);
      if (v == V_TRUE) return true;
      if (v == V_UNKNOWN) {
        ++open_count;
        open = cand;
      }
    }
    if (open_count == 0) {
      if (g == V_TRUE) return false;
      return assign(inst.guard_atom, V_FALSE);
    }
    if (g == V_TRUE && open_count == 1) {
      // The last open candidate must come true; propagate when one atom
      // decides it.
      std::vector<int> unknowns;
      pool_.unknown_atoms(open, val_, unknowns, 2);
      if (unknowns.size() == 1) {
        int atom = unknowns[0];
        val_[static_cast<size_t>(atom)] = V_TRUE;
        int8_t with_true = pool_.eval(open, val_);
        val_[static_cast<size_t>(atom)] = V_FALSE;
        int8_t with_false = pool_.eval(open, val_);
        val_[static_cast<size_t>(atom)] = V_UNKNOWN;
        if (with_true == V_FALSE && with_false == V_FALSE) return false;
        if (with_true == V_FALSE) return assign(atom, V_FALSE);
        if (with_false == V_FALSE) return assign(atom, V_TRUE);
      }
    }
    return true;
  }

  // Picks the branching atom: first open candidate of the first unwitnessed
  // triggered forall-exists instance, else the first unknown atom of an
  // undecided triggered forall instance, else the first unknown atom.
  int pick_atom() const {
    for (const auto& inst : ae_) {
      if (guard_val(inst.guard_atom) != V_TRUE) continue;
      bool witnessed = false;
      for (int cand : inst.candidates)
        if (pool_.eval(cand, val_) == V_TRUE) {
          witnessed = true;
          break;
        }
      if (witnessed) continue;
      for (int cand : inst.candidates) {
        if (pool_.eval(cand, val_) != V_UNKNOWN) continue;
        std::vector<int> unknowns;
        pool_.unknown_atoms(cand, val_, unknowns, 1);
        if (!unknowns.empty()) return unknowns[0];
      }
    }
    for (const auto& inst : a_) {
      if (guard_val(inst.guard_atom) != V_TRUE) continue;
      if (pool_.eval(inst.matrix, val_) != V_UNKNOWN) continue;
      std::vector<int> unknowns;
      pool_.unknown_atoms(inst.matrix, val_, unknowns, 1);
      if (!unknowns.empty()) return unknowns[0];
    }
    // Guards still undecided can trigger constraints; assign them too.
    for (size_t i = 0; i < val_.size(); ++i)
      if (val_[i] == V_UNKNOWN && !watch_[i].empty()) return static_cast<int>(i);
    return -1;
  }

  bool dpll(const std::function<bool(Structure)>& yield) {
    struct Frame {
      int atom;
      size_t trail_mark;
      bool tried_false;
    };
    std::vector<Frame> stack;
    bool propagate_ok = true;
    for (;;) {
      if (propagate_ok) propagate_ok = flush_queue();
      if (propagate_ok) {
        int atom = pick_atom();
        if (atom < 0) {
          if (!emit(yield)) return false;
          propagate_ok = false;  // force backtrack to enumerate further
        } else {
          if (stats_) ++stats_->decisions;
          if (cfg_.max_decisions && stats_ && stats_->decisions > cfg_.max_decisions) {
            stats_->budget_exhausted = true;
            return true;
          }
          stack.push_back({atom, trail_.size(), false});
          assign(atom, V_TRUE);
          continue;
        }
      }
      // backtrack
      if (stats_) ++stats_->conflicts;
      for (;;) {
        if (stack.empty()) return true;
        Frame& f = stack.back();
        while (trail_.size() > f.trail_mark) {
          val_[static_cast<size_t>(trail_.back())] = V_UNKNOWN;
          trail_.pop_back();
        }
        queue_.clear();
        if (!f.tried_false) {
          f.tried_false = true;
          assign(f.atom, V_FALSE);
          propagate_ok = true;
          break;
        }
        stack.pop_back();
      }
    }
  }

  // All constraints decided: complete with false, verify, and hand out.
  bool emit(const std::function<bool(Structure)>& yield) {
    std::vector<int8_t> snapshot = val_;
    for (auto& v : snapshot)
      if (v == V_UNKNOWN) v = V_FALSE;
    for (const auto& inst : a_) {
      if (inst.guard_atom >= 0 && snapshot[static_cast<size_t>(inst.guard_atom)] == V_FALSE)
        continue;
      if (pool_.eval(inst.matrix, snapshot) != V_TRUE) return true;  // not a model; keep searching
    }
    for (const auto& inst : ae_) {
      if (inst.guard_atom >= 0 && snapshot[static_cast<size_t>(inst.guard_atom)] == V_FALSE)
        continue;
      bool ok = false;
      for (int cand : inst.candidates)
        if (pool_.eval(cand, snapshot) == V_TRUE) {
          ok = true;
          break;
        }
      if (!ok) return true;
    }
    std::vector<int> domain;
    for (int i = 0; i < n_; ++i) domain.push_back(i);
    Structure s(nf_.sig, domain, cmap_);
    for (int id = 0; id < offsets_.back(); ++id) {
      if (snapshot[static_cast<size_t>(id)] != V_TRUE) continue;
      int rel;
      Tup t;
      atom_tuple(id, rel, t);
      s.add_fact(rel, t);
    }
    return yield(std::move(s));
  }

  const NormalFormSentence& nf_;
  const SearchConfig& cfg_;
  int n_;
  std::map<std::string, int> cmap_;
  SearchStats* stats_;
  const Signature& sig_;
  std::vector<int> offsets_;
  std::vector<int8_t> val_;
  std::vector<std::vector<int>> watch_;
  GroundPool pool_;
  std::vector<AInst> a_;
  std::vector<AEInst> ae_;
  std::vector<int> trail_;
  std::vector<int> queue_;
};

// Verifies a candidate against the oracle checker and the config's semantic
// and structural constraints.
bool verify_candidate(const Structure& s, const NormalFormSentence& nf, const SearchConfig& cfg) {
  CheckFlags flags;
  flags.ubiquitous = cfg.ubiquitous;
  flags.transitive = cfg.transitive;
  if (!check_model(s, nf, flags, 1).verdict) return false;
  if (cfg.max_distinct_elements_per_fact) {
    for (int r = 0; r < s.sig().relation_count(); ++r)
      for (const auto& f : s.facts(r)) {
        std::vector<int> d = f.to_vector();
        std::sort(d.begin(), d.end());
        d.erase(std::unique(d.begin(), d.end()), d.end());
        if (static_cast<int>(d.size()) > *cfg.max_distinct_elements_per_fact) return false;
      }
  }
  if (cfg.ramified) {
    const auto& ts = s.sig().transitive_relations();
    for (int x : s.domain())
      for (int y : s.domain()) {
        if (x >= y) continue;
        int count = 0;
        for (int t : ts)
          if (s.has_fact(t, Tup{x, y}) || s.has_fact(t, Tup{y, x})) ++count;
        if (count > 1) return false;
      }
  }
  return true;
}

void enumerate(const NormalFormSentence& nf, const SearchConfig& cfg, int limit,
               SearchStats* stats, std::vector<Structure>& out) {
  nf.validate();
  int lo = 1, hi = cfg.max_domain_size;
  if (cfg.expand_base) lo = hi = cfg.expand_base->size();
  for (int n = lo; n <= hi && static_cast<int>(out.size()) < limit; ++n) {
    // Constant interpretations are enumerated lexicographically.
    int u = nf.sig->constant_count();
    std::vector<int> cvals(static_cast<size_t>(u), 0);
    if (cfg.expand_base && u > 0) {
      for (int c = 0; c < u; ++c)
        cvals[static_cast<size_t>(c)] = cfg.expand_base->constant_element(c);
    }
    for (;;) {
      std::map<std::string, int> cmap;
      for (int c = 0; c < u; ++c) cmap[nf.sig->constant(c)] = cvals[static_cast<size_t>(c)];
      Search search(nf, cfg, n, cmap, stats);
      search.run([&](Structure s) {
        if (verify_candidate(s, nf, cfg)) out.push_back(std::move(s));
        return static_cast<int>(out.size()) < limit;
      });
      if (static_cast<int>(out.size()) >= limit) break;
      if (cfg.expand_base) break;
      // next constant assignment
      int c = u - 1;
      while (c >= 0 && cvals[static_cast<size_t>(c)] + 1 == n) {
        cvals[static_cast<size_t>(c)] = 0;
        --c;
      }
      if (c < 0) break;
      ++cvals[static_cast<size_t>(c)];
    }
  }
}

}  // namespace

std::optional<Structure> find_model(const NormalFormSentence& nf, const SearchConfig& cfg,
                                    SearchStats* stats) {
  SearchStats local;
  std::vector<Structure> out;
  enumerate(nf, cfg, 1, stats ? stats : &local, out);
  if (out.empty()) return std::nullopt;
  return std::move(out[0]);
}

std::vector<Structure> find_models(const NormalFormSentence& nf, const SearchConfig& cfg, int limit,
                                   SearchStats* stats) {
  SearchStats local;
  std::vector<Structure> out;
  enumerate(nf, cfg, limit, stats ? stats : &local, out);
  return out;
}

Structure transitive_closure(const Structure& s) {
  Structure out = s;
  for (int t : s.sig().transitive_relations()) {
    // Warshall over the touched elements.
    std::vector<int> dom = s.domain();
    for (int k : dom)
      for (int a : dom) {
        if (!out.has_fact(t, Tup{a, k})) continue;
        for (int b : dom)
          if (out.has_fact(t, Tup{k, b})) out.add_fact(t, Tup{a, b});
      }
  }
  return out;
}

RealizedTypes realized_types(const Structure& s) {
  RealizedTypes out;
  for (int e : s.domain()) out.one_types.push_back(atomic_type(s, Tup{e}));
  std::sort(out.one_types.begin(), out.one_types.end());
  out.one_types.erase(std::unique(out.one_types.begin(), out.one_types.end()),
                      out.one_types.end());
  for (int a : s.domain())
    for (int b : s.domain()) {
      if (a == b) continue;
      if (!is_guarded(s, Tup{a, b})) continue;
      out.two_types.push_back(atomic_type(s, Tup{a, b}));
    }
  std::sort(out.two_types.begin(), out.two_types.end());
  out.two_types.erase(std::unique(out.two_types.begin(), out.two_types.end()),
                      out.two_types.end());
  return out;
}

}  // namespace triguard
