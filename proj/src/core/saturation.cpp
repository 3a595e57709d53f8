#include "saturation.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace triguard {

NormalFormSentence build_phi_star(const NormalFormSentence& phi,
                                  const std::vector<AtomicType>& alpha_in, bool tg_mode) {
  phi.validate();
  if (alpha_in.empty()) fail(ErrorKind::Domain, "phi* needs a nonempty set of 1-types");
  if (!phi.sig->has_universal()) fail(ErrorKind::Signature, "phi* needs a universal symbol");
  std::vector<AtomicType> alpha = alpha_in;
  std::sort(alpha.begin(), alpha.end());
  alpha.erase(std::unique(alpha.begin(), alpha.end()), alpha.end());
  // Types realized in a U-biquitous model carry positive U-literals
  // throughout; anything else can never saturate to U-biquity.
  for (const auto& t : alpha) {
    for (const auto& lit : t.literals)
      if (lit.rel == phi.sig->universal() && !lit.positive)
        fail(ErrorKind::Domain,
             "1-type carries a negative U-literal; it is not realizable U-biquitously");
  }

  auto sig = std::make_shared<Signature>(*phi.sig);
  std::map<int, int> rewrite;  // transitive rel -> fresh unary symbol
  if (tg_mode) {
    for (int t : sig->transitive_relations()) {
      std::string name = sig->fresh_name("P" + sig->relation(t).name);
      rewrite[t] = sig->add_relation(name, 1);
    }
  }
  int u = sig->universal();
  const std::string& uname = sig->relation(u).name;

  NormalFormSentence out;
  out.sig = sig;
  out.ae = phi.ae;
  out.a = phi.a;

  // (2) only 1-types from alpha are realized.
  {
    std::vector<Formula> disj;
    for (const auto& t : alpha) disj.push_back(type_to_formula(t, *sig, {"x"}, rewrite));
    AConjunct c;
    c.uvars = {"x"};
    c.guard = Formula::equal(Term::var("x"), Term::var("x"));
    c.matrix = Formula::disjoin(disj);
    out.a.push_back(std::move(c));
  }
  // (3) every ordered pair of types has a realization connected both ways by
  // U; the existential pair is guarded by the U-atom itself.
  for (const auto& tp : alpha) {
    for (const auto& tq : alpha) {
      AEConjunct c;
      c.uvars = {"z"};
      c.guard = Formula::equal(Term::var("z"), Term::var("z"));
      c.evars = {"x", "y"};
      c.eguard = Formula::atom(u, uname, {Term::var("x"), Term::var("y")});
      Formula m = Formula::land(type_to_formula(tp, *sig, {"x"}, rewrite),
                                type_to_formula(tq, *sig, {"y"}, rewrite));
      m = Formula::land(m, Formula::atom(u, uname, {Term::var("y"), Term::var("x")}));
      c.matrix = m;
      c.tg = tg_mode ? TgClass::Ntr : TgClass::None;
      out.ae.push_back(std::move(c));
    }
  }
  // (4) every guarded tuple is U-connected, for every relation symbol.
  static const char* names[kMaxArity] = {"x", "y", "z", "u", "v", "t"};
  for (int r = 0; r < sig->relation_count(); ++r) {
    int k = sig->arity(r);
    std::vector<std::string> vars(names, names + k);
    std::vector<Term> args;
    for (const auto& v : vars) args.push_back(Term::var(v));
    std::vector<Formula> us;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        us.push_back(Formula::atom(u, uname, {Term::var(vars[static_cast<size_t>(i)]),
                                              Term::var(vars[static_cast<size_t>(j)])}));
    AConjunct c;
    c.uvars = vars;
    c.guard = Formula::atom(r, sig->relation(r).name, args);
    c.matrix = Formula::conjoin(us);
    out.a.push_back(std::move(c));
  }
  // Linking conjuncts for the reflexive-transitive rewrite:
  // P_T(x) <=> T(x,x), with the right-to-left direction guarded by T.
  for (const auto& [t, p] : rewrite) {
    const std::string& tname = sig->relation(t).name;
    const std::string& pname = sig->relation(p).name;
    AEConjunct fwd;
    fwd.uvars = {"x"};
    fwd.guard = Formula::atom(p, pname, {Term::var("x")});
    fwd.evars = {"y"};
    fwd.eguard = Formula::atom(t, tname, {Term::var("x"), Term::var("y")});
    fwd.matrix = Formula::equal(Term::var("y"), Term::var("x"));
    fwd.tg = TgClass::Tr;
    out.ae.push_back(std::move(fwd));
    AConjunct bwd;
    bwd.uvars = {"x", "y"};
    bwd.guard = Formula::atom(t, tname, {Term::var("x"), Term::var("y")});
    bwd.matrix = Formula::implies(Formula::equal(Term::var("x"), Term::var("y")),
                                  Formula::atom(p, pname, {Term::var("x")}));
    out.a.push_back(std::move(bwd));
  }
  out.validate();
  return out;
}

namespace {

Structure canonicalize(const Structure& s) {
  auto named = s.named_elements();
  std::unordered_map<int, int> remap;
  int next = 0;
  for (int e : named) remap[e] = next++;
  for (int e : s.domain())
    if (!remap.count(e)) remap[e] = next++;
  std::vector<int> domain;
  for (int i = 0; i < next; ++i) domain.push_back(i);
  std::map<std::string, int> cmap;
  for (const auto& [name, e] : s.constant_map()) cmap[name] = remap.at(e);
  Structure out(s.sig_ptr(), std::move(domain), std::move(cmap));
  for (int r = 0; r < s.sig().relation_count(); ++r)
    for (const auto& f : s.facts(r)) {
      Tup t;
      for (int i = 0; i < f.size(); ++i) t.push(remap.at(f[i]));
      out.add_fact(r, t);
    }
  return out;
}

}  // namespace

Blocks build_blocks(const Structure& c_minus, const NormalFormSentence& phi_star,
                    const SaturationOptions& opts) {
  phi_star.validate();
  CheckFlags flags;
  flags.transitive = opts.tg_mode;
  {
    auto rep = check_model(c_minus, phi_star, flags, 4);
    if (!rep.verdict)
      fail(ErrorKind::Construction, "seed model does not satisfy phi*: " + rep.to_json());
  }
  Blocks out;
  out.C_minus = canonicalize(c_minus);
  out.C = harmonized_doubling(out.C_minus);

  int named = static_cast<int>(out.C_minus.named_elements().size());
  int K = out.C.size() - named;
  out.coords.named = named;
  out.coords.K = K;
  out.coords.fiveK = 5 * K;

  const SigPtr& sig = out.C.sig_ptr();
  if (K == 0) {
    // Everything is named: the table is empty and the seed itself is the
    // final structure (it must already be U-biquitous).
    out.B = out.C_minus;
    out.A0 = out.C_minus;
    return out;
  }
  // B: five copies of C around the shared named part; unnamed position b in
  // 1..5K sits at id named+(b-1).
  {
    std::vector<int> domain;
    for (int i = 0; i < named + 5 * K; ++i) domain.push_back(i);
    Structure B(sig, std::move(domain), out.C_minus.constant_map());
    for (int m = 0; m < 5; ++m)
      for (int r = 0; r < sig->relation_count(); ++r)
        for (const auto& f : out.C.facts(r)) {
          Tup t;
          for (int i = 0; i < f.size(); ++i) {
            int e = f[i];
            t.push(e < named ? e : named + m * K + (e - named));
          }
          B.add_fact_unchecked(r, t);
        }
    out.B = std::move(B);
  }
  // A0: a (5K)x(5K) table of copies of B.
  {
    std::vector<int> domain;
    for (int i = 0; i < out.coords.size(); ++i) domain.push_back(i);
    Structure A0(sig, std::move(domain), out.C_minus.constant_map());
    int fiveK = out.coords.fiveK;
    for (int k = 1; k <= fiveK; ++k)
      for (int l = 1; l <= fiveK; ++l)
        for (int r = 0; r < sig->relation_count(); ++r)
          for (const auto& f : out.B.facts(r)) {
            Tup t;
            for (int i = 0; i < f.size(); ++i) {
              int e = f[i];
              t.push(e < named ? e : out.coords.id_of(e - named + 1, k, l));
            }
            A0.add_fact_unchecked(r, t);
          }
    out.A0 = std::move(A0);
  }
  if (opts.check_every_step) {
    auto rep = check_model(out.A0, phi_star, flags, 4);
    if (!rep.verdict)
      fail(ErrorKind::Construction, "A0 does not satisfy phi*: " + rep.to_json());
  }
  return out;
}

std::pair<int, int> select_entry_elements(const Structure& C, const AtomicType& alpha_k,
                                          const AtomicType& alpha_l) {
  auto unnamed = C.unnamed_elements();
  auto verify = [&](int e1, int e2) {
    if (e1 == e2) return false;
    if (atomic_type(C, Tup{e1}) != alpha_k || atomic_type(C, Tup{e2}) != alpha_l) return false;
    int u = C.sig().universal();
    if (!C.has_fact(u, Tup{e1, e2}) || !C.has_fact(u, Tup{e2, e1})) return false;
    if (alpha_k == alpha_l && !indistinguishable(C, e1, e2)) return false;
    return true;
  };
  if (alpha_k == alpha_l) {
    // Doubling recipe: (b,0) and (b,1) are adjacent ids and indistinguishable.
    for (size_t i = 0; i + 1 < unnamed.size(); i += 2) {
      int e1 = unnamed[i], e2 = unnamed[i + 1];
      if (verify(e1, e2)) return {e1, e2};
    }
  } else {
    for (int e1 : unnamed)
      for (int e2 : unnamed)
        if (verify(e1, e2)) return {e1, e2};
  }
  fail(ErrorKind::Construction,
       "no entry pair for the requested 1-types; the seed was not built from a phi* model");
}

namespace {

class Engine {
 public:
  Engine(const Structure& c_minus, const NormalFormSentence& phi_star,
         const SaturationOptions& opts)
      : phi_(phi_star), opts_(opts), blocks_(build_blocks(c_minus, phi_star, opts)) {
    coords_ = blocks_.coords;
    A_ = blocks_.A0;
    u_rel_ = A_.sig().universal();
    n_ = A_.size();
    u_count_ = A_.facts(u_rel_).size();
    // The final structure is U-biquitous: reserve the U-set once and mirror
    // it in a bitset so the pair scan and the step stay cache-friendly.
    A_.reserve_facts(u_rel_, static_cast<size_t>(n_) * static_cast<size_t>(n_));
    u_bits_.assign((static_cast<size_t>(n_) * static_cast<size_t>(n_) + 63) / 64, 0);
    for (const auto& f : A_.facts(u_rel_)) set_u_bit(f[0], f[1]);
    build_registry();
  }

  bool u_bit(int a, int b) const {
    size_t i = static_cast<size_t>(a) * static_cast<size_t>(n_) + static_cast<size_t>(b);
    return (u_bits_[i >> 6] >> (i & 63)) & 1;
  }
  void set_u_bit(int a, int b) {
    size_t i = static_cast<size_t>(a) * static_cast<size_t>(n_) + static_cast<size_t>(b);
    u_bits_[i >> 6] |= uint64_t(1) << (i & 63);
  }

  const TableCoords& coords() const { return coords_; }
  const Structure& a0() const { return blocks_.A0; }
  const Structure& current() const { return A_; }

  // Entry registry: one Claim-1 pair per ordered pair of C positions.
  void build_registry() {
    int K = coords_.K;
    int named = coords_.named;
    std::vector<AtomicType> ctypes;
    for (int c = 0; c < K; ++c) ctypes.push_back(atomic_type(blocks_.C, Tup{named + c}));
    registry_.resize(static_cast<size_t>(K) * K);
    for (int ck = 0; ck < K; ++ck)
      for (int cl = 0; cl < K; ++cl)
        registry_[static_cast<size_t>(ck) * K + cl] =
            select_entry_elements(blocks_.C, ctypes[static_cast<size_t>(ck)],
                                  ctypes[static_cast<size_t>(cl)]);
  }

  // One saturation step on an unconnected unnamed pair.
  SaturationStep step(int b1, int b2) {
    if (coords_.is_named(b1) || coords_.is_named(b2))
      fail(ErrorKind::Construction, "saturation pair includes a named element");
    if (u_bit(b1, b2))
      fail(ErrorKind::Construction, "saturation pair already U-connected");
    SaturationStep rec;
    rec.b1 = b1;
    rec.b2 = b2;
    coords_.pos_of(b1, rec.n1, rec.k1, rec.l1);
    coords_.pos_of(b2, rec.n2, rec.k2, rec.l2);
    int K = coords_.K;
    // Forbidden blocks in the target cell (n1,n2): those holding positions
    // k1, l1, k2, l2; a free t in 0..4 exists by pigeonhole.
    bool forbidden[5] = {false, false, false, false, false};
    for (int p : {rec.k1, rec.l1, rec.k2, rec.l2}) forbidden[coords_.block_of_pos(p)] = true;
    int t = 0;
    while (t < 5 && forbidden[t]) ++t;
    if (t == 5) fail(ErrorKind::Construction, "pigeonhole failure in block choice");
    rec.t = t;

    int ck = (rec.n1 - 1) % K, cl = (rec.n2 - 1) % K;
    auto [e1C, e2C] = registry_[static_cast<size_t>(ck) * K + cl];
    int e1 = coords_.id_of(t * K + (e1C - coords_.named) + 1, rec.n1, rec.n2);
    int e2 = coords_.id_of(t * K + (e2C - coords_.named) + 1, rec.n1, rec.n2);

    // Region: named part + target block + the pair.
    std::vector<int> region;
    for (int i = 0; i < coords_.named; ++i) region.push_back(i);
    for (int c = 0; c < K; ++c) region.push_back(coords_.id_of(t * K + c + 1, rec.n1, rec.n2));
    for (int e : region)
      if (e == b1 || e == b2)
        fail(ErrorKind::Construction, "pair overlaps the chosen block");
    size_t block_end = region.size();
    region.push_back(b1);
    region.push_back(b2);

    AtomicType pre_t1, pre_t2;
    if (opts_.check_every_step) {
      pre_t1 = atomic_type(A_, Tup{b1});
      pre_t2 = atomic_type(A_, Tup{b2});
    }

    // Rewrite every tuple over the region containing b1 or b2 from the frozen
    // A0 through h (b1 -> e1, b2 -> e2, identity elsewhere). Transitive
    // relations are not copied in tg mode.
    const Signature& sig = A_.sig();
    auto& added = added_scratch_;
    auto& touched_true = touched_scratch_;
    added.clear();
    touched_true.clear();
    size_t region_n = region.size();
    size_t idx[kMaxArity];
    for (int r = 0; r < sig.relation_count(); ++r) {
      if (opts_.tg_mode && sig.is_transitive(r)) continue;
      size_t a = static_cast<size_t>(sig.arity(r));
      for (size_t i = 0; i < a; ++i) idx[i] = 0;
      for (;;) {
        bool has_b = false;
        for (size_t i = 0; i < a; ++i)
          if (idx[i] >= block_end) has_b = true;
        if (has_b) {
          Tup tuple, htuple;
          for (size_t i = 0; i < a; ++i) {
            int e = region[idx[i]];
            tuple.push(e);
            htuple.push(e == b1 ? e1 : e == b2 ? e2 : e);
          }
          bool nv = blocks_.A0.has_fact(r, htuple);
          bool ov = r == u_rel_ ? u_bit(tuple[0], tuple[1]) : A_.has_fact(r, tuple);
          if (nv != ov) {
            if (!nv)
              fail(ErrorKind::Construction, "claim 3 violated: a fact would be removed");
            A_.add_fact_unchecked(r, tuple);
            if (r == u_rel_) {
              ++u_count_;
              set_u_bit(tuple[0], tuple[1]);
            }
            added.emplace_back(r, tuple);
          }
          if (nv) touched_true.emplace_back(r, tuple);
        }
        size_t i = a;
        while (i > 0 && idx[i - 1] + 1 == region_n) idx[--i] = 0;
        if (i == 0) break;
        ++idx[i - 1];
      }
    }
    rec.facts_added = static_cast<int>(added.size());
    if (opts_.record_added_facts) rec.added = added;

    if (!u_bit(b1, b2) || !u_bit(b2, b1))
      fail(ErrorKind::Construction, "step did not U-connect the pair");

    if (opts_.check_every_step)
      check_step(rec, added, touched_true, region, pre_t1, pre_t2, t);
    log_connection(b1, rec.n1, rec.n2, t);
    log_connection(b2, rec.n1, rec.n2, t);
    return rec;
  }

  // Incremental Claim 2/3/5 assertions around one step.
  void check_step(const SaturationStep& rec, const std::vector<std::pair<int, Tup>>& added,
                  const std::vector<std::pair<int, Tup>>& touched_true,
                  const std::vector<int>& region, const AtomicType& pre_t1,
                  const AtomicType& pre_t2, int t) {
    // Claim 2: the 1-types of the pair are unchanged.
    if (atomic_type(A_, Tup{rec.b1}) != pre_t1 || atomic_type(A_, Tup{rec.b2}) != pre_t2)
      fail(ErrorKind::Construction, "claim 2 violated: a 1-type changed");
    // Claim 3 (additions): a new fact over a tuple one of whose members was
    // already connected to this block would overwrite earlier copies.
    for (const auto& [r, tuple] : added) {
      (void)r;
      bool has1 = tuple.contains(rec.b1), has2 = tuple.contains(rec.b2);
      if (has1 != has2) {
        int b = has1 ? rec.b1 : rec.b2;
        if (was_connected(b, rec.n1, rec.n2, t))
          fail(ErrorKind::Construction, "claim 3 violated: inconsistent re-copy");
      }
    }
    // tg mode: the transitive fact set never changes.
    if (opts_.tg_mode)
      for (const auto& [r, tuple] : added)
        if (A_.sig().is_transitive(r))
          fail(ErrorKind::Construction, "tg mode added a transitive fact");
    // Claim 5, incrementally: every conjunct instance whose guard is a
    // post-true fact touching the pair must hold; witnesses live in the
    // region by construction.
    EvalEnv env;
    for (const auto& [r, tuple] : touched_true) {
      for (const auto& c : phi_.a) {
        if (c.guard.kind() != NodeKind::Atom || c.guard.rel() != r) continue;
        env.clear();
        if (!bind_guard(c.guard, tuple, env)) continue;
        if (!evaluate_env(A_, c.matrix, env))
          fail(ErrorKind::Construction, "claim 5 violated on a forall conjunct");
      }
      for (const auto& c : phi_.ae) {
        if (c.guard.kind() != NodeKind::Atom || c.guard.rel() != r) continue;
        env.clear();
        if (!bind_guard(c.guard, tuple, env)) continue;
        if (!region_witness(c, env, region))
          fail(ErrorKind::Construction, "claim 5 violated: missing witness near the region");
      }
    }
  }

  bool bind_guard(const Formula& guard, const Tup& fact, EvalEnv& env) {
    const auto& args = guard.args();
    for (size_t i = 0; i < args.size(); ++i) {
      int e = fact[static_cast<int>(i)];
      if (!args[i].is_var()) {
        if (A_.constant_element(args[i].constant_index) != e) return false;
        continue;
      }
      bool bound = false;
      for (const auto& [name, val] : env)
        if (name == args[i].name) {
          if (val != e) return false;
          bound = true;
          break;
        }
      if (!bound) env.emplace_back(args[i].name, e);
    }
    return true;
  }

  bool region_witness(const AEConjunct& c, EvalEnv& env, const std::vector<int>& region) {
    // Enumerate witness tuples over the region; evars extend the guard env.
    size_t base = env.size();
    for (const auto& v : c.evars) env.emplace_back(v, 0);
    std::vector<size_t> idx(c.evars.size(), 0);
    for (;;) {
      for (size_t i = 0; i < idx.size(); ++i) env[base + i].second = region[idx[i]];
      if (evaluate_env(A_, c.eguard, env) &&
          (c.matrix.empty() || evaluate_env(A_, c.matrix, env))) {
        env.resize(base);
        return true;
      }
      size_t i = idx.size();
      while (i > 0 && idx[i - 1] + 1 == region.size()) idx[--i] = 0;
      if (i == 0) break;
      ++idx[i - 1];
    }
    env.resize(base);
    return false;
  }

  void log_connection(int b, int n1, int n2, int t) {
    if (!opts_.check_every_step) return;
    long long code = ((static_cast<long long>(n1) * (coords_.fiveK + 1)) + n2) * 5 + t;
    connections_[b].insert(code);
  }
  bool was_connected(int b, int n1, int n2, int t) {
    long long code = ((static_cast<long long>(n1) * (coords_.fiveK + 1)) + n2) * 5 + t;
    auto it = connections_.find(b);
    return it != connections_.end() && it->second.count(code) > 0;
  }

  SaturationResult run() {
    SaturationResult res;
    res.a0 = blocks_.A0;
    res.a0_size = static_cast<size_t>(blocks_.A0.size());
    res.a0_facts = blocks_.A0.fact_count();
    res.K = coords_.K;
    res.named = coords_.named;
    long long bound = static_cast<long long>(n_) * n_;
    if (opts_.max_steps > 0) bound = std::min(bound, opts_.max_steps);
    size_t total_pairs = static_cast<size_t>(n_) * static_cast<size_t>(n_);
    res.trace.steps.reserve((total_pairs - u_count_) / 2 + 8);
    CheckFlags mid_flags;
    mid_flags.transitive = opts_.tg_mode;

    size_t total = static_cast<size_t>(n_) * static_cast<size_t>(n_);
    int i = 0, j = 0;  // resume pointer over ordered pairs (i, j)
    long long steps = 0;
    while (u_count_ < total) {
      // Advance to the least pair without a U-edge; U only grows, so the
      // pointer never moves backwards.
      bool found = false;
      for (; i < n_ && !found; ++i) {
        for (; j < n_; ++j) {
          if (i == j) continue;
          if (!u_bit(i, j)) {
            found = true;
            break;
          }
        }
        if (!found) j = 0;
      }
      if (!found)
        fail(ErrorKind::Construction, "U-count disagrees with the pair scan");
      --i;  // the loop increment overshot the row
      if (coords_.is_named(i) || coords_.is_named(j))
        fail(ErrorKind::Construction,
             "an unconnected pair involves a named element; the seed violates phi*");
      size_t before = u_count_;
      res.trace.steps.push_back(step(i, j));
      if (u_count_ <= before)
        fail(ErrorKind::Construction, "U-fact count did not grow");
      ++steps;
      if (steps > bound) fail(ErrorKind::Construction, "saturation exceeded its step bound");
      if (opts_.full_check_period > 0 && steps % opts_.full_check_period == 0) {
        auto rep = check_model(A_, phi_, mid_flags, 4);
        if (!rep.verdict)
          fail(ErrorKind::Construction, "claim 5 violated mid-run: " + rep.to_json());
      }
    }
    CheckFlags final_flags;
    final_flags.ubiquitous = true;
    final_flags.transitive = opts_.tg_mode;
    auto rep = check_model(A_, phi_, final_flags, 4);
    if (!rep.verdict)
      fail(ErrorKind::Construction, "saturated structure fails phi*: " + rep.to_json());
    res.model = std::move(A_);
    return res;
  }

  // Replays recorded steps without re-deriving the pair order.
  Structure replay(const SaturationTrace& trace) {
    for (const auto& s : trace.steps) {
      SaturationStep redo = step(s.b1, s.b2);
      if (redo.t != s.t || redo.n1 != s.n1 || redo.n2 != s.n2 ||
          redo.facts_added != s.facts_added)
        fail(ErrorKind::Construction, "trace replay diverged");
    }
    return std::move(A_);
  }

 private:
  const NormalFormSentence& phi_;
  SaturationOptions opts_;
  Blocks blocks_;
  TableCoords coords_;
  Structure A_;
  int u_rel_ = -1;
  int n_ = 0;
  size_t u_count_ = 0;
  std::vector<std::pair<int, int>> registry_;
  std::unordered_map<int, std::unordered_set<long long>> connections_;
  std::vector<uint64_t> u_bits_;
  std::vector<std::pair<int, Tup>> added_scratch_;
  std::vector<std::pair<int, Tup>> touched_scratch_;
};

}  // namespace

SaturationResult saturate(const Structure& c_minus, const NormalFormSentence& phi_star,
                          const SaturationOptions& opts) {
  Engine engine(c_minus, phi_star, opts);
  return engine.run();
}

Structure replay_trace(const Structure& c_minus, const NormalFormSentence& phi_star,
                       const SaturationOptions& opts, const SaturationTrace& trace) {
  SaturationOptions o = opts;
  o.check_every_step = false;
  Engine engine(c_minus, phi_star, o);
  return engine.replay(trace);
}

}  // namespace triguard
