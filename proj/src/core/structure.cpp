#include "structure.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace triguard {

namespace {

// Enumerates all argument tuples over `codes` values of the given arity, in
// lexicographic order.
template <typename Fn>
void for_each_args(int codes, int arity, Fn&& fn) {
  Tup t;
  for (int i = 0; i < arity; ++i) t.push(0);
  for (;;) {
    fn(t);
    int i = arity - 1;
    while (i >= 0 && t[i] == codes - 1) {
      t[i] = 0;
      --i;
    }
    if (i < 0) break;
    ++t[i];
  }
}

}  // namespace

std::optional<bool> AtomicType::polarity(int rel, const Tup& args) const {
  TypeLiteral probe{rel, args, false};
  auto it = std::lower_bound(literals.begin(), literals.end(), probe);
  if (it != literals.end() && it->rel == rel && it->args == args) return it->positive;
  return std::nullopt;
}

bool AtomicType::guarded() const {
  for (const auto& lit : literals) {
    if (!lit.positive) continue;
    bool covers_all = true;
    for (int v = 0; v < arity; ++v)
      if (!lit.args.contains(v)) {
        covers_all = false;
        break;
      }
    if (covers_all) return true;
  }
  return false;
}

bool AtomicType::non_degenerate() const {
  if (arity != 2) return false;
  auto p = polarity(-1, Tup{0, 1});
  return p.has_value() && !*p;
}

AtomicType AtomicType::inverse() const {
  AtomicType out;
  out.arity = arity;
  out.literals.reserve(literals.size());
  for (auto lit : literals) {
    for (int i = 0; i < lit.args.size(); ++i) {
      if (lit.args[i] == 0)
        lit.args[i] = 1;
      else if (lit.args[i] == 1)
        lit.args[i] = 0;
    }
    if (lit.rel < 0 && lit.args[1] < lit.args[0]) std::swap(lit.args[0], lit.args[1]);
    out.literals.push_back(lit);
  }
  std::sort(out.literals.begin(), out.literals.end());
  return out;
}

std::vector<TypeLiteral> AtomicType::restrict_to_var(int v) const {
  std::vector<TypeLiteral> out;
  for (const auto& lit : literals) {
    bool ok = true;
    for (int i = 0; i < lit.args.size(); ++i)
      if (lit.args[i] < arity && lit.args[i] != v) {
        ok = false;
        break;
      }
    if (ok) out.push_back(lit);
  }
  return out;
}

std::vector<TypeLiteral> AtomicType::restrict_transitive(const Signature& sig) const {
  std::vector<TypeLiteral> out;
  for (const auto& lit : literals)
    if (lit.rel >= 0 && sig.is_transitive(lit.rel)) out.push_back(lit);
  return out;
}

std::string AtomicType::key() const {
  std::string out;
  out += std::to_string(arity);
  out += ':';
  for (const auto& lit : literals) {
    if (!lit.positive) out += '-';
    out += std::to_string(lit.rel);
    out += '(';
    for (int i = 0; i < lit.args.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(lit.args[i]);
    }
    out += ')';
  }
  return out;
}

AtomicType transitive_free_reduction(const AtomicType& beta, const Signature& sig) {
  if (beta.arity != 2) fail(ErrorKind::Domain, "transitive-free reduction needs a 2-type");
  AtomicType out;
  out.arity = 2;
  for (const auto& lit : beta.literals) {
    if (lit.rel >= 0 && sig.is_transitive(lit.rel)) {
      bool has0 = lit.args.contains(0), has1 = lit.args.contains(1);
      if (has0 && has1) continue;  // cross-variable transitive literal
    }
    out.literals.push_back(lit);
  }
  return out;
}

Formula type_to_formula(const AtomicType& t, const Signature& sig,
                        const std::vector<std::string>& vars,
                        const std::map<int, int>& reflexive_rewrite) {
  if (static_cast<int>(vars.size()) != t.arity)
    fail(ErrorKind::Domain, "variable list does not match type arity");
  auto term_of = [&](int code) -> Term {
    if (code < t.arity) return Term::var(vars[static_cast<size_t>(code)]);
    int c = code - t.arity;
    return Term::constant(sig.constant(c), c);
  };
  std::vector<Formula> lits;
  for (const auto& lit : t.literals) {
    Formula f;
    if (lit.rel < 0) {
      f = Formula::equal(term_of(lit.args[0]), term_of(lit.args[1]));
      if (f.trivial_eq()) continue;  // x=x and c=c carry no information
    } else {
      int rel = lit.rel;
      Tup args = lit.args;
      auto rw = reflexive_rewrite.find(rel);
      if (rw != reflexive_rewrite.end() && args.size() == 2 && args[0] == args[1]) {
        std::vector<Term> ts = {term_of(args[0])};
        f = Formula::atom(rw->second, sig.relation(rw->second).name, std::move(ts));
        f = lit.positive ? f : Formula::negate(f);
        lits.push_back(f);
        continue;
      }
      std::vector<Term> ts;
      for (int i = 0; i < args.size(); ++i) ts.push_back(term_of(args[i]));
      f = Formula::atom(rel, sig.relation(rel).name, std::move(ts));
    }
    lits.push_back(lit.positive ? f : Formula::negate(f));
  }
  if (lits.empty()) {
    // Degenerate but possible on heavy reductions: fall back to x=x.
    return Formula::equal(Term::var(vars[0]), Term::var(vars[0]));
  }
  return Formula::conjoin(lits);
}

Structure::Structure(SigPtr sig, std::vector<int> domain, std::map<std::string, int> constant_map)
    : sig_(std::move(sig)), domain_(std::move(domain)), constants_(std::move(constant_map)) {
  std::sort(domain_.begin(), domain_.end());
  domain_.erase(std::unique(domain_.begin(), domain_.end()), domain_.end());
  domset_.insert(domain_.begin(), domain_.end());
  facts_.resize(static_cast<size_t>(sig_->relation_count()));
  for (int c = 0; c < sig_->constant_count(); ++c) {
    auto it = constants_.find(sig_->constant(c));
    if (it == constants_.end())
      fail(ErrorKind::Domain, "constant " + sig_->constant(c) + " not interpreted");
    if (!in_domain(it->second))
      fail(ErrorKind::Domain, "constant " + sig_->constant(c) + " mapped outside the domain");
  }
}

void Structure::upgrade_signature(SigPtr sig) {
  if (sig->relation_count() < sig_->relation_count())
    fail(ErrorKind::Signature, "signature upgrade must be an extension");
  sig_ = std::move(sig);
  facts_.resize(static_cast<size_t>(sig_->relation_count()));
}

void Structure::add_element(int e) {
  if (domset_.insert(e).second) {
    domain_.insert(std::lower_bound(domain_.begin(), domain_.end(), e), e);
  }
}

int Structure::constant_element(int constant_index) const {
  return constants_.at(sig_->constant(constant_index));
}

std::vector<int> Structure::named_elements() const {
  std::vector<int> out;
  for (const auto& [name, e] : constants_) out.push_back(e);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool Structure::is_named(int e) const {
  for (const auto& [name, el] : constants_)
    if (el == e) return true;
  return false;
}

std::vector<int> Structure::unnamed_elements() const {
  auto named = named_elements();
  std::vector<int> out;
  for (int e : domain_)
    if (!std::binary_search(named.begin(), named.end(), e)) out.push_back(e);
  return out;
}

void Structure::add_fact(int rel, const Tup& t) {
  if (rel < 0 || rel >= sig_->relation_count()) fail(ErrorKind::Domain, "bad relation index");
  if (t.size() != sig_->arity(rel))
    fail(ErrorKind::Domain, "tuple length does not match arity of " + sig_->relation(rel).name);
  for (int i = 0; i < t.size(); ++i)
    if (!in_domain(t[i])) fail(ErrorKind::Domain, "fact mentions element outside the domain");
  facts_[static_cast<size_t>(rel)].insert(t);
}

void Structure::remove_fact(int rel, const Tup& t) { facts_[static_cast<size_t>(rel)].erase(t); }

void Structure::set_fact(int rel, const Tup& t, bool value) {
  if (value)
    add_fact(rel, t);
  else
    remove_fact(rel, t);
}

size_t Structure::fact_count() const {
  size_t n = 0;
  for (const auto& s : facts_) n += s.size();
  return n;
}

std::string Structure::to_jsonl() const {
  std::ostringstream out;
  out << "{\"domain\":[";
  for (size_t i = 0; i < domain_.size(); ++i) {
    if (i) out << ",";
    out << domain_[i];
  }
  out << "],\"constants\":{";
  bool first = true;
  for (const auto& [name, e] : constants_) {  // std::map: sorted by name
    if (!first) out << ",";
    first = false;
    out << "\"" << name << "\":" << e;
  }
  out << "}}\n";
  for (int r = 0; r < sig_->relation_count(); ++r) {
    std::vector<Tup> sorted(facts_[static_cast<size_t>(r)].begin(),
                            facts_[static_cast<size_t>(r)].end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& t : sorted) {
      out << "{\"rel\":\"" << sig_->relation(r).name << "\",\"tuple\":[";
      for (int i = 0; i < t.size(); ++i) {
        if (i) out << ",";
        out << t[i];
      }
      out << "]}\n";
    }
  }
  return out.str();
}

Structure Structure::from_jsonl(SigPtr sig, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::vector<int> domain;
  std::map<std::string, int> constants;
  std::vector<std::pair<int, Tup>> facts;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      fail(ErrorKind::Io, "bad JSON on line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.contains("domain"))
        fail(ErrorKind::Io, "first line must carry the domain");
      for (const auto& e : j["domain"]) domain.push_back(e.get<int>());
      if (j.contains("constants"))
        for (auto it = j["constants"].begin(); it != j["constants"].end(); ++it)
          constants[it.key()] = it.value().get<int>();
      have_header = true;
      continue;
    }
    if (!j.contains("rel") || !j.contains("tuple"))
      fail(ErrorKind::Io, "fact line " + std::to_string(lineno) + " needs rel and tuple");
    int rel = sig->relation_index(j["rel"].get<std::string>());
    if (rel < 0) fail(ErrorKind::Io, "undeclared relation in fact: " + j["rel"].get<std::string>());
    Tup t;
    for (const auto& e : j["tuple"]) t.push(e.get<int>());
    facts.emplace_back(rel, t);
  }
  if (!have_header) fail(ErrorKind::Io, "empty structure file");
  Structure s(std::move(sig), std::move(domain), std::move(constants));
  for (const auto& [rel, t] : facts) s.add_fact(rel, t);
  return s;
}

AtomicType atomic_type(const Structure& s, const Tup& tuple) {
  const Signature& sig = s.sig();
  int l = tuple.size();
  if (l < 1) fail(ErrorKind::Domain, "empty tuple has no type");
  for (int i = 0; i < l; ++i)
    if (!s.in_domain(tuple[i])) fail(ErrorKind::Domain, "element outside domain");
  int codes = l + sig.constant_count();
  auto element_of = [&](int code) {
    return code < l ? tuple[code] : s.constant_element(code - l);
  };
  AtomicType t;
  t.arity = l;
  for (int i = 0; i < codes; ++i)
    for (int j = i; j < codes; ++j)
      t.literals.push_back({-1, Tup{i, j}, element_of(i) == element_of(j)});
  for (int r = 0; r < sig.relation_count(); ++r) {
    for_each_args(codes, sig.arity(r), [&](const Tup& args) {
      Tup elems;
      for (int i = 0; i < args.size(); ++i) elems.push(element_of(args[i]));
      t.literals.push_back({r, args, s.has_fact(r, elems)});
    });
  }
  std::sort(t.literals.begin(), t.literals.end());
  return t;
}

bool is_guarded(const Structure& s, const Tup& tuple) {
  for (int i = 0; i < tuple.size(); ++i)
    if (!s.in_domain(tuple[i])) fail(ErrorKind::Domain, "element outside domain");
  std::vector<int> distinct = tuple.to_vector();
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() <= 1) return true;
  const Signature& sig = s.sig();
  for (int r = 0; r < sig.relation_count(); ++r) {
    int a = sig.arity(r);
    if (a < static_cast<int>(distinct.size())) continue;
    if (a == 2 && distinct.size() == 2) {
      Tup ab{distinct[0], distinct[1]}, ba{distinct[1], distinct[0]};
      if (s.has_fact(r, ab) || s.has_fact(r, ba)) return true;
      continue;
    }
    for (const auto& f : s.facts(r)) {
      bool all = true;
      for (int e : distinct)
        if (!f.contains(e)) {
          all = false;
          break;
        }
      if (all) return true;
    }
  }
  return false;
}

bool indistinguishable(const Structure& s, int a, int a_prime) {
  if (!s.in_domain(a) || !s.in_domain(a_prime)) fail(ErrorKind::Domain, "element outside domain");
  if (a == a_prime) return true;
  const Signature& sig = s.sig();
  for (int r = 0; r < sig.relation_count(); ++r) {
    for (const auto& f : s.facts(r)) {
      std::vector<int> swap_pos;
      for (int i = 0; i < f.size(); ++i)
        if (f[i] == a || f[i] == a_prime) swap_pos.push_back(i);
      if (swap_pos.empty()) continue;
      int k = static_cast<int>(swap_pos.size());
      for (int mask = 1; mask < (1 << k); ++mask) {
        Tup v = f;
        for (int b = 0; b < k; ++b)
          if (mask & (1 << b)) {
            int i = swap_pos[static_cast<size_t>(b)];
            v[i] = (f[i] == a) ? a_prime : a;
          }
        if (!s.has_fact(r, v)) return false;
      }
    }
  }
  return true;
}

namespace {

void require_constant_free(const Structure& s, const char* op) {
  if (s.sig().constant_count() > 0)
    fail(ErrorKind::Domain, std::string(op) + " requires a constant-free signature; use the harmonized variant");
}

}  // namespace

Structure disjoint_union(const std::vector<Structure>& parts) {
  if (parts.empty()) fail(ErrorKind::Domain, "disjoint union of an empty family");
  const SigPtr& sig = parts[0].sig_ptr();
  for (const auto& p : parts) {
    require_constant_free(p, "disjoint_union");
    if (!(p.sig() == *sig)) fail(ErrorKind::Domain, "disjoint union over mixed signatures");
  }
  std::vector<int> domain;
  std::vector<std::unordered_map<int, int>> remap(parts.size());
  int next = 0;
  for (size_t b = 0; b < parts.size(); ++b) {
    for (int e : parts[b].domain()) {
      remap[b][e] = next;
      domain.push_back(next);
      ++next;
    }
  }
  Structure out(sig, std::move(domain));
  for (size_t b = 0; b < parts.size(); ++b) {
    for (int r = 0; r < sig->relation_count(); ++r)
      for (const auto& f : parts[b].facts(r)) {
        Tup t;
        for (int i = 0; i < f.size(); ++i) t.push(remap[b].at(f[i]));
        out.add_fact(r, t);
      }
  }
  return out;
}

Structure doubling(const Structure& s) {
  require_constant_free(s, "doubling");
  const SigPtr& sig = s.sig_ptr();
  std::unordered_map<int, int> rank;
  int j = 0;
  for (int e : s.domain()) rank[e] = j++;
  std::vector<int> domain;
  for (int i = 0; i < 2 * s.size(); ++i) domain.push_back(i);
  Structure out(sig, std::move(domain));
  for (int r = 0; r < sig->relation_count(); ++r) {
    int a = sig->arity(r);
    for (const auto& f : s.facts(r)) {
      for (int mask = 0; mask < (1 << a); ++mask) {
        Tup t;
        for (int i = 0; i < a; ++i) t.push(2 * rank.at(f[i]) + ((mask >> i) & 1));
        out.add_fact(r, t);
      }
    }
  }
  return out;
}

namespace {

// Facts induced on the named part must agree across a harmonized family.
bool named_parts_identical(const Structure& a, const Structure& b) {
  if (a.constant_map() != b.constant_map()) return false;
  auto named = a.named_elements();
  for (int r = 0; r < a.sig().relation_count(); ++r) {
    auto on_named = [&](const Structure& s) {
      std::vector<Tup> out;
      for (const auto& f : s.facts(r)) {
        bool all = true;
        for (int i = 0; i < f.size(); ++i)
          if (!std::binary_search(named.begin(), named.end(), f[i])) {
            all = false;
            break;
          }
        if (all) out.push_back(f);
      }
      std::sort(out.begin(), out.end());
      return out;
    };
    if (on_named(a) != on_named(b)) return false;
  }
  return true;
}

}  // namespace

Structure harmonized_union(const std::vector<Structure>& parts) {
  if (parts.empty()) fail(ErrorKind::Domain, "harmonized union of an empty family");
  const SigPtr& sig = parts[0].sig_ptr();
  for (const auto& p : parts) {
    if (!(p.sig() == *sig)) fail(ErrorKind::Domain, "harmonized union over mixed signatures");
    if (!named_parts_identical(parts[0], p))
      fail(ErrorKind::Domain, "family is not harmonized: named parts differ");
  }
  auto named = parts[0].named_elements();
  int next = named.empty() ? 0 : named.back() + 1;
  std::vector<int> domain = named;
  std::vector<std::unordered_map<int, int>> remap(parts.size());
  for (size_t b = 0; b < parts.size(); ++b) {
    for (int e : named) remap[b][e] = e;
    for (int e : parts[b].unnamed_elements()) {
      remap[b][e] = next;
      domain.push_back(next);
      ++next;
    }
  }
  Structure out(sig, std::move(domain), parts[0].constant_map());
  for (size_t b = 0; b < parts.size(); ++b)
    for (int r = 0; r < sig->relation_count(); ++r)
      for (const auto& f : parts[b].facts(r)) {
        Tup t;
        for (int i = 0; i < f.size(); ++i) t.push(remap[b].at(f[i]));
        out.add_fact(r, t);
      }
  return out;
}

Structure harmonized_doubling(const Structure& s) {
  const SigPtr& sig = s.sig_ptr();
  auto named = s.named_elements();
  int base = named.empty() ? 0 : named.back() + 1;
  auto unnamed = s.unnamed_elements();
  std::unordered_map<int, int> rank;
  int j = 0;
  for (int e : unnamed) rank[e] = j++;
  std::vector<int> domain = named;
  for (int i = 0; i < 2 * static_cast<int>(unnamed.size()); ++i) domain.push_back(base + i);
  Structure out(sig, std::move(domain), s.constant_map());
  for (int r = 0; r < sig->relation_count(); ++r) {
    int a = sig->arity(r);
    for (const auto& f : s.facts(r)) {
      std::vector<int> free_pos;
      for (int i = 0; i < a; ++i)
        if (!std::binary_search(named.begin(), named.end(), f[i])) free_pos.push_back(i);
      int k = static_cast<int>(free_pos.size());
      for (int mask = 0; mask < (1 << k); ++mask) {
        Tup t = f;
        for (int b = 0; b < k; ++b) {
          int i = free_pos[static_cast<size_t>(b)];
          t[i] = base + 2 * rank.at(f[i]) + ((mask >> b) & 1);
        }
        out.add_fact(r, t);
      }
    }
  }
  return out;
}

Structure strip_transitive_cross_facts(const Structure& s) {
  Structure out(s.sig_ptr(), s.domain(), s.constant_map());
  for (int r = 0; r < s.sig().relation_count(); ++r) {
    bool tr = s.sig().is_transitive(r);
    for (const auto& f : s.facts(r)) {
      if (tr && f.size() == 2 && f[0] != f[1]) continue;
      out.add_fact(r, f);
    }
  }
  return out;
}

}  // namespace triguard
