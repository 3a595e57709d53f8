#ifndef TRIGUARD_STRUCTURE_HPP
#define TRIGUARD_STRUCTURE_HPP

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ast.hpp"
#include "common.hpp"
#include "signature.hpp"

namespace triguard {

/// One literal of an atomic type. Argument codes 0..l-1 denote the type
/// variables x1..xl; codes l.. denote constants in signature order.
/// rel < 0 encodes equality between the two argument codes.
struct TypeLiteral {
  int rel;
  Tup args;
  bool positive;

  bool operator==(const TypeLiteral& o) const {
    return rel == o.rel && args == o.args && positive == o.positive;
  }
  bool operator<(const TypeLiteral& o) const {
    if (rel != o.rel) return rel < o.rel;
    if (!(args == o.args)) return args < o.args;
    return positive < o.positive;
  }
};

/// Canonical atomic l-type: one polarity for every admissible atom over the
/// type variables and the signature's constants, literals sorted. A reduction
/// (transitive_free_reduction) yields a partial type with fewer literals.
struct AtomicType {
  int arity = 0;
  std::vector<TypeLiteral> literals;

  bool operator==(const AtomicType& o) const {
    return arity == o.arity && literals == o.literals;
  }
  bool operator!=(const AtomicType& o) const { return !(*this == o); }
  bool operator<(const AtomicType& o) const {
    if (arity != o.arity) return arity < o.arity;
    return literals < o.literals;
  }

  /// Polarity of a literal, or nullopt when absent (possible on reductions).
  std::optional<bool> polarity(int rel, const Tup& args) const;

  /// Contains a positive literal covering all type variables.
  bool guarded() const;
  /// For 2-types: contains x1 != x2.
  bool non_degenerate() const;
  /// Swaps the two type variables of a 2-type.
  AtomicType inverse() const;
  /// Literals mentioning only variable code `v` (constants allowed).
  std::vector<TypeLiteral> restrict_to_var(int v) const;
  /// Literals of transitive relations.
  std::vector<TypeLiteral> restrict_transitive(const Signature& sig) const;

  std::string key() const;  // compact canonical string, usable as a map key
};

/// beta minus the cross-variable literals of every transitive relation;
/// reflexive transitive literals stay.
AtomicType transitive_free_reduction(const AtomicType& beta, const Signature& sig);

/// Renders a type as a conjunction of literals over the given variable names.
/// When `reflexive_rewrite` maps a transitive relation to a unary relation,
/// literals T(xi,xi) are emitted as P(xi) instead.
Formula type_to_formula(const AtomicType& t, const Signature& sig,
                        const std::vector<std::string>& vars,
                        const std::map<int, int>& reflexive_rewrite = {});

/// Finite relational structure over a fixed signature. Element ids are opaque
/// integers. Mutating methods exist for the benefit of builders; every
/// published operation hands out structures that are treated as immutable.
class Structure {
 public:
  Structure() = default;
  Structure(SigPtr sig, std::vector<int> domain, std::map<std::string, int> constant_map = {});

  const Signature& sig() const { return *sig_; }
  const SigPtr& sig_ptr() const { return sig_; }
  /// Re-binds the signature (append-only extensions keep facts valid).
  void upgrade_signature(SigPtr sig);

  const std::vector<int>& domain() const { return domain_; }
  int size() const { return static_cast<int>(domain_.size()); }
  bool in_domain(int e) const { return domset_.count(e) > 0; }
  void add_element(int e);

  const std::map<std::string, int>& constant_map() const { return constants_; }
  int constant_element(int constant_index) const;
  /// Sorted element ids interpreting at least one constant.
  std::vector<int> named_elements() const;
  bool is_named(int e) const;
  std::vector<int> unnamed_elements() const;

  bool has_fact(int rel, const Tup& t) const {
    return facts_[static_cast<size_t>(rel)].count(t) > 0;
  }
  void add_fact(int rel, const Tup& t);
  /// Hot-path insertion without arity/domain validation; callers guarantee
  /// well-formedness (the table builders and the saturation step).
  void add_fact_unchecked(int rel, const Tup& t) { facts_[static_cast<size_t>(rel)].insert(t); }
  void reserve_facts(int rel, size_t n) { facts_[static_cast<size_t>(rel)].reserve(n); }
  void remove_fact(int rel, const Tup& t);
  void set_fact(int rel, const Tup& t, bool value);
  const std::unordered_set<Tup, TupHash>& facts(int rel) const {
    return facts_[static_cast<size_t>(rel)];
  }
  size_t fact_count() const;

  std::string to_jsonl() const;  // canonical, bit-exact round trip
  static Structure from_jsonl(SigPtr sig, const std::string& text);

 private:
  SigPtr sig_;
  std::vector<int> domain_;  // sorted
  std::unordered_set<int> domset_;
  std::map<std::string, int> constants_;
  std::vector<std::unordered_set<Tup, TupHash>> facts_;
};

/// tp_s(a-bar): the unique atomic type realized by the tuple.
AtomicType atomic_type(const Structure& s, const Tup& tuple);

/// A tuple is guarded when built from one element or covered by some fact.
bool is_guarded(const Structure& s, const Tup& tuple);

/// Swapping occurrences of a and a' in any fact never changes fact status.
bool indistinguishable(const Structure& s, int a, int a_prime);

Structure disjoint_union(const std::vector<Structure>& parts);
Structure doubling(const Structure& s);
Structure harmonized_union(const std::vector<Structure>& parts);
Structure harmonized_doubling(const Structure& s);

/// Removes the facts T[a,b] with a != b of every transitive T.
Structure strip_transitive_cross_facts(const Structure& s);

}  // namespace triguard

#endif
