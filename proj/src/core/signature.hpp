#ifndef TRIGUARD_SIGNATURE_HPP
#define TRIGUARD_SIGNATURE_HPP

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace triguard {

/// Relational signature: relation symbols with arities, constant symbols,
/// plus the distinguished roles used by the guarded logics here: a universal
/// symbol U, a set of transitive symbols, and an auxiliary symbol Aux.
/// Immutable once built; extensions produce a new signature whose relation
/// and constant indices are a superset of the old ones (append-only), so
/// formulas compiled against the old signature stay valid.
class Signature {
 public:
  struct Relation {
    std::string name;
    int arity;
  };

  Signature() = default;

  int add_relation(const std::string& name, int arity);
  void add_constant(const std::string& name);
  void set_universal(const std::string& name);   // declares name/2 if needed
  void set_transitive(const std::string& name);  // declares name/2 if needed
  void set_aux(const std::string& name);         // declares name/2 if needed

  int relation_count() const { return static_cast<int>(relations_.size()); }
  const Relation& relation(int i) const { return relations_[static_cast<size_t>(i)]; }
  int arity(int i) const { return relations_[static_cast<size_t>(i)].arity; }
  int relation_index(const std::string& name) const;  // -1 if absent

  int constant_count() const { return static_cast<int>(constants_.size()); }
  const std::string& constant(int i) const { return constants_[static_cast<size_t>(i)]; }
  int constant_index(const std::string& name) const;  // -1 if absent

  bool has_universal() const { return universal_ >= 0; }
  int universal() const { return universal_; }
  bool has_aux() const { return aux_ >= 0; }
  int aux() const { return aux_; }
  bool is_transitive(int rel) const;
  const std::vector<int>& transitive_relations() const { return transitive_; }

  int width() const;  // max arity

  /// Fresh `_`-prefixed relation name not yet declared.
  std::string fresh_name(const std::string& stem) const;

  std::string format() const;  // header block text, one statement per line

  bool operator==(const Signature& o) const;

 private:
  void check_special(int rel, const char* role) const;

  std::vector<Relation> relations_;
  std::vector<std::string> constants_;
  std::unordered_map<std::string, int> rel_index_;
  std::unordered_map<std::string, int> const_index_;
  int universal_ = -1;
  int aux_ = -1;
  std::vector<int> transitive_;  // sorted relation indices
};

using SigPtr = std::shared_ptr<const Signature>;

/// Parses a signature header block: statements `rel R/3;`, `const c;`,
/// `universal U;`, `transitive T;`, `aux Aux;`. Returns the signature and the
/// offset just past the last statement (the rest of the text is the formula).
std::pair<Signature, size_t> parse_signature_header(const std::string& text);

}  // namespace triguard

#endif
