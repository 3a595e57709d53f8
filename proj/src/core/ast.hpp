#ifndef TRIGUARD_AST_HPP
#define TRIGUARD_AST_HPP

#include <memory>
#include <string>
#include <vector>

#include "common.hpp"
#include "signature.hpp"

namespace triguard {

enum class NodeKind { Atom, Equal, Not, And, Or, Implies, Iff, Forall, Exists };

/// A term is a variable or a constant; no function symbols.
struct Term {
  std::string name;
  int constant_index = -1;  // < 0 means variable

  bool is_var() const { return constant_index < 0; }
  static Term var(std::string n) { return Term{std::move(n), -1}; }
  static Term constant(std::string n, int idx) { return Term{std::move(n), idx}; }
  bool operator==(const Term& o) const {
    return constant_index == o.constant_index && name == o.name;
  }
};

/// Immutable first-order formula over a signature. Nodes are shared;
/// free-variable sets are computed bottom-up and cached per node.
class Formula {
 public:
  Formula() = default;

  static Formula atom(int rel, std::string rel_name, std::vector<Term> args);
  static Formula atom(const Signature& sig, const std::string& rel_name, std::vector<Term> args);
  static Formula equal(Term lhs, Term rhs);
  static Formula negate(Formula f);
  static Formula conn(NodeKind k, Formula lhs, Formula rhs);
  static Formula land(Formula a, Formula b) { return conn(NodeKind::And, std::move(a), std::move(b)); }
  static Formula lor(Formula a, Formula b) { return conn(NodeKind::Or, std::move(a), std::move(b)); }
  static Formula implies(Formula a, Formula b) { return conn(NodeKind::Implies, std::move(a), std::move(b)); }
  static Formula iff(Formula a, Formula b) { return conn(NodeKind::Iff, std::move(a), std::move(b)); }
  static Formula quant(NodeKind k, std::vector<std::string> vars, Formula body);
  static Formula forall(std::vector<std::string> vars, Formula body) {
    return quant(NodeKind::Forall, std::move(vars), std::move(body));
  }
  static Formula exists(std::vector<std::string> vars, Formula body) {
    return quant(NodeKind::Exists, std::move(vars), std::move(body));
  }
  /// Conjunction of a nonempty list, left-associated.
  static Formula conjoin(const std::vector<Formula>& fs);
  static Formula disjoin(const std::vector<Formula>& fs);

  bool empty() const { return !node_; }
  NodeKind kind() const { return node_->kind; }

  // Atom / Equal accessors.
  int rel() const { return node_->rel; }
  const std::string& rel_name() const { return node_->rel_name; }
  const std::vector<Term>& args() const { return node_->args; }
  const Term& lhs() const { return node_->args[0]; }
  const Term& rhs() const { return node_->args[1]; }
  /// Equality of a variable with itself; admissible as a trivial guard.
  bool trivial_eq() const { return node_->kind == NodeKind::Equal && node_->trivial; }

  // Connective accessors.
  const Formula& child(int i = 0) const { return node_->kids[static_cast<size_t>(i)]; }
  int child_count() const { return static_cast<int>(node_->kids.size()); }

  // Quantifier accessors.
  const std::vector<std::string>& qvars() const { return node_->vars; }
  const Formula& body() const { return node_->kids[0]; }

  /// Sorted free-variable names.
  const std::vector<std::string>& free_vars() const { return node_->frees; }
  bool is_sentence() const { return node_ && node_->frees.empty(); }
  bool is_atomic() const {
    return node_ && (node_->kind == NodeKind::Atom || node_->kind == NodeKind::Equal);
  }
  bool is_quantifier_free() const;
  /// True if any atom of a transitive relation occurs anywhere in the formula.
  bool mentions_transitive(const Signature& sig) const;
  bool mentions_relation(int rel) const;
  /// True if some equality atom other than a trivial guard x=x occurs.
  bool has_nontrivial_equality() const;

  /// Variables of an atomic formula (sorted, deduplicated).
  std::vector<std::string> atom_vars() const;

  bool operator==(const Formula& o) const { return equal_trees(*this, o); }
  bool operator!=(const Formula& o) const { return !(*this == o); }

  /// Capture-naive substitution of free variables; callers must ensure the
  /// replacement terms' variables are not captured by binders (the parser's
  /// rename-apart discipline guarantees this for all internal uses).
  Formula substitute(const std::vector<std::pair<std::string, Term>>& map) const;

  std::string print() const;

 private:
  struct Node {
    NodeKind kind;
    int rel = -1;
    std::string rel_name;
    std::vector<Term> args;  // atom arguments, or [lhs, rhs] for Equal
    bool trivial = false;
    std::vector<Formula> kids;
    std::vector<std::string> vars;
    std::vector<std::string> frees;
  };

  static bool equal_trees(const Formula& a, const Formula& b);
  void print_to(std::string& out, bool as_unit) const;

  std::shared_ptr<const Node> node_;
};

/// print_formula per the module contract: canonical text, fully parenthesized
/// binary connectives; round-trips through parse_formula.
inline std::string print_formula(const Formula& f) { return f.print(); }

}  // namespace triguard

#endif
