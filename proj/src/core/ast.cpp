#include "ast.hpp"

#include <algorithm>
#include <set>

namespace triguard {

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::string> term_vars(const std::vector<Term>& ts) {
  std::vector<std::string> v;
  for (const auto& t : ts)
    if (t.is_var()) v.push_back(t.name);
  return sorted_unique(std::move(v));
}

}  // namespace

Formula Formula::atom(int rel, std::string rel_name, std::vector<Term> args) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Atom;
  n->rel = rel;
  n->rel_name = std::move(rel_name);
  n->args = std::move(args);
  n->frees = term_vars(n->args);
  Formula f;
  f.node_ = std::move(n);
  return f;
}

Formula Formula::atom(const Signature& sig, const std::string& rel_name, std::vector<Term> args) {
  int rel = sig.relation_index(rel_name);
  if (rel < 0) fail(ErrorKind::Arity, "undeclared relation " + rel_name);
  if (static_cast<int>(args.size()) != sig.arity(rel))
    fail(ErrorKind::Arity, "arity mismatch for " + rel_name);
  return atom(rel, rel_name, std::move(args));
}

Formula Formula::equal(Term lhs, Term rhs) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Equal;
  n->trivial = lhs.is_var() && rhs.is_var() && lhs.name == rhs.name;
  n->args = {std::move(lhs), std::move(rhs)};
  n->frees = term_vars(n->args);
  Formula f;
  f.node_ = std::move(n);
  return f;
}

Formula Formula::negate(Formula f) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Not;
  n->frees = f.free_vars();
  n->kids = {std::move(f)};
  Formula g;
  g.node_ = std::move(n);
  return g;
}

Formula Formula::conn(NodeKind k, Formula lhs, Formula rhs) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  std::vector<std::string> v = lhs.free_vars();
  const auto& w = rhs.free_vars();
  v.insert(v.end(), w.begin(), w.end());
  n->frees = sorted_unique(std::move(v));
  n->kids = {std::move(lhs), std::move(rhs)};
  Formula g;
  g.node_ = std::move(n);
  return g;
}

Formula Formula::quant(NodeKind k, std::vector<std::string> vars, Formula body) {
  if (vars.empty()) fail(ErrorKind::Syntax, "quantifier with no variables");
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->vars = std::move(vars);
  std::vector<std::string> v;
  for (const auto& x : body.free_vars())
    if (std::find(n->vars.begin(), n->vars.end(), x) == n->vars.end()) v.push_back(x);
  n->frees = sorted_unique(std::move(v));
  n->kids = {std::move(body)};
  Formula g;
  g.node_ = std::move(n);
  return g;
}

Formula Formula::conjoin(const std::vector<Formula>& fs) {
  if (fs.empty()) fail(ErrorKind::Shape, "empty conjunction");
  Formula acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i) acc = land(acc, fs[i]);
  return acc;
}

Formula Formula::disjoin(const std::vector<Formula>& fs) {
  if (fs.empty()) fail(ErrorKind::Shape, "empty disjunction");
  Formula acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i) acc = lor(acc, fs[i]);
  return acc;
}

bool Formula::is_quantifier_free() const {
  if (is_atomic()) return true;
  if (kind() == NodeKind::Forall || kind() == NodeKind::Exists) return false;
  for (const auto& k : node_->kids)
    if (!k.is_quantifier_free()) return false;
  return true;
}

bool Formula::mentions_transitive(const Signature& sig) const {
  if (kind() == NodeKind::Atom) return sig.is_transitive(rel());
  if (kind() == NodeKind::Equal) return false;
  for (const auto& k : node_->kids)
    if (k.mentions_transitive(sig)) return true;
  return false;
}

bool Formula::mentions_relation(int r) const {
  if (kind() == NodeKind::Atom) return rel() == r;
  if (kind() == NodeKind::Equal) return false;
  for (const auto& k : node_->kids)
    if (k.mentions_relation(r)) return true;
  return false;
}

bool Formula::has_nontrivial_equality() const {
  if (kind() == NodeKind::Equal) return !trivial_eq();
  if (kind() == NodeKind::Atom) return false;
  for (const auto& k : node_->kids)
    if (k.has_nontrivial_equality()) return true;
  return false;
}

std::vector<std::string> Formula::atom_vars() const {
  if (!is_atomic()) fail(ErrorKind::Shape, "atom_vars on non-atomic formula");
  return node_->frees;
}

bool Formula::equal_trees(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case NodeKind::Atom:
      return a.rel() == b.rel() && a.node_->args == b.node_->args;
    case NodeKind::Equal:
      return a.node_->args == b.node_->args;
    case NodeKind::Forall:
    case NodeKind::Exists:
      if (a.qvars() != b.qvars()) return false;
      return equal_trees(a.body(), b.body());
    default:
      if (a.child_count() != b.child_count()) return false;
      for (int i = 0; i < a.child_count(); ++i)
        if (!equal_trees(a.child(i), b.child(i))) return false;
      return true;
  }
}

Formula Formula::substitute(const std::vector<std::pair<std::string, Term>>& map) const {
  auto lookup = [&](const Term& t) -> Term {
    if (!t.is_var()) return t;
    for (const auto& [from, to] : map)
      if (from == t.name) return to;
    return t;
  };
  switch (kind()) {
    case NodeKind::Atom: {
      std::vector<Term> args;
      args.reserve(node_->args.size());
      for (const auto& t : node_->args) args.push_back(lookup(t));
      return atom(rel(), rel_name(), std::move(args));
    }
    case NodeKind::Equal:
      return equal(lookup(lhs()), lookup(rhs()));
    case NodeKind::Not:
      return negate(child().substitute(map));
    case NodeKind::Forall:
    case NodeKind::Exists: {
      std::vector<std::pair<std::string, Term>> inner;
      for (const auto& [from, to] : map) {
        if (std::find(qvars().begin(), qvars().end(), from) != qvars().end()) continue;
        if (to.is_var() &&
            std::find(qvars().begin(), qvars().end(), to.name) != qvars().end())
          fail(ErrorKind::Construction, "substitution would capture variable " + to.name);
        inner.emplace_back(from, to);
      }
      if (inner.empty()) return *this;
      return quant(kind(), qvars(), body().substitute(inner));
    }
    default:
      return conn(kind(), child(0).substitute(map), child(1).substitute(map));
  }
}

void Formula::print_to(std::string& out, bool as_unit) const {
  switch (kind()) {
    case NodeKind::Atom: {
      out += rel_name();
      out += '(';
      for (size_t i = 0; i < node_->args.size(); ++i) {
        if (i) out += ',';
        out += node_->args[i].name;
      }
      out += ')';
      return;
    }
    case NodeKind::Equal:
      out += lhs().name;
      out += " = ";
      out += rhs().name;
      return;
    case NodeKind::Not:
      out += '!';
      child().print_to(out, true);
      return;
    case NodeKind::Forall:
    case NodeKind::Exists: {
      out += (kind() == NodeKind::Forall) ? "forall" : "exists";
      for (const auto& v : qvars()) {
        out += ' ';
        out += v;
      }
      out += ' ';
      body().print_to(out, true);
      return;
    }
    default: {
      const char* op = kind() == NodeKind::And       ? " & "
                       : kind() == NodeKind::Or      ? " | "
                       : kind() == NodeKind::Implies ? " -> "
                                                     : " <-> ";
      out += '(';
      child(0).print_to(out, false);
      out += op;
      child(1).print_to(out, false);
      out += ')';
      return;
    }
  }
  (void)as_unit;
}

std::string Formula::print() const {
  if (!node_) return "";
  std::string out;
  print_to(out, false);
  return out;
}

}  // namespace triguard
