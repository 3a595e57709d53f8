#ifndef TRIGUARD_BRUTEFIND_HPP
#define TRIGUARD_BRUTEFIND_HPP

#include <optional>
#include <vector>

#include "core/ast.hpp"
#include "core/structure.hpp"

namespace triguard::testing {

// Test-only bounded model finder for arbitrary sentences, independent of the
// production search: three-valued evaluation over a flat atom assignment with
// chronological backtracking. Used as the oracle for Lemma 1 tests.
class BruteFinder {
 public:
  BruteFinder(const Formula& sentence, SigPtr sig, int max_size)
      : f_(sentence), sig_(std::move(sig)), max_size_(max_size) {}

  std::optional<Structure> find() {
    for (int n = 1; n <= max_size_; ++n) {
      int u = sig_->constant_count();
      std::vector<int> cvals(static_cast<size_t>(u), 0);
      for (;;) {
        if (auto s = search_at(n, cvals)) return s;
        int c = u - 1;
        while (c >= 0 && cvals[static_cast<size_t>(c)] + 1 == n) {
          cvals[static_cast<size_t>(c)] = 0;
          --c;
        }
        if (c < 0) break;
        ++cvals[static_cast<size_t>(c)];
      }
    }
    return std::nullopt;
  }

 private:
  enum : int8_t { F = 0, T = 1, U = 2 };

  std::optional<Structure> search_at(int n, const std::vector<int>& cvals) {
    n_ = n;
    offsets_.assign(1, 0);
    for (int r = 0; r < sig_->relation_count(); ++r) {
      int cnt = 1;
      for (int i = 0; i < sig_->arity(r); ++i) cnt *= n;
      offsets_.push_back(offsets_.back() + cnt);
    }
    vals_.assign(static_cast<size_t>(offsets_.back()), U);
    cmap_.clear();
    for (int c = 0; c < sig_->constant_count(); ++c)
      cmap_[sig_->constant(c)] = cvals[static_cast<size_t>(c)];
    return dive(0);
  }

  std::optional<Structure> dive(int next_atom) {
    std::vector<std::pair<std::string, int>> env;
    int8_t v = eval3(f_, env);
    if (v == F) return std::nullopt;
    if (v == T) return build();
    while (next_atom < offsets_.back() && vals_[static_cast<size_t>(next_atom)] != U) ++next_atom;
    if (next_atom >= offsets_.back()) return std::nullopt;
    for (int8_t choice : {T, F}) {
      vals_[static_cast<size_t>(next_atom)] = choice;
      if (auto s = dive(next_atom + 1)) return s;
    }
    vals_[static_cast<size_t>(next_atom)] = U;
    return std::nullopt;
  }

  Structure build() const {
    std::vector<int> domain;
    for (int i = 0; i < n_; ++i) domain.push_back(i);
    Structure s(sig_, domain, cmap_);
    for (int r = 0; r < sig_->relation_count(); ++r) {
      int a = sig_->arity(r);
      for (int id = offsets_[static_cast<size_t>(r)]; id < offsets_[static_cast<size_t>(r) + 1];
           ++id) {
        if (vals_[static_cast<size_t>(id)] != T) continue;
        int acc = id - offsets_[static_cast<size_t>(r)];
        Tup t;
        for (int i = 0; i < a; ++i) t.push(0);
        for (int i = a - 1; i >= 0; --i) {
          t[i] = acc % n_;
          acc /= n_;
        }
        s.add_fact(r, t);
      }
    }
    return s;
  }

  int term_val(const Term& t, const std::vector<std::pair<std::string, int>>& env) const {
    if (!t.is_var()) return cmap_.at(t.name);
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == t.name) return it->second;
    fail(ErrorKind::Domain, "free variable in brute finder");
  }

  int8_t eval3(const Formula& f, std::vector<std::pair<std::string, int>>& env) const {
    switch (f.kind()) {
      case NodeKind::Atom: {
        int acc = 0;
        for (const auto& a : f.args()) acc = acc * n_ + term_val(a, env);
        return vals_[static_cast<size_t>(offsets_[static_cast<size_t>(f.rel())] + acc)];
      }
      case NodeKind::Equal:
        return term_val(f.lhs(), env) == term_val(f.rhs(), env) ? T : F;
      case NodeKind::Not: {
        int8_t v = eval3(f.child(), env);
        return v == U ? U : (v == T ? F : T);
      }
      case NodeKind::And: {
        int8_t a = eval3(f.child(0), env);
        if (a == F) return F;
        int8_t b = eval3(f.child(1), env);
        if (b == F) return F;
        return (a == T && b == T) ? T : U;
      }
      case NodeKind::Or: {
        int8_t a = eval3(f.child(0), env);
        if (a == T) return T;
        int8_t b = eval3(f.child(1), env);
        if (b == T) return T;
        return (a == F && b == F) ? F : U;
      }
      case NodeKind::Implies: {
        int8_t a = eval3(f.child(0), env);
        if (a == F) return T;
        int8_t b = eval3(f.child(1), env);
        if (b == T) return T;
        return (a == T && b == F) ? F : U;
      }
      case NodeKind::Iff: {
        int8_t a = eval3(f.child(0), env);
        int8_t b = eval3(f.child(1), env);
        if (a == U || b == U) return U;
        return a == b ? T : F;
      }
      case NodeKind::Forall:
      case NodeKind::Exists: {
        bool universal = f.kind() == NodeKind::Forall;
        size_t mark = env.size();
        for (const auto& v : f.qvars()) env.emplace_back(v, 0);
        std::vector<int> idx(f.qvars().size(), 0);
        bool any_unknown = false;
        for (;;) {
          for (size_t i = 0; i < idx.size(); ++i) env[mark + i].second = idx[i];
          int8_t v = eval3(f.body(), env);
          if (universal && v == F) {
            env.resize(mark);
            return F;
          }
          if (!universal && v == T) {
            env.resize(mark);
            return T;
          }
          if (v == U) any_unknown = true;
          size_t i = idx.size();
          while (i > 0 && idx[i - 1] + 1 == n_) idx[--i] = 0;
          if (i == 0) break;
          ++idx[i - 1];
        }
        env.resize(mark);
        if (any_unknown) return U;
        return universal ? T : F;
      }
    }
    return U;
  }

  Formula f_;
  SigPtr sig_;
  int max_size_;
  int n_ = 0;
  std::vector<int> offsets_;
  std::vector<int8_t> vals_;
  std::map<std::string, int> cmap_;
};

inline std::optional<Structure> brute_find(const Formula& sentence, SigPtr sig, int max_size) {
  return BruteFinder(sentence, std::move(sig), max_size).find();
}

}  // namespace triguard::testing

#endif
