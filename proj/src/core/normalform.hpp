#ifndef TRIGUARD_NORMALFORM_HPP
#define TRIGUARD_NORMALFORM_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ast.hpp"
#include "signature.hpp"

namespace triguard {

/// Class tag for forall-exists conjuncts under transitive guards: ntr when the
/// existential guard is non-transitive, tr when it is transitive.
enum class TgClass { None, Ntr, Tr };

/// forall x-bar (guard => exists y-bar (eguard /\ matrix))
struct AEConjunct {
  std::vector<std::string> uvars;
  Formula guard;   // atom or trivial equality over uvars
  std::vector<std::string> evars;
  Formula eguard;  // atom or trivial equality; covers the matrix's free vars
  Formula matrix;  // quantifier-free; empty stands for true
  TgClass tg = TgClass::None;

  Formula to_formula() const;
};

/// forall x-bar (guard => matrix)
struct AConjunct {
  std::vector<std::string> uvars;
  Formula guard;
  Formula matrix;  // quantifier-free

  Formula to_formula() const;
};

struct NormalFormSentence {
  SigPtr sig;
  std::vector<AEConjunct> ae;
  std::vector<AConjunct> a;

  Formula to_formula() const;
  /// Shape invariants: atomic guards, quantifier-free matrices, guard
  /// coverage, trivial guards only over at most one relevant variable.
  void validate() const;
  /// Eq. (5) shape: tr-conjuncts have a one-variable non-transitive outer
  /// guard and a transitive existential guard, ntr-conjuncts a non-transitive
  /// one; no matrix mentions a transitive symbol; the Aux closure is present.
  void validate_tg_shape() const;
  bool uses_equality_beyond_trivial_guards() const;
};

/// Recognizes a sentence already in shape (1); nullopt when it is not.
std::optional<NormalFormSentence> recognize_normal_form(const Formula& f, SigPtr sig);

/// Lazy enumerator over the normal-form disjuncts of a sentence.
class NormalFormEnumerator {
 public:
  NormalFormEnumerator(Formula sentence, SigPtr sig);
  ~NormalFormEnumerator();
  NormalFormEnumerator(NormalFormEnumerator&&) noexcept;
  NormalFormEnumerator& operator=(NormalFormEnumerator&&) noexcept;

  /// Snapshot of the extended signature (input plus fresh symbols so far).
  SigPtr extended_signature() const;
  /// Produces the next disjunct; nullopt once exhausted.
  std::optional<NormalFormSentence> next();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// to_normal_form per the module contract.
inline NormalFormEnumerator to_normal_form(Formula sentence, SigPtr sig) {
  return NormalFormEnumerator(std::move(sentence), std::move(sig));
}

/// Enhanced normal form for transitive-guard logics, shape (5): tr-conjuncts
/// get one-variable outer guards via fresh unary symbols, transitive outer
/// guards move to fresh non-transitive symbols backed by forall-conjuncts,
/// and the Aux closure conjuncts are appended. Returns the rewritten sentence
/// over an extended signature.
NormalFormSentence enhance_tg_normal_form(const NormalFormSentence& nf);

}  // namespace triguard

#endif
