#ifndef TRIGUARD_MODELCHECK_HPP
#define TRIGUARD_MODELCHECK_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "normalform.hpp"
#include "structure.hpp"

namespace triguard {

struct CheckFlags {
  bool ubiquitous = false;
  bool transitive = false;
};

enum class ViolationKind { MissingWitness, ForallViolation, NonTransitive, MissingUEdge, MissingAux };

struct CheckViolation {
  int conjunct;  // ae index, ae-count + a index, or -1 for semantic checks
  std::vector<int> tuple;
  ViolationKind kind;

  bool operator<(const CheckViolation& o) const;
};

struct CheckReport {
  bool verdict = false;
  std::vector<CheckViolation> violations;

  std::string to_json() const;
};

/// Standard first-order satisfaction; equality is identity, quantifiers range
/// over the whole domain, guards are ordinary subformulas.
bool evaluate(const Structure& s, const Formula& f, const std::map<std::string, int>& assignment);

/// Allocation-light variant for hot loops: the environment is a flat stack of
/// bindings, later entries shadowing earlier ones.
using EvalEnv = std::vector<std::pair<std::string, int>>;
bool evaluate_env(const Structure& s, const Formula& f, EvalEnv& env);

/// Checks every conjunct by guard-driven enumeration, plus U-biquity and
/// transitivity when flagged. Stops collecting after max_violations.
CheckReport check_model(const Structure& s, const NormalFormSentence& nf, CheckFlags flags = {},
                        int max_violations = 16);

/// Deterministic witness for a guard-satisfying tuple: the lexicographically
/// least tuple of elements satisfying eguard /\ matrix, or nullopt.
std::optional<Tup> find_witness(const Structure& s, const AEConjunct& c, const Tup& abar);

}  // namespace triguard

#endif
