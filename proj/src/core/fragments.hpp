#ifndef TRIGUARD_FRAGMENTS_HPP
#define TRIGUARD_FRAGMENTS_HPP

#include <optional>
#include <string>
#include <vector>

#include "ast.hpp"
#include "signature.hpp"

namespace triguard {

struct Violation {
  std::string path;  // dotted node path from the root
  std::string rule;
};

/// Per-fragment membership with one violation list per fragment; the flag is
/// true exactly when the corresponding list is empty.
struct FragmentReport {
  bool gf = false, tgf = false, gfu = false, gftg = false, gfutg = false, tgftg = false;
  std::vector<Violation> gf_violations, tgf_violations, gfu_violations, gftg_violations,
      gfutg_violations, tgftg_violations;

  std::string to_json() const;
};

/// A quantifier body decomposed into guard and matrix. An empty matrix stands
/// for the trivially true formula (as in a bare guarded existential).
struct GuardedShape {
  Formula guard;
  Formula matrix;
};

/// Recognizes the guarded body shape: implication from an atomic guard for
/// universal blocks, conjunction with an atomic guard for existential ones.
/// The guard must contain every free variable of the matrix.
std::optional<GuardedShape> match_guarded(NodeKind q, const Formula& body);

FragmentReport classify_fragment(const Formula& f, const Signature& sig);

/// Guards every unguarded quantifier of a TGF sentence: two relevant free
/// variables get the universal symbol, at most one gets a trivial x=x guard.
Formula tgf_to_gfu(const Formula& f, const Signature& sig);

/// Appends the conjunct axiomatising U as the universally true relation.
Formula gfu_to_tgf(const Formula& f, const Signature& sig);

}  // namespace triguard

#endif
