#ifndef TRIGUARD_FINDER_HPP
#define TRIGUARD_FINDER_HPP

#include <optional>
#include <vector>

#include "modelcheck.hpp"
#include "normalform.hpp"
#include "structure.hpp"

namespace triguard {

struct SearchConfig {
  int max_domain_size = 3;
  bool ubiquitous = false;
  bool transitive = false;
  std::optional<int> max_distinct_elements_per_fact;
  bool ramified = false;  // distinct pairs joined by at most one transitive relation
  uint64_t seed = 0;      // kept for the record; the search is deterministic
  long long max_decisions = 0;  // 0 = unlimited

  // When set, the relations of this structure are frozen and only the
  // remaining (fresh) relations are searched; the domain is the base's.
  const Structure* expand_base = nullptr;
};

struct SearchStats {
  long long decisions = 0;
  long long conflicts = 0;
  bool budget_exhausted = false;
};

/// Bounded model search by iterative deepening over the domain size with
/// backtracking over fact assignments and witness-driven branching. Returned
/// structures are verified against check_model before being handed out.
std::optional<Structure> find_model(const NormalFormSentence& nf, const SearchConfig& cfg,
                                    SearchStats* stats = nullptr);

/// Enumerates up to `limit` models (minimal completions), smallest domain
/// first, in deterministic order.
std::vector<Structure> find_models(const NormalFormSentence& nf, const SearchConfig& cfg, int limit,
                                   SearchStats* stats = nullptr);

/// Least transitive superset of every declared transitive relation.
Structure transitive_closure(const Structure& s);

struct RealizedTypes {
  std::vector<AtomicType> one_types;  // sorted, deduplicated
  std::vector<AtomicType> two_types;  // non-degenerate guarded 2-types
};
RealizedTypes realized_types(const Structure& s);

}  // namespace triguard

#endif
