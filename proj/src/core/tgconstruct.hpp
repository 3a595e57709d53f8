#ifndef TRIGUARD_TGCONSTRUCT_HPP
#define TRIGUARD_TGCONSTRUCT_HPP

#include <optional>
#include <string>
#include <vector>

#include "finder.hpp"
#include "normalform.hpp"
#include "saturation.hpp"
#include "structure.hpp"

namespace triguard {

/// phi_B: the ntr and forall conjuncts, the Aux closure, collapse of the
/// transitive relations to the identity, realization of every reduced 2-type
/// from beta, and the 1-type realization/closure conjuncts. Treated as GF.
NormalFormSentence build_phi_B(const NormalFormSentence& phi,
                               const std::vector<AtomicType>& alpha,
                               const std::vector<AtomicType>& beta);

/// phi_C: the tr-conjuncts, the transitive-guard forall conjuncts, the S_P
/// Aux conjuncts, Aux => (x!=y => \/ beta-), and the 1-type conjuncts.
/// A two-variable GF2+TG sentence.
NormalFormSentence build_phi_C(const NormalFormSentence& phi,
                               const std::vector<AtomicType>& alpha,
                               const std::vector<AtomicType>& beta);

/// Makes the per-1-type realization counts of B and C equal: C* is an m-fold
/// disjoint union, B* adjoins detached clones of pattern realizations.
std::pair<Structure, Structure> equalize_realizations(const Structure& B, const Structure& C);

struct GridStructure {
  int K = 0;
  Structure s;                        // domain ids: (k,l) -> k*K + l
  std::vector<AtomicType> alpha;      // alpha_i = tp(b_i) along the B* enumeration
  std::vector<int> b_enum, c_enum;    // element enumerations of B* and C*

  int element(int k, int l) const { return k * K + l; }
  int row_of(int id) const { return id / K; }
  int col_of(int id) const { return id % K; }
};

/// The D grid: tp(k,l) = alpha_{(k+l) mod K}; every row is an isomorphic copy
/// of B*, every column of C*; no further facts.
GridStructure build_D(const Structure& b_star, const Structure& c_star);

/// Connects the vertical pair to the row using (a1,a2) as the template:
/// every non-transitive fact of the row touching a1/a2 (but not confined to
/// them) is pulled back through b_s -> a_s.
void connect_pair_to_row(Structure& target, int b1, int b2, const std::vector<int>& row_elems,
                         int a1, int a2);

struct TgBudgets {
  int alpha_max = 6;
  int beta_max = 12;
  int find_max = 5;
  int max_disjuncts = 16;
  int candidate_models = 4;
  long long max_table_size = 1500;  // largest A0 the saturation certificate may use
};

struct SmallModelResult {
  Structure model;  // A' of size 3K^3
  int K = 0;
  Structure B, C, B_star, C_star;
  GridStructure D;
};

/// Builds A' from 3K copies of D with the circular row-connection strategy.
/// nullopt when phi_B or phi_C has no model within the finder bound.
std::optional<SmallModelResult> build_small_model(const NormalFormSentence& phi,
                                                  const std::vector<AtomicType>& alpha,
                                                  const std::vector<AtomicType>& beta,
                                                  const TgBudgets& budgets);

/// Lemma 6 reducer: rewrites every pair's 2-type to the distinguished member
/// of its ~-class (classes keyed by the per-variable parts, the transitive
/// part, and the tr-conjunct witness pattern of the type and its inverse).
Structure reduce_two_types(const Structure& C, const NormalFormSentence& phi);

struct FinsatResult {
  bool sat = false;
  std::optional<Structure> certificate;
  std::string detail;  // which pipeline produced the verdict
};

/// Finite satisfiability of constant-free GF+TG sentences within budgets: a
/// true verdict carries a checker-verified certificate; false means no
/// witness was found within the budgets.
FinsatResult decide_finsat_gftg(const Formula& phi0, SigPtr sig, const TgBudgets& budgets);

/// Finite satisfiability of constant-free, equality-free TGF+TG / GFU+TG
/// sentences: candidates for the 1-type set feed phi*, whose finite GF+TG
/// models are saturated in tg mode into U-biquitous certificates.
FinsatResult decide_finsat_gfutg(const Formula& phi0, SigPtr sig, const TgBudgets& budgets);

}  // namespace triguard

#endif
