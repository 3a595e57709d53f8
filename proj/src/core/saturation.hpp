#ifndef TRIGUARD_SATURATION_HPP
#define TRIGUARD_SATURATION_HPP

#include <optional>
#include <vector>

#include "finder.hpp"
#include "modelcheck.hpp"
#include "normalform.hpp"
#include "structure.hpp"

namespace triguard {

/// phi* = phi /\ (2) /\ (3) /\ (4): only types from alpha are realized, every
/// pair of types from alpha has a realization connected both ways by U, and
/// every guarded pair is U-connected. In tg mode, reflexive transitive atoms
/// inside the type formulas are routed through fresh unary symbols with
/// linking conjuncts, so the result stays inside the transitive-guard syntax.
NormalFormSentence build_phi_star(const NormalFormSentence& phi,
                                  const std::vector<AtomicType>& alpha, bool tg_mode);

struct SaturationOptions {
  bool constants = false;
  bool tg_mode = false;
  bool check_every_step = true;   // incremental Claim 2/3/5 assertions
  int full_check_period = 0;      // 0: only initial and final full checks
  long long max_steps = 0;        // safety cap; 0 = derived |A0|^2 bound
  bool record_added_facts = false;
};

struct SaturationStep {
  int b1, b2;
  int k1, l1, n1;  // cell (k1,l1), intra-cell position n1 of b1
  int k2, l2, n2;
  int t;
  int facts_added;
  std::vector<std::pair<int, Tup>> added;  // only when record_added_facts
};

struct SaturationTrace {
  std::vector<SaturationStep> steps;
};

/// Table geometry and element addressing of the A_i structures:
/// named elements 0..named-1, unnamed element (b,k,l) at
/// named + ((k-1)*5K + (l-1))*5K + (b-1), with b,k,l in 1..5K.
struct TableCoords {
  int named = 0;
  int K = 0;
  int fiveK = 0;

  int id_of(int b, int k, int l) const {
    return named + (((k - 1) * fiveK + (l - 1)) * fiveK) + (b - 1);
  }
  void pos_of(int id, int& b, int& k, int& l) const {
    int r = id - named;
    b = r % fiveK + 1;
    r /= fiveK;
    l = r % fiveK + 1;
    k = r / fiveK + 1;
  }
  bool is_named(int id) const { return id < named; }
  int block_of_pos(int b) const { return (b - 1) / K; }
  int size() const { return named + fiveK * fiveK * fiveK; }
};

struct Blocks {
  Structure C_minus;  // canonicalized copy of the input model
  Structure C;        // (harmonized) doubling
  Structure B;        // five copies of C
  Structure A0;       // the (5K)^2-cell table
  TableCoords coords;
};

/// Builds C (doubling), B (5 copies) and A0 ((5K)^2 copies of B), verifying
/// the input against phi*.
Blocks build_blocks(const Structure& c_minus, const NormalFormSentence& phi_star,
                    const SaturationOptions& opts);

/// Claim 1 selection: distinct U-connected realizations of the two 1-types in
/// C, indistinguishable when the types coincide. Types must be unnamed.
std::pair<int, int> select_entry_elements(const Structure& C, const AtomicType& alpha_k,
                                          const AtomicType& alpha_l);

struct SaturationResult {
  Structure model;  // A_f
  Structure a0;     // the frozen initial table
  SaturationTrace trace;
  size_t a0_size = 0;
  size_t a0_facts = 0;
  int K = 0;
  int named = 0;
};

/// The U-saturation loop of the finite-model construction: repeatedly picks
/// the least unconnected pair and splices it onto a fresh block of its target
/// cell using the frozen A0 as the fact template.
SaturationResult saturate(const Structure& c_minus, const NormalFormSentence& phi_star,
                          const SaturationOptions& opts);

/// Re-runs a trace from A0 and returns the reconstructed final structure.
Structure replay_trace(const Structure& c_minus, const NormalFormSentence& phi_star,
                       const SaturationOptions& opts, const SaturationTrace& trace);

}  // namespace triguard

#endif
