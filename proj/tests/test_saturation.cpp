#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/finder.hpp"
#include "core/fragments.hpp"
#include "core/modelcheck.hpp"
#include "core/parser.hpp"
#include "core/saturation.hpp"
#include "support/testutil.hpp"

using namespace triguard;
using namespace triguard::testing;

namespace {

NormalFormSentence nf_of(const std::string& text) {
  auto [sig, f] = parse_formula_file(text);
  auto nf = recognize_normal_form(f, std::make_shared<Signature>(std::move(sig)));
  REQUIRE(nf.has_value());
  return *nf;
}

// Standard pipeline head: find a U-biquitous model, take its 1-types, build
// phi*, find the seed.
struct PipelineHead {
  NormalFormSentence phi;
  NormalFormSentence phi_star;
  Structure seed;
};

PipelineHead pipeline_head(const std::string& text, int bound, bool tg = false) {
  PipelineHead out;
  out.phi = nf_of(text);
  SearchConfig cfg;
  cfg.max_domain_size = bound;
  cfg.ubiquitous = true;
  cfg.transitive = tg;
  auto witness = find_model(out.phi, cfg);
  REQUIRE(witness.has_value());
  out.phi_star = build_phi_star(out.phi, realized_types(*witness).one_types, tg);
  SearchConfig seed_cfg;
  seed_cfg.max_domain_size = bound;
  seed_cfg.transitive = tg;
  auto seed = find_model(out.phi_star, seed_cfg);
  REQUIRE(seed.has_value());
  out.seed = *seed;
  return out;
}

}  // namespace

TEST_CASE("phi* adds the three conjunct families") {
  NormalFormSentence phi =
      nf_of("rel P/1; rel R/3; universal U;\nforall x y (U(x,y) -> exists z R(x,y,z))");
  // One 1-type: a single element with everything positive where possible.
  Structure one = make_structure(phi.sig, 1, {{"U", {0, 0}}, {"P", {0}}, {"R", {0, 0, 0}}});
  auto alpha = realized_types(one).one_types;
  REQUIRE(alpha.size() == 1);
  NormalFormSentence star = build_phi_star(phi, alpha, false);
  // (3): |alpha|^2 new forall-exists conjuncts guarded by U.
  CHECK(star.ae.size() == phi.ae.size() + 1);
  const AEConjunct& pair = star.ae.back();
  CHECK(pair.eguard.kind() == NodeKind::Atom);
  CHECK(pair.eguard.rel() == star.sig->universal());
  // (2) and (4): one type-closure conjunct plus one per relation.
  CHECK(star.a.size() == phi.a.size() + 1 + static_cast<size_t>(star.sig->relation_count()));
  // (4) for unary P is forall x (P(x) -> U(x,x)).
  bool unary_closure = false;
  for (const auto& c : star.a) {
    if (c.guard.kind() != NodeKind::Atom || c.guard.rel_name() != "P") continue;
    if (c.matrix.kind() == NodeKind::Atom && c.matrix.rel() == star.sig->universal())
      unary_closure = true;
  }
  CHECK(unary_closure);
  // Any model of phi* is a model of phi.
  SearchConfig cfg;
  cfg.max_domain_size = 3;
  auto m = find_model(star, cfg);
  REQUIRE(m.has_value());
  CHECK(check_model(*m, phi).verdict);
}

TEST_CASE("phi* rejects an empty alpha and U-negative types") {
  NormalFormSentence phi =
      nf_of("rel P/1; universal U;\nforall x (P(x) -> exists y U(x,y))");
  CHECK_THROWS_AS(build_phi_star(phi, {}, false), Error);
  Structure bad = make_structure(phi.sig, 1, {{"P", {0}}});  // no U(0,0)
  auto alpha = realized_types(bad).one_types;
  CHECK_THROWS_AS(build_phi_star(phi, alpha, false), Error);
}

TEST_CASE("build_blocks sizes and block isomorphism") {
  auto head = pipeline_head(
      "rel R/3; universal U;\nforall x y (U(x,y) -> exists z R(x,y,z))", 2);
  SaturationOptions opts;
  opts.check_every_step = true;
  Blocks blocks = build_blocks(head.seed, head.phi_star, opts);
  int n = head.seed.size();
  CHECK(blocks.C.size() == 2 * n);
  CHECK(blocks.B.size() == 10 * n);
  CHECK(blocks.A0.size() == 1000 * n * n * n);
  CHECK(blocks.coords.K == 2 * n);
  // The cell (k,l) is isomorphic to B via the natural projection.
  const TableCoords& co = blocks.coords;
  for (int k : {1, co.fiveK}) {
    for (int l : {1, 3}) {
      size_t cell_facts = 0;
      for (int r = 0; r < blocks.B.sig().relation_count(); ++r) {
        for (const auto& f : blocks.B.facts(r)) {
          Tup t;
          for (int i = 0; i < f.size(); ++i) t.push(co.id_of(f[i] + 1, k, l));
          CHECK(blocks.A0.has_fact(r, t));
          ++cell_facts;
        }
      }
      CHECK(cell_facts == blocks.B.fact_count());
    }
  }
  // A0 satisfies phi*.
  CHECK(check_model(blocks.A0, head.phi_star).verdict);
}

TEST_CASE("build_blocks rejects a seed that fails phi*") {
  auto head = pipeline_head(
      "rel R/3; universal U;\nforall x y (U(x,y) -> exists z R(x,y,z))", 2);
  Structure broken = head.seed;
  // Remove every R-fact: the forall-exists conjunct loses its witnesses.
  std::vector<Tup> gone(broken.facts(broken.sig().relation_index("R")).begin(),
                        broken.facts(broken.sig().relation_index("R")).end());
  for (const auto& t : gone) broken.remove_fact(broken.sig().relation_index("R"), t);
  SaturationOptions opts;
  CHECK_THROWS_AS(build_blocks(broken, head.phi_star, opts), Error);
}

TEST_CASE("entry elements satisfy Claim 1 on every registry pair") {
  auto head = pipeline_head(
      "rel P/1; rel R/2; universal U;\n"
      "(forall x (P(x) -> exists y (R(x,y) & !P(y))) & forall x y (R(x,y) -> U(x,y)))",
      3);
  SaturationOptions opts;
  Blocks blocks = build_blocks(head.seed, head.phi_star, opts);
  int named = blocks.coords.named;
  int K = blocks.coords.K;
  int u = blocks.C.sig().universal();
  for (int ck = 0; ck < K; ++ck)
    for (int cl = 0; cl < K; ++cl) {
      AtomicType ak = atomic_type(blocks.C, Tup{named + ck});
      AtomicType al = atomic_type(blocks.C, Tup{named + cl});
      auto [e1, e2] = select_entry_elements(blocks.C, ak, al);
      CHECK(e1 != e2);
      CHECK(atomic_type(blocks.C, Tup{e1}) == ak);
      CHECK(atomic_type(blocks.C, Tup{e2}) == al);
      CHECK(blocks.C.has_fact(u, Tup{e1, e2}));
      CHECK(blocks.C.has_fact(u, Tup{e2, e1}));
      if (ak == al) CHECK(indistinguishable(blocks.C, e1, e2));
    }
}

TEST_CASE("saturation reaches a U-biquitous model with every claim asserted") {
  auto head = pipeline_head(
      "rel R/3; universal U;\nforall x y (U(x,y) -> exists z R(x,y,z))", 2);
  REQUIRE(head.seed.size() == 1);  // keeps (10|C-|)^3 at desk scale
  SaturationOptions opts;
  opts.check_every_step = true;
  opts.full_check_period = 100000;
  SaturationResult res = saturate(head.seed, head.phi_star, opts);
  CHECK(res.model.size() == 1000);
  CHECK(res.a0_size == 1000);
  size_t n = static_cast<size_t>(res.model.size());
  CHECK(res.model.facts(res.model.sig().universal()).size() == n * n);
  CHECK(res.trace.steps.size() <= res.a0_size * res.a0_size);
  // The final structure passes the checker for phi itself, U-biquitously.
  CheckFlags flags;
  flags.ubiquitous = true;
  CHECK(check_model(res.model, head.phi, flags).verdict);
  // Size law (10 |C-|)^3 in the constant-free case.
  CHECK(res.model.size() == 1000 * head.seed.size() * head.seed.size() * head.seed.size());
}

TEST_CASE("the first steps agree with a full model check each step") {
  auto head = pipeline_head(
      "rel R/3; universal U;\nforall x y (U(x,y) -> exists z R(x,y,z))", 2);
  SaturationOptions opts;
  opts.check_every_step = true;
  opts.full_check_period = 1;  // every step
  opts.max_steps = 60;         // truncated run: the cap trips after 60 steps
  CHECK_THROWS_WITH_AS(saturate(head.seed, head.phi_star, opts),
                       doctest::Contains("step bound"), Error);
}

TEST_CASE("the trace replays to the same structure") {
  auto head = pipeline_head(
      "rel R/3; universal U;\nforall x y (U(x,y) -> exists z R(x,y,z))", 2);
  SaturationOptions opts;
  opts.check_every_step = false;
  SaturationResult res = saturate(head.seed, head.phi_star, opts);
  Structure again = replay_trace(head.seed, head.phi_star, opts, res.trace);
  CHECK(again.to_jsonl() == res.model.to_jsonl());
}

TEST_CASE("an all-named seed is already saturated (zero steps)") {
  auto head = pipeline_head(
      "rel P/1; rel R/2; const c; universal U;\n"
      "forall x (P(x) -> exists y (R(x,y) & P(y)))",
      1);
  REQUIRE(head.seed.size() == 1);  // just the constant
  SaturationOptions opts;
  opts.constants = true;
  SaturationResult res = saturate(head.seed, head.phi_star, opts);
  CHECK(res.trace.steps.empty());
  CheckFlags flags;
  flags.ubiquitous = true;
  CHECK(check_model(res.model, head.phi, flags).verdict);
}

TEST_CASE("saturation with a constant keeps the named part shared") {
  // Q(c) and the P/Q separation force a proper unnamed part.
  auto head = pipeline_head(
      "rel P/1; rel Q/1; rel R/2; const c; universal U;\n"
      "(forall x (x = x -> exists y (R(x,y) & P(y))) & (forall x (x = x -> Q(c)) & forall x "
      "(P(x) -> !Q(x))))",
      2);
  REQUIRE(head.seed.size() == 2);
  SaturationOptions opts;
  opts.constants = true;
  opts.check_every_step = true;
  opts.full_check_period = 200000;
  SaturationResult res = saturate(head.seed, head.phi_star, opts);
  CHECK(res.named == static_cast<int>(head.seed.named_elements().size()));
  int unnamed_seed = head.seed.size() - res.named;
  CHECK(res.model.size() == res.named + 1000 * unnamed_seed * unnamed_seed * unnamed_seed);
  CheckFlags flags;
  flags.ubiquitous = true;
  CHECK(check_model(res.model, head.phi, flags).verdict);
  CHECK(res.model.constant_map() == res.a0.constant_map());
}

TEST_CASE("tg-mode saturation never touches transitive facts") {
  auto [sig0, f] = parse_formula_file(
      "rel P/1; rel T/2; universal U; transitive T;\n"
      "(forall x (P(x) -> exists y (T(x,y) & P(y))) & forall x y (U(x,y) -> exists z (U(x,z) "
      "& P(z))))");
  auto sig = std::make_shared<Signature>(std::move(sig0));
  auto nf0 = recognize_normal_form(f, sig);
  REQUIRE(nf0.has_value());
  NormalFormSentence phi = enhance_tg_normal_form(*nf0);
  SearchConfig cfg;
  cfg.max_domain_size = 2;
  cfg.ubiquitous = true;
  cfg.transitive = true;
  auto witness = find_model(phi, cfg);
  REQUIRE(witness.has_value());
  NormalFormSentence phi_star = build_phi_star(phi, realized_types(*witness).one_types, true);
  SearchConfig seed_cfg;
  seed_cfg.max_domain_size = 2;
  seed_cfg.transitive = true;
  auto seed = find_model(phi_star, seed_cfg);
  REQUIRE(seed.has_value());
  REQUIRE(seed->size() == 1);
  SaturationOptions opts;
  opts.tg_mode = true;
  opts.check_every_step = true;
  opts.full_check_period = 200000;
  SaturationResult res = saturate(*seed, phi_star, opts);
  // Transitive facts are exactly those of A0, and stay transitive.
  for (int t : res.model.sig().transitive_relations()) {
    CHECK(res.model.facts(t) == res.a0.facts(t));
  }
  CheckFlags flags;
  flags.ubiquitous = true;
  flags.transitive = true;
  CHECK(check_model(res.model, phi, flags).verdict);
}
