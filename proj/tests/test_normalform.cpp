#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/finder.hpp"
#include "core/fragments.hpp"
#include "core/modelcheck.hpp"
#include "core/parser.hpp"
#include "support/brutefind.hpp"
#include "support/testutil.hpp"

using namespace triguard;
using namespace triguard::testing;

namespace {

std::vector<NormalFormSentence> all_disjuncts(const Formula& f, SigPtr sig, int cap = 64) {
  auto en = to_normal_form(f, sig);
  std::vector<NormalFormSentence> out;
  while (auto nf = en.next()) {
    out.push_back(std::move(*nf));
    if (static_cast<int>(out.size()) >= cap) break;
  }
  return out;
}

// Random guarded (GF) sentence: guard-shaped quantifiers all the way down.
Formula random_gf_sentence(Rng& rng, const Signature& sig, int depth) {
  std::function<Formula(int, std::vector<std::string>)> block;
  int counter = 0;
  block = [&](int d, std::vector<std::string> scope) -> Formula {
    int nvars = 1 + pick(rng, 2);
    std::vector<std::string> vars;
    for (int i = 0; i < nvars; ++i) vars.push_back("q" + std::to_string(++counter));
    std::vector<std::string> all = scope;
    all.insert(all.end(), vars.begin(), vars.end());
    if (static_cast<size_t>(sig.width()) < all.size()) {
      all = vars;  // guard over the fresh variables only
    }
    Formula guard = random_guard(rng, sig, all, false);
    Formula body;
    if (d <= 0 || pick(rng, 2) == 0) {
      body = random_matrix(rng, sig, all, 2, true);
    } else {
      Formula inner = block(d - 1, all);
      Formula qf = random_matrix(rng, sig, all, 1, true);
      body = pick(rng, 2) ? Formula::land(inner, qf) : inner;
    }
    if (pick(rng, 2))
      return Formula::forall(vars, Formula::implies(guard, body));
    return Formula::exists(vars, Formula::land(guard, body));
  };
  Formula out = block(depth, {});
  if (pick(rng, 3) == 0) {
    Formula other = block(depth > 0 ? depth - 1 : 0, {});
    out = pick(rng, 2) ? Formula::land(out, other) : Formula::lor(out, other);
  }
  return out;
}

}  // namespace

TEST_CASE("a sentence already in shape (1) is its own single disjunct") {
  auto [sig0, f] = parse_formula_file(
      "rel P/1; rel R/2;\n"
      "(forall x (P(x) -> exists y (R(x,y) & P(y))) & forall x y (R(x,y) -> !x = y))");
  auto sig = std::make_shared<Signature>(std::move(sig0));
  auto en = to_normal_form(f, sig);
  auto first = en.next();
  REQUIRE(first.has_value());
  CHECK(first->to_formula() == f);
  CHECK_FALSE(en.next().has_value());
}

TEST_CASE("purely existential sentences are simulated with a fresh guard symbol") {
  auto [sig0, f] = parse_formula_file("rel P/1; rel R/2;\nexists x y (R(x,y) & P(x))");
  auto sig = std::make_shared<Signature>(std::move(sig0));
  auto disjuncts = all_disjuncts(f, sig);
  REQUIRE(disjuncts.size() == 1);
  const NormalFormSentence& nf = disjuncts[0];
  REQUIRE(nf.ae.size() == 1);
  const AEConjunct& c = nf.ae[0];
  CHECK(c.uvars.size() == 1);
  CHECK(c.guard.trivial_eq());
  CHECK(c.evars.size() == 2);
  CHECK(c.eguard.kind() == NodeKind::Atom);
  CHECK(c.eguard.rel_name().rfind("_nf", 0) == 0);  // fresh simulation symbol
  CHECK(nf.sig->relation_count() == 3);
  REQUIRE_FALSE(c.matrix.empty());
  CHECK(c.matrix.mentions_relation(nf.sig->relation_index("R")));
  CHECK(c.matrix.mentions_relation(nf.sig->relation_index("P")));
}

TEST_CASE("satisfiability at bound 4 is preserved across the disjunction") {
  auto sig = make_sig("rel P/1; rel Q/1; rel R/2;");
  Rng rng(1234);
  int done = 0;
  for (int trial = 0; trial < 60 && done < 10; ++trial) {
    Formula f = random_gf_sentence(rng, *sig, 2);
    if (!classify_fragment(f, *sig).gf) continue;
    ++done;
    CAPTURE(f.print());
    bool direct = brute_find(f, sig, 4).has_value();
    bool any = false;
    for (auto& nf : all_disjuncts(f, sig)) {
      SearchConfig cfg;
      cfg.max_domain_size = 4;
      if (auto m = find_model(nf, cfg)) {
        any = true;
        // Each disjunct entails the input over the base signature.
        CHECK(evaluate(*m, f, {}));
        break;
      }
    }
    CHECK(any == direct);
  }
  CHECK(done == 10);
}

TEST_CASE("size <= 3 models expand to a model of some disjunct") {
  auto sig = make_sig("rel P/1; rel Q/1; rel R/2;");
  Rng rng(99);
  int done = 0;
  for (int trial = 0; trial < 80 && done < 10; ++trial) {
    Formula f = random_gf_sentence(rng, *sig, 2);
    if (!classify_fragment(f, *sig).gf) continue;
    auto model = brute_find(f, sig, 3);
    if (!model) continue;
    ++done;
    CAPTURE(f.print());
    bool expanded = false;
    for (auto& nf : all_disjuncts(f, sig)) {
      // The base keeps the input signature; only fresh symbols are searched.
      SearchConfig cfg;
      cfg.expand_base = &*model;
      if (find_model(nf, cfg)) {
        expanded = true;
        break;
      }
    }
    CHECK(expanded);
  }
  CHECK(done == 10);
}

TEST_CASE("disjunct length stays within a quadratic budget") {
  auto sig = make_sig("rel P/1; rel Q/1; rel R/2;");
  Rng rng(555);
  for (int trial = 0; trial < 20; ++trial) {
    Formula f = random_gf_sentence(rng, *sig, 2);
    size_t input_len = f.print().size();
    for (auto& nf : all_disjuncts(f, sig)) {
      size_t out_len = nf.to_formula().print().size();
      CHECK(out_len <= 8 * input_len * input_len);
    }
  }
}

TEST_CASE("every emitted disjunct passes the shape validator") {
  auto sig = make_sig("rel P/1; rel R/2; universal U;");
  Rng rng(31337);
  for (int trial = 0; trial < 30; ++trial) {
    Formula f = random_gf_sentence(rng, *sig, 2);
    for (auto& nf : all_disjuncts(f, sig)) nf.validate();  // throws on violation
  }
}

TEST_CASE("normalization rejects non-sentences") {
  auto sig = make_sig("rel P/1;");
  Formula open = parse_formula("P(x)", *sig);
  CHECK_THROWS_AS(to_normal_form(open, sig), Error);
}

TEST_CASE("enhanced form splits a transitive witness conjunct (section IV display)") {
  auto [sig0, f] = parse_formula_file(
      "rel R/2; rel P/1; rel T/2; transitive T;\n"
      "forall x y (R(x,y) -> exists z (T(y,z) & P(z)))");
  auto sig = std::make_shared<Signature>(std::move(sig0));
  auto nf = recognize_normal_form(f, sig);
  REQUIRE(nf.has_value());
  NormalFormSentence enhanced = enhance_tg_normal_form(*nf);
  enhanced.validate_tg_shape();
  REQUIRE(enhanced.ae.size() == 1);
  const AEConjunct& tr = enhanced.ae[0];
  CHECK(tr.tg == TgClass::Tr);
  CHECK(tr.uvars.size() == 1);
  CHECK(tr.uvars[0] == "y");
  CHECK(tr.guard.kind() == NodeKind::Atom);
  CHECK(enhanced.sig->arity(tr.guard.rel()) == 1);
  CHECK(tr.guard.rel_name().rfind("_G", 0) == 0);
  // Plus the bridging forall-conjunct: R(x,y) => G(y).
  bool bridge = false;
  for (const auto& c : enhanced.a)
    if (c.guard.kind() == NodeKind::Atom && c.guard.rel_name() == "R" &&
        c.matrix.kind() == NodeKind::Atom && c.matrix.rel() == tr.guard.rel())
      bridge = true;
  CHECK(bridge);
  CHECK(enhanced.sig->has_aux());
}

TEST_CASE("enhanced form on a transitive-free sentence only adds the Aux closure") {
  auto [sig0, f] = parse_formula_file(
      "rel P/1; rel R/2;\nforall x (P(x) -> exists y (R(x,y) & P(y)))");
  auto sig = std::make_shared<Signature>(std::move(sig0));
  auto nf = recognize_normal_form(f, sig);
  REQUIRE(nf.has_value());
  NormalFormSentence enhanced = enhance_tg_normal_form(*nf);
  CHECK(enhanced.ae.size() == nf->ae.size());
  CHECK(enhanced.a.size() == nf->a.size() + static_cast<size_t>(enhanced.sig->relation_count()));
  for (const auto& c : enhanced.ae) CHECK(c.tg == TgClass::Ntr);
  enhanced.validate_tg_shape();
}

TEST_CASE("transitive outer guards move behind fresh symbols") {
  auto [sig0, f] = parse_formula_file(
      "rel P/1; rel R/2; rel T/2; transitive T;\n"
      "forall x y (T(x,y) -> exists z (R(y,z) & P(z)))");
  auto sig = std::make_shared<Signature>(std::move(sig0));
  auto nf = recognize_normal_form(f, sig);
  REQUIRE(nf.has_value());
  NormalFormSentence enhanced = enhance_tg_normal_form(*nf);
  enhanced.validate_tg_shape();
  REQUIRE(enhanced.ae.size() == 1);
  CHECK(enhanced.ae[0].tg == TgClass::Ntr);
  CHECK_FALSE(enhanced.sig->is_transitive(enhanced.ae[0].guard.rel()));
  bool link = false;
  for (const auto& c : enhanced.a)
    if (c.guard.kind() == NodeKind::Atom && c.guard.rel_name() == "T" &&
        c.matrix.kind() == NodeKind::Atom && c.matrix.rel() == enhanced.ae[0].guard.rel())
      link = true;
  CHECK(link);
}

TEST_CASE("enhancement preserves satisfiability at bound 4") {
  auto texts = std::vector<std::string>{
      "rel P/1; rel R/2; rel T/2; transitive T;\n"
      "forall x y (R(x,y) -> exists z (T(y,z) & P(z)))",
      "rel P/1; rel T/2; transitive T;\n"
      "forall x (P(x) -> exists y (T(x,y) & P(y)))",
      "rel P/1; rel Q/1; rel T/2; transitive T;\n"
      "(forall x (P(x) -> exists y (T(x,y) & Q(y))) & forall x y (T(x,y) -> Q(y)))",
  };
  for (const auto& text : texts) {
    auto [sig0, f] = parse_formula_file(text);
    auto sig = std::make_shared<Signature>(std::move(sig0));
    auto nf = recognize_normal_form(f, sig);
    REQUIRE(nf.has_value());
    NormalFormSentence enhanced = enhance_tg_normal_form(*nf);
    SearchConfig cfg;
    cfg.max_domain_size = 4;
    cfg.transitive = true;
    auto before = find_model(*nf, cfg);
    auto after = find_model(enhanced, cfg);
    CHECK(before.has_value() == after.has_value());
    if (after) {
      // The enhanced model restricted to the original signature models phi.
      CHECK(evaluate(*after, f, {}));
    }
  }
}
