#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/fragments.hpp"
#include "core/modelcheck.hpp"
#include "core/parser.hpp"
#include "support/testutil.hpp"

using namespace triguard;
using namespace triguard::testing;

namespace {

SigPtr base_sig() {
  return make_sig("rel P/1; rel Q/1; rel R/3; universal U;");
}

}  // namespace

TEST_CASE("parse the running two-variable example") {
  auto sig = base_sig();
  Formula f =
      parse_formula("forall x y (U(x,y) -> (P(x) & Q(y) -> exists z R(x,y,z)))", *sig);
  REQUIRE(f.kind() == NodeKind::Forall);
  CHECK(f.qvars() == std::vector<std::string>{"x", "y"});
  REQUIRE(f.body().kind() == NodeKind::Implies);
  const Formula& guard = f.body().child(0);
  CHECK(guard.kind() == NodeKind::Atom);
  CHECK(guard.rel_name() == "U");
  CHECK(guard.free_vars() == std::vector<std::string>{"x", "y"});
  CHECK(f.is_sentence());
  // The body under the guard has two free variables.
  CHECK(f.body().child(1).free_vars() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("parse atom over a constant") {
  auto sig = make_sig("rel P/1; const c;");
  Formula f = parse_formula("P(c)", *sig);
  CHECK(f.kind() == NodeKind::Atom);
  CHECK_FALSE(f.args()[0].is_var());
  CHECK(f.args()[0].name == "c");
  CHECK(f.is_sentence());
}

TEST_CASE("parse errors carry positions") {
  auto sig = base_sig();
  CHECK_THROWS_AS(parse_formula("P(x", *sig), Error);
  CHECK_THROWS_AS(parse_formula("S(x)", *sig), Error);    // undeclared
  CHECK_THROWS_AS(parse_formula("P(x,y)", *sig), Error);  // arity
  CHECK_THROWS_AS(parse_formula("forall x (P(x) &", *sig), Error);
  try {
    parse_formula("P(x,y)", *sig);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("1:") != std::string::npos);  // line:col
  }
}

TEST_CASE("print is canonical and reparses") {
  auto sig = base_sig();
  Formula f = parse_formula("(P(x) & Q(x))", *sig);
  CHECK(f.print() == "(P(x) & Q(x))");
  Formula g = parse_formula("forall x (T2(x,x) -> P(x))",
                            *make_sig("rel P/1; rel T2/2; transitive T2;"));
  CHECK(g.print() == "forall x (T2(x,x) -> P(x))");
}

TEST_CASE("round trip on random ASTs") {
  auto sig = make_sig("rel P/1; rel R/2; rel S/3; const c; universal U;");
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    int counter = 0;
    Formula f = random_ast(rng, *sig, 3, counter, {});
    std::string text = f.print();
    Formula g = parse_formula(text, *sig);
    CAPTURE(text);
    REQUIRE(f == g);
  }
}

TEST_CASE("the section-II example round-trips") {
  auto sig = base_sig();
  std::string text = "forall x y (U(x,y) -> ((P(x) & Q(y)) -> exists z R(x,y,z)))";
  Formula f = parse_formula(text, *sig);
  CHECK(parse_formula(f.print(), *sig) == f);
}

TEST_CASE("binders are renamed apart") {
  auto sig = base_sig();
  Formula f = parse_formula("(forall x P(x) & forall x Q(x))", *sig);
  CHECK(f.child(0).qvars() != f.child(1).qvars());
  CHECK(parse_formula(f.print(), *sig) == f);
}

TEST_CASE("classification of the triguarded example") {
  auto sig = base_sig();
  Formula f = parse_formula("forall x y (P(x) & Q(y) -> exists z R(x,y,z))", *sig);
  auto rep = classify_fragment(f, *sig);
  CHECK(rep.tgf);
  CHECK_FALSE(rep.gf);
  REQUIRE_FALSE(rep.gf_violations.empty());
  CHECK(rep.gf_violations[0].rule.find("unguarded") != std::string::npos);
}

TEST_CASE("one-variable quantifiers may be unguarded") {
  auto sig = base_sig();
  Formula f = parse_formula("forall x P(x)", *sig);
  auto rep = classify_fragment(f, *sig);
  CHECK(rep.gf);
  CHECK(rep.tgf);
}

TEST_CASE("transitive symbols are legal only as guards") {
  auto sig = make_sig("rel P/1; rel T/2; transitive T;");
  Formula ok = parse_formula("forall x y (T(x,y) -> exists z (T(y,z) & P(z)))", *sig);
  auto rep = classify_fragment(ok, *sig);
  CHECK(rep.gftg);
  Formula bad =
      parse_formula("forall x y (T(x,y) -> exists z (T(y,z) & (P(z) & T(x,x))))", *sig);
  auto rep2 = classify_fragment(bad, *sig);
  CHECK_FALSE(rep2.gftg);
  CHECK_FALSE(rep2.gftg_violations.empty());
}

TEST_CASE("reflexive transitive guard keeps GF+TG membership") {
  auto sig = make_sig("rel P/1; rel T/2; transitive T;");
  Formula f = parse_formula("forall x (T(x,x) -> P(x))", *sig);
  auto rep = classify_fragment(f, *sig);
  CHECK(rep.gftg);
}

TEST_CASE("equality rules per fragment") {
  auto sig = make_sig("rel P/1; rel R/2; universal U;");
  Formula eq = parse_formula("forall x y (R(x,y) -> x = y)", *sig);
  auto rep = classify_fragment(eq, *sig);
  CHECK(rep.gf);
  CHECK_FALSE(rep.tgf);
  Formula trivial = parse_formula("forall x (x = x -> P(x))", *sig);
  auto rep2 = classify_fragment(trivial, *sig);
  CHECK(rep2.gf);
  CHECK(rep2.tgf);
}

TEST_CASE("GF formulas pass TGF when equality-free (monotonicity)") {
  auto sig = make_sig("rel P/1; rel R/2; rel S/3; universal U;");
  Rng rng(11);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    int counter = 0;
    Formula f = random_ast(rng, *sig, 3, counter, {}, /*equality_free=*/true);
    auto rep = classify_fragment(f, *sig);
    if (!rep.gf) continue;
    ++checked;
    CAPTURE(f.print());
    CHECK(rep.tgf);
  }
  CHECK(checked > 10);
}

TEST_CASE("tgf_to_gfu guards the running example with U") {
  auto sig = base_sig();
  Formula f = parse_formula("forall x y (P(x) & Q(y) -> exists z R(x,y,z))", *sig);
  Formula g = tgf_to_gfu(f, *sig);
  Formula expected =
      parse_formula("forall x y (U(x,y) -> (P(x) & Q(y) -> exists z R(x,y,z)))", *sig);
  CHECK(g == expected);
  CHECK(classify_fragment(g, *sig).gf);
}

TEST_CASE("tgf_to_gfu is the identity on guarded input") {
  auto sig = base_sig();
  Formula f = parse_formula("forall x y (R(x,y,y) -> exists z R(x,y,z))", *sig);
  CHECK(tgf_to_gfu(f, *sig) == f);
}

TEST_CASE("tgf_to_gfu uses a trivial guard for one free variable") {
  auto sig = base_sig();
  Formula f = parse_formula("forall x (P(x) -> Q(x))", *sig);
  Formula g = tgf_to_gfu(f, *sig);
  // Semantics agree on every structure of size <= 3.
  Rng rng(3);
  for (int n = 1; n <= 3; ++n) {
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<std::pair<std::string, std::vector<int>>> facts;
      for (int e = 0; e < n; ++e) {
        if (pick(rng, 2)) facts.push_back({"P", {e}});
        if (pick(rng, 2)) facts.push_back({"Q", {e}});
      }
      Structure s = make_structure(sig, n, facts);
      CHECK(evaluate(s, f, {}) == evaluate(s, g, {}));
    }
  }
}

TEST_CASE("tgf_to_gfu preserves truth on U-biquitous structures") {
  auto sig = make_sig("rel P/1; rel Q/1; rel R/2; universal U;");
  Rng rng(21);
  int checked = 0;
  for (int i = 0; i < 400 && checked < 60; ++i) {
    int counter = 0;
    Formula f = random_ast(rng, *sig, 3, counter, {}, /*equality_free=*/true);
    auto rep = classify_fragment(f, *sig);
    if (!rep.tgf || !f.is_sentence()) continue;
    Formula g = tgf_to_gfu(f, *sig);
    ++checked;
    int n = 1 + pick(rng, 3);
    std::vector<std::pair<std::string, std::vector<int>>> facts;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        facts.push_back({"U", {a, b}});
        if (pick(rng, 2)) facts.push_back({"R", {a, b}});
      }
      if (pick(rng, 2)) facts.push_back({"P", {a}});
      if (pick(rng, 2)) facts.push_back({"Q", {a}});
    }
    Structure s = make_structure(sig, n, facts);
    CAPTURE(f.print());
    CHECK(evaluate(s, f, {}) == evaluate(s, g, {}));
  }
  CHECK(checked >= 40);
}

TEST_CASE("gfu_to_tgf appends the U axiom") {
  auto sig = base_sig();
  Formula f = parse_formula("forall x (P(x) -> Q(x))", *sig);
  Formula g = gfu_to_tgf(f, *sig);
  REQUIRE(g.kind() == NodeKind::And);
  CHECK(g.child(0) == f);
  CHECK(g.child(1).kind() == NodeKind::Forall);
  CHECK(classify_fragment(g, *sig).tgf);

  // On a U-biquitous structure the appended conjunct holds.
  Structure s = make_structure(sig, 2,
                               {{"U", {0, 0}}, {"U", {0, 1}}, {"U", {1, 0}}, {"U", {1, 1}}});
  CHECK(evaluate(s, g, {}) == evaluate(s, f, {}));
  // Dropping one U edge falsifies it.
  Structure s2 = make_structure(sig, 2, {{"U", {0, 0}}, {"U", {0, 1}}, {"U", {1, 1}}});
  CHECK_FALSE(evaluate(s2, g.child(1), {}));
}

TEST_CASE("gfu_to_tgf rejects non-trivial equality") {
  auto sig = base_sig();
  Formula f = parse_formula("forall x y (U(x,y) -> x = y)", *sig);
  CHECK_THROWS_AS(gfu_to_tgf(f, *sig), Error);
}

TEST_CASE("signature invariants") {
  CHECK_THROWS_AS(make_sig("rel T/3; transitive T;"), Error);
  CHECK_THROWS_AS(make_sig("rel U/2; universal U; transitive U;"), Error);
  CHECK_THROWS_AS(make_sig("rel P/1; rel P/2;"), Error);
  CHECK_THROWS_AS(make_sig("rel P/1; const P;"), Error);
  CHECK_THROWS_AS(make_sig("rel R/7;"), Error);
}

TEST_CASE("signature header round trip") {
  auto sig = make_sig("rel P/1; rel R/3; const c; universal U; transitive T; aux Ax;");
  auto sig2 = make_sig(sig->format());
  CHECK(*sig == *sig2);
}
