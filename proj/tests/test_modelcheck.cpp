#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/modelcheck.hpp"
#include "core/parser.hpp"
#include "support/testutil.hpp"

using namespace triguard;
using namespace triguard::testing;

TEST_CASE("evaluate basics") {
  auto sig = make_sig("rel P/1; universal U;");
  Structure s = make_structure(sig, 1, {{"P", {0}}});
  Formula f = parse_formula("P(x)", *sig);
  CHECK(evaluate(s, f, {{"x", 0}}));
  CHECK_THROWS_AS(evaluate(s, f, {}), Error);  // unassigned free variable

  Structure u2 = make_structure(sig, 2,
                                {{"U", {0, 0}}, {"U", {0, 1}}, {"U", {1, 0}}, {"U", {1, 1}}});
  Formula all = parse_formula("forall x y U(x,y)", *sig);
  CHECK(evaluate(u2, all, {}));
  u2.remove_fact(sig->relation_index("U"), Tup{1, 0});
  CHECK_FALSE(evaluate(u2, all, {}));
}

TEST_CASE("evaluate agrees with the naive reference on random inputs") {
  auto sig = make_sig("rel P/1; rel R/2; rel S/3; const c;");
  Rng rng(101);
  int done = 0;
  for (int trial = 0; trial < 500; ++trial) {
    int n = 1 + pick(rng, 3);
    std::vector<std::pair<std::string, std::vector<int>>> facts;
    for (int i = 0; i < 8; ++i) {
      int r = pick(rng, 3);
      std::vector<int> t;
      for (int j = 0; j < sig->arity(r); ++j) t.push_back(pick(rng, n));
      facts.push_back({sig->relation(r).name, t});
    }
    Structure s = make_structure(sig, n, facts, {{"c", pick(rng, n)}});
    int counter = 0;
    Formula f = random_ast(rng, *sig, 3, counter, {});
    if (!f.is_sentence()) continue;
    ++done;
    CAPTURE(f.print());
    CHECK(evaluate(s, f, {}) == ref_eval(s, f, {}));
  }
  CHECK(done >= 300);
}

TEST_CASE("evaluate agrees with the reference exhaustively at size <= 2") {
  auto sig = make_sig("rel P/1; rel R/2;");
  // All structures over one unary and one binary symbol with <= 2 elements.
  std::vector<Structure> structures;
  for (int n = 1; n <= 2; ++n) {
    int atoms = n + n * n;
    for (int mask = 0; mask < (1 << atoms); ++mask) {
      Structure s = make_structure(sig, n, {});
      int bit = 0;
      for (int a = 0; a < n; ++a, ++bit)
        if (mask & (1 << bit)) s.add_fact(0, Tup{a});
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b, ++bit)
          if (mask & (1 << bit)) s.add_fact(1, Tup{a, b});
      structures.push_back(std::move(s));
    }
  }
  Rng rng(4242);
  for (int trial = 0; trial < 60; ++trial) {
    int counter = 0;
    Formula f = random_ast(rng, *sig, 2, counter, {});
    if (!f.is_sentence()) continue;
    for (const auto& s : structures) CHECK(evaluate(s, f, {}) == ref_eval(s, f, {}));
  }
}

namespace {

NormalFormSentence nf_of(const std::string& text) {
  auto [sig, f] = parse_formula_file(text);
  auto nf = recognize_normal_form(f, std::make_shared<Signature>(std::move(sig)));
  REQUIRE(nf.has_value());
  return *nf;
}

}  // namespace

TEST_CASE("check_model on simple conjuncts") {
  NormalFormSentence nf = nf_of("rel P/1; rel R/2;\nforall x (P(x) -> exists y (R(x,y) & P(y)))");
  auto sig = nf.sig;
  Structure good = make_structure(sig, 1, {{"P", {0}}, {"R", {0, 0}}});
  CHECK(check_model(good, nf).verdict);
  Structure bad = make_structure(sig, 1, {{"P", {0}}});
  auto rep = check_model(bad, nf);
  CHECK_FALSE(rep.verdict);
  REQUIRE_FALSE(rep.violations.empty());
  CHECK(rep.violations[0].kind == ViolationKind::MissingWitness);
  CHECK(rep.violations[0].tuple == std::vector<int>{0});
}

TEST_CASE("semantic flags") {
  auto sig = make_sig("rel T/2; universal U; transitive T;");
  NormalFormSentence nf;
  nf.sig = sig;
  {
    AConjunct c;
    c.uvars = {"x"};
    c.guard = Formula::equal(Term::var("x"), Term::var("x"));
    c.matrix = Formula::equal(Term::var("x"), Term::var("x"));
    nf.a.push_back(std::move(c));
  }
  Structure s = make_structure(sig, 3, {{"T", {0, 1}}, {"T", {1, 2}}});
  CheckFlags flags;
  CHECK(check_model(s, nf, flags).verdict);
  flags.transitive = true;
  auto rep = check_model(s, nf, flags);
  CHECK_FALSE(rep.verdict);
  REQUIRE_FALSE(rep.violations.empty());
  CHECK(rep.violations[0].kind == ViolationKind::NonTransitive);
  CHECK(rep.violations[0].tuple == std::vector<int>{0, 1, 2});

  flags.transitive = false;
  flags.ubiquitous = true;
  auto rep2 = check_model(s, nf, flags);
  CHECK_FALSE(rep2.verdict);
  CHECK(rep2.violations[0].kind == ViolationKind::MissingUEdge);
  // U-biquity holds iff the U-fact count equals |domain|^2.
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) s.add_fact(sig->universal(), Tup{a, b});
  CHECK(check_model(s, nf, flags).verdict);
}

TEST_CASE("empty sentence over any structure") {
  auto sig = make_sig("rel P/1;");
  NormalFormSentence nf;
  nf.sig = sig;
  {
    AConjunct c;
    c.uvars = {"x"};
    c.guard = Formula::equal(Term::var("x"), Term::var("x"));
    c.matrix = Formula::equal(Term::var("x"), Term::var("x"));
    nf.a.push_back(std::move(c));
  }
  Structure s = make_structure(sig, 2, {{"P", {1}}});
  CHECK(check_model(s, nf).verdict);
}

TEST_CASE("find_witness basics") {
  NormalFormSentence nf = nf_of("rel P/1; rel R/2;\nforall x (P(x) -> exists y R(x,y))");
  auto sig = nf.sig;
  Structure s = make_structure(sig, 1, {{"P", {0}}, {"R", {0, 0}}});
  auto w = find_witness(s, nf.ae[0], Tup{0});
  REQUIRE(w.has_value());
  CHECK((*w)[0] == 0);
  Structure s2 = make_structure(sig, 1, {{"P", {0}}});
  CHECK_FALSE(find_witness(s2, nf.ae[0], Tup{0}).has_value());
  // Guard not satisfied: error.
  Structure s3 = make_structure(sig, 1, {});
  CHECK_THROWS_AS(find_witness(s3, nf.ae[0], Tup{0}), Error);
}

TEST_CASE("find_witness returns the lexicographically least witness") {
  NormalFormSentence nf = nf_of("rel P/1; rel R/2;\nforall x (P(x) -> exists y R(x,y))");
  auto sig = nf.sig;
  Structure s = make_structure(sig, 3, {{"P", {0}}, {"R", {0, 2}}, {"R", {0, 1}}});
  auto w = find_witness(s, nf.ae[0], Tup{0});
  REQUIRE(w.has_value());
  CHECK((*w)[0] == 1);
}

TEST_CASE("witnesses found by check_model verify under evaluate") {
  auto sig = make_sig("rel P/1; rel R/2; rel S/3;");
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    NfGenOptions opts;
    NormalFormSentence nf = random_nf(rng, sig, opts);
    int n = 1 + pick(rng, 3);
    std::vector<std::pair<std::string, std::vector<int>>> facts;
    for (int i = 0; i < 10; ++i) {
      int r = pick(rng, sig->relation_count());
      std::vector<int> t;
      for (int j = 0; j < sig->arity(r); ++j) t.push_back(pick(rng, n));
      facts.push_back({sig->relation(r).name, t});
    }
    Structure s = make_structure(sig, n, facts);
    // check_model's verdict must agree with evaluating the whole sentence.
    bool direct = evaluate(s, nf.to_formula(), {});
    CHECK(check_model(s, nf).verdict == direct);
    // Any witness returned for a guard-satisfying tuple verifies.
    for (const auto& c : nf.ae) {
      for (int a : s.domain()) {
        if (c.uvars.size() != 1) continue;
        std::map<std::string, int> env{{c.uvars[0], a}};
        if (!evaluate(s, c.guard, env)) continue;
        auto w = find_witness(s, c, Tup{a});
        if (!w) continue;
        for (size_t i = 0; i < c.evars.size(); ++i) env[c.evars[i]] = (*w)[static_cast<int>(i)];
        CHECK(evaluate(s, c.eguard, env));
        if (!c.matrix.empty()) CHECK(evaluate(s, c.matrix, env));
      }
    }
  }
}

TEST_CASE("check_model true implies witnesses for every guard instance") {
  auto sig = make_sig("rel P/1; rel R/2;");
  Rng rng(88);
  int done = 0;
  for (int trial = 0; trial < 200 && done < 30; ++trial) {
    NfGenOptions opts;
    NormalFormSentence nf = random_nf(rng, sig, opts);
    int n = 1 + pick(rng, 2);
    std::vector<std::pair<std::string, std::vector<int>>> facts;
    for (int i = 0; i < 6; ++i) {
      int r = pick(rng, sig->relation_count());
      std::vector<int> t;
      for (int j = 0; j < sig->arity(r); ++j) t.push_back(pick(rng, n));
      facts.push_back({sig->relation(r).name, t});
    }
    Structure s = make_structure(sig, n, facts);
    if (!check_model(s, nf).verdict) continue;
    ++done;
    for (const auto& c : nf.ae) {
      // Enumerate all guard instances by brute force.
      std::vector<int> idx(c.uvars.size(), 0);
      for (;;) {
        std::map<std::string, int> env;
        Tup abar;
        for (size_t i = 0; i < idx.size(); ++i) {
          env[c.uvars[i]] = s.domain()[static_cast<size_t>(idx[i])];
          abar.push(s.domain()[static_cast<size_t>(idx[i])]);
        }
        if (evaluate(s, c.guard, env)) CHECK(find_witness(s, c, abar).has_value());
        size_t i = idx.size();
        while (i > 0 && idx[i - 1] + 1 == static_cast<int>(s.domain().size())) idx[--i] = 0;
        if (i == 0) break;
        ++idx[i - 1];
      }
    }
  }
  CHECK(done == 30);
}
