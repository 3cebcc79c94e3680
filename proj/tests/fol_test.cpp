#include <random>
#include <set>
#include <string>

#include "discd/errors.hpp"
#include "discd/fol.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace discd;

namespace {

fol::Signature library_sig() {
  fol::Signature sig;
  sig.entities = {"a", "b"};
  sig.predicates = {{"Person", 1}, {"Book", 1}, {"Owns", 2}};
  return sig;
}

fol::Signature small_sig() {
  fol::Signature sig;
  sig.entities = {"a", "b"};
  sig.predicates = {{"P", 1}, {"Q", 1}, {"R", 2}};
  return sig;
}

}  // namespace

TEST_CASE("parse builds the expected tree shapes") {
  auto sig = library_sig();
  auto f = fol::parse("forall x (Person(x) -> exists y (Book(y) & Owns(x,y)))",
                      sig);
  REQUIRE(f.kind() == fol::Kind::ForAll);
  CHECK(f.variable() == "x");
  const auto& imp = f.children()[0];
  REQUIRE(imp.kind() == fol::Kind::Implies);
  CHECK(imp.children()[0].kind() == fol::Kind::Atom);
  CHECK(imp.children()[0].predicate() == "Person");
  const auto& ex = imp.children()[1];
  REQUIRE(ex.kind() == fol::Kind::Exists);
  CHECK(ex.children()[0].kind() == fol::Kind::And);

  auto atom = fol::parse("P(a)", small_sig());
  REQUIRE(atom.kind() == fol::Kind::Atom);
  CHECK(atom.predicate() == "P");
  REQUIRE(atom.terms().size() == 1);
  CHECK(atom.terms()[0].kind == fol::TermKind::Entity);
  CHECK(atom.terms()[0].name == "a");
}

TEST_CASE("operator precedence and associativity") {
  auto sig = small_sig();
  CHECK(fol::parse("~P(a) & Q(a) | R(a,b)", sig).render() ==
        "((~P(a) & Q(a)) | R(a,b))");
  CHECK(fol::parse("P(a) -> Q(a) -> P(b)", sig).render() ==
        "(P(a) -> (Q(a) -> P(b)))");
  CHECK(fol::parse("P(a) & Q(a) & P(b)", sig).render() ==
        "(P(a) & Q(a) & P(b))");
  CHECK(fol::parse("P(a) <-> Q(a) | P(b)", sig).render() ==
        "(P(a) <-> (Q(a) | P(b)))");
  CHECK(fol::parse("forall x (P(x))", sig).render() == "forall x P(x)");
}

TEST_CASE("parse errors carry line and column") {
  auto sig = small_sig();
  try {
    fol::parse("P(a", sig);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 4);
  }
  CHECK_THROWS_AS(fol::parse("S(a)", sig), ParseError);
  CHECK_THROWS_AS(fol::parse("R(a)", sig), ParseError);     // arity
  CHECK_THROWS_AS(fol::parse("P(x)", sig), ParseError);     // unbound
  CHECK_THROWS_AS(fol::parse("", sig), ParseError);
  CHECK_THROWS_AS(fol::parse("P(a) &", sig), ParseError);
  CHECK_THROWS_AS(fol::parse("forall 3 P(a)", sig), ParseError);
}

TEST_CASE("render basics") {
  auto sig = small_sig();
  CHECK(fol::parse("P(a)", sig).render() == "P(a)");
  CHECK(fol::parse("~P(a)", sig).render() == "~P(a)");
  auto f = fol::Formula::conjunction({fol::parse("P(a)", sig),
                                      fol::parse("Q(a)", sig),
                                      fol::parse("P(b)", sig)});
  CHECK(f.render() == "(P(a) & Q(a) & P(b))");
}

TEST_CASE("round trip on random sentences") {
  auto sig = small_sig();
  std::mt19937_64 g(41);
  for (int i = 0; i < 300; ++i) {
    auto f = testutil::random_sentence(g, sig, 4);
    auto back = fol::parse(f.render(), sig);
    CHECK(back == f);
    CHECK(back.hash() == f.hash());
  }
}

TEST_CASE("free variables") {
  auto sig = small_sig();
  CHECK(fol::free_variables(fol::parse_open("P(x)", sig)) ==
        std::set<std::string>{"x"});
  auto eq7 = fol::parse(
      "forall x (Person(x) -> exists y (Book(y) & Owns(x,y)))", library_sig());
  CHECK(fol::free_variables(eq7).empty());
  CHECK(fol::free_variables(fol::parse_open("exists y R(x,y)", sig)) ==
        std::set<std::string>{"x"});
}

TEST_CASE("substitute replaces free occurrences only") {
  auto sig = small_sig();
  auto f = fol::parse_open("P(x)", sig);
  CHECK(fol::substitute(f, "x", "a").render() == "P(a)");

  auto closed = fol::parse("forall x P(x)", sig);
  CHECK(fol::substitute(closed, "x", "a") == closed);

  auto mixed = fol::parse_open("exists x P(x) & Q(x)", sig);
  CHECK(fol::substitute(mixed, "x", "a").render() ==
        "(exists x P(x) & Q(a))");
}

TEST_CASE("substitution removes the variable from the free set") {
  auto sig = small_sig();
  std::mt19937_64 g(99);
  int open_seen = 0;
  for (int i = 0; i < 400 && open_seen < 60; ++i) {
    auto f = testutil::random_sentence(g, sig, 3, {"u"});
    auto free = fol::free_variables(f);
    if (!free.count("u")) continue;
    ++open_seen;
    auto sub = fol::substitute(f, "u", "a");
    auto expect = free;
    expect.erase("u");
    CHECK(fol::free_variables(sub) == expect);
  }
  CHECK(open_seen >= 60);
}

TEST_CASE("signature validation") {
  fol::Signature sig;
  CHECK_THROWS_AS(sig.validate(), DataError);  // empty
  sig.entities = {"a"};
  sig.predicates = {{"P", 1}};
  CHECK_NOTHROW(sig.validate());
  sig.predicates.push_back({"P", 2});
  CHECK_THROWS_AS(sig.validate(), DataError);  // duplicate name
  sig.predicates = {{"T", 3}};
  CHECK_THROWS_AS(sig.validate(), DataError);  // arity
  sig.predicates = {{"P", 1}};
  sig.entities = {"a", "a"};
  CHECK_THROWS_AS(sig.validate(), DataError);  // duplicate entity
}
