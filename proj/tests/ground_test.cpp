#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "discd/count.hpp"
#include "discd/errors.hpp"
#include "discd/fol.hpp"
#include "discd/ground.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace discd;

namespace {

fol::Signature small_sig() {
  fol::Signature sig;
  sig.entities = {"a", "b"};
  sig.predicates = {{"P", 1}, {"Q", 1}, {"R", 2}};
  return sig;
}

}  // namespace

TEST_CASE("atom numbering is row major over declaration order") {
  ground::AtomIndex idx(small_sig());
  CHECK(idx.n_atoms() == 2 + 2 + 4);
  CHECK(idx.atom_name(0) == "P(a)");
  CHECK(idx.atom_name(1) == "P(b)");
  CHECK(idx.atom_name(2) == "Q(a)");
  CHECK(idx.atom_name(4) == "R(a,a)");
  CHECK(idx.atom_name(5) == "R(a,b)");
  CHECK(idx.atom_name(6) == "R(b,a)");
  CHECK(idx.atom_id(2, 0, 1) == 5);
  for (int i = 0; i < idx.n_atoms(); ++i)
    CHECK(idx.atom_id(idx.atom_formula(i)) == i);
}

TEST_CASE("quantifiers expand over the entity domain") {
  auto sig = small_sig();
  ground::AtomIndex idx(sig);
  auto all = ground::ground(fol::parse("forall x P(x)", sig), idx);
  REQUIRE(all.kind == ground::PropTree::Kind::And);
  REQUIRE(all.kids.size() == 2);
  CHECK(all.kids[0].var == 0);
  CHECK(all.kids[1].var == 1);

  auto some = ground::ground(fol::parse("exists x P(x)", sig), idx);
  CHECK(some.kind == ground::PropTree::Kind::Or);
  CHECK(some.kids.size() == 2);
}

TEST_CASE("grounding agrees with direct sentence evaluation") {
  auto sig = small_sig();
  ground::AtomIndex idx(sig);
  std::mt19937_64 g(7);
  for (int i = 0; i < 200; ++i) {
    auto f = testutil::random_sentence(g, sig, 4);
    auto tree = ground::ground(f, idx);
    for (int trial = 0; trial < 32; ++trial) {
      std::uint64_t world = g() & 0xff;
      std::map<std::string, std::string> env;
      CHECK(ground::eval(tree, world) ==
            testutil::eval_sentence(f, sig, world, env));
    }
  }
}

TEST_CASE("grounding rejects open formulas and oversized expansions") {
  auto sig = small_sig();
  ground::AtomIndex idx(sig);
  CHECK_THROWS_AS(ground::ground(fol::parse_open("P(x)", sig), idx),
                  DataError);
  ground::GroundConfig tight;
  tight.node_limit = 3;
  CHECK_THROWS_AS(
      ground::ground(fol::parse("forall x (P(x) & Q(x))", sig), idx, tight),
      ResourceLimitError);
}

TEST_CASE("definitional cnf preserves the model count") {
  auto sig = small_sig();
  auto idx = std::make_shared<const ground::AtomIndex>(sig);

  auto single = ground::to_cnf(ground::PropTree::leaf(0), idx);
  CHECK(single.n_aux == 0);
  REQUIRE(single.clauses.size() == 1);
  CHECK(single.clauses[0] == std::vector<int>{1});

  auto pair = ground::to_cnf(
      ground::PropTree::disjunction(
          {ground::PropTree::leaf(0), ground::PropTree::leaf(1)}),
      idx);
  // 3 of 4 assignments of the two atoms, times free atoms elsewhere.
  CHECK(testutil::brute_cnf_count(pair.clauses, pair.n_vars()) ==
        count::Count(3) << (idx->n_atoms() - 2));

  std::mt19937_64 g(13);
  for (int i = 0; i < 300; ++i) {
    auto tree = testutil::random_tree(g, 8, 4);
    auto cnf = ground::to_cnf(tree, idx);
    auto direct = testutil::brute_tree_count(tree, idx->n_atoms());
    auto via_cnf = testutil::brute_cnf_count(cnf.clauses, cnf.n_vars());
    CHECK(direct == via_cnf);
  }
}

TEST_CASE("auxiliary variables sit after the originals") {
  auto sig = small_sig();
  auto idx = std::make_shared<const ground::AtomIndex>(sig);
  std::mt19937_64 g(17);
  for (int i = 0; i < 50; ++i) {
    auto cnf = ground::to_cnf(testutil::random_tree(g, 8, 4), idx);
    CHECK(cnf.n_original == idx->n_atoms());
    for (const auto& cl : cnf.clauses)
      for (int lit : cl) {
        CHECK(lit != 0);
        CHECK(std::abs(lit) <= cnf.n_vars());
      }
  }
}

TEST_CASE("state descriptions pin exactly one world") {
  auto sig = small_sig();
  fol::Signature tiny;
  tiny.entities = {"a", "b"};
  tiny.predicates = {{"P", 1}};
  ground::AtomIndex idx(tiny);

  CHECK(ground::state_description({true, false}, idx).render() ==
        "(P(a) & ~P(b))");
  CHECK_THROWS_AS(ground::state_description({true}, idx), DataError);

  for (std::uint64_t w = 0; w < 4; ++w) {
    std::vector<bool> bits{(w & 1) != 0, (w & 2) != 0};
    auto f = ground::state_description(bits, idx);
    auto tree = ground::ground(f, idx);
    CHECK(testutil::brute_tree_count(tree, 2) == 1);
    CHECK(testutil::eval_tree(tree, w));
  }
}

TEST_CASE("state descriptions partition the state space") {
  fol::Signature tiny;
  tiny.entities = {"a", "b", "c"};
  tiny.predicates = {{"P", 1}, {"Q", 1}};
  ground::AtomIndex idx(tiny);
  int n = idx.n_atoms();
  REQUIRE(n == 6);

  std::vector<ground::PropTree> all;
  for (std::uint64_t w = 0; w < (1u << n); ++w) {
    std::vector<bool> bits(n);
    for (int i = 0; i < n; ++i) bits[i] = (w >> i) & 1u;
    all.push_back(ground::ground(ground::state_description(bits, idx), idx));
  }
  // Pairwise exclusive on a sample, jointly exhaustive in total.
  auto joint = ground::PropTree::conjunction({all[5], all[40]});
  CHECK(testutil::brute_tree_count(joint, n) == 0);
  auto everything = ground::PropTree::disjunction(all);
  CHECK(testutil::brute_tree_count(everything, n) ==
        count::Count(1) << n);
}

TEST_CASE("grounding is deterministic") {
  auto sig = small_sig();
  auto idx = std::make_shared<const ground::AtomIndex>(sig);
  auto f = fol::parse("forall x (P(x) -> exists y (Q(y) & R(x,y)))", sig);
  auto a = ground::to_cnf(ground::ground(f, *idx), idx);
  auto b = ground::to_cnf(ground::ground(f, *idx), idx);
  CHECK(a.n_original == b.n_original);
  CHECK(a.n_aux == b.n_aux);
  CHECK(a.clauses == b.clauses);
}

TEST_CASE("conjoin concatenates and renumbers auxiliaries") {
  auto sig = small_sig();
  auto idx = std::make_shared<const ground::AtomIndex>(sig);
  std::mt19937_64 g(23);
  for (int i = 0; i < 60; ++i) {
    auto ta = testutil::random_tree(g, 6, 3);
    auto tb = testutil::random_tree(g, 6, 3);
    auto joint = ground::GroundProblem::conjoin(ground::to_cnf(ta, idx),
                                                ground::to_cnf(tb, idx));
    auto direct = testutil::brute_tree_count(
        ground::PropTree::conjunction({ta, tb}), idx->n_atoms());
    CHECK(testutil::brute_cnf_count(joint.clauses, joint.n_vars()) == direct);
  }
}

TEST_CASE("dimacs export") {
  fol::Signature tiny;
  tiny.entities = {"a", "b"};
  tiny.predicates = {{"P", 1}};
  auto idx = std::make_shared<const ground::AtomIndex>(tiny);
  auto cnf = ground::to_cnf(
      ground::PropTree::disjunction(
          {ground::PropTree::leaf(0), ground::PropTree::leaf(1)}),
      idx);
  std::ostringstream out;
  ground::write_dimacs(cnf, out);
  std::string text = out.str();
  CHECK(text.find("c projected 2\n") != std::string::npos);
  CHECK(text.find("p cnf ") != std::string::npos);
  CHECK(text.back() == '\n');
}
