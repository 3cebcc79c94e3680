#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "discd/errors.hpp"

namespace discd::fol {

// Stable identifier of a sentence within a dataset (e.g. "s07").
using SentenceId = std::string;

struct Predicate {
  std::string name;
  int arity = 1;  // 1 or 2

  bool operator==(const Predicate&) const = default;
};

// A finite relational vocabulary: named entities plus named predicates.
// Order matters; it fixes the ground-atom numbering used everywhere else.
struct Signature {
  std::vector<std::string> entities;
  std::vector<Predicate> predicates;

  // Throws DataError on duplicate names, empty lists, bad arity or names
  // that do not fit the lexical rules (entities lowercase, predicates
  // starting with an uppercase letter).
  void validate() const;

  // Index of a name, or -1 when absent.
  int predicate_index(const std::string& name) const;
  int entity_index(const std::string& name) const;
};

enum class TermKind { Variable, Entity };

struct Term {
  TermKind kind = TermKind::Entity;
  std::string name;

  bool operator==(const Term&) const = default;
};

enum class Kind { Atom, Not, And, Or, Implies, Iff, ForAll, Exists };

// Immutable formula tree with shared subterms. Copies are cheap handles.
// And/Or are n-ary (factories flatten nested chains); Implies/Iff are
// binary; quantifiers bind a single variable.
class Formula {
 public:
  static Formula atom(std::string predicate, std::vector<Term> terms);
  static Formula negation(Formula f);
  // Flatten nested chains of the same connective; a single part is
  // returned unchanged. Empty part lists are rejected.
  static Formula conjunction(std::vector<Formula> parts);
  static Formula disjunction(std::vector<Formula> parts);
  static Formula implies(Formula lhs, Formula rhs);
  static Formula iff(Formula lhs, Formula rhs);
  static Formula forall(std::string variable, Formula body);
  static Formula exists(std::string variable, Formula body);

  Kind kind() const;

  // Atom accessors.
  const std::string& predicate() const;
  const std::vector<Term>& terms() const;

  // Children: operands of a connective, or the single quantifier body.
  const std::vector<Formula>& children() const;

  // Bound variable of a quantifier.
  const std::string& variable() const;

  // Structural equality / hashing (bound variable names included).
  bool operator==(const Formula& other) const;
  std::size_t hash() const;

  // Concrete-syntax form that parses back to an equal tree.
  std::string render() const;

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

struct FormulaHash {
  std::size_t operator()(const Formula& f) const { return f.hash(); }
};

// Parse one formula. Every lowercase term must be either bound by an
// enclosing quantifier or a declared entity; free variables are rejected.
// Leading/trailing whitespace and '#' comments are ignored.
// Throws ParseError with a 1-based position on any lexical, syntactic or
// signature violation (unknown predicate, arity mismatch, unbound name).
Formula parse(const std::string& text, const Signature& sig);

// As parse(), but lowercase names that are neither bound nor declared
// entities become free variables (used for hypothesis schemas).
Formula parse_open(const std::string& text, const Signature& sig);

std::string render(const Formula& f);

// Names of variables with at least one free occurrence.
std::set<std::string> free_variables(const Formula& f);

// Replace free occurrences of `variable` with the entity constant
// `entity`. Occurrences shadowed by a quantifier are left alone.
Formula substitute(const Formula& f, const std::string& variable,
                   const std::string& entity);

}  // namespace discd::fol
