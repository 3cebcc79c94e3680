#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "discd/fol.hpp"

namespace discd::ground {

// Fixed numbering of the ground atoms of a signature. Predicates appear in
// declaration order; within a predicate, argument tuples run row-major over
// entity declaration order. For a binary predicate at offset o over n
// entities, R(e_i, e_j) has id o + i*n + j.
class AtomIndex {
 public:
  explicit AtomIndex(fol::Signature sig);

  int n_atoms() const { return n_; }
  const fol::Signature& signature() const { return sig_; }

  int atom_id(int pred_idx, int arg0, int arg1 = -1) const;
  // The atom must be variable-free; throws DataError otherwise.
  int atom_id(const fol::Formula& atom) const;

  std::string atom_name(int id) const;       // e.g. "R(a,b)"
  fol::Formula atom_formula(int id) const;

 private:
  fol::Signature sig_;
  std::vector<int> offsets_;
  int n_ = 0;
};

// Quantifier-free proposition over ground atom ids. Implication and
// biconditional are lowered away during grounding, so only these four
// node kinds occur.
struct PropTree {
  enum class Kind { Var, Not, And, Or };

  Kind kind = Kind::Var;
  int var = -1;
  std::vector<PropTree> kids;

  static PropTree leaf(int var);
  static PropTree negation(PropTree t);
  static PropTree conjunction(std::vector<PropTree> kids);
  static PropTree disjunction(std::vector<PropTree> kids);

  std::size_t size() const;  // node count
};

struct GroundConfig {
  // Abort (ResourceLimitError) once the expanded tree exceeds this many
  // nodes; quantifier expansion is exponential in nesting depth.
  std::int64_t node_limit = 10'000'000;
};

// Expand quantifiers over the finite entity domain: a universal becomes a
// conjunction over all entities, an existential a disjunction. The input
// must be a sentence (no free variables).
PropTree ground(const fol::Formula& f, const AtomIndex& idx,
                const GroundConfig& cfg = {});

// Evaluate under an assignment; bit i of `assignment` is atom i.
bool eval(const PropTree& t, std::uint64_t assignment);
bool eval(const PropTree& t, const std::vector<bool>& assignment);

// CNF with original variables 0..n_original-1 and definitional auxiliary
// variables after them. Every auxiliary variable is functionally determined
// by the originals, so the CNF has exactly as many models over all
// n_original + n_aux variables as the source proposition has over the
// originals. Literals use DIMACS convention: +-(var+1).
struct GroundProblem {
  std::shared_ptr<const AtomIndex> atoms;
  int n_original = 0;
  int n_aux = 0;
  std::vector<std::vector<int>> clauses;

  int n_vars() const { return n_original + n_aux; }

  // CNF of a conjunction: concatenates clause lists, renumbering the
  // auxiliary variables of `b` past those of `a`. Both inputs must share
  // the same atom numbering.
  static GroundProblem conjoin(const GroundProblem& a, const GroundProblem& b);
};

// Definitional encoding. Auxiliary variables are introduced with full
// two-sided defining clauses and shared between structurally identical
// subtrees. Constant subtrees are folded away; negation becomes literal
// polarity and never allocates a variable.
GroundProblem to_cnf(const PropTree& t,
                     std::shared_ptr<const AtomIndex> atoms);

// Conjunction of one signed literal per ground atom. `bits` must have
// exactly n_atoms entries; bit i gives the sign of atom i.
fol::Formula state_description(const std::vector<bool>& bits,
                               const AtomIndex& idx);

// DIMACS CNF with a leading comment recording how many variables are
// original ("c projected <n>"); consumers can project away the rest.
void write_dimacs(const GroundProblem& p, std::ostream& out);

}  // namespace discd::ground
