#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "discd/count.hpp"

namespace discd::inductive {

// Evidence held by an agent: an identified set of sentences together with
// the CNF of their conjunction and its cached model count. Instances are
// immutable; extended() returns a new state. The model count is always
// positive; constructing an inconsistent state throws InconsistencyError.
class KnowledgeState {
 public:
  static KnowledgeState empty(std::shared_ptr<const ground::AtomIndex> atoms);

  static KnowledgeState build(
      std::shared_ptr<const ground::AtomIndex> atoms,
      const std::vector<std::pair<fol::SentenceId, fol::Formula>>& sentences,
      const count::CounterConfig& cfg = {});

  // Add one sentence. A sentence structurally equal to one already held is
  // absorbed: the result is *this unchanged. The precomputed-CNF overload
  // skips re-encoding (the CNF must encode exactly `f`).
  KnowledgeState extended(const fol::SentenceId& id, const fol::Formula& f,
                          const count::CounterConfig& cfg = {}) const;
  KnowledgeState extended(const fol::SentenceId& id, const fol::Formula& f,
                          const ground::GroundProblem& cnf,
                          const count::CounterConfig& cfg = {}) const;

  bool holds_id(const fol::SentenceId& id) const;
  bool holds_formula(const fol::Formula& f) const;

  const std::map<fol::SentenceId, fol::Formula>& evidence() const {
    return evidence_;
  }
  const ground::GroundProblem& cnf() const { return cnf_; }
  const count::Count& models() const { return models_; }
  const std::shared_ptr<const ground::AtomIndex>& atoms() const {
    return atoms_;
  }

 private:
  KnowledgeState() = default;

  std::shared_ptr<const ground::AtomIndex> atoms_;
  std::map<fol::SentenceId, fol::Formula> evidence_;
  ground::GroundProblem cnf_;
  count::Count models_;
};

// Degree of confirmation of m by the evidence e: the fraction of models of
// e that also satisfy m, i.e. count(m & e) / count(e). With no evidence
// this is the unconditional probability of m under the uniform measure
// over state descriptions. Exact rational in [0, 1].
count::Rational confirmation(const fol::Formula& m, const KnowledgeState& e,
                             const count::CounterConfig& cfg = {});

// As above with a precomputed CNF for m.
count::Rational confirmation(const ground::GroundProblem& m_cnf,
                             const KnowledgeState& e,
                             const count::CounterConfig& cfg = {});

// Semantic content of m given e: 1 - confirmation(m, e).
count::Rational cont(const fol::Formula& m, const KnowledgeState& e,
                     const count::CounterConfig& cfg = {});

// Closed form of the lambda-continuum for singular predictive inference:
// the probability that the next individual is of kind s after observing l
// individuals, l_s of them of kind s, with w_s kinds... see LambdaParams.
struct LambdaParams {
  long observed = 0;        // l: individuals observed so far
  long observed_kind = 0;   // l_s: observations of the predicted kind
  long width = 1;           // w: number of kinds currently possible
  count::Rational lambda;   // lambda(w): weight of the logical factor
};

count::Rational lambda_confirmation(const LambdaParams& p);

// Posterior mass of every state description under the evidence: assignment
// (encoded little-endian, bit i = atom i) -> count-ratio. Only consistent
// assignments appear; the masses sum to 1. Guarded to n_atoms <= 20.
std::map<std::uint64_t, count::Rational> distribution_over_states(
    const KnowledgeState& e, const count::CounterConfig& cfg = {});

}  // namespace discd::inductive
