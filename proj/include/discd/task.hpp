#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "discd/inductive.hpp"

namespace discd::task {

// The classification task: competing open hypotheses about a single
// individual, plus the intended answer for each tracked entity.
struct HypothesisSet {
  std::vector<fol::Formula> schemas;          // one free variable each
  std::map<std::string, int> ground_truth;    // entity -> schema index

  void validate(const fol::Signature& sig) const;

  // schemas[index] with its free variable bound to the entity.
  fol::Formula instantiate(int index, const std::string& entity) const;
};

struct Deduction {
  int index = -1;                              // argmax schema
  count::Rational confidence;                  // its confirmation
  bool tie = false;                            // exact maximum shared
  std::vector<count::Rational> confirmations;  // one per schema
};

// Pick the schema whose instantiation for `entity` is best confirmed by
// the knowledge. Exact rational comparison; ties are flagged and resolved
// to the lowest index.
Deduction deduce(const inductive::KnowledgeState& knowledge,
                 const std::string& entity, const HypothesisSet& h,
                 const count::CounterConfig& cfg = {});

using LossFn = std::function<double(int predicted, int actual)>;

// 0/1 loss; the default for bayes_risk.
double zero_one_loss(int predicted, int actual);

// Expected loss of deciding `predicted` when the truth is distributed as
// the normalised confirmations of the schemas, averaged over all tracked
// entities. With all-equal confirmations and 0/1 loss this is (k-1)/k.
double bayes_risk(const inductive::KnowledgeState& knowledge,
                  const HypothesisSet& h, const LossFn& loss = zero_one_loss,
                  const count::CounterConfig& cfg = {});

// Fraction of (knowledge state, tracked entity) pairs whose deduction is
// correct and untied.
count::Rational success_rate(
    std::span<const inductive::KnowledgeState> knowledges,
    const HypothesisSet& h, const count::CounterConfig& cfg = {});

// One deduction pass per tracked entity, reused by the protocol driver so
// success and risk come from a single set of counts.
struct Evaluation {
  std::map<std::string, Deduction> per_entity;
  count::Rational success;  // correct and untied / tracked
  double risk = 0.0;        // mean bayes risk under 0/1 loss
};

Evaluation evaluate(const inductive::KnowledgeState& knowledge,
                    const HypothesisSet& h,
                    const count::CounterConfig& cfg = {});

}  // namespace discd::task
