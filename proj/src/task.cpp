#include "discd/task.hpp"

#include <algorithm>

namespace discd::task {

void HypothesisSet::validate(const fol::Signature& sig) const {
  if (schemas.size() < 2)
    throw DataError("hypotheses: need at least two competing schemas");
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    auto fv = fol::free_variables(schemas[i]);
    if (fv.size() != 1)
      throw DataError("hypotheses: schema " + std::to_string(i) + " has " +
                      std::to_string(fv.size()) +
                      " free variables, expected exactly 1");
  }
  for (const auto& [entity, index] : ground_truth) {
    if (sig.entity_index(entity) < 0)
      throw DataError("hypotheses: unknown tracked entity '" + entity + "'");
    if (index < 0 || index >= static_cast<int>(schemas.size()))
      throw DataError("hypotheses: ground truth for '" + entity +
                      "' points at schema " + std::to_string(index));
  }
}

fol::Formula HypothesisSet::instantiate(int index,
                                        const std::string& entity) const {
  const auto& schema = schemas.at(index);
  auto fv = fol::free_variables(schema);
  if (fv.size() != 1)
    throw DataError("hypotheses: schema " + std::to_string(index) +
                    " does not have exactly one free variable");
  return fol::substitute(schema, *fv.begin(), entity);
}

Deduction deduce(const inductive::KnowledgeState& knowledge,
                 const std::string& entity, const HypothesisSet& h,
                 const count::CounterConfig& cfg) {
  if (h.schemas.empty()) throw DataError("deduce: empty schema list");
  Deduction d;
  d.confirmations.reserve(h.schemas.size());
  for (std::size_t i = 0; i < h.schemas.size(); ++i) {
    fol::Formula inst = h.instantiate(static_cast<int>(i), entity);
    d.confirmations.push_back(inductive::confirmation(inst, knowledge, cfg));
  }
  d.index = 0;
  for (std::size_t i = 1; i < d.confirmations.size(); ++i)
    if (d.confirmations[i] > d.confirmations[d.index])
      d.index = static_cast<int>(i);
  d.confidence = d.confirmations[d.index];
  d.tie = std::count(d.confirmations.begin(), d.confirmations.end(),
                     d.confidence) > 1;
  return d;
}

double zero_one_loss(int predicted, int actual) {
  return predicted == actual ? 0.0 : 1.0;
}

namespace {

double risk_of(const Deduction& d, const LossFn& loss) {
  count::Rational mass = 0;
  for (const auto& c : d.confirmations) mass += c;
  if (mass == 0)
    throw DataError("bayes_risk: all hypothesis confirmations are zero");
  double risk = 0.0;
  for (std::size_t i = 0; i < d.confirmations.size(); ++i) {
    count::Rational q = d.confirmations[i] / mass;
    risk += q.get_d() * loss(d.index, static_cast<int>(i));
  }
  return risk;
}

}  // namespace

double bayes_risk(const inductive::KnowledgeState& knowledge,
                  const HypothesisSet& h, const LossFn& loss,
                  const count::CounterConfig& cfg) {
  if (h.ground_truth.empty())
    throw DataError("bayes_risk: no tracked entities");
  double sum = 0.0;
  for (const auto& [entity, truth] : h.ground_truth)
    sum += risk_of(deduce(knowledge, entity, h, cfg), loss);
  return sum / static_cast<double>(h.ground_truth.size());
}

count::Rational success_rate(
    std::span<const inductive::KnowledgeState> knowledges,
    const HypothesisSet& h, const count::CounterConfig& cfg) {
  if (h.ground_truth.empty())
    throw DataError("success_rate: no tracked entities");
  if (knowledges.empty())
    throw DataError("success_rate: no knowledge states");
  long correct = 0, total = 0;
  for (const auto& ks : knowledges)
    for (const auto& [entity, truth] : h.ground_truth) {
      Deduction d = deduce(ks, entity, h, cfg);
      ++total;
      if (!d.tie && d.index == truth) ++correct;
    }
  count::Rational r(correct, total);
  r.canonicalize();
  return r;
}

Evaluation evaluate(const inductive::KnowledgeState& knowledge,
                    const HypothesisSet& h, const count::CounterConfig& cfg) {
  if (h.ground_truth.empty())
    throw DataError("evaluate: no tracked entities");
  Evaluation ev;
  long correct = 0;
  double risk_sum = 0.0;
  for (const auto& [entity, truth] : h.ground_truth) {
    Deduction d = deduce(knowledge, entity, h, cfg);
    if (!d.tie && d.index == truth) ++correct;
    risk_sum += risk_of(d, zero_one_loss);
    ev.per_entity.emplace(entity, std::move(d));
  }
  ev.success = count::Rational(correct,
                               static_cast<long>(h.ground_truth.size()));
  ev.success.canonicalize();
  ev.risk = risk_sum / static_cast<double>(h.ground_truth.size());
  return ev;
}

}  // namespace discd::task
