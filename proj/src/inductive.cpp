#include "discd/inductive.hpp"

#include <utility>

namespace discd::inductive {

KnowledgeState KnowledgeState::empty(
    std::shared_ptr<const ground::AtomIndex> atoms) {
  if (!atoms) throw DataError("knowledge: null atom index");
  KnowledgeState ks;
  ks.cnf_.atoms = atoms;
  ks.cnf_.n_original = atoms->n_atoms();
  ks.models_ = 1;
  ks.models_ <<= atoms->n_atoms();
  ks.atoms_ = std::move(atoms);
  return ks;
}

KnowledgeState KnowledgeState::build(
    std::shared_ptr<const ground::AtomIndex> atoms,
    const std::vector<std::pair<fol::SentenceId, fol::Formula>>& sentences,
    const count::CounterConfig& cfg) {
  KnowledgeState ks = empty(std::move(atoms));
  for (const auto& [id, f] : sentences) ks = ks.extended(id, f, cfg);
  return ks;
}

KnowledgeState KnowledgeState::extended(const fol::SentenceId& id,
                                        const fol::Formula& f,
                                        const count::CounterConfig& cfg) const {
  if (holds_formula(f)) return *this;
  return extended(id, f, to_cnf(ground::ground(f, *atoms_), atoms_), cfg);
}

KnowledgeState KnowledgeState::extended(const fol::SentenceId& id,
                                        const fol::Formula& f,
                                        const ground::GroundProblem& cnf,
                                        const count::CounterConfig& cfg) const {
  auto it = evidence_.find(id);
  if (it != evidence_.end()) {
    if (it->second == f) return *this;
    throw DataError("knowledge: id '" + id +
                    "' already bound to a different sentence");
  }
  if (holds_formula(f)) return *this;

  KnowledgeState next;
  next.atoms_ = atoms_;
  next.evidence_ = evidence_;
  next.evidence_.emplace(id, f);
  next.cnf_ = ground::GroundProblem::conjoin(cnf_, cnf);
  next.models_ = count::count_models(next.cnf_, cfg);
  if (next.models_ == 0)
    throw InconsistencyError("knowledge: adding '" + id +
                             "' leaves no consistent world");
  return next;
}

bool KnowledgeState::holds_id(const fol::SentenceId& id) const {
  return evidence_.count(id) > 0;
}

bool KnowledgeState::holds_formula(const fol::Formula& f) const {
  for (const auto& [id, g] : evidence_)
    if (g == f) return true;
  return false;
}

count::Rational confirmation(const fol::Formula& m, const KnowledgeState& e,
                             const count::CounterConfig& cfg) {
  return confirmation(to_cnf(ground::ground(m, *e.atoms()), e.atoms()), e, cfg);
}

count::Rational confirmation(const ground::GroundProblem& m_cnf,
                             const KnowledgeState& e,
                             const count::CounterConfig& cfg) {
  ground::GroundProblem joint =
      ground::GroundProblem::conjoin(e.cnf(), m_cnf);
  count::Count overlap = count::count_models(joint, cfg);
  count::Rational r(overlap, e.models());
  r.canonicalize();
  return r;
}

count::Rational cont(const fol::Formula& m, const KnowledgeState& e,
                     const count::CounterConfig& cfg) {
  return count::Rational(1) - confirmation(m, e, cfg);
}

count::Rational lambda_confirmation(const LambdaParams& p) {
  if (p.observed < 0 || p.observed_kind < 0 || p.observed_kind > p.observed)
    throw DataError("lambda_confirmation: bad observation counts");
  if (p.width < 1)
    throw DataError("lambda_confirmation: width must be positive");
  if (p.lambda < 0)
    throw DataError("lambda_confirmation: lambda must be nonnegative");
  if (p.observed == 0 && p.lambda == 0)
    throw DataError("lambda_confirmation: l + lambda is zero");
  // (l_s + lambda(w)/w) / (l + lambda(w))
  count::Rational num =
      count::Rational(p.observed_kind) + p.lambda / count::Rational(p.width);
  count::Rational den = count::Rational(p.observed) + p.lambda;
  count::Rational r = num / den;
  r.canonicalize();
  return r;
}

std::map<std::uint64_t, count::Rational> distribution_over_states(
    const KnowledgeState& e, const count::CounterConfig& cfg) {
  (void)cfg;
  int n = e.atoms()->n_atoms();
  if (n > 20)
    throw ResourceLimitError(
        "distribution_over_states: " + std::to_string(n) +
        " atoms exceeds the enumeration bound of 20");

  // Evaluate the evidence sentences directly on every assignment; the CNF
  // would drag auxiliary variables into the enumeration.
  std::vector<ground::PropTree> trees;
  trees.reserve(e.evidence().size());
  for (const auto& [id, f] : e.evidence())
    trees.push_back(ground::ground(f, *e.atoms()));

  std::map<std::uint64_t, count::Rational> out;
  count::Count hits = 0;
  std::uint64_t top = 1ull << n;
  for (std::uint64_t m = 0; m < top; ++m) {
    bool ok = true;
    for (const auto& t : trees)
      if (!eval(t, m)) {
        ok = false;
        break;
      }
    if (!ok) continue;
    ++hits;
    count::Rational mass(1, e.models());
    mass.canonicalize();
    out.emplace(m, std::move(mass));
  }
  if (hits != e.models())
    throw DataError("distribution_over_states: cached count disagrees with "
                    "enumeration");
  return out;
}

}  // namespace discd::inductive
