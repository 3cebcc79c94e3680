#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "discd/task.hpp"

namespace discd::dataset {

struct Sentence {
  fol::SentenceId id;
  fol::Formula formula;
};

struct GeneratorParams {
  int n_nodes = 3;
  int n_sentences = 40;
  double overlap = 0.30;
  int n_hypotheses = 8;
  int n_entities = 4;
  int n_tracked = -1;     // tracked entities; -1 tracks all of them
  int n_features = 1;     // unary distractor predicates
  int n_relations = 1;    // binary predicates
  double rule_fraction = 0.40;   // quantified share of the story
  int min_isolated_failures = 1; // per node, entities misclassified alone
  int max_attempts = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

// A story: signature, identified sentences all true in one ground-truth
// world, per-node shares, and the classification task. prepare() fills the
// per-sentence CNF/probability caches the protocol relies on.
struct Dataset {
  std::string name;
  fol::Signature signature;
  std::shared_ptr<const ground::AtomIndex> atoms;
  std::vector<Sentence> story;  // id order
  std::map<int, std::vector<fol::SentenceId>> node_assignment;
  task::HypothesisSet hypotheses;
  std::string meta_json;  // carried verbatim

  std::map<fol::SentenceId, ground::GroundProblem> sentence_cnf;
  std::map<fol::SentenceId, count::Rational> sentence_prob;

  const fol::Formula& formula(const fol::SentenceId& id) const;
  bool prepared() const { return sentence_cnf.size() == story.size(); }
  void prepare(const count::CounterConfig& cfg = {});

  // The Dataset contract: unique ids, assignments referencing known ids
  // covering the whole story, consistent story, consistent node shares,
  // well-formed hypotheses over known entities.
  void validate(const count::CounterConfig& cfg = {}) const;
};

// Assign every sentence to one or more of v nodes. Shares are equal up to
// one sentence; per node, round(overlap * share) of its sentences also
// appear in another share and the rest are unique to it. Duplication is
// the minimum needed to honour both the rounding rule and full coverage.
std::map<int, std::vector<fol::SentenceId>> split(
    const std::vector<fol::SentenceId>& ids, int v, double overlap,
    std::uint64_t seed);

Dataset load(const std::filesystem::path& dir,
             const count::CounterConfig& cfg = {});

void save(const Dataset& ds, const std::filesystem::path& dir);

// Signature JSON: {"entities": [...], "predicates": [{"name", "arity"}...]}
fol::Signature read_signature(const std::filesystem::path& path);

// Sample a world, pin every tracked entity's class bits through facts and
// rules that are true in it, pad with true distractors, split, and verify
// the result (full pool classifies every tracked entity correctly; every
// node alone misclassifies at least min_isolated_failures of them).
// Retries with derived seeds until verification passes.
Dataset generate(const GeneratorParams& params,
                 const count::CounterConfig& cfg = {});

}  // namespace discd::dataset
