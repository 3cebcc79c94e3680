#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "discd/count.hpp"
#include "discd/dataset.hpp"
#include "discd/inductive.hpp"

namespace discd::protocol {

enum class Strategy { Discd, Random };
enum class Scorer { MaxConfirmation, MinJointProbability, LiteralCont1 };
enum class SelectionMode { Greedy, Exhaustive };

std::string to_string(Strategy s);
std::string to_string(Scorer s);
std::string to_string(SelectionMode m);
Strategy strategy_from(const std::string& name);
Scorer scorer_from(const std::string& name);
SelectionMode selection_mode_from(const std::string& name);

struct ProtocolConfig {
  Strategy strategy = Strategy::Discd;
  Scorer scorer = Scorer::MaxConfirmation;
  SelectionMode selection = SelectionMode::Greedy;
  int budget = 1;  // B: sentences per message, both directions
  int rounds = 40;
  std::uint64_t seed = 0;
  double bits_per_sentence = 23.665;
  int jobs = 1;
  count::CounterConfig counter;

  void validate() const;
};

// One participant. `knowledge` is the conjunction of the local pool plus
// every broadcast received; `exchanged` is the scoring context: everything
// this node has sent or received so far.
struct NodeState {
  int id;
  std::vector<fol::SentenceId> pool;
  std::set<fol::SentenceId> sent;
  std::set<fol::SentenceId> received;
  inductive::KnowledgeState knowledge;
  inductive::KnowledgeState exchanged;
};

struct ServerEntry {
  fol::SentenceId id;
  fol::Formula formula;
  int from_node;
  int round;
};

struct ServerState {
  std::vector<ServerEntry> pool;
  std::set<fol::SentenceId> broadcast_history;
  inductive::KnowledgeState knowledge;
};

struct Message {
  int node;  // -1 for the server
  fol::SentenceId id;
  fol::Formula formula;
};

// A selected sentence with its score at selection time. Random selections
// carry no score.
struct Pick {
  fol::SentenceId id;
  std::optional<count::Rational> score;
};

NodeState make_node(int id, const dataset::Dataset& ds,
                    const ProtocolConfig& cfg);
ServerState make_server(const dataset::Dataset& ds);

std::vector<Pick> select_uplink(const NodeState& node,
                                const dataset::Dataset& ds,
                                const ProtocolConfig& cfg,
                                std::mt19937_64& g);
void server_update(ServerState& server, const std::vector<Message>& msgs,
                   const dataset::Dataset& ds, const ProtocolConfig& cfg,
                   int round);
std::vector<Pick> select_downlink(const ServerState& server,
                                  const dataset::Dataset& ds,
                                  const ProtocolConfig& cfg,
                                  std::mt19937_64& g);
void node_update(NodeState& node, const std::vector<Message>& broadcast,
                 const dataset::Dataset& ds, const ProtocolConfig& cfg);

double bits_cost(long sentence_count, const ProtocolConfig& cfg);

struct RoundRecord {
  int round = 0;  // 0 is the pre-communication baseline
  std::map<int, std::vector<Pick>> uplinks;
  std::vector<Pick> downlink;
  std::map<int, long> sent_total;  // cumulative uplink sentences per node
  std::map<int, count::Rational> success;
  std::map<int, double> risk;
  std::map<int, std::string> node_models;  // decimal knowledge model counts
  std::string server_models;
};

struct ExperimentLog {
  std::string dataset_name;
  ProtocolConfig cfg;
  int n_nodes = 0;
  std::vector<RoundRecord> rounds;

  std::string to_jsonl() const;
  // Mean success over nodes at each record, as exact rationals.
  std::vector<count::Rational> mean_success() const;
  // Per-node uplink cost through the first record whose mean success
  // reaches the threshold, charged at the full budget: beta * B * round.
  // Empty if the threshold is never reached.
  std::optional<double> cost_at(const count::Rational& threshold) const;
};

ExperimentLog run(const dataset::Dataset& ds, const ProtocolConfig& cfg);

void write_curves_csv(const std::vector<ExperimentLog>& logs,
                      std::ostream& out);
void write_costs_csv(const std::vector<ExperimentLog>& logs,
                     const std::vector<int>& thresholds_pct,
                     std::ostream& out);

}  // namespace discd::protocol
