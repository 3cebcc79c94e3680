#include <memory>
#include <random>
#include <sstream>
#include <vector>

#include "discd/count.hpp"
#include "discd/dataset.hpp"
#include "discd/errors.hpp"
#include "discd/fol.hpp"
#include "discd/ground.hpp"
#include "discd/protocol.hpp"
#include "doctest.h"

using namespace discd;

namespace {

// One node holding three sentences over two atoms with unconditional
// probabilities 1/4, 3/4, and 1/2.
dataset::Dataset quarter_dataset() {
  dataset::Dataset ds;
  ds.name = "quarter";
  ds.signature.entities = {"a", "b"};
  ds.signature.predicates = {{"P", 1}};
  ds.atoms = std::make_shared<const ground::AtomIndex>(ds.signature);
  auto add = [&](const std::string& id, const std::string& text) {
    ds.story.push_back({id, fol::parse(text, ds.signature)});
  };
  add("m1", "P(a) & P(b)");
  add("m2", "P(a) | P(b)");
  add("m3", "P(a)");
  ds.node_assignment[0] = {"m1", "m2", "m3"};
  ds.hypotheses.schemas = {fol::parse_open("P(x)", ds.signature),
                           fol::parse_open("~P(x)", ds.signature)};
  ds.hypotheses.ground_truth = {{"a", 0}};
  ds.meta_json = "{}";
  ds.prepare();
  ds.validate();
  return ds;
}

// Two atoms P(a), Q(a); the node has sent s0 already, so scoring runs
// against a nonempty exchanged context.
dataset::Dataset tiebreak_dataset() {
  dataset::Dataset ds;
  ds.name = "ties";
  ds.signature.entities = {"a"};
  ds.signature.predicates = {{"P", 1}, {"Q", 1}};
  ds.atoms = std::make_shared<const ground::AtomIndex>(ds.signature);
  auto add = [&](const std::string& id, const std::string& text) {
    ds.story.push_back({id, fol::parse(text, ds.signature)});
  };
  add("s0", "P(a)");
  add("u1", "Q(a)");
  add("u2", "P(a) -> Q(a)");
  ds.node_assignment[0] = {"s0", "u1", "u2"};
  ds.hypotheses.schemas = {fol::parse_open("P(x)", ds.signature),
                           fol::parse_open("~P(x)", ds.signature)};
  ds.hypotheses.ground_truth = {{"a", 0}};
  ds.meta_json = "{}";
  ds.prepare();
  ds.validate();
  return ds;
}

protocol::ProtocolConfig config(protocol::Scorer scorer,
                                int budget = 1) {
  protocol::ProtocolConfig cfg;
  cfg.scorer = scorer;
  cfg.budget = budget;
  return cfg;
}

}  // namespace

TEST_CASE("enum names round trip") {
  using namespace protocol;
  for (auto s : {Strategy::Discd, Strategy::Random})
    CHECK(strategy_from(to_string(s)) == s);
  for (auto s : {Scorer::MaxConfirmation, Scorer::MinJointProbability,
                 Scorer::LiteralCont1})
    CHECK(scorer_from(to_string(s)) == s);
  for (auto m : {SelectionMode::Greedy, SelectionMode::Exhaustive})
    CHECK(selection_mode_from(to_string(m)) == m);
  CHECK_THROWS_AS(strategy_from("zig"), ConfigError);
  CHECK_THROWS_AS(scorer_from(""), ConfigError);
  CHECK_THROWS_AS(selection_mode_from("all"), ConfigError);
}

TEST_CASE("config validation") {
  protocol::ProtocolConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.budget = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.rounds = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.bits_per_sentence = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.jobs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("uplink scoring before any exchange") {
  auto ds = quarter_dataset();
  std::mt19937_64 g(1);

  CHECK(ds.sentence_prob.at("m1") == count::Rational(1, 4));
  CHECK(ds.sentence_prob.at("m2") == count::Rational(3, 4));
  CHECK(ds.sentence_prob.at("m3") == count::Rational(1, 2));

  auto max_cfg = config(protocol::Scorer::MaxConfirmation);
  auto node = protocol::make_node(0, ds, max_cfg);
  auto picks = protocol::select_uplink(node, ds, max_cfg, g);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0].id == "m2");
  CHECK(*picks[0].score == count::Rational(3, 4));

  auto min_cfg = config(protocol::Scorer::MinJointProbability);
  picks = protocol::select_uplink(protocol::make_node(0, ds, min_cfg), ds,
                                  min_cfg, g);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0].id == "m1");

  // cont-per-sentence is 1 for every candidate at an empty context, so the
  // low-probability tie-break decides.
  auto lit_cfg = config(protocol::Scorer::LiteralCont1);
  picks = protocol::select_uplink(protocol::make_node(0, ds, lit_cfg), ds,
                                  lit_cfg, g);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0].id == "m1");
}

TEST_CASE("score ties fall back to content then id") {
  auto ds = tiebreak_dataset();
  auto cfg = config(protocol::Scorer::MaxConfirmation);
  std::mt19937_64 g(2);

  auto node = protocol::make_node(0, ds, cfg);
  node.sent.insert("s0");
  node.exchanged = node.exchanged.extended("s0", ds.formula("s0"));

  // score(u1) = score(u2) = 1/2 against P(a); u1 is less probable a priori.
  auto picks = protocol::select_uplink(node, ds, cfg, g);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0].id == "u1");
  CHECK(*picks[0].score == count::Rational(1, 2));
}

TEST_CASE("identity-based exclusion of candidates") {
  auto ds = quarter_dataset();
  auto cfg = config(protocol::Scorer::MaxConfirmation);
  std::mt19937_64 g(3);
  auto node = protocol::make_node(0, ds, cfg);

  // Receiving a structural duplicate under a foreign id does not remove
  // the local copy from the candidate pool.
  protocol::Message dup{-1, "b9", ds.formula("m2")};
  protocol::node_update(node, {dup}, ds, cfg);
  CHECK(node.received.count("b9"));
  auto picks = protocol::select_uplink(node, ds, cfg, g);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0].id == "m2");
}

TEST_CASE("greedy equals exhaustive at unit budget") {
  dataset::GeneratorParams params;
  params.seed = 19;
  auto ds = dataset::generate(params);
  std::mt19937_64 g(4);
  for (auto scorer : {protocol::Scorer::MaxConfirmation,
                      protocol::Scorer::MinJointProbability,
                      protocol::Scorer::LiteralCont1}) {
    auto greedy = config(scorer);
    auto exhaustive = config(scorer);
    exhaustive.selection = protocol::SelectionMode::Exhaustive;
    for (int node_id = 0; node_id < params.n_nodes; ++node_id) {
      auto node = protocol::make_node(node_id, ds, greedy);
      auto a = protocol::select_uplink(node, ds, greedy, g);
      auto b = protocol::select_uplink(node, ds, exhaustive, g);
      REQUIRE(a.size() == 1);
      REQUIRE(b.size() == 1);
      CHECK(a[0].id == b[0].id);
    }
  }
}

TEST_CASE("exhaustive selection refuses oversized subset spaces") {
  dataset::Dataset ds;
  ds.name = "wide";
  ds.signature.entities = {"a", "b", "c"};
  ds.signature.predicates.clear();
  for (char c = 'A'; c <= 'H'; ++c)
    ds.signature.predicates.push_back({std::string(1, c), 1});
  ds.atoms = std::make_shared<const ground::AtomIndex>(ds.signature);
  int i = 0;
  for (const auto& p : ds.signature.predicates)
    for (const auto& e : ds.signature.entities) {
      std::string id = "f" + std::to_string(i < 10 ? 0 : i / 10) +
                       std::to_string(i % 10);
      ds.story.push_back(
          {id, fol::parse(p.name + "(" + e + ")", ds.signature)});
      ds.node_assignment[0].push_back(id);
      ++i;
    }
  ds.hypotheses.schemas = {fol::parse_open("A(x)", ds.signature),
                           fol::parse_open("~A(x)", ds.signature)};
  ds.hypotheses.ground_truth = {{"a", 0}};
  ds.meta_json = "{}";
  ds.prepare();

  auto cfg = config(protocol::Scorer::MaxConfirmation, 12);
  cfg.selection = protocol::SelectionMode::Exhaustive;
  std::mt19937_64 g(5);
  auto node = protocol::make_node(0, ds, cfg);
  CHECK_THROWS_AS(protocol::select_uplink(node, ds, cfg, g),
                  ResourceLimitError);
}

TEST_CASE("random uplink draws without replacement") {
  auto ds = quarter_dataset();
  auto cfg = config(protocol::Scorer::MaxConfirmation, 2);
  cfg.strategy = protocol::Strategy::Random;
  std::mt19937_64 g(6);
  auto node = protocol::make_node(0, ds, cfg);
  auto picks = protocol::select_uplink(node, ds, cfg, g);
  REQUIRE(picks.size() == 2);
  CHECK(picks[0].id != picks[1].id);
  CHECK_FALSE(picks[0].score.has_value());

  // Budget beyond the pool returns everything.
  cfg.budget = 9;
  picks = protocol::select_uplink(node, ds, cfg, g);
  CHECK(picks.size() == 3);
}

TEST_CASE("server deduplicates structurally equal sentences") {
  auto ds = quarter_dataset();
  auto cfg = config(protocol::Scorer::MaxConfirmation);
  auto server = protocol::make_server(ds);

  protocol::Message first{0, "m3", ds.formula("m3")};
  protocol::Message same{1, "other", ds.formula("m3")};
  protocol::server_update(server, {first, same}, ds, cfg, 1);
  CHECK(server.pool.size() == 1);
  CHECK(server.pool[0].id == "m3");
  CHECK(server.pool[0].from_node == 0);

  protocol::Message fresh{1, "m1", ds.formula("m1")};
  protocol::server_update(server, {fresh}, ds, cfg, 2);
  CHECK(server.pool.size() == 2);
}

TEST_CASE("inconsistent aggregate halts the server") {
  auto ds = tiebreak_dataset();
  auto cfg = config(protocol::Scorer::MaxConfirmation);
  auto server = protocol::make_server(ds);
  protocol::Message yes{0, "s0", ds.formula("s0")};
  protocol::server_update(server, {yes}, ds, cfg, 1);
  protocol::Message no{1, "x0", fol::parse("~P(a)", ds.signature)};
  CHECK_THROWS_AS(protocol::server_update(server, {no}, ds, cfg, 2),
                  InconsistencyError);
}

TEST_CASE("downlink ranks the pool by content") {
  auto ds = quarter_dataset();
  auto cfg = config(protocol::Scorer::MaxConfirmation);
  std::mt19937_64 g(7);
  auto server = protocol::make_server(ds);
  protocol::server_update(server,
                          {{0, "m2", ds.formula("m2")},
                           {0, "m3", ds.formula("m3")},
                           {0, "m1", ds.formula("m1")}},
                          ds, cfg, 1);

  // Every candidate is entailed by the pool conjunction, so the scores tie
  // at 1 and the lowest unconditional probability is broadcast first.
  auto picks = protocol::select_downlink(server, ds, cfg, g);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0].id == "m1");
  CHECK(*picks[0].score == 1);

  server.broadcast_history.insert("m1");
  picks = protocol::select_downlink(server, ds, cfg, g);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0].id == "m3");

  auto wide = cfg;
  wide.budget = 9;
  picks = protocol::select_downlink(server, ds, wide, g);
  CHECK(picks.size() == 2);  // m1 already broadcast
}

TEST_CASE("node update absorbs broadcasts into both contexts") {
  auto ds = quarter_dataset();
  auto cfg = config(protocol::Scorer::MaxConfirmation);
  auto node = protocol::make_node(0, ds, cfg);
  auto before = node.knowledge.models();

  protocol::Message extra{-1, "z1", fol::parse("~P(a)", ds.signature)};
  // ~P(a) contradicts the node's pool (m1 entails P(a)).
  CHECK_THROWS_AS(protocol::node_update(node, {extra}, ds, cfg),
                  InconsistencyError);

  auto other = protocol::make_node(0, ds, cfg);
  protocol::Message held{-1, "m3", ds.formula("m3")};
  protocol::node_update(other, {held}, ds, cfg);
  CHECK(other.received.count("m3"));
  CHECK(other.knowledge.models() == before);  // absorbed, nothing new
  CHECK(other.exchanged.evidence().size() == 1);
}

TEST_CASE("bit accounting is linear and exact") {
  protocol::ProtocolConfig cfg;
  CHECK(protocol::bits_cost(0, cfg) == 0.0);
  CHECK(protocol::bits_cost(1, cfg) == 23.665);
  CHECK(protocol::bits_cost(40, cfg) == 40 * 23.665);
  CHECK(protocol::bits_cost(40, cfg) == doctest::Approx(946.6).epsilon(1e-9));
  cfg.bits_per_sentence = 2.0;
  CHECK(protocol::bits_cost(7, cfg) == 14.0);
}

TEST_CASE("zero rounds yields only the baseline record") {
  dataset::GeneratorParams params;
  params.seed = 19;
  auto ds = dataset::generate(params);
  protocol::ProtocolConfig cfg;
  cfg.rounds = 0;
  auto log = protocol::run(ds, cfg);
  REQUIRE(log.rounds.size() == 1);
  CHECK(log.rounds[0].round == 0);
  CHECK(log.rounds[0].uplinks.empty());
  CHECK(log.rounds[0].downlink.empty());
  for (const auto& [node, total] : log.rounds[0].sent_total)
    CHECK(total == 0);
}

TEST_CASE("runs are deterministic byte for byte") {
  dataset::GeneratorParams params;
  params.seed = 5;
  auto ds = dataset::generate(params);

  protocol::ProtocolConfig cfg;
  cfg.rounds = 6;
  cfg.seed = 42;
  cfg.scorer = protocol::Scorer::MinJointProbability;
  auto a = protocol::run(ds, cfg);
  auto b = protocol::run(ds, cfg);
  CHECK(a.to_jsonl() == b.to_jsonl());

  cfg.strategy = protocol::Strategy::Random;
  auto ra = protocol::run(ds, cfg);
  auto rb = protocol::run(ds, cfg);
  CHECK(ra.to_jsonl() == rb.to_jsonl());
  CHECK(ra.to_jsonl() != a.to_jsonl());
}

TEST_CASE("experiment log aggregates match the records") {
  dataset::GeneratorParams params;
  params.seed = 0;
  auto ds = dataset::generate(params);
  protocol::ProtocolConfig cfg;
  cfg.rounds = 20;
  cfg.scorer = protocol::Scorer::MinJointProbability;
  auto log = protocol::run(ds, cfg);

  auto means = log.mean_success();
  REQUIRE(means.size() == log.rounds.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    count::Rational total(0);
    for (const auto& [node, s] : log.rounds[i].success) total += s;
    total /= count::Rational(static_cast<long>(log.rounds[i].success.size()));
    total.canonicalize();
    CHECK(means[i] == total);
  }

  count::Rational half(1, 2);
  auto cost = log.cost_at(half);
  std::size_t crossing = means.size();
  for (std::size_t i = 0; i < means.size(); ++i)
    if (means[i] >= half) {
      crossing = i;
      break;
    }
  if (crossing == means.size()) {
    CHECK_FALSE(cost.has_value());
  } else {
    REQUIRE(cost.has_value());
    CHECK(*cost == protocol::bits_cost(
                       cfg.budget * log.rounds[crossing].round, cfg));
  }
}

TEST_CASE("csv writers emit one row per node and round") {
  dataset::GeneratorParams params;
  params.seed = 19;
  auto ds = dataset::generate(params);
  protocol::ProtocolConfig cfg;
  cfg.rounds = 3;
  auto log = protocol::run(ds, cfg);

  std::ostringstream curves;
  protocol::write_curves_csv({log}, curves);
  std::istringstream in(curves.str());
  std::string line;
  int rows = 0;
  REQUIRE(std::getline(in, line));
  CHECK(line == "round,strategy,B,node,bits,success_rate");
  while (std::getline(in, line)) ++rows;
  CHECK(rows == (cfg.rounds + 1) * params.n_nodes);

  std::ostringstream costs;
  protocol::write_costs_csv({log}, {40, 75}, costs);
  std::istringstream cin(costs.str());
  REQUIRE(std::getline(cin, line));
  CHECK(line == "threshold_pct,strategy,B,bits");
  rows = 0;
  while (std::getline(cin, line)) ++rows;
  CHECK(rows == 2);
}
