#include "discd/protocol.hpp"

#include <algorithm>
#include <cstdio>

#include "discd/rng.hpp"
#include "discd/task.hpp"
#include "json.hpp"

namespace discd::protocol {

std::string to_string(Strategy s) {
  return s == Strategy::Discd ? "discd" : "random";
}

std::string to_string(Scorer s) {
  switch (s) {
    case Scorer::MaxConfirmation: return "max-confirmation";
    case Scorer::MinJointProbability: return "min-joint-probability";
    case Scorer::LiteralCont1: return "literal-cont1";
  }
  return "?";
}

std::string to_string(SelectionMode m) {
  return m == SelectionMode::Greedy ? "greedy" : "exhaustive";
}

Strategy strategy_from(const std::string& name) {
  if (name == "discd") return Strategy::Discd;
  if (name == "random") return Strategy::Random;
  throw ConfigError("unknown strategy '" + name + "'");
}

Scorer scorer_from(const std::string& name) {
  if (name == "max-confirmation") return Scorer::MaxConfirmation;
  if (name == "min-joint-probability") return Scorer::MinJointProbability;
  if (name == "literal-cont1") return Scorer::LiteralCont1;
  throw ConfigError("unknown scorer '" + name + "'");
}

SelectionMode selection_mode_from(const std::string& name) {
  if (name == "greedy") return SelectionMode::Greedy;
  if (name == "exhaustive") return SelectionMode::Exhaustive;
  throw ConfigError("unknown selection mode '" + name + "'");
}

void ProtocolConfig::validate() const {
  if (budget < 1) throw ConfigError("protocol: budget must be >= 1");
  if (rounds < 0) throw ConfigError("protocol: rounds must be >= 0");
  if (!(bits_per_sentence > 0))
    throw ConfigError("protocol: bits_per_sentence must be positive");
  if (jobs < 1) throw ConfigError("protocol: jobs must be >= 1");
}

double bits_cost(long sentence_count, const ProtocolConfig& cfg) {
  if (sentence_count < 0)
    throw ConfigError("protocol: negative sentence count");
  return cfg.bits_per_sentence * static_cast<double>(sentence_count);
}

namespace {

struct Candidate {
  fol::SentenceId id;
  const fol::Formula* formula;
  ground::GroundProblem cnf;
  count::Rational uncond;
};

ground::GroundProblem cnf_for(const dataset::Dataset& ds,
                              const fol::SentenceId& id,
                              const fol::Formula& f) {
  auto it = ds.sentence_cnf.find(id);
  if (it != ds.sentence_cnf.end()) return it->second;
  return to_cnf(ground::ground(f, *ds.atoms), ds.atoms);
}

count::Rational prob_of(const dataset::Dataset& ds, const fol::SentenceId& id,
                        const ground::GroundProblem& cnf,
                        const count::CounterConfig& counter) {
  auto it = ds.sentence_prob.find(id);
  if (it != ds.sentence_prob.end()) return it->second;
  count::Count denom = 1;
  denom <<= cnf.atoms->n_atoms();
  count::Rational p(count_models(cnf, counter), denom);
  p.canonicalize();
  return p;
}

count::Count joint_models(const inductive::KnowledgeState& h,
                          const fol::SentenceId& id, const fol::Formula& f,
                          const ground::GroundProblem& cnf,
                          const count::CounterConfig& counter) {
  if (h.holds_id(id) || h.holds_formula(f)) return h.models();
  return count_models(ground::GroundProblem::conjoin(h.cnf(), cnf), counter);
}

count::Rational score_of(Scorer scorer, const count::Count& joint,
                         const inductive::KnowledgeState& h,
                         const count::Rational& uncond, int n_atoms) {
  count::Rational s;
  switch (scorer) {
    case Scorer::MaxConfirmation:
      s = count::Rational(joint, h.models());
      break;
    case Scorer::MinJointProbability: {
      count::Count denom = 1;
      denom <<= n_atoms;
      s = count::Rational(joint, denom);
      break;
    }
    case Scorer::LiteralCont1: {
      if (uncond == 0) return count::Rational(0);
      count::Count denom = 1;
      denom <<= n_atoms;
      s = count::Rational(joint, denom) / uncond;
      break;
    }
  }
  s.canonicalize();
  return s;
}

bool improves(Scorer scorer, const count::Rational& a,
              const count::Rational& b) {
  return scorer == Scorer::MinJointProbability ? a < b : a > b;
}

std::vector<Pick> random_picks(const std::vector<Candidate>& cands,
                               int budget, std::mt19937_64& g) {
  std::vector<Pick> picks;
  long n = static_cast<long>(cands.size());
  if (n <= budget) {
    for (const auto& c : cands) picks.push_back({c.id, std::nullopt});
    return picks;
  }
  std::vector<long> order(n);
  for (long i = 0; i < n; ++i) order[i] = i;
  for (int b = 0; b < budget; ++b) {
    long j = b + static_cast<long>(rng::below(g, n - b));
    std::swap(order[b], order[j]);
    picks.push_back({cands[order[b]].id, std::nullopt});
  }
  return picks;
}

std::vector<Pick> greedy_select(const std::vector<Candidate>& cands,
                                const inductive::KnowledgeState& start,
                                const ProtocolConfig& cfg) {
  int n_atoms = start.atoms()->n_atoms();
  std::vector<const Candidate*> rest;
  for (const auto& c : cands) rest.push_back(&c);

  std::vector<Pick> picks;
  inductive::KnowledgeState h = start;
  while (static_cast<int>(picks.size()) < cfg.budget && !rest.empty()) {
    std::size_t best = 0;
    count::Rational best_score;
    count::Count best_joint;
    bool have = false;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      const Candidate& c = *rest[i];
      count::Count joint =
          joint_models(h, c.id, *c.formula, c.cnf, cfg.counter);
      count::Rational score =
          score_of(cfg.scorer, joint, h, c.uncond, n_atoms);
      bool take = !have || improves(cfg.scorer, score, best_score);
      if (!take && score == best_score) {
        const Candidate& b = *rest[best];
        take = c.uncond < b.uncond ||
               (c.uncond == b.uncond && c.id < b.id);
      }
      if (take) {
        best = i;
        best_score = score;
        best_joint = joint;
        have = true;
      }
    }
    const Candidate& chosen = *rest[best];
    picks.push_back({chosen.id, best_score});
    rest.erase(rest.begin() + static_cast<long>(best));
    if (static_cast<int>(picks.size()) < cfg.budget && !rest.empty() &&
        best_joint > 0)
      h = h.extended(chosen.id, *chosen.formula, chosen.cnf, cfg.counter);
  }
  return picks;
}

std::vector<Pick> exhaustive_select(const std::vector<Candidate>& cands,
                                    const inductive::KnowledgeState& start,
                                    const ProtocolConfig& cfg) {
  int n_atoms = start.atoms()->n_atoms();
  long n = static_cast<long>(cands.size());
  long b = std::min<long>(cfg.budget, n);

  double combos = 1;
  for (long i = 0; i < b; ++i) combos = combos * (n - i) / (i + 1);
  if (combos > 100000.0)
    throw ResourceLimitError(
        "protocol: exhaustive selection over " + std::to_string(n) +
        " candidates choose " + std::to_string(b) + " is too large");

  count::Count world = 1;
  world <<= n_atoms;

  std::vector<long> idx(b);
  for (long i = 0; i < b; ++i) idx[i] = i;
  std::vector<long> best_idx;
  count::Rational best_score, best_uncond;
  bool have = false;

  while (true) {
    ground::GroundProblem subset = cands[idx[0]].cnf;
    bool all_held = start.holds_id(cands[idx[0]].id) ||
                    start.holds_formula(*cands[idx[0]].formula);
    for (long i = 1; i < b; ++i) {
      subset = ground::GroundProblem::conjoin(subset, cands[idx[i]].cnf);
      all_held = all_held && (start.holds_id(cands[idx[i]].id) ||
                              start.holds_formula(*cands[idx[i]].formula));
    }
    count::Rational uncond;
    if (b == 1) {
      uncond = cands[idx[0]].uncond;
    } else {
      uncond = count::Rational(count_models(subset, cfg.counter), world);
      uncond.canonicalize();
    }
    count::Count joint =
        all_held ? start.models()
                 : count_models(
                       ground::GroundProblem::conjoin(start.cnf(), subset),
                       cfg.counter);
    count::Rational score =
        score_of(cfg.scorer, joint, start, uncond, n_atoms);

    bool take = !have || improves(cfg.scorer, score, best_score) ||
                (score == best_score && uncond < best_uncond);
    if (take) {
      best_idx = idx;
      best_score = score;
      best_uncond = uncond;
      have = true;
    }

    long i = b - 1;
    while (i >= 0 && idx[i] == n - b + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (long j = i + 1; j < b; ++j) idx[j] = idx[j - 1] + 1;
  }

  std::vector<Pick> picks;
  for (long i : best_idx) picks.push_back({cands[i].id, best_score});
  return picks;
}

std::vector<Pick> select(const std::vector<Candidate>& cands,
                         const inductive::KnowledgeState& context,
                         const ProtocolConfig& cfg, std::mt19937_64& g) {
  if (cands.empty()) return {};
  if (cfg.strategy == Strategy::Random)
    return random_picks(cands, cfg.budget, g);
  if (cfg.selection == SelectionMode::Exhaustive)
    return exhaustive_select(cands, context, cfg);
  return greedy_select(cands, context, cfg);
}

inductive::KnowledgeState context_extend(
    const inductive::KnowledgeState& ks, const fol::SentenceId& id,
    const fol::Formula& f, const dataset::Dataset& ds,
    const ProtocolConfig& cfg) {
  try {
    return ks.extended(id, f, cnf_for(ds, id, f), cfg.counter);
  } catch (const InconsistencyError&) {
    // A contradictory pick cannot be folded into the scoring context; the
    // context keeps its previous value.
    return ks;
  }
}

}  // namespace

NodeState make_node(int id, const dataset::Dataset& ds,
                    const ProtocolConfig& cfg) {
  auto it = ds.node_assignment.find(id);
  if (it == ds.node_assignment.end())
    throw DataError("protocol: dataset has no node " + std::to_string(id));
  auto ks = inductive::KnowledgeState::empty(ds.atoms);
  for (const auto& sid : it->second) {
    const fol::Formula& f = ds.formula(sid);
    ks = ks.extended(sid, f, cnf_for(ds, sid, f), cfg.counter);
  }
  return NodeState{id,
                   it->second,
                   {},
                   {},
                   std::move(ks),
                   inductive::KnowledgeState::empty(ds.atoms)};
}

ServerState make_server(const dataset::Dataset& ds) {
  return ServerState{{}, {}, inductive::KnowledgeState::empty(ds.atoms)};
}

std::vector<Pick> select_uplink(const NodeState& node,
                                const dataset::Dataset& ds,
                                const ProtocolConfig& cfg,
                                std::mt19937_64& g) {
  std::vector<Candidate> cands;
  for (const auto& id : node.pool) {
    if (node.sent.count(id) || node.received.count(id)) continue;
    const fol::Formula& f = ds.formula(id);
    ground::GroundProblem cnf = cnf_for(ds, id, f);
    count::Rational p = prob_of(ds, id, cnf, cfg.counter);
    cands.push_back({id, &f, std::move(cnf), std::move(p)});
  }
  return select(cands, node.exchanged, cfg, g);
}

void server_update(ServerState& server, const std::vector<Message>& msgs,
                   const dataset::Dataset& ds, const ProtocolConfig& cfg,
                   int round) {
  for (const auto& msg : msgs) {
    bool dup = false;
    for (const auto& entry : server.pool)
      if (entry.formula == msg.formula) {
        dup = true;
        break;
      }
    if (dup) continue;
    server.pool.push_back({msg.id, msg.formula, msg.node, round});
    server.knowledge = server.knowledge.extended(
        msg.id, msg.formula, cnf_for(ds, msg.id, msg.formula), cfg.counter);
  }
}

std::vector<Pick> select_downlink(const ServerState& server,
                                  const dataset::Dataset& ds,
                                  const ProtocolConfig& cfg,
                                  std::mt19937_64& g) {
  std::vector<Candidate> cands;
  for (const auto& entry : server.pool) {
    if (server.broadcast_history.count(entry.id)) continue;
    ground::GroundProblem cnf = cnf_for(ds, entry.id, entry.formula);
    count::Rational p = prob_of(ds, entry.id, cnf, cfg.counter);
    cands.push_back({entry.id, &entry.formula, std::move(cnf), std::move(p)});
  }
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  return select(cands, server.knowledge, cfg, g);
}

void node_update(NodeState& node, const std::vector<Message>& broadcast,
                 const dataset::Dataset& ds, const ProtocolConfig& cfg) {
  for (const auto& msg : broadcast) {
    node.received.insert(msg.id);
    node.knowledge = node.knowledge.extended(
        msg.id, msg.formula, cnf_for(ds, msg.id, msg.formula), cfg.counter);
    node.exchanged = node.exchanged.extended(
        msg.id, msg.formula, cnf_for(ds, msg.id, msg.formula), cfg.counter);
  }
}

ExperimentLog run(const dataset::Dataset& ds, const ProtocolConfig& cfg) {
  cfg.validate();
  if (!ds.prepared()) throw DataError("protocol: dataset not prepared");

  ExperimentLog log;
  log.dataset_name = ds.name;
  log.cfg = cfg;

  std::mt19937_64 g(cfg.seed);
  std::vector<NodeState> nodes;
  for (const auto& [nid, share] : ds.node_assignment)
    nodes.push_back(make_node(nid, ds, cfg));
  log.n_nodes = static_cast<int>(nodes.size());
  ServerState server = make_server(ds);

  std::map<int, std::map<std::size_t, task::Evaluation>> eval_cache;
  auto eval_node = [&](const NodeState& n) -> const task::Evaluation& {
    auto& cache = eval_cache[n.id];
    std::size_t key = n.knowledge.evidence().size();
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache
               .emplace(key,
                        task::evaluate(n.knowledge, ds.hypotheses,
                                       cfg.counter))
               .first;
    return it->second;
  };

  auto record_round = [&](int round, std::map<int, std::vector<Pick>> up,
                          std::vector<Pick> down) {
    RoundRecord rec;
    rec.round = round;
    rec.uplinks = std::move(up);
    rec.downlink = std::move(down);
    for (const auto& n : nodes) {
      rec.sent_total[n.id] = static_cast<long>(n.sent.size());
      const task::Evaluation& ev = eval_node(n);
      rec.success[n.id] = ev.success;
      rec.risk[n.id] = ev.risk;
      rec.node_models[n.id] = n.knowledge.models().get_str();
    }
    rec.server_models = server.knowledge.models().get_str();
    log.rounds.push_back(std::move(rec));
  };

  record_round(0, {}, {});

  std::vector<count::Count> prev(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    prev[i] = nodes[i].knowledge.models();
  count::Count prev_server = server.knowledge.models();

  for (int t = 1; t <= cfg.rounds; ++t) {
    // All nodes select against their round-start state.
    std::map<int, std::vector<Pick>> picks;
    for (const auto& n : nodes) picks[n.id] = select_uplink(n, ds, cfg, g);

    std::vector<Message> msgs;
    for (auto& n : nodes)
      for (const Pick& p : picks[n.id]) {
        if (!n.sent.insert(p.id).second)
          throw DataError("protocol: node " + std::to_string(n.id) +
                          " resent sentence " + p.id);
        const fol::Formula& f = ds.formula(p.id);
        msgs.push_back({n.id, p.id, f});
        n.exchanged = context_extend(n.exchanged, p.id, f, ds, cfg);
      }

    server_update(server, msgs, ds, cfg, t);

    std::vector<Pick> down = select_downlink(server, ds, cfg, g);
    std::vector<Message> bc;
    for (const Pick& p : down) {
      if (!server.broadcast_history.insert(p.id).second)
        throw DataError("protocol: server re-broadcast sentence " + p.id);
      for (const auto& entry : server.pool)
        if (entry.id == p.id) {
          bc.push_back({-1, p.id, entry.formula});
          break;
        }
    }
    for (auto& n : nodes) node_update(n, bc, ds, cfg);

    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].knowledge.models() > prev[i])
        throw DataError("protocol: node knowledge model count increased");
      prev[i] = nodes[i].knowledge.models();
    }
    if (server.knowledge.models() > prev_server)
      throw DataError("protocol: server knowledge model count increased");
    prev_server = server.knowledge.models();

    record_round(t, std::move(picks), std::move(down));
  }
  return log;
}

namespace {

nlohmann::ordered_json pick_json(const Pick& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  if (p.score) {
    j["score"] = p.score->get_str();
    j["value"] = p.score->get_d();
  } else {
    j["score"] = nullptr;
    j["value"] = nullptr;
  }
  return j;
}

}  // namespace

std::string ExperimentLog::to_jsonl() const {
  nlohmann::ordered_json meta;
  meta["type"] = "meta";
  meta["dataset"] = dataset_name;
  meta["strategy"] = to_string(cfg.strategy);
  meta["scorer"] = to_string(cfg.scorer);
  meta["selection"] = to_string(cfg.selection);
  meta["B"] = cfg.budget;
  meta["T"] = cfg.rounds;
  meta["seed"] = cfg.seed;
  meta["beta"] = cfg.bits_per_sentence;
  meta["nodes"] = n_nodes;

  std::string out = meta.dump() + "\n";
  for (const auto& rec : rounds) {
    nlohmann::ordered_json r;
    r["type"] = "round";
    r["round"] = rec.round;
    nlohmann::ordered_json up = nlohmann::ordered_json::object();
    for (const auto& [node, picks] : rec.uplinks) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& p : picks) arr.push_back(pick_json(p));
      up[std::to_string(node)] = arr;
    }
    r["uplinks"] = up;
    auto down = nlohmann::ordered_json::array();
    for (const auto& p : rec.downlink) down.push_back(pick_json(p));
    r["downlink"] = down;
    nlohmann::ordered_json sent = nlohmann::ordered_json::object();
    nlohmann::ordered_json bits = nlohmann::ordered_json::object();
    nlohmann::ordered_json succ = nlohmann::ordered_json::object();
    nlohmann::ordered_json risk = nlohmann::ordered_json::object();
    nlohmann::ordered_json models = nlohmann::ordered_json::object();
    for (const auto& [node, total] : rec.sent_total) {
      std::string key = std::to_string(node);
      sent[key] = total;
      bits[key] = bits_cost(total, cfg);
      nlohmann::ordered_json s;
      s["exact"] = rec.success.at(node).get_str();
      s["value"] = rec.success.at(node).get_d();
      succ[key] = s;
      risk[key] = rec.risk.at(node);
      models[key] = rec.node_models.at(node);
    }
    r["sent"] = sent;
    r["bits"] = bits;
    r["success"] = succ;
    r["risk"] = risk;
    r["models"] = models;
    r["server_models"] = rec.server_models;
    out += r.dump() + "\n";
  }
  return out;
}

std::vector<count::Rational> ExperimentLog::mean_success() const {
  std::vector<count::Rational> out;
  for (const auto& rec : rounds) {
    count::Rational sum(0);
    for (const auto& [node, s] : rec.success) sum += s;
    sum /= count::Rational(static_cast<long>(rec.success.size()));
    sum.canonicalize();
    out.push_back(sum);
  }
  return out;
}

std::optional<double> ExperimentLog::cost_at(
    const count::Rational& threshold) const {
  auto means = mean_success();
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    // Per-node uplink budget consumed by the crossing round: B sentences
    // per round at β bits each.
    if (means[i] >= threshold)
      return bits_cost(static_cast<long>(cfg.budget) * rounds[i].round, cfg);
  }
  return std::nullopt;
}

void write_curves_csv(const std::vector<ExperimentLog>& logs,
                      std::ostream& out) {
  out << "round,strategy,B,node,bits,success_rate\n";
  char buf[160];
  for (const auto& log : logs) {
    std::string strat = to_string(log.cfg.strategy);
    for (const auto& rec : log.rounds)
      for (const auto& [node, total] : rec.sent_total) {
        std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%.3f,%.6f\n", rec.round,
                      strat.c_str(), log.cfg.budget, node,
                      bits_cost(total, log.cfg),
                      rec.success.at(node).get_d());
        out << buf;
      }
  }
}

void write_costs_csv(const std::vector<ExperimentLog>& logs,
                     const std::vector<int>& thresholds_pct,
                     std::ostream& out) {
  out << "threshold_pct,strategy,B,bits\n";
  char buf[160];
  for (int pct : thresholds_pct)
    for (const auto& log : logs) {
      count::Rational threshold(pct, 100);
      threshold.canonicalize();
      auto cost = log.cost_at(threshold);
      if (cost)
        std::snprintf(buf, sizeof buf, "%d,%s,%d,%.3f\n", pct,
                      to_string(log.cfg.strategy).c_str(), log.cfg.budget,
                      *cost);
      else
        std::snprintf(buf, sizeof buf, "%d,%s,%d,NA\n", pct,
                      to_string(log.cfg.strategy).c_str(), log.cfg.budget);
      out << buf;
    }
}

}  // namespace discd::protocol
