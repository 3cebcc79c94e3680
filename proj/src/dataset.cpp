#include "discd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "discd/rng.hpp"
#include "json.hpp"

namespace discd::dataset {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

int ceil_log2(int k) {
  int bits = 1;
  while ((1 << bits) < k) ++bits;
  return bits;
}

}  // namespace

void GeneratorParams::validate() const {
  if (n_nodes < 1) throw DataError("generator: n_nodes must be >= 1");
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw DataError("generator: overlap must lie in [0, 1)");
  if (n_nodes == 1 && overlap != 0.0)
    throw DataError("generator: overlap needs at least two nodes");
  if (n_hypotheses < 2 || n_hypotheses > 256)
    throw DataError("generator: n_hypotheses must lie in [2, 256]");
  if (n_entities < 2) throw DataError("generator: need at least two entities");
  int tracked = n_tracked < 0 ? n_entities : n_tracked;
  if (tracked < 1 || tracked > n_entities)
    throw DataError("generator: n_tracked out of range");
  if (n_features < 1) throw DataError("generator: need at least one feature");
  if (n_relations < 1)
    throw DataError("generator: need at least one relation");
  if (!(rule_fraction >= 0.0 && rule_fraction <= 1.0))
    throw DataError("generator: rule_fraction must lie in [0, 1]");
  if (min_isolated_failures < 0 || min_isolated_failures > tracked)
    throw DataError("generator: min_isolated_failures out of range");
  if (max_attempts < 1) throw DataError("generator: max_attempts must be >= 1");

  int bits = ceil_log2(n_hypotheses);
  long atoms = static_cast<long>(n_entities) * (bits + n_features) +
               static_cast<long>(n_relations) * n_entities * n_entities;
  if (atoms > 64)
    throw DataError("generator: " + std::to_string(atoms) +
                    " ground atoms exceed the 64-atom world limit");
  if (n_sentences < tracked * bits)
    throw DataError("generator: n_sentences too small to pin " +
                    std::to_string(tracked * bits) + " class bits");
  if (n_sentences < n_nodes)
    throw DataError("generator: fewer sentences than nodes");
}

const fol::Formula& Dataset::formula(const fol::SentenceId& id) const {
  for (const auto& s : story)
    if (s.id == id) return s.formula;
  throw DataError("dataset: unknown sentence id '" + id + "'");
}

void Dataset::prepare(const count::CounterConfig& cfg) {
  signature.validate();
  atoms = std::make_shared<ground::AtomIndex>(signature);
  sentence_cnf.clear();
  sentence_prob.clear();
  count::Count denom = 1;
  denom <<= atoms->n_atoms();
  for (const auto& s : story) {
    ground::GroundProblem cnf = to_cnf(ground::ground(s.formula, *atoms), atoms);
    count::Count models = count_models(cnf, cfg);
    count::Rational p(models, denom);
    p.canonicalize();
    sentence_cnf.emplace(s.id, std::move(cnf));
    sentence_prob.emplace(s.id, std::move(p));
  }
}

void Dataset::validate(const count::CounterConfig& cfg) const {
  signature.validate();
  if (!prepared()) throw DataError("dataset: validate before prepare");
  if (story.empty()) throw DataError("dataset: empty story");

  std::set<fol::SentenceId> ids;
  for (const auto& s : story)
    if (!ids.insert(s.id).second)
      throw DataError("dataset: duplicate sentence id '" + s.id + "'");

  if (node_assignment.empty()) throw DataError("dataset: no nodes");
  std::set<fol::SentenceId> assigned;
  int expect = 0;
  for (const auto& [node, share] : node_assignment) {
    if (node != expect++)
      throw DataError("dataset: node ids must be contiguous from 0");
    if (share.empty())
      throw DataError("dataset: node " + std::to_string(node) +
                      " has an empty share");
    std::set<fol::SentenceId> local;
    for (const auto& id : share) {
      if (!ids.count(id))
        throw DataError("dataset: node " + std::to_string(node) +
                        " references unknown sentence '" + id + "'");
      if (!local.insert(id).second)
        throw DataError("dataset: node " + std::to_string(node) +
                        " lists sentence '" + id + "' twice");
      assigned.insert(id);
    }
  }
  if (assigned.size() != ids.size())
    throw DataError("dataset: " +
                    std::to_string(ids.size() - assigned.size()) +
                    " sentence(s) assigned to no node");

  hypotheses.validate(signature);

  // Consistency of the full story and of every node share, checked with
  // the model counter. build() throws InconsistencyError on zero models.
  std::vector<std::pair<fol::SentenceId, fol::Formula>> all;
  all.reserve(story.size());
  for (const auto& s : story) all.emplace_back(s.id, s.formula);
  inductive::KnowledgeState::build(atoms, all, cfg);
  for (const auto& [node, share] : node_assignment) {
    std::vector<std::pair<fol::SentenceId, fol::Formula>> local;
    local.reserve(share.size());
    for (const auto& id : share) local.emplace_back(id, formula(id));
    inductive::KnowledgeState::build(atoms, local, cfg);
  }
}

std::map<int, std::vector<fol::SentenceId>> split(
    const std::vector<fol::SentenceId>& ids, int v, double overlap,
    std::uint64_t seed) {
  long n = static_cast<long>(ids.size());
  if (n == 0) throw DataError("split: no sentences");
  if (v < 1) throw DataError("split: need at least one node");
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw DataError("split: overlap must lie in [0, 1)");
  {
    std::set<fol::SentenceId> uniq(ids.begin(), ids.end());
    if (static_cast<long>(uniq.size()) != n)
      throw DataError("split: duplicate sentence ids");
  }
  if (v == 1) {
    if (overlap != 0.0)
      throw DataError("split: overlap needs at least two nodes");
    std::map<int, std::vector<fol::SentenceId>> out;
    out[0] = ids;
    std::sort(out[0].begin(), out[0].end());
    return out;
  }
  if (n < v) throw DataError("split: fewer sentences than nodes");

  // Shares must cover all n sentences, stay equal up to 1, and contain
  // round(overlap * share) sentences that also appear elsewhere. That is
  // only possible once shared sentences occupy slots in several shares, so
  // search for the smallest total duplication d that makes the rounding
  // rule arithmetic work out.
  long dup = -1;
  std::vector<long> sizes(v), quota(v);
  long n_shared_slots = 0, n_shared_distinct = 0;
  for (long d = 0; d <= n && dup < 0; ++d) {
    long slots = n + d;
    for (int j = 0; j < v; ++j)
      sizes[j] = slots / v + (j < slots % v ? 1 : 0);
    long t = 0;
    for (int j = 0; j < v; ++j) {
      quota[j] = std::min(std::lround(overlap * sizes[j]), sizes[j]);
      t += quota[j];
    }
    long distinct = t - d;
    bool ok = t == 0 ? d == 0
                     : distinct >= 1 && 2 * distinct <= t &&
                           t <= static_cast<long>(v) * distinct &&
                           distinct <= n;
    if (ok) {
      dup = d;
      n_shared_slots = t;
      n_shared_distinct = distinct;
    }
  }
  if (dup < 0)
    throw DataError("split: no feasible assignment for overlap " +
                    std::to_string(overlap));

  std::mt19937_64 g(seed);
  std::vector<fol::SentenceId> order = ids;
  rng::shuffle(order, g);

  // The first n_shared_distinct shuffled sentences are shared; give each a
  // multiplicity in [2, v] so the multiplicities sum to the slot total.
  std::vector<long> mult(n_shared_distinct, 2);
  long leftover = n_shared_slots - 2 * n_shared_distinct;
  for (long i = 0; leftover > 0; i = (i + 1) % n_shared_distinct)
    if (mult[i] < v) {
      ++mult[i];
      --leftover;
    }

  std::map<int, std::vector<fol::SentenceId>> out;
  for (int j = 0; j < v; ++j) out[j];

  // Place shared sentences, widest multiplicity first, always into the
  // nodes with the most shared capacity left (Gale-Ryser style; keeps the
  // capacities feasible throughout).
  std::vector<long> cap = quota;
  std::vector<long> by_mult(n_shared_distinct);
  std::iota(by_mult.begin(), by_mult.end(), 0);
  std::stable_sort(by_mult.begin(), by_mult.end(),
                   [&](long a, long b) { return mult[a] > mult[b]; });
  std::vector<int> nodes(v);
  for (long i : by_mult) {
    std::iota(nodes.begin(), nodes.end(), 0);
    std::stable_sort(nodes.begin(), nodes.end(),
                     [&](int a, int b) { return cap[a] > cap[b]; });
    for (long m = 0; m < mult[i]; ++m) {
      int j = nodes[m];
      if (cap[j] <= 0) throw DataError("split: internal quota exhaustion");
      out[j].push_back(order[i]);
      --cap[j];
    }
  }

  // Deal the remaining sentences as unique fills.
  long pos = n_shared_distinct;
  for (int j = 0; j < v; ++j) {
    long unique = sizes[j] - quota[j];
    for (long u = 0; u < unique; ++u) out[j].push_back(order[pos++]);
  }
  if (pos != n) throw DataError("split: internal fill mismatch");

  for (auto& [j, share] : out) std::sort(share.begin(), share.end());
  return out;
}

// --- on-disk format ----------------------------------------------------------

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("dataset: cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError("dataset: " + path.filename().string() + ": " + e.what());
  }
}

// "id: formula" lines; '#' comments and blank lines ignored.
std::vector<std::pair<std::string, std::string>> read_folt(
    const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos)
      throw DataError("dataset: " + path.filename().string() + " line " +
                      std::to_string(lineno) + ": expected 'id: formula'");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    std::string id = trim(line.substr(0, colon));
    std::string body = trim(line.substr(colon + 1));
    if (id.empty() || body.empty())
      throw DataError("dataset: " + path.filename().string() + " line " +
                      std::to_string(lineno) + ": expected 'id: formula'");
    out.emplace_back(std::move(id), std::move(body));
  }
  return out;
}

}  // namespace

fol::Signature read_signature(const std::filesystem::path& path) {
  json sig = parse_json(path);
  fol::Signature out;
  try {
    for (const auto& e : sig.at("entities"))
      out.entities.push_back(e.get<std::string>());
    for (const auto& p : sig.at("predicates"))
      out.predicates.push_back(
          {p.at("name").get<std::string>(), p.at("arity").get<int>()});
  } catch (const json::exception& e) {
    throw DataError("dataset: " + path.filename().string() + ": " + e.what());
  }
  out.validate();
  return out;
}

Dataset load(const std::filesystem::path& dir,
             const count::CounterConfig& cfg) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("dataset: " + dir.string() + " is not a directory");

  Dataset ds;
  ds.signature = read_signature(dir / "signature.json");

  std::map<fol::SentenceId, fol::Formula> sentences;
  for (const auto& [id, body] : read_folt(dir / "story.folt")) {
    try {
      auto [it, fresh] = sentences.emplace(id, parse(body, ds.signature));
      if (!fresh)
        throw DataError("dataset: story.folt: duplicate id '" + id + "'");
    } catch (const ParseError& e) {
      throw DataError("dataset: story.folt sentence '" + id +
                      "': " + e.what());
    }
  }
  for (const auto& [id, f] : sentences) ds.story.push_back({id, f});

  json nodes = parse_json(dir / "nodes.json");
  if (!nodes.is_object())
    throw DataError("dataset: nodes.json must be an object");
  for (const auto& [key, arr] : nodes.items()) {
    int node;
    try {
      node = std::stoi(key);
    } catch (const std::exception&) {
      throw DataError("dataset: nodes.json: bad node id '" + key + "'");
    }
    std::vector<fol::SentenceId> share;
    if (!arr.is_array())
      throw DataError("dataset: nodes.json: node '" + key +
                      "' is not an id list");
    for (const auto& id : arr) share.push_back(id.get<std::string>());
    std::sort(share.begin(), share.end());
    if (!ds.node_assignment.emplace(node, std::move(share)).second)
      throw DataError("dataset: nodes.json: duplicate node '" + key + "'");
  }

  std::map<int, fol::Formula> schemas;
  for (const auto& [idx_text, body] : read_folt(dir / "hypotheses.folt")) {
    int idx;
    try {
      idx = std::stoi(idx_text);
    } catch (const std::exception&) {
      throw DataError("dataset: hypotheses.folt: bad index '" + idx_text +
                      "'");
    }
    try {
      if (!schemas.emplace(idx, parse_open(body, ds.signature)).second)
        throw DataError("dataset: hypotheses.folt: duplicate index " +
                        idx_text);
    } catch (const ParseError& e) {
      throw DataError("dataset: hypotheses.folt schema " + idx_text + ": " +
                      e.what());
    }
  }
  int expect = 0;
  for (const auto& [idx, schema] : schemas) {
    if (idx != expect++)
      throw DataError("dataset: hypotheses.folt: indices must be contiguous "
                      "from 0");
    ds.hypotheses.schemas.push_back(schema);
  }

  json truth = parse_json(dir / "truth.json");
  if (!truth.is_object())
    throw DataError("dataset: truth.json must be an object");
  for (const auto& [entity, idx] : truth.items())
    ds.hypotheses.ground_truth[entity] = idx.get<int>();

  ds.meta_json = read_file(dir / "meta.json");
  json meta = parse_json(dir / "meta.json");
  if (meta.is_object() && meta.contains("name") && meta["name"].is_string())
    ds.name = meta["name"].get<std::string>();
  else
    ds.name = dir.filename().string();

  ds.prepare(cfg);
  ds.validate(cfg);
  return ds;
}

void save(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("dataset: cannot create " + dir.string());

  auto write = [&dir](const std::string& file, const std::string& text) {
    std::ofstream out(dir / file, std::ios::binary);
    out << text;
    if (!out) throw DataError("dataset: cannot write " + file);
  };

  ordered_json sig;
  sig["entities"] = ds.signature.entities;
  sig["predicates"] = ordered_json::array();
  for (const auto& p : ds.signature.predicates)
    sig["predicates"].push_back({{"name", p.name}, {"arity", p.arity}});
  write("signature.json", sig.dump(2) + "\n");

  std::string story;
  for (const auto& s : ds.story)
    story += s.id + ": " + s.formula.render() + "\n";
  write("story.folt", story);

  ordered_json nodes;
  for (const auto& [node, share] : ds.node_assignment)
    nodes[std::to_string(node)] = share;
  write("nodes.json", nodes.dump(2) + "\n");

  std::string hyp;
  for (std::size_t i = 0; i < ds.hypotheses.schemas.size(); ++i)
    hyp += std::to_string(i) + ": " + ds.hypotheses.schemas[i].render() + "\n";
  write("hypotheses.folt", hyp);

  ordered_json truth;
  for (const auto& [entity, idx] : ds.hypotheses.ground_truth)
    truth[entity] = idx;
  write("truth.json", truth.dump(2) + "\n");

  std::string meta = ds.meta_json;
  if (meta.empty()) meta = "{}\n";
  if (meta.back() != '\n') meta += '\n';
  write("meta.json", meta);
}

// --- generation --------------------------------------------------------------

namespace {

struct RetryAttempt {};  // verification failed; resample

fol::Formula sign_lit(fol::Formula atom, bool positive) {
  return positive ? atom : fol::Formula::negation(std::move(atom));
}

struct StoryBuilder {
  std::vector<fol::Formula> sentences;
  std::set<std::string> seen;

  bool add(const fol::Formula& f) {
    if (!seen.insert(f.render()).second) return false;
    sentences.push_back(f);
    return true;
  }
  long size() const { return static_cast<long>(sentences.size()); }
};

Dataset generate_once(const GeneratorParams& params, int attempt,
                      std::mt19937_64& g, const count::CounterConfig& cfg) {
  int k = params.n_hypotheses;
  int bits = ceil_log2(k);
  int tracked =
      params.n_tracked < 0 ? params.n_entities : params.n_tracked;

  fol::Signature sig;
  for (int e = 0; e < params.n_entities; ++e)
    sig.entities.push_back("e" + std::to_string(e));
  for (int j = 0; j < bits; ++j)
    sig.predicates.push_back({"C" + std::to_string(j), 1});
  for (int f = 0; f < params.n_features; ++f)
    sig.predicates.push_back({"F" + std::to_string(f), 1});
  for (int r = 0; r < params.n_relations; ++r)
    sig.predicates.push_back({"R" + std::to_string(r), 2});
  auto atoms = std::make_shared<ground::AtomIndex>(sig);
  int n_atoms = atoms->n_atoms();

  // Ground-truth world: random feature/relation structure, class bits set
  // from each entity's sampled hypothesis pattern.
  std::uint64_t world =
      n_atoms == 64 ? g() : g() & ((std::uint64_t{1} << n_atoms) - 1);
  std::vector<int> truth_of(params.n_entities);
  for (int e = 0; e < params.n_entities; ++e) {
    truth_of[e] = static_cast<int>(rng::below(g, k));
    for (int j = 0; j < bits; ++j) {
      std::uint64_t atom_bit = std::uint64_t{1} << atoms->atom_id(j, e);
      if ((truth_of[e] >> j) & 1)
        world |= atom_bit;
      else
        world &= ~atom_bit;
    }
  }

  auto world_has = [&](int atom) { return (world >> atom) & 1u; };

  std::string var = "x";
  while (sig.entity_index(var) >= 0) var += "0";
  fol::Term vx{fol::TermKind::Variable, var};
  auto entity_term = [&](int e) {
    return fol::Term{fol::TermKind::Entity, sig.entities[e]};
  };
  auto class_atom = [&](int j, fol::Term t) {
    return fol::Formula::atom("C" + std::to_string(j), {std::move(t)});
  };
  auto feature_atom = [&](int f, fol::Term t) {
    return fol::Formula::atom("F" + std::to_string(f), {std::move(t)});
  };
  auto relation_atom = [&](int r, fol::Term a, fol::Term b) {
    return fol::Formula::atom("R" + std::to_string(r),
                              {std::move(a), std::move(b)});
  };

  StoryBuilder story;

  // Pin every tracked entity's class bits: either a bare fact or a rule
  // whose premises (also emitted as facts) force the bit by modus ponens.
  // Rules must hold at every entity of the ground-truth world.
  for (int e = 0; e < tracked; ++e)
    for (int j = 0; j < bits; ++j) {
      bool delta = (truth_of[e] >> j) & 1;
      bool pinned = false;
      long pins_after = static_cast<long>(tracked) * bits - (e * bits + j) - 1;
      bool room = story.size() + 3 + pins_after <= params.n_sentences;
      if (room && rng::chance(g, params.rule_fraction)) {
        for (int tries = 0; tries < 12 && !pinned; ++tries) {
          int r = static_cast<int>(rng::below(g, params.n_relations));
          int u = static_cast<int>(rng::below(g, params.n_entities));
          bool outward = rng::chance(g, 0.5);  // R(u, x) vs R(x, u)
          bool with_feature = rng::chance(g, 0.5);
          int f = static_cast<int>(rng::below(g, params.n_features));

          int rel_offset = bits + params.n_features + r;
          auto rel_at = [&](int other) {
            return outward ? atoms->atom_id(rel_offset, u, other)
                           : atoms->atom_id(rel_offset, other, u);
          };
          if (!world_has(rel_at(e))) continue;
          if (with_feature && !world_has(atoms->atom_id(bits + f, e)))
            continue;

          fol::Formula premise =
              outward ? relation_atom(r, entity_term(u), vx)
                      : relation_atom(r, vx, entity_term(u));
          if (with_feature)
            premise = fol::Formula::conjunction(
                {std::move(premise), feature_atom(f, vx)});
          fol::Formula rule = fol::Formula::forall(
              var, fol::Formula::implies(std::move(premise),
                                         sign_lit(class_atom(j, vx), delta)));
          if (!eval(ground::ground(rule, *atoms), world)) continue;

          story.add(rule);
          story.add(outward
                        ? relation_atom(r, entity_term(u), entity_term(e))
                        : relation_atom(r, entity_term(e), entity_term(u)));
          if (with_feature) story.add(feature_atom(f, entity_term(e)));
          pinned = true;
        }
      }
      if (!pinned) {
        // Conjoin the class literal with a true feature or relation literal.
        // The pin stays true in the world and its two-atom conjunction ranks
        // ahead of every distractor tier under content-ordered selection.
        fol::Formula side = feature_atom(0, entity_term(0));
        int side_atom = atoms->atom_id(bits, 0);
        if (params.n_relations > 0 && rng::chance(g, 0.5)) {
          int r = static_cast<int>(rng::below(g, params.n_relations));
          int a = static_cast<int>(rng::below(g, params.n_entities));
          int b = static_cast<int>(rng::below(g, params.n_entities));
          side = relation_atom(r, entity_term(a), entity_term(b));
          side_atom = atoms->atom_id(bits + params.n_features + r, a, b);
        } else {
          int f = static_cast<int>(rng::below(g, params.n_features));
          int a = static_cast<int>(rng::below(g, params.n_entities));
          side = feature_atom(f, entity_term(a));
          side_atom = atoms->atom_id(bits + f, a);
        }
        story.add(fol::Formula::conjunction(
            {sign_lit(class_atom(j, entity_term(e)), delta),
             sign_lit(std::move(side), world_has(side_atom))}));
      }
    }
  if (story.size() > params.n_sentences) throw RetryAttempt{};

  // Pad with distractors over features and relations, all true in the
  // world so the story stays consistent and never disturbs the class bits.
  long stall = 0;
  while (story.size() < params.n_sentences) {
    if (++stall > 400 * params.n_sentences) throw RetryAttempt{};
    if (rng::chance(g, params.rule_fraction)) {
      int r = static_cast<int>(rng::below(g, params.n_relations));
      int u = static_cast<int>(rng::below(g, params.n_entities));
      int f = static_cast<int>(rng::below(g, params.n_features));
      bool rel_sign = rng::chance(g, 0.5);
      bool feat_sign = rng::chance(g, 0.5);
      fol::Formula rel = relation_atom(r, entity_term(u), vx);
      fol::Formula feat = feature_atom(f, vx);
      fol::Formula candidate =
          rng::chance(g, 0.5)
              ? fol::Formula::forall(
                    var,
                    fol::Formula::implies(sign_lit(rel, rel_sign),
                                          sign_lit(std::move(feat), feat_sign)))
              : fol::Formula::exists(
                    var, fol::Formula::conjunction(
                             {sign_lit(std::move(rel), rel_sign),
                              sign_lit(std::move(feat), feat_sign)}));
      if (eval(ground::ground(candidate, *atoms), world)) story.add(candidate);
    } else {
      int lo = params.n_entities * bits;  // first non-class atom
      int atom =
          lo + static_cast<int>(rng::below(g, n_atoms - lo));
      story.add(sign_lit(atoms->atom_formula(atom), world_has(atom)));
    }
  }

  rng::shuffle(story.sentences, g);

  int width = std::max<int>(
      2, static_cast<int>(std::to_string(params.n_sentences - 1).size()));
  Dataset ds;
  ds.signature = sig;
  std::vector<fol::SentenceId> ids;
  for (long i = 0; i < story.size(); ++i) {
    std::string num = std::to_string(i);
    fol::SentenceId id =
        "s" + std::string(width - num.size(), '0') + num;
    ds.story.push_back({id, story.sentences[i]});
    ids.push_back(std::move(id));
  }

  ds.node_assignment = split(ids, params.n_nodes, params.overlap, g());

  for (int i = 0; i < k; ++i) {
    std::vector<fol::Formula> lits;
    for (int j = 0; j < bits; ++j)
      lits.push_back(sign_lit(class_atom(j, vx), (i >> j) & 1));
    ds.hypotheses.schemas.push_back(
        fol::Formula::conjunction(std::move(lits)));
  }
  for (int e = 0; e < tracked; ++e)
    ds.hypotheses.ground_truth[sig.entities[e]] = truth_of[e];

  ds.name = "gen-" + std::to_string(params.seed);
  ordered_json meta;
  meta["name"] = ds.name;
  meta["attempt"] = attempt;
  ordered_json mp;
  mp["n_nodes"] = params.n_nodes;
  mp["n_sentences"] = params.n_sentences;
  mp["overlap"] = params.overlap;
  mp["n_hypotheses"] = params.n_hypotheses;
  mp["n_entities"] = params.n_entities;
  mp["n_tracked"] = tracked;
  mp["n_features"] = params.n_features;
  mp["n_relations"] = params.n_relations;
  mp["rule_fraction"] = params.rule_fraction;
  mp["min_isolated_failures"] = params.min_isolated_failures;
  mp["seed"] = params.seed;
  meta["params"] = mp;
  ds.meta_json = meta.dump(2) + "\n";

  ds.prepare(cfg);
  ds.validate(cfg);

  // Full story must classify every tracked entity correctly and without
  // ties; isolated nodes must each leave enough entities unresolved that
  // communication has something to win.
  std::vector<std::pair<fol::SentenceId, fol::Formula>> all;
  for (const auto& s : ds.story) all.emplace_back(s.id, s.formula);
  auto full = inductive::KnowledgeState::build(ds.atoms, all, cfg);
  for (const auto& [entity, want] : ds.hypotheses.ground_truth) {
    task::Deduction d = task::deduce(full, entity, ds.hypotheses, cfg);
    if (d.tie || d.index != want) throw RetryAttempt{};
  }
  for (const auto& [node, share] : ds.node_assignment) {
    std::vector<std::pair<fol::SentenceId, fol::Formula>> local;
    for (const auto& id : share) local.emplace_back(id, ds.formula(id));
    auto ks = inductive::KnowledgeState::build(ds.atoms, local, cfg);
    int failures = 0;
    for (const auto& [entity, want] : ds.hypotheses.ground_truth) {
      task::Deduction d = task::deduce(ks, entity, ds.hypotheses, cfg);
      if (d.tie || d.index != want) ++failures;
    }
    if (failures < params.min_isolated_failures) throw RetryAttempt{};
  }
  return ds;
}

}  // namespace

Dataset generate(const GeneratorParams& params,
                 const count::CounterConfig& cfg) {
  params.validate();
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    std::mt19937_64 g(params.seed +
                      0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(
                                                  attempt));
    try {
      return generate_once(params, attempt, g, cfg);
    } catch (const RetryAttempt&) {
      continue;
    }
  }
  throw DataError("generate: verification failed after " +
                  std::to_string(params.max_attempts) + " attempts");
}

}  // namespace discd::dataset
