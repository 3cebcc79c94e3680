#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "discd/count.hpp"
#include "discd/dataset.hpp"
#include "discd/hintikka.hpp"
#include "discd/protocol.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw discd::ConfigError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw discd::ConfigError("config file " + path + ": " + e.what());
  }
}

// Config files supply defaults: a key only applies when the matching flag
// was not given on the command line.
template <typename T>
void config_default(const json& conf, CLI::App* cmd, const std::string& flag,
                    const std::string& key, T& var) {
  if (conf.is_null() || cmd->count(flag) > 0 || !conf.contains(key)) return;
  try {
    var = conf.at(key).get<T>();
  } catch (const json::exception& e) {
    throw discd::ConfigError("config key '" + key + "': " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw discd::DataError("cannot write " + path.string());
}

struct RunArgs {
  std::string dataset_dir;
  bool gen_default = false;
  int budget = 1;
  int rounds = 40;
  std::string strategy = "discd";
  std::string scorer = "max-confirmation";
  std::string selection = "greedy";
  std::uint64_t seed = 0;
  double beta = 23.665;
  std::string out = "out";
  int jobs = 1;
  std::string config;
};

int cmd_run(const RunArgs& a) {
  if (a.gen_default != a.dataset_dir.empty())
    throw discd::ConfigError(
        "run: give either a dataset directory or --gen-default");
  if (a.strategy != "discd" && a.strategy != "random" && a.strategy != "both")
    throw discd::ConfigError("run: strategy must be discd, random or both");

  discd::count::CounterConfig counter;
  discd::dataset::Dataset ds;
  if (a.gen_default) {
    discd::dataset::GeneratorParams params;
    params.seed = a.seed;
    ds = discd::dataset::generate(params, counter);
  } else {
    ds = discd::dataset::load(a.dataset_dir, counter);
  }

  std::vector<discd::protocol::Strategy> strategies;
  if (a.strategy == "both")
    strategies = {discd::protocol::Strategy::Discd,
                  discd::protocol::Strategy::Random};
  else
    strategies = {discd::protocol::strategy_from(a.strategy)};

  std::vector<discd::protocol::ExperimentLog> logs;
  for (auto strat : strategies) {
    discd::protocol::ProtocolConfig cfg;
    cfg.strategy = strat;
    cfg.scorer = discd::protocol::scorer_from(a.scorer);
    cfg.selection = discd::protocol::selection_mode_from(a.selection);
    cfg.budget = a.budget;
    cfg.rounds = a.rounds;
    cfg.seed = a.seed;
    cfg.bits_per_sentence = a.beta;
    cfg.jobs = a.jobs;
    cfg.counter = counter;
    logs.push_back(discd::protocol::run(ds, cfg));
  }

  std::filesystem::path out(a.out);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw discd::DataError("cannot create " + out.string());

  std::string jsonl;
  for (const auto& log : logs) jsonl += log.to_jsonl();
  write_text(out / "log.jsonl", jsonl);

  std::ostringstream curves;
  discd::protocol::write_curves_csv(logs, curves);
  write_text(out / "curves.csv", curves.str());

  std::ostringstream costs;
  discd::protocol::write_costs_csv(logs, {40, 45, 50, 55, 60, 65, 70, 75},
                                   costs);
  write_text(out / "costs.csv", costs.str());

  ordered_json summary;
  summary["dataset"] = ds.name;
  summary["runs"] = static_cast<int>(logs.size());
  summary["out"] = out.string();
  std::cout << summary.dump() << "\n";
  return 0;
}

struct GenArgs {
  discd::dataset::GeneratorParams params;
  std::string out = "dataset";
  std::string config;
};

int cmd_gen(const GenArgs& a) {
  discd::count::CounterConfig counter;
  discd::dataset::Dataset ds = discd::dataset::generate(a.params, counter);
  discd::dataset::save(ds, a.out);

  ordered_json summary;
  summary["name"] = ds.name;
  summary["out"] = a.out;
  summary["sentences"] = static_cast<int>(ds.story.size());
  summary["nodes"] = static_cast<int>(ds.node_assignment.size());
  std::cout << summary.dump() << "\n";
  return 0;
}

struct CountArgs {
  std::string signature;
  std::string formulas;
  std::string dimacs;
  std::string config;
};

int cmd_count(const CountArgs& a) {
  discd::fol::Signature sig = discd::dataset::read_signature(a.signature);
  auto atoms = std::make_shared<discd::ground::AtomIndex>(sig);

  std::ifstream in(a.formulas);
  if (!in) throw discd::DataError("cannot read " + a.formulas);
  std::ostringstream ss;
  ss << in.rdbuf();

  // One formula per line, optionally prefixed "id:"; the count is over the
  // conjunction of all of them.
  std::vector<discd::fol::Formula> parts;
  std::string line;
  std::istringstream lines(ss.str());
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto colon = line.find(':');
    std::string body = colon == std::string::npos ? line
                                                  : line.substr(colon + 1);
    try {
      parts.push_back(discd::fol::parse(body, sig));
    } catch (const discd::ParseError& e) {
      throw discd::DataError(a.formulas + " line " + std::to_string(lineno) +
                             ": " + e.what());
    }
  }
  if (parts.empty()) throw discd::DataError(a.formulas + ": no formulas");
  discd::fol::Formula conj =
      parts.size() == 1 ? parts[0]
                        : discd::fol::Formula::conjunction(parts);

  discd::count::CounterConfig counter;
  discd::ground::GroundProblem cnf =
      to_cnf(ground(conj, *atoms), atoms);
  discd::count::Count models = count_models(cnf, counter);
  discd::count::Count total = 1;
  total <<= atoms->n_atoms();
  discd::count::Rational p(models, total);
  p.canonicalize();

  if (!a.dimacs.empty()) {
    std::ostringstream dimacs;
    write_dimacs(cnf, dimacs);
    write_text(a.dimacs, dimacs.str());
  }

  ordered_json out;
  out["atoms"] = atoms->n_atoms();
  out["count"] = models.get_str();
  out["probability"] = p.get_str();
  out["probability_value"] = p.get_d();
  std::cout << out.dump() << "\n";
  return 0;
}

struct PacArgs {
  int K = 0;
  double alpha = 0.0;
  long l = -1;
  double epsilon = -1.0;
  std::string config;
};

int cmd_pac_bound(const PacArgs& a) {
  if (a.K < 1) throw discd::ConfigError("pac-bound: K must be >= 1");
  if (a.alpha < 0) throw discd::ConfigError("pac-bound: alpha must be >= 0");
  bool have_l = a.l >= 0;
  bool have_eps = a.epsilon >= 0;
  if (have_l == have_eps)
    throw discd::ConfigError("pac-bound: give exactly one of --l, --epsilon");

  ordered_json out;
  out["K"] = a.K;
  out["alpha"] = a.alpha;
  if (have_l) {
    out["l"] = a.l;
    out["bound"] =
        discd::hintikka::pac_epsilon_bound(a.K, static_cast<double>(a.l),
                                           a.alpha);
  } else {
    if (!(a.epsilon > 0 && a.epsilon < 1))
      throw discd::ConfigError("pac-bound: epsilon must lie in (0, 1)");
    long l = discd::hintikka::min_samples(a.epsilon, a.K, a.alpha);
    out["epsilon"] = a.epsilon;
    out["min_l"] = l;
    out["bound"] = discd::hintikka::pac_epsilon_bound(
        a.K, static_cast<double>(l), a.alpha);
  }
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "discd: distributed hypothesis deduction over logical stories.\n"
      "Experiment outputs: log.jsonl (one JSON record per round),\n"
      "curves.csv (round,strategy,B,node,bits,success_rate),\n"
      "costs.csv (threshold_pct,strategy,B,bits: mean per-node uplink bits\n"
      "when mean success first reaches the threshold)."};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "simulate the round protocol");
  run->add_option("dataset", run_args.dataset_dir, "dataset directory");
  run->add_flag("--gen-default", run_args.gen_default,
                "generate the default dataset instead of loading one");
  run->add_option("--B", run_args.budget, "sentences per message");
  run->add_option("--T", run_args.rounds, "rounds");
  run->add_option("--strategy", run_args.strategy, "discd | random | both");
  run->add_option("--scorer", run_args.scorer,
                  "max-confirmation | min-joint-probability | literal-cont1");
  run->add_option("--selection-mode", run_args.selection,
                  "greedy | exhaustive");
  run->add_option("--seed", run_args.seed, "rng seed");
  run->add_option("--beta", run_args.beta, "bits per sentence");
  run->add_option("--out", run_args.out, "output directory");
  run->add_option("--jobs", run_args.jobs, "worker threads");
  run->add_option("--config", run_args.config, "JSON defaults file");

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a dataset");
  gen->add_option("--nodes", gen_args.params.n_nodes, "node count");
  gen->add_option("--sentences", gen_args.params.n_sentences, "story size");
  gen->add_option("--overlap", gen_args.params.overlap,
                  "shared fraction per node share");
  gen->add_option("--hypotheses", gen_args.params.n_hypotheses,
                  "hypothesis count");
  gen->add_option("--entities", gen_args.params.n_entities, "entity count");
  gen->add_option("--tracked", gen_args.params.n_tracked,
                  "tracked entities (-1: all)");
  gen->add_option("--features", gen_args.params.n_features,
                  "unary distractor predicates");
  gen->add_option("--relations", gen_args.params.n_relations,
                  "binary predicates");
  gen->add_option("--rule-fraction", gen_args.params.rule_fraction,
                  "quantified share of the story");
  gen->add_option("--min-isolated-failures",
                  gen_args.params.min_isolated_failures,
                  "required per-node failures before communication");
  gen->add_option("--max-attempts", gen_args.params.max_attempts,
                  "generation retries");
  gen->add_option("--seed", gen_args.params.seed, "rng seed");
  gen->add_option("--out", gen_args.out, "dataset directory");
  gen->add_option("--config", gen_args.config, "JSON defaults file");

  CountArgs count_args;
  CLI::App* count = app.add_subcommand("count", "count models of formulas");
  count->add_option("--signature", count_args.signature, "signature JSON")
      ->required();
  count->add_option("formulas", count_args.formulas,
                    "file with one formula per line")
      ->required();
  count->add_option("--dimacs", count_args.dimacs,
                    "also write the CNF in DIMACS format");
  count->add_option("--config", count_args.config, "JSON defaults file");

  PacArgs pac_args;
  CLI::App* pac =
      app.add_subcommand("pac-bound", "width-identification error bound");
  pac->add_option("--K", pac_args.K, "attributive constituent count")
      ->required();
  pac->add_option("--alpha", pac_args.alpha, "prior sample weight");
  pac->add_option("--l", pac_args.l, "evidence size");
  pac->add_option("--epsilon", pac_args.epsilon,
                  "target error: report the minimal l");
  pac->add_option("--config", pac_args.config, "JSON defaults file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      json conf;
      if (!run_args.config.empty()) conf = load_config(run_args.config);
      config_default(conf, run, "--B", "B", run_args.budget);
      config_default(conf, run, "--T", "T", run_args.rounds);
      config_default(conf, run, "--strategy", "strategy", run_args.strategy);
      config_default(conf, run, "--scorer", "scorer", run_args.scorer);
      config_default(conf, run, "--selection-mode", "selection_mode",
                     run_args.selection);
      config_default(conf, run, "--seed", "seed", run_args.seed);
      config_default(conf, run, "--beta", "beta", run_args.beta);
      config_default(conf, run, "--out", "out", run_args.out);
      config_default(conf, run, "--jobs", "jobs", run_args.jobs);
      return cmd_run(run_args);
    }
    if (gen->parsed()) {
      json conf;
      if (!gen_args.config.empty()) conf = load_config(gen_args.config);
      config_default(conf, gen, "--nodes", "nodes", gen_args.params.n_nodes);
      config_default(conf, gen, "--sentences", "sentences",
                     gen_args.params.n_sentences);
      config_default(conf, gen, "--overlap", "overlap",
                     gen_args.params.overlap);
      config_default(conf, gen, "--hypotheses", "hypotheses",
                     gen_args.params.n_hypotheses);
      config_default(conf, gen, "--entities", "entities",
                     gen_args.params.n_entities);
      config_default(conf, gen, "--tracked", "tracked",
                     gen_args.params.n_tracked);
      config_default(conf, gen, "--features", "features",
                     gen_args.params.n_features);
      config_default(conf, gen, "--relations", "relations",
                     gen_args.params.n_relations);
      config_default(conf, gen, "--rule-fraction", "rule_fraction",
                     gen_args.params.rule_fraction);
      config_default(conf, gen, "--min-isolated-failures",
                     "min_isolated_failures",
                     gen_args.params.min_isolated_failures);
      config_default(conf, gen, "--max-attempts", "max_attempts",
                     gen_args.params.max_attempts);
      config_default(conf, gen, "--seed", "seed", gen_args.params.seed);
      config_default(conf, gen, "--out", "out", gen_args.out);
      return cmd_gen(gen_args);
    }
    if (count->parsed()) {
      json conf;
      if (!count_args.config.empty()) conf = load_config(count_args.config);
      config_default(conf, count, "--dimacs", "dimacs", count_args.dimacs);
      return cmd_count(count_args);
    }
    if (pac->parsed()) {
      json conf;
      if (!pac_args.config.empty()) conf = load_config(pac_args.config);
      config_default(conf, pac, "--alpha", "alpha", pac_args.alpha);
      config_default(conf, pac, "--l", "l", pac_args.l);
      config_default(conf, pac, "--epsilon", "epsilon", pac_args.epsilon);
      return cmd_pac_bound(pac_args);
    }
  } catch (const discd::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const discd::ResourceLimitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
