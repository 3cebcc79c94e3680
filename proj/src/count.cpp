#include "discd/count.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace discd::count {

namespace {

// Exact #SAT by exhaustive DPLL: unit propagation, splitting into
// variable-disjoint components, and a per-invocation cache of component
// counts keyed by a canonical renaming. Pure-literal elimination is
// deliberately absent; it preserves satisfiability but not model counts.
class Counter {
 public:
  Counter(const ground::GroundProblem& p, const CounterConfig& cfg)
      : cfg_(cfg), n_vars_(p.n_vars()), clauses_(p.clauses) {
    for (const auto& cl : clauses_)
      for (int lit : cl) {
        int v = std::abs(lit) - 1;
        if (lit == 0 || v >= n_vars_)
          throw DataError("count: literal out of range");
      }
    occ_.resize(n_vars_);
    for (std::size_t cid = 0; cid < clauses_.size(); ++cid)
      for (int lit : clauses_[cid])
        occ_[std::abs(lit) - 1].push_back(static_cast<int>(cid));
    val_.assign(n_vars_, 0);
    clause_stamp_.assign(clauses_.size(), 0);
    visit_stamp_.assign(clauses_.size(), 0);
    var_stamp_.assign(n_vars_, 0);
    var_rank_.assign(n_vars_, 0);
    var_count_.assign(n_vars_, 0);
  }

  Count run() {
    std::vector<int> all(clauses_.size());
    std::iota(all.begin(), all.end(), 0);
    if (!propagate(all)) return 0;
    std::vector<int> residual;
    long n_res_vars = residual_of(all, residual);
    long free = n_vars_ - static_cast<long>(trail_.size()) - n_res_vars;
    Count total = count_components(residual);
    total <<= free;
    return total;
  }

 private:
  using Key = std::vector<int>;

  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = 0xcbf29ce484222325ull;
      for (int x : k) {
        h ^= static_cast<std::size_t>(static_cast<unsigned>(x));
        h *= 0x100000001b3ull;
      }
      return h;
    }
  };

  void assign(int lit) {
    int v = std::abs(lit) - 1;
    val_[v] = lit > 0 ? 1 : -1;
    trail_.push_back(v);
  }

  void undo(std::size_t checkpoint) {
    while (trail_.size() > checkpoint) {
      val_[trail_.back()] = 0;
      trail_.pop_back();
    }
  }

  // Unit propagation restricted to the given clauses. Repeated full scans
  // keep this simple and deterministic; components stay small enough that
  // watched literals would not pay for themselves here.
  bool propagate(const std::vector<int>& comp) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int cid : comp) {
        bool sat = false;
        int unit = 0;
        int n_open = 0;
        for (int lit : clauses_[cid]) {
          int8_t v = val_[std::abs(lit) - 1];
          if (v == 0) {
            if (++n_open > 1) {
              // Still check the remaining literals for satisfaction.
              continue;
            }
            unit = lit;
          } else if ((v > 0) == (lit > 0)) {
            sat = true;
            break;
          }
        }
        if (sat) continue;
        if (n_open == 0) return false;
        if (n_open == 1) {
          assign(unit);
          changed = true;
        }
      }
    }
    return true;
  }

  // Collect the clauses of `comp` not yet satisfied and count the distinct
  // unassigned variables appearing in them.
  long residual_of(const std::vector<int>& comp, std::vector<int>& out) {
    out.clear();
    ++var_token_;
    long n_vars = 0;
    for (int cid : comp) {
      bool sat = false;
      for (int lit : clauses_[cid]) {
        int8_t v = val_[std::abs(lit) - 1];
        if (v != 0 && (v > 0) == (lit > 0)) {
          sat = true;
          break;
        }
      }
      if (sat) continue;
      out.push_back(cid);
      for (int lit : clauses_[cid]) {
        int v = std::abs(lit) - 1;
        if (val_[v] == 0 && var_stamp_[v] != var_token_) {
          var_stamp_[v] = var_token_;
          ++n_vars;
        }
      }
    }
    return n_vars;
  }

  Count count_components(const std::vector<int>& residual) {
    if (residual.empty()) return 1;

    // Partition into variable-disjoint components up front; the recursive
    // counting below reuses the stamp arrays, so no marks may be live
    // across those calls.
    std::vector<std::pair<std::vector<int>, std::vector<int>>> comps;
    ++clause_token_;
    for (int cid : residual) clause_stamp_[cid] = clause_token_;
    ++visit_token_;
    ++var_token_;
    for (int seed : residual) {
      if (visit_stamp_[seed] == visit_token_) continue;
      std::vector<int> comp_clauses;
      std::vector<int> comp_vars;
      std::vector<int> queue{seed};
      visit_stamp_[seed] = visit_token_;
      while (!queue.empty()) {
        int cid = queue.back();
        queue.pop_back();
        comp_clauses.push_back(cid);
        for (int lit : clauses_[cid]) {
          int v = std::abs(lit) - 1;
          if (val_[v] != 0 || var_stamp_[v] == var_token_) continue;
          var_stamp_[v] = var_token_;
          comp_vars.push_back(v);
          for (int other : occ_[v]) {
            if (clause_stamp_[other] == clause_token_ &&
                visit_stamp_[other] != visit_token_) {
              visit_stamp_[other] = visit_token_;
              queue.push_back(other);
            }
          }
        }
      }
      std::sort(comp_clauses.begin(), comp_clauses.end());
      std::sort(comp_vars.begin(), comp_vars.end());
      comps.emplace_back(std::move(comp_clauses), std::move(comp_vars));
    }

    Count total = 1;
    for (const auto& [comp_clauses, comp_vars] : comps)
      total *= count_component(comp_clauses, comp_vars);
    return total;
  }

  Count count_component(const std::vector<int>& comp_clauses,
                        const std::vector<int>& comp_vars) {
    Key key = canonical_key(comp_clauses, comp_vars);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Count result = branch(comp_clauses, comp_vars);
    if (cache_.size() < cfg_.cache_capacity)
      cache_.emplace(std::move(key), result);
    return result;
  }

  Key canonical_key(const std::vector<int>& comp_clauses,
                    const std::vector<int>& comp_vars) {
    for (std::size_t i = 0; i < comp_vars.size(); ++i)
      var_rank_[comp_vars[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> norm;
    norm.reserve(comp_clauses.size());
    for (int cid : comp_clauses) {
      std::vector<int> c;
      for (int lit : clauses_[cid]) {
        int v = std::abs(lit) - 1;
        if (val_[v] != 0) continue;  // falsified literal, drop
        int r = var_rank_[v] + 1;
        c.push_back(lit > 0 ? r : -r);
      }
      std::sort(c.begin(), c.end(), [](int a, int b) {
        int ma = std::abs(a), mb = std::abs(b);
        return ma != mb ? ma < mb : a < b;
      });
      norm.push_back(std::move(c));
    }
    std::sort(norm.begin(), norm.end());
    norm.erase(std::unique(norm.begin(), norm.end()), norm.end());
    Key key;
    key.push_back(static_cast<int>(comp_vars.size()));
    for (const auto& c : norm) {
      key.insert(key.end(), c.begin(), c.end());
      key.push_back(0);
    }
    return key;
  }

  Count branch(const std::vector<int>& comp_clauses,
               const std::vector<int>& comp_vars) {
    if (++nodes_ > cfg_.node_limit)
      throw ResourceLimitError("count: search exceeded node limit of " +
                               std::to_string(cfg_.node_limit));

    // Decision variable: most occurrences in the component, ties to the
    // lowest id. comp_vars is sorted, so a strict '>' keeps the tie rule.
    for (int v : comp_vars) var_count_[v] = 0;
    for (int cid : comp_clauses)
      for (int lit : clauses_[cid]) {
        int v = std::abs(lit) - 1;
        if (val_[v] == 0) ++var_count_[v];
      }
    int decision = comp_vars[0];
    for (int v : comp_vars)
      if (var_count_[v] > var_count_[decision]) decision = v;

    Count total = 0;
    for (int sign : {+1, -1}) {
      std::size_t cp = trail_.size();
      assign(sign * (decision + 1));
      if (propagate(comp_clauses)) {
        std::vector<int> residual;
        long n_res_vars = residual_of(comp_clauses, residual);
        long assigned = static_cast<long>(trail_.size() - cp);
        long free = static_cast<long>(comp_vars.size()) - assigned - n_res_vars;
        Count sub = count_components(residual);
        sub <<= free;
        total += sub;
      }
      undo(cp);
    }
    return total;
  }

  const CounterConfig& cfg_;
  int n_vars_;
  std::vector<std::vector<int>> clauses_;
  std::vector<std::vector<int>> occ_;
  std::vector<int8_t> val_;
  std::vector<int> trail_;

  std::vector<std::int64_t> clause_stamp_, visit_stamp_, var_stamp_;
  std::int64_t clause_token_ = 0, visit_token_ = 0, var_token_ = 0;
  std::vector<int> var_rank_, var_count_;

  std::unordered_map<Key, Count, KeyHash> cache_;
  std::int64_t nodes_ = 0;
};

}  // namespace

Count count_models(const ground::GroundProblem& p, const CounterConfig& cfg) {
  return Counter(p, cfg).run();
}

Count count_brute(const ground::PropTree& t, int n_atoms) {
  if (n_atoms < 0 || n_atoms > 24)
    throw ResourceLimitError("count_brute: " + std::to_string(n_atoms) +
                             " atoms exceeds the enumeration bound of 24");
  Count total = 0;
  std::uint64_t top = 1ull << n_atoms;
  for (std::uint64_t m = 0; m < top; ++m)
    if (ground::eval(t, m)) ++total;
  return total;
}

Count count_brute(const ground::GroundProblem& p) {
  int n = p.n_vars();
  if (n > 24)
    throw ResourceLimitError("count_brute: " + std::to_string(n) +
                             " variables exceeds the enumeration bound of 24");
  Count total = 0;
  std::uint64_t top = 1ull << n;
  for (std::uint64_t m = 0; m < top; ++m) {
    bool ok = true;
    for (const auto& cl : p.clauses) {
      bool sat = false;
      for (int lit : cl) {
        bool bit = (m >> (std::abs(lit) - 1)) & 1u;
        if (bit == (lit > 0)) {
          sat = true;
          break;
        }
      }
      if (!sat) {
        ok = false;
        break;
      }
    }
    if (ok) ++total;
  }
  return total;
}

Rational probability(const fol::Formula& f,
                     const std::shared_ptr<const ground::AtomIndex>& atoms,
                     const CounterConfig& cfg) {
  if (!atoms) throw DataError("probability: null atom index");
  ground::GroundProblem p = to_cnf(ground::ground(f, *atoms), atoms);
  Count models = count_models(p, cfg);
  Count denom = 1;
  denom <<= atoms->n_atoms();
  Rational r(models, denom);
  r.canonicalize();
  return r;
}

namespace {

bool is_bare_integer(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<std::string> extract_count(const std::string& output,
                                         const std::string& pattern) {
  std::istringstream in(output);
  std::string line;
  if (!pattern.empty()) {
    std::regex re(pattern);
    while (std::getline(in, line)) {
      std::smatch m;
      if (std::regex_search(line, m, re) && m.size() > 1) return m[1].str();
    }
    return std::nullopt;
  }
  // Built-in heuristics: an "exact arb int <count>" marker takes priority,
  // otherwise the first line that is a bare integer.
  std::optional<std::string> bare;
  while (std::getline(in, line)) {
    auto pos = line.find("exact arb int");
    if (pos != std::string::npos) {
      std::istringstream rest(line.substr(pos + 13));
      std::string tok;
      if (rest >> tok && is_bare_integer(tok)) return tok;
    }
    if (!bare) {
      std::string t = trim(line);
      if (is_bare_integer(t)) bare = t;
    }
  }
  return bare;
}

}  // namespace

Count count_external(const ground::GroundProblem& p,
                     const CounterConfig& cfg) {
  if (!cfg.external_command)
    throw ConfigError("external counter: no command configured");

  char path[] = "/tmp/discd_cnf_XXXXXX";
  int fd = mkstemp(path);
  if (fd < 0) throw ConfigError("external counter: cannot create temp file");
  ::close(fd);
  {
    std::ofstream out(path);
    write_dimacs(p, out);
    if (!out) {
      std::remove(path);
      throw ConfigError("external counter: cannot write temp file");
    }
  }

  std::string cmd = *cfg.external_command;
  std::size_t width = 10;
  auto pos = cmd.find("{cnf_path}");
  if (pos == std::string::npos) {
    pos = cmd.find("{cnf}");
    width = 5;
  }
  if (pos == std::string::npos) {
    std::remove(path);
    throw ConfigError("external counter: command template lacks {cnf_path}");
  }
  cmd.replace(pos, width, path);

  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    std::remove(path);
    throw ConfigError("external counter: cannot launch '" + cmd + "'");
  }
  std::string output;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
  int status = pclose(pipe);
  std::remove(path);
  if (status != 0)
    throw ConfigError("external counter: command failed with status " +
                      std::to_string(status));

  auto text = extract_count(output, cfg.external_pattern);
  if (!text)
    throw DataError("external counter: no count found in tool output");
  if (!is_bare_integer(*text))
    throw DataError("external counter: captured '" + *text +
                    "' is not an integer");
  Count result(*text);

  if (p.n_vars() <= 16) {
    Count native = count_models(p, cfg);
    if (result != native)
      throw DataError("external counter: tool reported " + text.value() +
                      " but native count is " + native.get_str());
  }
  return result;
}

}  // namespace discd::count
