#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "discd/ground.hpp"

namespace discd::count {

// Exact model counts and probabilities. Counts can reach 2^n for n ground
// atoms, so fixed-width integers are not enough.
using Count = mpz_class;
using Rational = mpq_class;

struct CounterConfig {
  // Component cache entries kept per invocation.
  std::size_t cache_capacity = 1u << 20;

  // Abort with ResourceLimitError after this many search nodes rather than
  // ever returning a wrong count.
  std::int64_t node_limit = 200'000'000;

  // Optional external counter: a command template containing "{cnf_path}"
  // (or the short form "{cnf}"), replaced by the path of a DIMACS file.
  // When set, count_external shells out and cross-checks small instances
  // against the native counter.
  std::optional<std::string> external_command;

  // Regex with one capture group locating the count in the tool's stdout.
  // Empty selects the built-in heuristics (a line that is a bare integer,
  // or an "exact arb int <count>" line).
  std::string external_pattern;
};

// Exact number of satisfying assignments over all n_vars() variables.
// With a definitional encoding this equals the count of the source
// proposition over the original atoms. Deterministic for a fixed input.
Count count_models(const ground::GroundProblem& p,
                   const CounterConfig& cfg = {});

// Reference counter: enumerate all assignments of the tree's atoms.
// Guarded to n_atoms <= 24.
Count count_brute(const ground::PropTree& t, int n_atoms);

// Reference counter over a CNF, enumerating all n_vars() assignments.
// Guarded to n_vars() <= 24.
Count count_brute(const ground::GroundProblem& p);

// count(f) / 2^n_atoms as a canonical rational in [0, 1].
Rational probability(const fol::Formula& f,
                     const std::shared_ptr<const ground::AtomIndex>& atoms,
                     const CounterConfig& cfg = {});

// Run the configured external counter on p and parse its output.
// Missing configuration or a failing tool raises ConfigError; unparsable
// output raises DataError. Instances with n_vars() <= 16 are additionally
// verified against count_models, and any disagreement raises DataError.
Count count_external(const ground::GroundProblem& p, const CounterConfig& cfg);

}  // namespace discd::count
