#pragma once

#include <functional>
#include <map>
#include <vector>

#include "discd/count.hpp"

namespace discd::hintikka {

// Parameters of the two-dimensional inductive continuum over constituents.
// K is the number of attributive constituents (kinds) expressible in the
// language; alpha weights the prior toward wide constituents; lambda(w)
// sets the evidence weight used inside a constituent of width w.
struct ConstituentModel {
  int K = 1;
  double alpha = 0.0;
  std::function<double(int)> lambda = [](int w) { return double(w); };

  void validate() const;
};

// Counts of observed individuals per exemplified kind. Kinds are opaque
// non-negative ids; every count is >= 1 and the counts sum to total.
struct EvidenceSummary {
  long total = 0;                // l
  std::map<int, long> by_kind;   // kind id -> l_z

  int exemplified() const { return static_cast<int>(by_kind.size()); }  // c
  void validate() const;
};

// Log prior of one constituent of width w (not multiplied by the number of
// such constituents). Priors are proportional to Gamma(alpha + w/K) /
// Gamma(w/K), normalised so that the binomial-weighted sum over widths is
// 1. With alpha = 0 every consistent constituent gets 1 / (2^K - 1).
double log_prior(int w, const ConstituentModel& m);

// Exact prior for integer alpha; reference path for cross-checks.
count::Rational prior_exact(int w, int K, long alpha);

// Log likelihood of the summary under one constituent of width w that
// includes all exemplified kinds. Returns -infinity when w < c.
double log_likelihood(const EvidenceSummary& e, int w,
                      const ConstituentModel& m);

// Posterior over the width of the true constituent, normalised across one
// representative constituent per width w in [c, K]. Masses sum to 1; with
// no evidence the posterior is proportional to the prior.
struct WidthPosterior {
  int K = 0;
  int exemplified = 0;
  std::map<int, double> mass;            // width -> posterior probability
  std::map<int, double> log_prior;       // per-width diagnostics
  std::map<int, double> log_likelihood;

  // Width with the highest mass (lowest width on exact ties).
  int mode() const;
};

WidthPosterior posterior(const EvidenceSummary& e, const ConstituentModel& m);

// Ratio of posterior mass placed on all strictly wider constituents to the
// mass on the minimal (width = c) constituent; the quantity bounded by the
// sample-complexity analysis below.
double likelihood_ratio_bound(const EvidenceSummary& e,
                              const ConstituentModel& m);

// Upper bound on that ratio after observing l individuals, maximised over
// the number of exemplified kinds: max_c sum_i C(K-c, i) (c/(c+i))^(l-alpha).
// Requires l > alpha. K = 1 gives 0.
double pac_epsilon_bound(int K, double l, double alpha);

// Exact-rational evaluation for integer parameters (cross-check path; the
// binomial sum grows quickly, intended for K <= 10).
count::Rational pac_epsilon_bound_exact(int K, long l, long alpha);

// Smallest l such that pac_epsilon_bound(K, l, alpha) <= eps / (1 - eps),
// which makes the posterior error probability at most eps.
long min_samples(double eps, int K, double alpha);

// Number of attributive constituents expressible with the given signature
// when every predicate is binary: 4^(|P| * |E|^2) / 2.
count::Count q_sentence_count(const fol::Signature& sig);

// The mutually exclusive, jointly exhaustive kind descriptions of one free
// individual `x`: every sign pattern over the existential claims "some y
// relates to x by the sign pattern sigma of the binary predicates".
// Requires an all-binary signature; the 2^(2^|P|) results are returned in
// sign-vector order. Throws ResourceLimitError past `limit` formulas.
std::vector<fol::Formula> enumerate_attributive_constituents(
    const fol::Signature& sig, std::size_t limit = 1u << 16);

}  // namespace discd::hintikka
