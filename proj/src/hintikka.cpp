#include "discd/hintikka.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace discd::hintikka {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& xs) {
  double hi = kNegInf;
  for (double x : xs) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
         std::lgamma(n - k + 1.0);
}

// Gamma(x + a) / Gamma(x) for integer a >= 0, as an exact rational.
count::Rational pochhammer(const count::Rational& x, long a) {
  count::Rational r = 1;
  count::Rational term = x;
  for (long j = 0; j < a; ++j) {
    r *= term;
    term += 1;
  }
  r.canonicalize();
  return r;
}

count::Count binomial(unsigned long n, unsigned long k) {
  count::Count b;
  mpz_bin_uiui(b.get_mpz_t(), n, k);
  return b;
}

}  // namespace

void ConstituentModel::validate() const {
  if (K < 1) throw DataError("constituent model: K must be >= 1");
  if (!(alpha >= 0.0))
    throw DataError("constituent model: alpha must be >= 0");
  if (!lambda) throw DataError("constituent model: lambda not set");
}

void EvidenceSummary::validate() const {
  long sum = 0;
  for (const auto& [kind, n] : by_kind) {
    if (kind < 0) throw DataError("evidence summary: negative kind id");
    if (n < 1)
      throw DataError("evidence summary: kind " + std::to_string(kind) +
                      " has count < 1");
    sum += n;
  }
  if (sum != total)
    throw DataError("evidence summary: counts sum to " + std::to_string(sum) +
                    ", expected " + std::to_string(total));
}

double log_prior(int w, const ConstituentModel& m) {
  m.validate();
  if (w < 1 || w > m.K)
    throw DataError("log_prior: width " + std::to_string(w) +
                    " outside [1, " + std::to_string(m.K) + "]");
  std::vector<double> terms;
  terms.reserve(m.K);
  for (int i = 1; i <= m.K; ++i) {
    double x = double(i) / m.K;
    terms.push_back(log_choose(m.K, i) + std::lgamma(m.alpha + x) -
                    std::lgamma(x));
  }
  double xw = double(w) / m.K;
  return std::lgamma(m.alpha + xw) - std::lgamma(xw) - log_sum_exp(terms);
}

count::Rational prior_exact(int w, int K, long alpha) {
  if (K < 1 || w < 1 || w > K) throw DataError("prior_exact: bad width");
  if (alpha < 0) throw DataError("prior_exact: alpha must be >= 0");
  count::Rational num =
      pochhammer(count::Rational(w, K), alpha);
  count::Rational z = 0;
  for (int i = 1; i <= K; ++i)
    z += count::Rational(binomial(K, i)) *
         pochhammer(count::Rational(i, K), alpha);
  count::Rational r = num / z;
  r.canonicalize();
  return r;
}

double log_likelihood(const EvidenceSummary& e, int w,
                      const ConstituentModel& m) {
  m.validate();
  e.validate();
  int c = e.exemplified();
  if (w < 1 || w > m.K)
    throw DataError("log_likelihood: width outside [1, K]");
  if (w < c) return kNegInf;  // the constituent lacks an observed kind
  double lam = m.lambda(w);
  if (!(lam > 0.0))
    throw DataError("log_likelihood: lambda(w) must be positive");
  double ll = std::lgamma(lam) - std::lgamma(e.total + lam);
  double per_kind = lam / w;
  for (const auto& [kind, n] : e.by_kind)
    ll += std::lgamma(n + per_kind) - std::lgamma(per_kind);
  return ll;
}

int WidthPosterior::mode() const {
  int best = -1;
  double best_mass = -1.0;
  for (const auto& [w, p] : mass)
    if (p > best_mass) {
      best = w;
      best_mass = p;
    }
  return best;
}

WidthPosterior posterior(const EvidenceSummary& e, const ConstituentModel& m) {
  m.validate();
  e.validate();
  int c = e.exemplified();
  if (c > m.K)
    throw DataError("posterior: more exemplified kinds than K");

  WidthPosterior out;
  out.K = m.K;
  out.exemplified = c;

  // One representative constituent per admissible width; the evidence
  // fixes which kinds it must contain, so wider alternatives are not
  // multiplied by how many of them exist.
  int lo = std::max(c, 1);
  std::vector<double> logs;
  std::vector<int> widths;
  for (int w = lo; w <= m.K; ++w) {
    double lp = log_prior(w, m);
    double ll = log_likelihood(e, w, m);
    out.log_prior[w] = lp;
    out.log_likelihood[w] = ll;
    widths.push_back(w);
    logs.push_back(lp + ll);
  }
  double z = log_sum_exp(logs);
  if (z == kNegInf)
    throw DataError("posterior: no admissible width has positive mass");
  for (std::size_t i = 0; i < widths.size(); ++i)
    out.mass[widths[i]] = std::exp(logs[i] - z);
  return out;
}

double likelihood_ratio_bound(const EvidenceSummary& e,
                              const ConstituentModel& m) {
  m.validate();
  e.validate();
  int c = e.exemplified();
  if (c < 1) throw DataError("likelihood_ratio_bound: needs evidence");
  if (c > m.K)
    throw DataError("likelihood_ratio_bound: more exemplified kinds than K");
  double base = log_prior(c, m) + log_likelihood(e, c, m);
  std::vector<double> terms;
  for (int i = 1; i <= m.K - c; ++i) {
    int w = c + i;
    terms.push_back(log_choose(m.K - c, i) + log_prior(w, m) +
                    log_likelihood(e, w, m) - base);
  }
  double s = log_sum_exp(terms);
  return s == kNegInf ? 0.0 : std::exp(s);
}

double pac_epsilon_bound(int K, double l, double alpha) {
  if (K < 1) throw DataError("pac_epsilon_bound: K must be >= 1");
  if (!(alpha >= 0.0)) throw DataError("pac_epsilon_bound: alpha must be >= 0");
  if (!(l > alpha)) throw DataError("pac_epsilon_bound: requires l > alpha");
  double e = l - alpha;
  double best = 0.0;
  for (int c = 1; c < K; ++c) {
    std::vector<double> terms;
    terms.reserve(K - c);
    for (int i = 1; i <= K - c; ++i)
      terms.push_back(log_choose(K - c, i) +
                      e * (std::log(double(c)) - std::log(double(c + i))));
    best = std::max(best, std::exp(log_sum_exp(terms)));
  }
  return best;
}

count::Rational pac_epsilon_bound_exact(int K, long l, long alpha) {
  if (K < 1) throw DataError("pac_epsilon_bound_exact: K must be >= 1");
  if (alpha < 0)
    throw DataError("pac_epsilon_bound_exact: alpha must be >= 0");
  if (l <= alpha)
    throw DataError("pac_epsilon_bound_exact: requires l > alpha");
  unsigned long e = static_cast<unsigned long>(l - alpha);
  count::Rational best = 0;
  for (int c = 1; c < K; ++c) {
    count::Rational sum = 0;
    for (int i = 1; i <= K - c; ++i) {
      count::Count num, den;
      mpz_ui_pow_ui(num.get_mpz_t(), static_cast<unsigned long>(c), e);
      mpz_ui_pow_ui(den.get_mpz_t(), static_cast<unsigned long>(c + i), e);
      count::Rational term(binomial(K - c, i) * num, den);
      term.canonicalize();
      sum += term;
    }
    if (sum > best) best = sum;
  }
  best.canonicalize();
  return best;
}

long min_samples(double eps, int K, double alpha) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw DataError("min_samples: eps must lie in (0, 1)");
  if (K < 1) throw DataError("min_samples: K must be >= 1");
  if (!(alpha >= 0.0)) throw DataError("min_samples: alpha must be >= 0");
  double target = eps / (1.0 - eps);

  long lo = static_cast<long>(std::floor(alpha)) + 1;
  if (pac_epsilon_bound(K, double(lo), alpha) <= target) return lo;

  // The bound decreases in l; double until it crosses, then bisect.
  long hi = lo;
  do {
    lo = hi;
    if (hi > (1L << 40))
      throw ResourceLimitError("min_samples: no crossing found");
    hi *= 2;
  } while (pac_epsilon_bound(K, double(hi), alpha) > target);

  while (lo + 1 < hi) {
    long mid = lo + (hi - lo) / 2;
    if (pac_epsilon_bound(K, double(mid), alpha) <= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

count::Count q_sentence_count(const fol::Signature& sig) {
  sig.validate();
  for (const auto& p : sig.predicates)
    if (p.arity != 2)
      throw DataError("q_sentence_count: predicate '" + p.name +
                      "' is not binary");
  long p = static_cast<long>(sig.predicates.size());
  long e = static_cast<long>(sig.entities.size());
  long exponent = 2 * p * e * e - 1;  // 4^(p e^2) / 2
  count::Count n = 1;
  n <<= exponent;
  return n;
}

std::vector<fol::Formula> enumerate_attributive_constituents(
    const fol::Signature& sig, std::size_t limit) {
  sig.validate();
  for (const auto& p : sig.predicates)
    if (p.arity != 2)
      throw DataError("enumerate_attributive_constituents: predicate '" +
                      p.name + "' is not binary");

  std::size_t n_preds = sig.predicates.size();
  if (n_preds >= 6)
    throw ResourceLimitError(
        "enumerate_attributive_constituents: too many predicates");
  std::size_t q = std::size_t{1} << n_preds;    // relation sign patterns
  std::size_t total = std::size_t{1} << q;      // constituents
  if (total > limit)
    throw ResourceLimitError(
        "enumerate_attributive_constituents: " + std::to_string(total) +
        " constituents exceed the limit of " + std::to_string(limit));

  auto fresh = [&sig](std::string name) {
    while (sig.entity_index(name) >= 0) name += "0";
    return name;
  };
  std::string x = fresh("x"), y = fresh("y");
  fol::Term tx{fol::TermKind::Variable, x};
  fol::Term ty{fol::TermKind::Variable, y};

  // Q-sentence sigma: "x stands to some individual in exactly the relation
  // pattern sigma", one existential per pattern.
  std::vector<fol::Formula> q_claims;
  q_claims.reserve(q);
  for (std::size_t sigma = 0; sigma < q; ++sigma) {
    std::vector<fol::Formula> lits;
    lits.reserve(n_preds);
    for (std::size_t r = 0; r < n_preds; ++r) {
      fol::Formula a = fol::Formula::atom(sig.predicates[r].name, {tx, ty});
      lits.push_back((sigma >> r) & 1 ? a : fol::Formula::negation(a));
    }
    q_claims.push_back(
        fol::Formula::exists(y, fol::Formula::conjunction(std::move(lits))));
  }

  std::vector<fol::Formula> out;
  out.reserve(total);
  for (std::size_t tau = 0; tau < total; ++tau) {
    std::vector<fol::Formula> parts;
    parts.reserve(q);
    for (std::size_t sigma = 0; sigma < q; ++sigma)
      parts.push_back((tau >> sigma) & 1
                          ? q_claims[sigma]
                          : fol::Formula::negation(q_claims[sigma]));
    out.push_back(fol::Formula::conjunction(std::move(parts)));
  }
  return out;
}

}  // namespace discd::hintikka
