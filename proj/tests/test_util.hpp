#pragma once

// Oracles for the test suite. Everything here evaluates formulas by direct
// recursion and full enumeration, sharing no code with the library's
// grounding or counting paths, so agreement between the two is meaningful.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "discd/count.hpp"
#include "discd/errors.hpp"
#include "discd/fol.hpp"
#include "discd/ground.hpp"

namespace testutil {

// Row-major ground-atom numbering, re-derived from the documented layout
// rather than taken from AtomIndex.
inline int oracle_atom_id(const discd::fol::Signature& sig,
                          const std::string& pred,
                          const std::vector<std::string>& args) {
  int offset = 0;
  int n = static_cast<int>(sig.entities.size());
  auto entity_pos = [&](const std::string& e) {
    for (int i = 0; i < n; ++i)
      if (sig.entities[i] == e) return i;
    throw discd::DataError("oracle: unknown entity " + e);
  };
  for (const auto& p : sig.predicates) {
    if (p.name == pred) {
      if (p.arity == 1) return offset + entity_pos(args[0]);
      return offset + entity_pos(args[0]) * n + entity_pos(args[1]);
    }
    offset += p.arity == 1 ? n : n * n;
  }
  throw discd::DataError("oracle: unknown predicate " + pred);
}

// Truth of a sentence in one world: quantifiers loop over the entities, an
// atom reads its world bit. `env` carries variable bindings.
inline bool eval_sentence(const discd::fol::Formula& f,
                          const discd::fol::Signature& sig,
                          std::uint64_t world,
                          std::map<std::string, std::string>& env) {
  using discd::fol::Kind;
  using discd::fol::TermKind;
  switch (f.kind()) {
    case Kind::Atom: {
      std::vector<std::string> args;
      for (const auto& t : f.terms()) {
        if (t.kind == TermKind::Entity) {
          args.push_back(t.name);
        } else {
          auto it = env.find(t.name);
          if (it == env.end())
            throw discd::DataError("oracle: unbound variable " + t.name);
          args.push_back(it->second);
        }
      }
      return (world >> oracle_atom_id(sig, f.predicate(), args)) & 1u;
    }
    case Kind::Not:
      return !eval_sentence(f.children()[0], sig, world, env);
    case Kind::And:
      for (const auto& c : f.children())
        if (!eval_sentence(c, sig, world, env)) return false;
      return true;
    case Kind::Or:
      for (const auto& c : f.children())
        if (eval_sentence(c, sig, world, env)) return true;
      return false;
    case Kind::Implies:
      return !eval_sentence(f.children()[0], sig, world, env) ||
             eval_sentence(f.children()[1], sig, world, env);
    case Kind::Iff:
      return eval_sentence(f.children()[0], sig, world, env) ==
             eval_sentence(f.children()[1], sig, world, env);
    case Kind::ForAll:
    case Kind::Exists: {
      bool want_all = f.kind() == Kind::ForAll;
      auto saved = env.find(f.variable());
      std::string old;
      bool had = saved != env.end();
      if (had) old = saved->second;
      for (const auto& e : sig.entities) {
        env[f.variable()] = e;
        bool v = eval_sentence(f.children()[0], sig, world, env);
        if (v != want_all) {
          if (had)
            env[f.variable()] = old;
          else
            env.erase(f.variable());
          return !want_all;
        }
      }
      if (had)
        env[f.variable()] = old;
      else
        env.erase(f.variable());
      return want_all;
    }
  }
  throw discd::DataError("oracle: unreachable");
}

inline int oracle_n_atoms(const discd::fol::Signature& sig) {
  int n = static_cast<int>(sig.entities.size());
  int total = 0;
  for (const auto& p : sig.predicates) total += p.arity == 1 ? n : n * n;
  return total;
}

// Model count of a sentence by enumerating every world of the signature.
inline discd::count::Count brute_sentence_count(
    const discd::fol::Formula& f, const discd::fol::Signature& sig) {
  int n = oracle_n_atoms(sig);
  if (n > 24) throw discd::DataError("oracle: too many atoms to enumerate");
  discd::count::Count total = 0;
  for (std::uint64_t w = 0; w < (std::uint64_t{1} << n); ++w) {
    std::map<std::string, std::string> env;
    if (eval_sentence(f, sig, w, env)) ++total;
  }
  return total;
}

// Propositional evaluation by recursion, independent of ground::eval.
inline bool eval_tree(const discd::ground::PropTree& t, std::uint64_t world) {
  using K = discd::ground::PropTree::Kind;
  switch (t.kind) {
    case K::Var:
      return (world >> t.var) & 1u;
    case K::Not:
      return !eval_tree(t.kids[0], world);
    case K::And:
      for (const auto& k : t.kids)
        if (!eval_tree(k, world)) return false;
      return true;
    case K::Or:
      for (const auto& k : t.kids)
        if (eval_tree(k, world)) return true;
      return false;
  }
  return false;
}

inline discd::count::Count brute_tree_count(const discd::ground::PropTree& t,
                                            int n_atoms) {
  discd::count::Count total = 0;
  for (std::uint64_t w = 0; w < (std::uint64_t{1} << n_atoms); ++w)
    if (eval_tree(t, w)) ++total;
  return total;
}

// Satisfying assignments of a clause list over n variables, enumerated.
inline discd::count::Count brute_cnf_count(
    const std::vector<std::vector<int>>& clauses, int n_vars) {
  discd::count::Count total = 0;
  for (std::uint64_t w = 0; w < (std::uint64_t{1} << n_vars); ++w) {
    bool ok = true;
    for (const auto& cl : clauses) {
      bool sat = false;
      for (int lit : cl) {
        int v = std::abs(lit) - 1;
        bool val = (w >> v) & 1u;
        if (lit < 0 ? !val : val) {
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

// Random quantifier-free tree over atom ids < n_atoms.
inline discd::ground::PropTree random_tree(std::mt19937_64& g, int n_atoms,
                                           int depth) {
  using discd::ground::PropTree;
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 0 : 3);
  switch (pick(g)) {
    case 1:
      return PropTree::negation(random_tree(g, n_atoms, depth - 1));
    case 2:
    case 3: {
      std::uniform_int_distribution<int> width(2, 3);
      std::vector<PropTree> kids;
      int w = width(g);
      for (int i = 0; i < w; ++i)
        kids.push_back(random_tree(g, n_atoms, depth - 1));
      return pick(g) % 2 == 0 ? PropTree::conjunction(std::move(kids))
                              : PropTree::disjunction(std::move(kids));
    }
    default: {
      std::uniform_int_distribution<int> var(0, n_atoms - 1);
      return PropTree::leaf(var(g));
    }
  }
}

// Random sentence over the signature: quantifiers, connectives, and atoms
// whose variable arguments are drawn from the enclosing scope.
inline discd::fol::Formula random_sentence(
    std::mt19937_64& g, const discd::fol::Signature& sig, int depth,
    std::vector<std::string> scope = {}) {
  using discd::fol::Formula;
  using discd::fol::Term;
  using discd::fol::TermKind;

  auto random_term = [&]() {
    std::uniform_int_distribution<std::size_t> pick(
        0, sig.entities.size() + scope.size() - 1);
    std::size_t i = pick(g);
    if (i < sig.entities.size())
      return Term{TermKind::Entity, sig.entities[i]};
    return Term{TermKind::Variable, scope[i - sig.entities.size()]};
  };
  auto random_atom = [&]() {
    std::uniform_int_distribution<std::size_t> pick(0,
                                                    sig.predicates.size() - 1);
    const auto& p = sig.predicates[pick(g)];
    std::vector<Term> args{random_term()};
    if (p.arity == 2) args.push_back(random_term());
    return Formula::atom(p.name, std::move(args));
  };

  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 0 : 7);
  switch (pick(g)) {
    case 1:
      return Formula::negation(random_sentence(g, sig, depth - 1, scope));
    case 2:
      return Formula::conjunction(
          {random_sentence(g, sig, depth - 1, scope),
           random_sentence(g, sig, depth - 1, scope)});
    case 3:
      return Formula::disjunction(
          {random_sentence(g, sig, depth - 1, scope),
           random_sentence(g, sig, depth - 1, scope)});
    case 4:
      return Formula::implies(random_sentence(g, sig, depth - 1, scope),
                              random_sentence(g, sig, depth - 1, scope));
    case 5:
      return Formula::iff(random_sentence(g, sig, depth - 1, scope),
                          random_sentence(g, sig, depth - 1, scope));
    case 6:
    case 7: {
      std::string v = "v" + std::to_string(scope.size());
      auto inner = scope;
      inner.push_back(v);
      auto body = random_sentence(g, sig, depth - 1, std::move(inner));
      return pick(g) % 2 == 0 ? Formula::forall(v, std::move(body))
                              : Formula::exists(v, std::move(body));
    }
    default:
      return random_atom();
  }
}

}  // namespace testutil
