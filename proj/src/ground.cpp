#include "discd/ground.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <ostream>
#include <utility>

namespace discd::ground {

AtomIndex::AtomIndex(fol::Signature sig) : sig_(std::move(sig)) {
  sig_.validate();
  int n_entities = static_cast<int>(sig_.entities.size());
  offsets_.reserve(sig_.predicates.size());
  for (const auto& p : sig_.predicates) {
    offsets_.push_back(n_);
    n_ += p.arity == 1 ? n_entities : n_entities * n_entities;
  }
}

int AtomIndex::atom_id(int pred_idx, int arg0, int arg1) const {
  const auto& p = sig_.predicates.at(pred_idx);
  int n_entities = static_cast<int>(sig_.entities.size());
  if (arg0 < 0 || arg0 >= n_entities)
    throw DataError("atom_id: entity index out of range");
  if (p.arity == 1) {
    if (arg1 != -1) throw DataError("atom_id: unary atom given two arguments");
    return offsets_[pred_idx] + arg0;
  }
  if (arg1 < 0 || arg1 >= n_entities)
    throw DataError("atom_id: entity index out of range");
  return offsets_[pred_idx] + arg0 * n_entities + arg1;
}

int AtomIndex::atom_id(const fol::Formula& atom) const {
  if (atom.kind() != fol::Kind::Atom)
    throw DataError("atom_id: not an atom");
  int pidx = sig_.predicate_index(atom.predicate());
  if (pidx < 0)
    throw DataError("atom_id: unknown predicate '" + atom.predicate() + "'");
  int args[2] = {-1, -1};
  const auto& terms = atom.terms();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].kind != fol::TermKind::Entity)
      throw DataError("atom_id: atom contains a variable");
    int eidx = sig_.entity_index(terms[i].name);
    if (eidx < 0)
      throw DataError("atom_id: unknown entity '" + terms[i].name + "'");
    args[i] = eidx;
  }
  return atom_id(pidx, args[0], args[1]);
}

std::string AtomIndex::atom_name(int id) const {
  return atom_formula(id).render();
}

fol::Formula AtomIndex::atom_formula(int id) const {
  if (id < 0 || id >= n_) throw DataError("atom_formula: id out of range");
  int n_entities = static_cast<int>(sig_.entities.size());
  std::size_t pidx = 0;
  while (pidx + 1 < offsets_.size() && offsets_[pidx + 1] <= id) ++pidx;
  int rel = id - offsets_[pidx];
  const auto& pred = sig_.predicates[pidx];
  std::vector<fol::Term> terms;
  if (pred.arity == 1) {
    terms.push_back({fol::TermKind::Entity, sig_.entities[rel]});
  } else {
    terms.push_back({fol::TermKind::Entity, sig_.entities[rel / n_entities]});
    terms.push_back({fol::TermKind::Entity, sig_.entities[rel % n_entities]});
  }
  return fol::Formula::atom(pred.name, std::move(terms));
}

PropTree PropTree::leaf(int var) {
  PropTree t;
  t.kind = Kind::Var;
  t.var = var;
  return t;
}

PropTree PropTree::negation(PropTree t) {
  PropTree n;
  n.kind = Kind::Not;
  n.kids.push_back(std::move(t));
  return n;
}

PropTree PropTree::conjunction(std::vector<PropTree> kids) {
  if (kids.size() == 1) return std::move(kids[0]);
  PropTree n;
  n.kind = Kind::And;
  n.kids = std::move(kids);
  return n;
}

PropTree PropTree::disjunction(std::vector<PropTree> kids) {
  if (kids.size() == 1) return std::move(kids[0]);
  PropTree n;
  n.kind = Kind::Or;
  n.kids = std::move(kids);
  return n;
}

std::size_t PropTree::size() const {
  std::size_t n = 1;
  for (const auto& k : kids) n += k.size();
  return n;
}

namespace {

struct GroundCtx {
  const AtomIndex& idx;
  const GroundConfig& cfg;
  std::vector<std::pair<std::string, int>> env;  // variable -> entity index
  std::int64_t nodes = 0;

  void charge(std::int64_t n = 1) {
    nodes += n;
    if (nodes > cfg.node_limit)
      throw ResourceLimitError(
          "ground: expansion exceeds node limit of " +
          std::to_string(cfg.node_limit));
  }

  int lookup(const std::string& name) const {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == name) return it->second;
    return -1;
  }
};

PropTree ground_rec(const fol::Formula& f, GroundCtx& ctx) {
  ctx.charge();
  switch (f.kind()) {
    case fol::Kind::Atom: {
      const auto& sig = ctx.idx.signature();
      int pidx = sig.predicate_index(f.predicate());
      if (pidx < 0)
        throw DataError("ground: unknown predicate '" + f.predicate() + "'");
      int args[2] = {-1, -1};
      const auto& terms = f.terms();
      for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].kind == fol::TermKind::Variable) {
          args[i] = ctx.lookup(terms[i].name);
          if (args[i] < 0)
            throw DataError("ground: free variable '" + terms[i].name + "'");
        } else {
          args[i] = sig.entity_index(terms[i].name);
          if (args[i] < 0)
            throw DataError("ground: unknown entity '" + terms[i].name + "'");
        }
      }
      return PropTree::leaf(ctx.idx.atom_id(pidx, args[0], args[1]));
    }
    case fol::Kind::Not:
      return PropTree::negation(ground_rec(f.children()[0], ctx));
    case fol::Kind::And:
    case fol::Kind::Or: {
      std::vector<PropTree> kids;
      kids.reserve(f.children().size());
      for (const auto& k : f.children()) kids.push_back(ground_rec(k, ctx));
      return f.kind() == fol::Kind::And
                 ? PropTree::conjunction(std::move(kids))
                 : PropTree::disjunction(std::move(kids));
    }
    case fol::Kind::Implies: {
      // a -> b lowers to ~a | b.
      std::vector<PropTree> kids;
      kids.push_back(PropTree::negation(ground_rec(f.children()[0], ctx)));
      kids.push_back(ground_rec(f.children()[1], ctx));
      ctx.charge();
      return PropTree::disjunction(std::move(kids));
    }
    case fol::Kind::Iff: {
      // a <-> b lowers to (~a | b) & (~b | a), grounding each side twice.
      PropTree a1 = ground_rec(f.children()[0], ctx);
      PropTree b1 = ground_rec(f.children()[1], ctx);
      PropTree a2 = ground_rec(f.children()[0], ctx);
      PropTree b2 = ground_rec(f.children()[1], ctx);
      ctx.charge(4);
      std::vector<PropTree> fwd;
      fwd.push_back(PropTree::negation(std::move(a1)));
      fwd.push_back(std::move(b1));
      std::vector<PropTree> bwd;
      bwd.push_back(PropTree::negation(std::move(b2)));
      bwd.push_back(std::move(a2));
      std::vector<PropTree> both;
      both.push_back(PropTree::disjunction(std::move(fwd)));
      both.push_back(PropTree::disjunction(std::move(bwd)));
      return PropTree::conjunction(std::move(both));
    }
    case fol::Kind::ForAll:
    case fol::Kind::Exists: {
      int n_entities =
          static_cast<int>(ctx.idx.signature().entities.size());
      std::vector<PropTree> kids;
      kids.reserve(n_entities);
      for (int e = 0; e < n_entities; ++e) {
        ctx.env.emplace_back(f.variable(), e);
        kids.push_back(ground_rec(f.children()[0], ctx));
        ctx.env.pop_back();
      }
      return f.kind() == fol::Kind::ForAll
                 ? PropTree::conjunction(std::move(kids))
                 : PropTree::disjunction(std::move(kids));
    }
  }
  throw DataError("ground: unreachable");
}

}  // namespace

PropTree ground(const fol::Formula& f, const AtomIndex& idx,
                const GroundConfig& cfg) {
  GroundCtx ctx{idx, cfg, {}, 0};
  return ground_rec(f, ctx);
}

bool eval(const PropTree& t, std::uint64_t assignment) {
  switch (t.kind) {
    case PropTree::Kind::Var:
      return (assignment >> t.var) & 1u;
    case PropTree::Kind::Not:
      return !eval(t.kids[0], assignment);
    case PropTree::Kind::And:
      for (const auto& k : t.kids)
        if (!eval(k, assignment)) return false;
      return true;
    case PropTree::Kind::Or:
      for (const auto& k : t.kids)
        if (eval(k, assignment)) return true;
      return false;
  }
  return false;
}

bool eval(const PropTree& t, const std::vector<bool>& assignment) {
  switch (t.kind) {
    case PropTree::Kind::Var:
      return assignment.at(t.var);
    case PropTree::Kind::Not:
      return !eval(t.kids[0], assignment);
    case PropTree::Kind::And:
      for (const auto& k : t.kids)
        if (!eval(k, assignment)) return false;
      return true;
    case PropTree::Kind::Or:
      for (const auto& k : t.kids)
        if (eval(k, assignment)) return true;
      return false;
  }
  return false;
}

GroundProblem GroundProblem::conjoin(const GroundProblem& a,
                                     const GroundProblem& b) {
  if (a.n_original != b.n_original)
    throw DataError("conjoin: mismatched atom numbering");
  GroundProblem out;
  out.atoms = a.atoms ? a.atoms : b.atoms;
  out.n_original = a.n_original;
  out.n_aux = a.n_aux + b.n_aux;
  out.clauses = a.clauses;
  out.clauses.reserve(a.clauses.size() + b.clauses.size());
  for (const auto& cl : b.clauses) {
    std::vector<int> shifted;
    shifted.reserve(cl.size());
    for (int lit : cl) {
      int v = std::abs(lit) - 1;
      if (v >= b.n_original) v += a.n_aux;
      shifted.push_back(lit > 0 ? v + 1 : -(v + 1));
    }
    out.clauses.push_back(std::move(shifted));
  }
  return out;
}

namespace {

// Encoded subtree: either a constant or a literal over the CNF variables.
struct EncLit {
  bool is_const = false;
  bool value = false;
  int lit = 0;

  static EncLit constant(bool v) { return {true, v, 0}; }
  static EncLit literal(int l) { return {false, false, l}; }

  EncLit negated() const {
    return is_const ? constant(!value) : literal(-lit);
  }
};

class CnfBuilder {
 public:
  explicit CnfBuilder(int n_original) : n_original_(n_original) {
    next_var_ = n_original;
  }

  EncLit encode(const PropTree& t) {
    switch (t.kind) {
      case PropTree::Kind::Var:
        return EncLit::literal(t.var + 1);
      case PropTree::Kind::Not:
        return encode(t.kids[0]).negated();
      case PropTree::Kind::And:
        return encode_gate(t, /*is_and=*/true);
      case PropTree::Kind::Or:
        return encode_gate(t, /*is_and=*/false);
    }
    throw DataError("to_cnf: unreachable");
  }

  GroundProblem finish(EncLit root, std::shared_ptr<const AtomIndex> atoms) {
    if (root.is_const) {
      if (!root.value) clauses_.push_back({});  // unsatisfiable
    } else {
      clauses_.push_back({root.lit});
    }
    GroundProblem p;
    p.atoms = std::move(atoms);
    p.n_original = n_original_;
    p.n_aux = next_var_ - n_original_;
    p.clauses = std::move(clauses_);
    return p;
  }

 private:
  EncLit encode_gate(const PropTree& t, bool is_and) {
    // Normalise the operand list: for AND, constant true operands vanish
    // and a constant false or complementary pair collapses the gate.
    std::vector<int> lits;
    lits.reserve(t.kids.size());
    for (const auto& k : t.kids) {
      EncLit e = encode(k);
      if (e.is_const) {
        if (e.value == is_and) continue;   // neutral operand
        return EncLit::constant(!is_and);  // absorbing operand
      }
      lits.push_back(e.lit);
    }
    // Sort by magnitude so duplicate and complementary literals are adjacent.
    std::sort(lits.begin(), lits.end(), [](int a, int b) {
      int ma = std::abs(a), mb = std::abs(b);
      return ma != mb ? ma < mb : a < b;
    });
    lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
    for (std::size_t i = 0; i + 1 < lits.size(); ++i)
      if (lits[i] == -lits[i + 1]) return EncLit::constant(!is_and);
    if (lits.empty()) return EncLit::constant(is_and);
    if (lits.size() == 1) return EncLit::literal(lits[0]);

    // Structurally identical gates share one definition.
    auto key = std::make_pair(is_and, lits);
    auto it = memo_.find(key);
    if (it != memo_.end()) return EncLit::literal(it->second);

    int g = ++next_var_;  // 1-based literal value of the new variable
    if (is_and) {
      // g <-> (l1 & ... & lk)
      std::vector<int> big{g};
      for (int l : lits) {
        clauses_.push_back({-g, l});
        big.push_back(-l);
      }
      clauses_.push_back(std::move(big));
    } else {
      // g <-> (l1 | ... | lk)
      std::vector<int> big{-g};
      for (int l : lits) {
        clauses_.push_back({g, -l});
        big.push_back(l);
      }
      clauses_.push_back(std::move(big));
    }
    memo_.emplace(std::move(key), g);
    return EncLit::literal(g);
  }

  int n_original_;
  int next_var_;
  std::vector<std::vector<int>> clauses_;
  std::map<std::pair<bool, std::vector<int>>, int> memo_;
};

}  // namespace

GroundProblem to_cnf(const PropTree& t,
                     std::shared_ptr<const AtomIndex> atoms) {
  if (!atoms) throw DataError("to_cnf: null atom index");
  CnfBuilder b(atoms->n_atoms());
  EncLit root = b.encode(t);
  return b.finish(root, std::move(atoms));
}

fol::Formula state_description(const std::vector<bool>& bits,
                               const AtomIndex& idx) {
  if (static_cast<int>(bits.size()) != idx.n_atoms())
    throw DataError("state_description: expected " +
                    std::to_string(idx.n_atoms()) + " bits, got " +
                    std::to_string(bits.size()));
  std::vector<fol::Formula> lits;
  lits.reserve(bits.size());
  for (int i = 0; i < idx.n_atoms(); ++i) {
    fol::Formula a = idx.atom_formula(i);
    lits.push_back(bits[i] ? a : fol::Formula::negation(a));
  }
  return fol::Formula::conjunction(std::move(lits));
}

void write_dimacs(const GroundProblem& p, std::ostream& out) {
  out << "c projected " << p.n_original << '\n';
  out << "p cnf " << p.n_vars() << ' ' << p.clauses.size() << '\n';
  for (const auto& cl : p.clauses) {
    for (int lit : cl) out << lit << ' ';
    out << "0\n";
  }
}

}  // namespace discd::ground
