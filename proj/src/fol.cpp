#include "discd/fol.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <utility>

namespace discd::fol {

namespace {

bool is_lower_name(const std::string& s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::islower(c) || std::isdigit(c) || c == '_';
  });
}

bool is_pred_name(const std::string& s) {
  if (s.empty() || !std::isupper(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

std::size_t hash_mix(std::size_t h, std::size_t v) {
  // 64-bit variant of boost::hash_combine.
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

}  // namespace

void Signature::validate() const {
  if (entities.empty()) throw DataError("signature: no entities declared");
  if (predicates.empty()) throw DataError("signature: no predicates declared");
  std::set<std::string> seen;
  for (const auto& e : entities) {
    if (!is_lower_name(e))
      throw DataError("signature: bad entity name '" + e + "'");
    if (!seen.insert(e).second)
      throw DataError("signature: duplicate entity '" + e + "'");
  }
  std::set<std::string> pseen;
  for (const auto& p : predicates) {
    if (!is_pred_name(p.name))
      throw DataError("signature: bad predicate name '" + p.name + "'");
    if (p.arity != 1 && p.arity != 2)
      throw DataError("signature: predicate '" + p.name +
                      "' has unsupported arity " + std::to_string(p.arity));
    if (!pseen.insert(p.name).second)
      throw DataError("signature: duplicate predicate '" + p.name + "'");
  }
}

int Signature::predicate_index(const std::string& name) const {
  for (std::size_t i = 0; i < predicates.size(); ++i)
    if (predicates[i].name == name) return static_cast<int>(i);
  return -1;
}

int Signature::entity_index(const std::string& name) const {
  for (std::size_t i = 0; i < entities.size(); ++i)
    if (entities[i] == name) return static_cast<int>(i);
  return -1;
}

struct Formula::Node {
  Kind kind;
  std::string name;          // predicate (Atom) or bound variable (quantifier)
  std::vector<Term> terms;   // Atom only
  std::vector<Formula> kids;
  std::size_t hash = 0;
};

Formula::Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

namespace {

std::size_t node_hash(Kind kind, const std::string& name,
                      const std::vector<Term>& terms,
                      const std::vector<Formula>& kids) {
  std::size_t h = static_cast<std::size_t>(kind) * 0x9e3779b97f4a7c15ull + 1;
  h = hash_mix(h, std::hash<std::string>{}(name));
  for (const auto& t : terms) {
    h = hash_mix(h, static_cast<std::size_t>(t.kind));
    h = hash_mix(h, std::hash<std::string>{}(t.name));
  }
  for (const auto& k : kids) h = hash_mix(h, k.hash());
  return h;
}

}  // namespace

Formula Formula::atom(std::string predicate, std::vector<Term> terms) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Atom;
  n->name = std::move(predicate);
  n->terms = std::move(terms);
  n->hash = node_hash(n->kind, n->name, n->terms, n->kids);
  return Formula(std::move(n));
}

Formula Formula::negation(Formula f) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Not;
  n->kids.push_back(std::move(f));
  n->hash = node_hash(n->kind, n->name, n->terms, n->kids);
  return Formula(std::move(n));
}

namespace {

Formula make_nary(Kind kind, std::vector<Formula> parts) {
  if (parts.empty())
    throw DataError("formula: connective requires at least one operand");
  if (parts.size() == 1) return std::move(parts[0]);
  std::vector<Formula> flat;
  flat.reserve(parts.size());
  for (auto& p : parts) {
    if (p.kind() == kind) {
      for (const auto& k : p.children()) flat.push_back(k);
    } else {
      flat.push_back(std::move(p));
    }
  }
  return kind == Kind::And ? Formula::conjunction(std::move(flat))
                           : Formula::disjunction(std::move(flat));
}

}  // namespace

Formula Formula::conjunction(std::vector<Formula> parts) {
  if (parts.empty())
    throw DataError("formula: conjunction requires at least one operand");
  if (parts.size() == 1) return std::move(parts[0]);
  bool nested = std::any_of(parts.begin(), parts.end(), [](const Formula& p) {
    return p.kind() == Kind::And;
  });
  if (nested) return make_nary(Kind::And, std::move(parts));
  auto n = std::make_shared<Node>();
  n->kind = Kind::And;
  n->kids = std::move(parts);
  n->hash = node_hash(n->kind, n->name, n->terms, n->kids);
  return Formula(std::move(n));
}

Formula Formula::disjunction(std::vector<Formula> parts) {
  if (parts.empty())
    throw DataError("formula: disjunction requires at least one operand");
  if (parts.size() == 1) return std::move(parts[0]);
  bool nested = std::any_of(parts.begin(), parts.end(), [](const Formula& p) {
    return p.kind() == Kind::Or;
  });
  if (nested) return make_nary(Kind::Or, std::move(parts));
  auto n = std::make_shared<Node>();
  n->kind = Kind::Or;
  n->kids = std::move(parts);
  n->hash = node_hash(n->kind, n->name, n->terms, n->kids);
  return Formula(std::move(n));
}

Formula Formula::implies(Formula lhs, Formula rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Implies;
  n->kids.push_back(std::move(lhs));
  n->kids.push_back(std::move(rhs));
  n->hash = node_hash(n->kind, n->name, n->terms, n->kids);
  return Formula(std::move(n));
}

Formula Formula::iff(Formula lhs, Formula rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Iff;
  n->kids.push_back(std::move(lhs));
  n->kids.push_back(std::move(rhs));
  n->hash = node_hash(n->kind, n->name, n->terms, n->kids);
  return Formula(std::move(n));
}

Formula Formula::forall(std::string variable, Formula body) {
  if (!is_lower_name(variable))
    throw DataError("formula: bad quantified variable '" + variable + "'");
  auto n = std::make_shared<Node>();
  n->kind = Kind::ForAll;
  n->name = std::move(variable);
  n->kids.push_back(std::move(body));
  n->hash = node_hash(n->kind, n->name, n->terms, n->kids);
  return Formula(std::move(n));
}

Formula Formula::exists(std::string variable, Formula body) {
  if (!is_lower_name(variable))
    throw DataError("formula: bad quantified variable '" + variable + "'");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Exists;
  n->name = std::move(variable);
  n->kids.push_back(std::move(body));
  n->hash = node_hash(n->kind, n->name, n->terms, n->kids);
  return Formula(std::move(n));
}

Kind Formula::kind() const { return node_->kind; }

const std::string& Formula::predicate() const { return node_->name; }

const std::vector<Term>& Formula::terms() const { return node_->terms; }

const std::vector<Formula>& Formula::children() const { return node_->kids; }

const std::string& Formula::variable() const { return node_->name; }

std::size_t Formula::hash() const { return node_->hash; }

bool Formula::operator==(const Formula& other) const {
  if (node_ == other.node_) return true;
  if (node_->hash != other.node_->hash) return false;
  if (node_->kind != other.node_->kind || node_->name != other.node_->name ||
      node_->terms != other.node_->terms ||
      node_->kids.size() != other.node_->kids.size())
    return false;
  for (std::size_t i = 0; i < node_->kids.size(); ++i)
    if (!(node_->kids[i] == other.node_->kids[i])) return false;
  return true;
}

namespace {

void render_into(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Kind::Atom: {
      out += f.predicate();
      out += '(';
      for (std::size_t i = 0; i < f.terms().size(); ++i) {
        if (i) out += ',';
        out += f.terms()[i].name;
      }
      out += ')';
      return;
    }
    case Kind::Not:
      out += '~';
      render_into(f.children()[0], out);
      return;
    case Kind::And:
    case Kind::Or: {
      const char* op = f.kind() == Kind::And ? " & " : " | ";
      out += '(';
      for (std::size_t i = 0; i < f.children().size(); ++i) {
        if (i) out += op;
        render_into(f.children()[i], out);
      }
      out += ')';
      return;
    }
    case Kind::Implies:
    case Kind::Iff:
      out += '(';
      render_into(f.children()[0], out);
      out += f.kind() == Kind::Implies ? " -> " : " <-> ";
      render_into(f.children()[1], out);
      out += ')';
      return;
    case Kind::ForAll:
    case Kind::Exists:
      out += f.kind() == Kind::ForAll ? "forall " : "exists ";
      out += f.variable();
      out += ' ';
      render_into(f.children()[0], out);
      return;
  }
}

}  // namespace

std::string Formula::render() const {
  std::string out;
  render_into(*this, out);
  return out;
}

std::string render(const Formula& f) { return f.render(); }

namespace {

void collect_free(const Formula& f, std::set<std::string>& bound,
                  std::set<std::string>& free) {
  switch (f.kind()) {
    case Kind::Atom:
      for (const auto& t : f.terms())
        if (t.kind == TermKind::Variable && !bound.count(t.name))
          free.insert(t.name);
      return;
    case Kind::ForAll:
    case Kind::Exists: {
      bool already = bound.count(f.variable()) > 0;
      bound.insert(f.variable());
      collect_free(f.children()[0], bound, free);
      if (!already) bound.erase(f.variable());
      return;
    }
    default:
      for (const auto& k : f.children()) collect_free(k, bound, free);
      return;
  }
}

}  // namespace

std::set<std::string> free_variables(const Formula& f) {
  std::set<std::string> bound, free;
  collect_free(f, bound, free);
  return free;
}

Formula substitute(const Formula& f, const std::string& variable,
                   const std::string& entity) {
  switch (f.kind()) {
    case Kind::Atom: {
      bool hit = false;
      auto terms = f.terms();
      for (auto& t : terms)
        if (t.kind == TermKind::Variable && t.name == variable) {
          t = Term{TermKind::Entity, entity};
          hit = true;
        }
      return hit ? Formula::atom(f.predicate(), std::move(terms)) : f;
    }
    case Kind::ForAll:
    case Kind::Exists:
      if (f.variable() == variable) return f;  // shadowed
      {
        Formula body = substitute(f.children()[0], variable, entity);
        if (body == f.children()[0]) return f;
        return f.kind() == Kind::ForAll
                   ? Formula::forall(f.variable(), std::move(body))
                   : Formula::exists(f.variable(), std::move(body));
      }
    default: {
      std::vector<Formula> kids;
      kids.reserve(f.children().size());
      bool changed = false;
      for (const auto& k : f.children()) {
        kids.push_back(substitute(k, variable, entity));
        if (!(kids.back() == k)) changed = true;
      }
      if (!changed) return f;
      switch (f.kind()) {
        case Kind::Not:
          return Formula::negation(std::move(kids[0]));
        case Kind::And:
          return Formula::conjunction(std::move(kids));
        case Kind::Or:
          return Formula::disjunction(std::move(kids));
        case Kind::Implies:
          return Formula::implies(std::move(kids[0]), std::move(kids[1]));
        case Kind::Iff:
          return Formula::iff(std::move(kids[0]), std::move(kids[1]));
        default:
          throw DataError("substitute: unreachable");
      }
    }
  }
}

// --- parsing ---------------------------------------------------------------

namespace {

enum class Tok {
  LParen,
  RParen,
  Comma,
  Tilde,
  Amp,
  Pipe,
  Arrow,
  DArrow,
  ForAll,
  Exists,
  PredName,
  LowerName,
  End,
};

struct Token {
  Tok tok;
  std::string text;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws_and_comments();
    int line = line_, col = col_;
    if (pos_ >= text_.size()) return {Tok::End, "", line, col};
    char c = text_[pos_];
    switch (c) {
      case '(': advance(); return {Tok::LParen, "(", line, col};
      case ')': advance(); return {Tok::RParen, ")", line, col};
      case ',': advance(); return {Tok::Comma, ",", line, col};
      case '~': advance(); return {Tok::Tilde, "~", line, col};
      case '&': advance(); return {Tok::Amp, "&", line, col};
      case '|': advance(); return {Tok::Pipe, "|", line, col};
      case '-':
        advance();
        if (pos_ < text_.size() && text_[pos_] == '>') {
          advance();
          return {Tok::Arrow, "->", line, col};
        }
        throw ParseError("expected '>' after '-'", line_, col_);
      case '<':
        advance();
        if (pos_ + 1 < text_.size() && text_[pos_] == '-' &&
            text_[pos_ + 1] == '>') {
          advance();
          advance();
          return {Tok::DArrow, "<->", line, col};
        }
        throw ParseError("expected '->' after '<'", line_, col_);
      default:
        break;
    }
    if (std::isupper(static_cast<unsigned char>(c))) {
      std::string name = read_name();
      return {Tok::PredName, std::move(name), line, col};
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      std::string name = read_name();
      if (name == "forall") return {Tok::ForAll, std::move(name), line, col};
      if (name == "exists") return {Tok::Exists, std::move(name), line, col};
      return {Tok::LowerName, std::move(name), line, col};
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line,
                     col);
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws_and_comments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  std::string read_name() {
    std::string name;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        name += c;
        advance();
      } else {
        break;
      }
    }
    return name;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(const std::string& text, const Signature& sig, bool allow_free)
      : lexer_(text), sig_(sig), allow_free_(allow_free) {
    cur_ = lexer_.next();
  }

  Formula parse_all() {
    Formula f = parse_iff();
    if (cur_.tok != Tok::End)
      throw ParseError("unexpected trailing input '" + cur_.text + "'",
                       cur_.line, cur_.column);
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, cur_.line, cur_.column);
  }

  void bump() { cur_ = lexer_.next(); }

  void expect(Tok tok, const char* what) {
    if (cur_.tok != tok) fail(std::string("expected ") + what);
    bump();
  }

  // iff := impl ('<->' impl)*          left associative
  Formula parse_iff() {
    Formula f = parse_impl();
    while (cur_.tok == Tok::DArrow) {
      bump();
      f = Formula::iff(std::move(f), parse_impl());
    }
    return f;
  }

  // impl := or ('->' impl)?            right associative
  Formula parse_impl() {
    Formula f = parse_or();
    if (cur_.tok == Tok::Arrow) {
      bump();
      return Formula::implies(std::move(f), parse_impl());
    }
    return f;
  }

  Formula parse_or() {
    std::vector<Formula> parts;
    parts.push_back(parse_and());
    while (cur_.tok == Tok::Pipe) {
      bump();
      parts.push_back(parse_and());
    }
    return Formula::disjunction(std::move(parts));
  }

  Formula parse_and() {
    std::vector<Formula> parts;
    parts.push_back(parse_unary());
    while (cur_.tok == Tok::Amp) {
      bump();
      parts.push_back(parse_unary());
    }
    return Formula::conjunction(std::move(parts));
  }

  // unary := '~' unary | quantifier | atom | '(' formula ')'
  // A quantifier body is itself a unary, so "forall x P(x) & Q(x)"
  // scopes the quantifier over P(x) only.
  Formula parse_unary() {
    switch (cur_.tok) {
      case Tok::Tilde:
        bump();
        return Formula::negation(parse_unary());
      case Tok::ForAll:
      case Tok::Exists: {
        bool universal = cur_.tok == Tok::ForAll;
        bump();
        if (cur_.tok != Tok::LowerName)
          fail("expected variable after quantifier");
        std::string var = cur_.text;
        bump();
        bound_.push_back(var);
        Formula body = parse_unary();
        bound_.pop_back();
        return universal ? Formula::forall(std::move(var), std::move(body))
                         : Formula::exists(std::move(var), std::move(body));
      }
      case Tok::LParen: {
        bump();
        Formula f = parse_iff();
        expect(Tok::RParen, "')'");
        return f;
      }
      case Tok::PredName:
        return parse_atom();
      default:
        fail("expected formula, got '" + cur_.text + "'");
    }
  }

  Formula parse_atom() {
    std::string pred = cur_.text;
    int pline = cur_.line, pcol = cur_.column;
    int pidx = sig_.predicate_index(pred);
    if (pidx < 0)
      throw ParseError("unknown predicate '" + pred + "'", pline, pcol);
    bump();
    expect(Tok::LParen, "'(' after predicate name");
    std::vector<Term> terms;
    terms.push_back(parse_term());
    while (cur_.tok == Tok::Comma) {
      bump();
      terms.push_back(parse_term());
    }
    if (static_cast<int>(terms.size()) != sig_.predicates[pidx].arity)
      throw ParseError("predicate '" + pred + "' expects " +
                           std::to_string(sig_.predicates[pidx].arity) +
                           " argument(s), got " + std::to_string(terms.size()),
                       pline, pcol);
    expect(Tok::RParen, "')'");
    return Formula::atom(std::move(pred), std::move(terms));
  }

  Term parse_term() {
    if (cur_.tok != Tok::LowerName)
      fail("expected term, got '" + cur_.text + "'");
    std::string name = cur_.text;
    bool bound =
        std::find(bound_.rbegin(), bound_.rend(), name) != bound_.rend();
    if (!bound && sig_.entity_index(name) < 0 && !allow_free_)
      fail("unbound name '" + name + "' is neither a quantified variable "
           "nor a declared entity");
    bump();
    if (bound || sig_.entity_index(name) < 0)
      return Term{TermKind::Variable, std::move(name)};
    return Term{TermKind::Entity, std::move(name)};
  }

  Lexer lexer_;
  Token cur_{Tok::End, "", 1, 1};
  const Signature& sig_;
  bool allow_free_;
  std::vector<std::string> bound_;
};

}  // namespace

Formula parse(const std::string& text, const Signature& sig) {
  return Parser(text, sig, false).parse_all();
}

Formula parse_open(const std::string& text, const Signature& sig) {
  return Parser(text, sig, true).parse_all();
}

}  // namespace discd::fol
