#include "thor/reader.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace thor {

SyntaxError::SyntaxError(SourcePos pos, const std::string& msg)
    : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) +
                         ": syntax error: " + msg),
      pos_(pos),
      detail_(msg) {}

ConsultError::ConsultError(std::vector<std::string> messages)
    : std::runtime_error([&] {
        std::string all;
        for (const auto& m : messages) {
          if (!all.empty()) all += '\n';
          all += m;
        }
        return all;
      }()),
      messages_(std::move(messages)) {}

std::optional<OpDef> infix_op(std::string_view name) {
  if (name == ":-") return OpDef{1200, OpType::xfx};
  if (name == ",") return OpDef{1000, OpType::xfy};
  if (name == "=" || name == "==" || name == "\\==" || name == "is" || name == "=:=" ||
      name == "=\\=" || name == "<" || name == ">" || name == "=<" || name == ">=")
    return OpDef{700, OpType::xfx};
  if (name == "+" || name == "-") return OpDef{500, OpType::yfx};
  if (name == "*" || name == "//" || name == "mod") return OpDef{400, OpType::yfx};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

bool is_symbol_char(char c) {
  switch (c) {
    case '+': case '-': case '*': case '/': case '\\': case '^': case '<':
    case '>': case '=': case '~': case ':': case '.': case '?': case '@':
    case '#': case '&': case '$':
      return true;
    default:
      return false;
  }
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      bool layout = skip_layout();
      if (i_ >= src_.size()) break;
      Token t = next();
      t.layout_before = layout;
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  std::string_view src_;
  std::size_t i_ = 0;
  SourcePos pos_{};

  char peek(std::size_t k = 0) const { return i_ + k < src_.size() ? src_[i_ + k] : '\0'; }

  void advance() {
    if (src_[i_] == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    ++i_;
  }

  bool skip_layout() {
    bool skipped = false;
    while (i_ < src_.size()) {
      char c = src_[i_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        skipped = true;
      } else if (c == '%') {
        while (i_ < src_.size() && src_[i_] != '\n') advance();
        skipped = true;
      } else {
        break;
      }
    }
    return skipped;
  }

  Token make(TokenKind kind, std::size_t start, SourcePos at) const {
    Token t;
    t.kind = kind;
    t.text = std::string(src_.substr(start, i_ - start));
    t.value = t.text;
    t.pos = at;
    t.offset = start;
    return t;
  }

  Token next() {
    const std::size_t start = i_;
    const SourcePos at = pos_;
    const char c = peek();

    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      Token t = make(TokenKind::integer, start, at);
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc()) throw SyntaxError(at, "integer literal out of range: " + t.text);
      return t;
    }
    if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
      while (is_alnum(peek())) advance();
      return make(TokenKind::variable, start, at);
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      while (is_alnum(peek())) advance();
      Token t = make(TokenKind::atom, start, at);
      if (t.text == "is" || t.text == "mod") t.kind = TokenKind::op;
      return t;
    }
    if (c == '\'') return quoted(start, at);
    if (c == '(' || c == ')' || c == '[' || c == ']' || c == ',' || c == '|') {
      advance();
      return make(TokenKind::punct, start, at);
    }
    if (c == '!' || c == ';') {
      advance();
      return make(TokenKind::atom, start, at);
    }
    if (is_symbol_char(c)) {
      // A lone '.' followed by layout, '%' or end of input ends the clause.
      if (c == '.') {
        char n = peek(1);
        if (n == '\0' || n == '%' || std::isspace(static_cast<unsigned char>(n))) {
          advance();
          return make(TokenKind::end, start, at);
        }
      }
      while (is_symbol_char(peek())) {
        // a trailing end-of-clause dot is never part of the run
        if (peek() == '.' && i_ > start) {
          char n = peek(1);
          if (n == '\0' || n == '%' || std::isspace(static_cast<unsigned char>(n))) break;
        }
        advance();
      }
      Token t = make(TokenKind::atom, start, at);
      if (infix_op(t.text)) t.kind = TokenKind::op;
      return t;
    }
    throw SyntaxError(at, std::string("illegal character '") + c + "'");
  }

  Token quoted(std::size_t start, SourcePos at) {
    advance();  // opening quote
    std::string value;
    for (;;) {
      if (i_ >= src_.size()) throw SyntaxError(at, "unterminated quoted atom");
      char c = peek();
      if (c == '\'') {
        if (peek(1) == '\'') {
          value += '\'';
          advance();
          advance();
          continue;
        }
        advance();
        break;
      }
      if (c == '\\') {
        char n = peek(1);
        if (n == '\0') throw SyntaxError(at, "unterminated quoted atom");
        advance();
        advance();
        switch (n) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          default: value += n; break;
        }
        continue;
      }
      if (c == '\n') throw SyntaxError(at, "unterminated quoted atom");
      value += c;
      advance();
    }
    Token t = make(TokenKind::atom, start, at);
    t.value = std::move(value);
    return t;
  }
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(const std::vector<Token>& toks) : toks_(toks) {}

  Term parse_top() {
    Term t = parse(1200).first;
    if (!at_end()) {
      const Token& tok = cur();
      if (tok.kind != TokenKind::end) unexpected(tok);
      ++i_;
    }
    if (!at_end()) unexpected(cur());
    return t;
  }

  SourcePos end_pos() const {
    return toks_.empty() ? SourcePos{} : toks_.back().pos;
  }

 private:
  const std::vector<Token>& toks_;
  std::size_t i_ = 0;
  int anon_ = 0;

  bool at_end() const { return i_ >= toks_.size(); }
  const Token& cur() const { return toks_[i_]; }

  [[noreturn]] void unexpected(const Token& t) const {
    throw SyntaxError(t.pos, "unexpected token '" + t.text + "'");
  }
  [[noreturn]] void eof() const { throw SyntaxError(end_pos(), "unexpected end of clause"); }

  const Token& take() {
    if (at_end()) eof();
    return toks_[i_++];
  }

  void expect_punct(std::string_view p) {
    if (at_end()) eof();
    const Token& t = cur();
    if (t.kind != TokenKind::punct || t.text != p) unexpected(t);
    ++i_;
  }

  bool is_punct(std::string_view p, std::size_t k = 0) const {
    return i_ + k < toks_.size() && toks_[i_ + k].kind == TokenKind::punct &&
           toks_[i_ + k].text == p;
  }

  bool next_is_open_paren() const {
    return i_ + 1 < toks_.size() && toks_[i_ + 1].kind == TokenKind::punct &&
           toks_[i_ + 1].text == "(" && !toks_[i_ + 1].layout_before;
  }

  // Tokens after which an operator name stands for itself as an atom.
  bool terminator_follows() const {
    if (i_ + 1 >= toks_.size()) return true;
    const Token& n = toks_[i_ + 1];
    if (n.kind == TokenKind::end) return true;
    if (n.kind == TokenKind::op) return true;
    return n.kind == TokenKind::punct &&
           (n.text == ")" || n.text == "]" || n.text == "," || n.text == "|");
  }

  std::vector<Term> parse_args() {
    expect_punct("(");
    std::vector<Term> args;
    args.push_back(parse(999).first);
    while (is_punct(",")) {
      ++i_;
      args.push_back(parse(999).first);
    }
    expect_punct(")");
    return args;
  }

  Term parse_list() {
    expect_punct("[");
    if (is_punct("]")) {
      ++i_;
      return Term::atom("[]");
    }
    std::vector<Term> items;
    items.push_back(parse(999).first);
    while (is_punct(",")) {
      ++i_;
      items.push_back(parse(999).first);
    }
    Term tail = Term::atom("[]");
    if (is_punct("|")) {
      ++i_;
      tail = parse(999).first;
    }
    expect_punct("]");
    return make_list(std::move(items), std::move(tail));
  }

  std::pair<Term, int> parse_primary(int max_priority) {
    if (at_end()) eof();
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::integer: {
        ++i_;
        std::int64_t v = 0;
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        return {Term::integer(v), 0};
      }
      case TokenKind::variable: {
        ++i_;
        if (t.text == "_") return {Term::var("_#" + std::to_string(anon_++)), 0};
        return {Term::var(t.text), 0};
      }
      case TokenKind::punct:
        if (t.text == "(") {
          ++i_;
          Term inner = parse(1200).first;
          expect_punct(")");
          return {std::move(inner), 0};
        }
        if (t.text == "[") return {parse_list(), 0};
        unexpected(t);
      case TokenKind::end:
        unexpected(t);
      case TokenKind::op:
      case TokenKind::atom:
        break;
    }
    std::string name = t.value;
    if (next_is_open_paren()) {
      ++i_;
      return {Term::compound(std::move(name), parse_args()), 0};
    }
    if (t.kind == TokenKind::op && name == "-") {
      // "-" glued to an integer is a negative literal
      if (i_ + 1 < toks_.size() && toks_[i_ + 1].kind == TokenKind::integer &&
          !toks_[i_ + 1].layout_before) {
        const Token& num = toks_[i_ + 1];
        i_ += 2;
        std::int64_t v = 0;
        std::from_chars(num.text.data(), num.text.data() + num.text.size(), v);
        return {Term::integer(-v), 0};
      }
      if (!terminator_follows()) {
        ++i_;
        if (max_priority < 200) throw SyntaxError(t.pos, "operator priority clash");
        Term arg = parse(200).first;
        return {Term::compound("-", {std::move(arg)}), 200};
      }
    }
    ++i_;
    if (t.kind == TokenKind::op) {
      int pri = infix_op(name)->priority;
      return {Term::atom(std::move(name)), pri <= max_priority ? pri : 0};
    }
    return {Term::atom(std::move(name)), 0};
  }

  std::pair<Term, int> parse(int max_priority) {
    auto [left, left_pri] = parse_primary(max_priority);
    for (;;) {
      if (at_end()) break;
      const Token& t = cur();
      std::optional<OpDef> op;
      if (t.kind == TokenKind::op) op = infix_op(t.value);
      else if (t.kind == TokenKind::punct && t.text == ",") op = infix_op(",");
      if (!op || op->priority > max_priority) break;
      int left_max = op->type == OpType::yfx ? op->priority : op->priority - 1;
      int right_max = op->type == OpType::xfy ? op->priority : op->priority - 1;
      if (left_pri > left_max) break;
      std::string name = t.value;
      ++i_;
      Term right = parse(right_max).first;
      left = Term::compound(std::move(name), {std::move(left), std::move(right)});
      left_pri = op->priority;
    }
    return {std::move(left), left_pri};
  }
};

void check_head(const Term& head, SourcePos at) {
  if (head.is_var()) throw SyntaxError(at, "clause head is a variable");
  if (head.is_integer()) throw SyntaxError(at, "clause head is an integer");
}

}  // namespace

std::vector<Term> flatten_conjunction(const Term& t) {
  std::vector<Term> out;
  const Term* cur = &t;
  while (cur->is_compound() && cur->name == "," && cur->arity() == 2) {
    auto rest = flatten_conjunction(cur->args[0]);
    out.insert(out.end(), rest.begin(), rest.end());
    cur = &cur->args[1];
  }
  out.push_back(*cur);
  return out;
}

Clause parse_clause(const std::vector<Token>& tokens) {
  if (tokens.empty()) throw SyntaxError(SourcePos{}, "empty clause");
  if (tokens.back().kind != TokenKind::end)
    throw SyntaxError(tokens.back().pos, "clause does not end with '.'");
  Parser p(tokens);
  Term t = p.parse_top();
  const SourcePos at = tokens.front().pos;
  Clause c;
  if (t.is_compound() && t.name == ":-" && t.arity() == 2) {
    c.head = std::move(t.args[0]);
    c.body = flatten_conjunction(t.args[1]);
  } else {
    c.head = std::move(t);
  }
  check_head(c.head, at);
  for (const auto& g : c.body) {
    if (g.is_integer()) throw SyntaxError(at, "body goal is an integer");
  }
  return c;
}

Term parse_goal(std::string_view text) {
  auto toks = tokenize(text);
  if (toks.empty()) throw SyntaxError(SourcePos{}, "empty goal");
  Parser p(toks);
  Term t = p.parse_top();
  if (t.is_var() || t.is_integer()) throw SyntaxError(toks.front().pos, "goal is not callable");
  return t;
}

std::string to_string(const Clause& c) {
  if (c.body.empty()) return to_string(c.head) + ".";
  Term body = c.body.back();
  for (auto it = c.body.rbegin() + 1; it != c.body.rend(); ++it) {
    body = Term::compound(",", {*it, std::move(body)});
  }
  return to_string(Term::compound(":-", {c.head, std::move(body)})) + ".";
}

std::string to_string(const PredicateKey& k) { return k.name + "/" + std::to_string(k.arity); }

// ---------------------------------------------------------------------------
// Predicate table

PredicateTable::PredicateTable() {
  for (const char* n : {"true", "fail"}) builtins_.insert({n, 0});
  for (const char* n : {"=", "==", "\\==", "is", "=:=", "=\\=", "<", ">", "=<", ">="})
    builtins_.insert({n, 2});
}

const std::vector<Clause>& PredicateTable::lookup(const PredicateKey& k) const {
  static const std::vector<Clause> none;
  auto it = preds_.find(k);
  return it == preds_.end() ? none : it->second;
}

void PredicateTable::add(Clause c) {
  PredicateKey key{c.head.name, c.head.arity()};
  if (builtins_.contains(key))
    throw ConsultError({"cannot redefine built-in " + to_string(key)});
  auto [it, fresh] = preds_.try_emplace(key);
  if (fresh) order_.push_back(key);
  c.index = it->second.size();
  it->second.push_back(std::move(c));
}

void consult(std::string_view source, PredicateTable& table) {
  std::vector<Token> tokens;
  try {
    tokens = tokenize(source);
  } catch (const SyntaxError& e) {
    throw ConsultError({e.what()});
  }

  std::vector<std::string> errors;
  std::vector<Clause> clauses;
  std::vector<Token> current;
  for (auto& t : tokens) {
    bool end = t.kind == TokenKind::end;
    current.push_back(std::move(t));
    if (!end) continue;
    try {
      clauses.push_back(parse_clause(current));
    } catch (const SyntaxError& e) {
      errors.push_back(e.what());
    }
    current.clear();
  }
  if (!current.empty()) {
    errors.push_back(SyntaxError(current.back().pos, "missing '.' at end of clause").what());
  }
  for (const auto& c : clauses) {
    PredicateKey key{c.head.name, c.head.arity()};
    if (table.is_builtin(key)) errors.push_back("cannot redefine built-in " + to_string(key));
  }
  if (!errors.empty()) throw ConsultError(std::move(errors));
  for (auto& c : clauses) table.add(std::move(c));
}

PredicateTable consult_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConsultError({"cannot open " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  PredicateTable table;
  consult(ss.str(), table);
  return table;
}

}  // namespace thor
