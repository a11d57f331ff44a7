#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "thor/term.hpp"

namespace thor {

struct SourcePos {
  std::uint32_t line = 1;
  std::uint32_t column = 1;
};

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(SourcePos pos, const std::string& msg);
  SourcePos pos() const { return pos_; }
  const std::string& detail() const { return detail_; }

 private:
  SourcePos pos_;
  std::string detail_;
};

enum class TokenKind : std::uint8_t { atom, variable, integer, punct, op, end };

struct Token {
  TokenKind kind;
  std::string text;    // exact source slice
  std::string value;   // atom name with quotes removed; otherwise == text
  SourcePos pos;
  std::size_t offset = 0;  // byte offset of text in the source
  bool layout_before = false;
};

std::vector<Token> tokenize(std::string_view source);

enum class OpType : std::uint8_t { xfx, xfy, yfx };

struct OpDef {
  int priority;
  OpType type;
};

// Infix operators understood by the reader and the printer.
std::optional<OpDef> infix_op(std::string_view name);

struct Clause {
  Term head;
  std::vector<Term> body;
  std::size_t index = 0;  // position within its predicate
};

// Parses exactly one clause ending in '.'.
Clause parse_clause(const std::vector<Token>& tokens);

// Parses a goal (optionally terminated by '.'), e.g. from the command line.
Term parse_goal(std::string_view text);

// Splits a conjunction into its goals.
std::vector<Term> flatten_conjunction(const Term& t);

std::string to_string(const Clause& c);

struct PredicateKey {
  std::string name;
  std::size_t arity = 0;
  auto operator<=>(const PredicateKey&) const = default;
};

std::string to_string(const PredicateKey& k);

class ConsultError : public std::runtime_error {
 public:
  explicit ConsultError(std::vector<std::string> messages);
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

class PredicateTable {
 public:
  PredicateTable();

  bool is_builtin(const PredicateKey& k) const { return builtins_.contains(k); }
  const std::set<PredicateKey>& builtins() const { return builtins_; }

  // Empty when the predicate has no clauses.
  const std::vector<Clause>& lookup(const PredicateKey& k) const;
  bool defines(const PredicateKey& k) const { return preds_.contains(k); }

  // Keys in order of first definition.
  const std::vector<PredicateKey>& keys() const { return order_; }

  void add(Clause c);

 private:
  std::set<PredicateKey> builtins_;
  std::map<PredicateKey, std::vector<Clause>> preds_;
  std::vector<PredicateKey> order_;
};

// Appends the clauses of `source`. Throws ConsultError with every problem
// found; nothing is added when any clause is rejected.
void consult(std::string_view source, PredicateTable& table);

PredicateTable consult_file(const std::string& path);

}  // namespace thor
