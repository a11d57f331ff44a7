#include "thor/term.hpp"

#include <cctype>
#include <map>

#include "thor/reader.hpp"

namespace thor {

Term Term::var(std::string name) {
  Term t;
  t.kind = Kind::var;
  t.name = std::move(name);
  return t;
}

Term Term::atom(std::string name) {
  Term t;
  t.kind = Kind::atom;
  t.name = std::move(name);
  return t;
}

Term Term::integer(std::int64_t v) {
  Term t;
  t.kind = Kind::integer;
  t.value = v;
  return t;
}

Term Term::compound(std::string name, std::vector<Term> args) {
  Term t;
  t.kind = Kind::compound;
  t.name = std::move(name);
  t.args = std::move(args);
  return t;
}

Term make_list(std::vector<Term> items, Term tail) {
  Term out = std::move(tail);
  for (auto it = items.rbegin(); it != items.rend(); ++it) {
    out = Term::compound(".", {std::move(*it), std::move(out)});
  }
  return out;
}

namespace {

void normalize(Term& t, std::map<std::string, std::string>& names) {
  switch (t.kind) {
    case Term::Kind::var: {
      auto [it, fresh] = names.try_emplace(t.name, "");
      if (fresh) it->second = "_" + std::to_string(names.size() - 1);
      t.name = it->second;
      break;
    }
    case Term::Kind::compound:
      for (auto& a : t.args) normalize(a, names);
      break;
    default:
      break;
  }
}

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

std::string quote_atom(std::string_view name) {
  if (!atom_needs_quotes(name)) return std::string(name);
  std::string out = "'";
  for (char c : name) {
    if (c == '\'') out += "''";
    else if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else if (c == '\t') out += "\\t";
    else out += c;
  }
  out += '\'';
  return out;
}

void print(const Term& t, int max_priority, std::string& out);

void print_list(const Term& t, std::string& out) {
  out += '[';
  const Term* cur = &t;
  bool first = true;
  while (cur->is_compound() && cur->name == "." && cur->arity() == 2) {
    if (!first) out += ',';
    first = false;
    print(cur->args[0], 999, out);
    cur = &cur->args[1];
  }
  if (!(cur->is_atom() && cur->name == "[]")) {
    out += '|';
    print(*cur, 999, out);
  }
  out += ']';
}

void print(const Term& t, int max_priority, std::string& out) {
  switch (t.kind) {
    case Term::Kind::var:
      out += t.name;
      return;
    case Term::Kind::integer:
      out += std::to_string(t.value);
      return;
    case Term::Kind::atom:
      if (max_priority < 1200 && infix_op(t.name)) {
        out += '(';
        out += quote_atom(t.name);
        out += ')';
      } else {
        out += quote_atom(t.name);
      }
      return;
    case Term::Kind::compound:
      break;
  }
  if (t.name == "." && t.arity() == 2) {
    print_list(t, out);
    return;
  }
  if (t.arity() == 2) {
    if (auto op = infix_op(t.name)) {
      int left = op->type == OpType::yfx ? op->priority : op->priority - 1;
      int right = op->type == OpType::xfy ? op->priority : op->priority - 1;
      bool paren = op->priority > max_priority;
      if (paren) out += '(';
      print(t.args[0], left, out);
      if (t.name == ",") {
        out += ',';
      } else {
        out += ' ';
        out += t.name;
        out += ' ';
      }
      print(t.args[1], right, out);
      if (paren) out += ')';
      return;
    }
  }
  out += quote_atom(t.name);
  out += '(';
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    if (i) out += ',';
    print(t.args[i], 999, out);
  }
  out += ')';
}

}  // namespace

Term normalize_vars(const Term& t) {
  Term out = t;
  std::map<std::string, std::string> names;
  normalize(out, names);
  return out;
}

bool atom_needs_quotes(std::string_view name) {
  if (name.empty()) return true;
  if (name == "[]" || name == "!" || name == ";") return false;
  if (std::islower(static_cast<unsigned char>(name[0]))) {
    for (char c : name) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return true;
    }
    return false;
  }
  if (name == ".") return true;
  for (char c : name) {
    if (!is_symbol_char(c)) return true;
  }
  return false;
}

std::string to_string(const Term& t) {
  std::string out;
  print(t, 1200, out);
  return out;
}

}  // namespace thor
