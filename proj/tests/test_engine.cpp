#include <gtest/gtest.h>

#include <random>

#include "harness.hpp"
#include "naive.hpp"
#include "oracles.hpp"
#include "thor/machine.hpp"

using namespace thor;

namespace {

using VarMap = std::vector<std::pair<std::string, Cell>>;

struct HaltAlways : ChoicePointHook {
  bool on_choice_point(Machine&) override { return true; }
};

// A machine started on `goal` against `source`, with no choice points.
struct Bench {
  explicit Bench(const std::string& source = "c(1). c(2).", const std::string& goal = "true")
      : l(harness::load_source(source, goal)), m(*l->program, 0) {
    m.start(l->query);
  }
  // Builds t on the heap and returns the address of its functor cell.
  Address put(const std::string& text) {
    const Cell c = m.import_term(parse_goal("h(" + text + ")"), vars);
    return c.address() + 1;
  }
  Cell var(const std::string& name) const {
    for (const auto& [n, c] : vars)
      if (n == name) return c;
    throw std::logic_error("no such variable");
  }
  std::string show(const std::string& name) const { return to_string(m.export_term(var(name))); }

  std::unique_ptr<harness::Loaded> l;
  Machine m;
  VarMap vars;
};

std::uint64_t count(const std::string& file, const std::string& goal) {
  auto l = harness::load_file(file, goal);
  return solve(*l->program, l->query, SolveMode::all, [](const Machine&) {});
}

std::vector<std::string> engine_keys(const harness::Loaded& l, SolveMode mode = SolveMode::all) {
  std::vector<std::string> out;
  solve(*l.program, l.query, mode, [&](const Machine& m) { out.push_back(harness::key(m.answer(l.query))); });
  return out;
}

}  // namespace

TEST(Deref, UnboundIsSelfReference) {
  Bench b;
  const Address a = b.put("X");
  const Cell x = b.m.cell(a);
  ASSERT_TRUE(x.is_ref());
  EXPECT_EQ(b.m.deref(x), x);
  EXPECT_EQ(b.m.cell(x.address()), x);
}

TEST(Deref, FollowsChain) {
  Bench b;
  b.put("p(X, Y)");
  b.m.bind(b.var("X"), b.var("Y"));
  b.m.bind(b.var("Y"), Cell::integer(3));
  EXPECT_EQ(b.m.deref(b.var("X")), Cell::integer(3));
}

TEST(Deref, StructureStops) {
  Bench b;
  const Address a = b.put("f(a)");
  const Cell s = b.m.cell(a);
  ASSERT_TRUE(s.is_str());
  EXPECT_EQ(b.m.deref(s), s);
}

TEST(Bind, TrailsOnlyBelowYoungestChoicePoint) {
  Bench b("c(1). c(2).", "Y = f(Z), c(W)");
  HaltAlways halt;
  b.m.set_hook(&halt);
  b.m.start(b.l->query);
  ASSERT_EQ(b.m.run(), Machine::Event::halted);
  ASSERT_EQ(b.m.choice_top(), 1u);
  const std::size_t tr0 = b.m.trail_top();

  // a fresh variable lives above the saved heap top: unconditional
  const Address fresh = b.put("V");
  b.m.bind(b.m.cell(fresh), Cell::integer(7));
  EXPECT_EQ(b.m.trail_top(), tr0);

  // Z was created before the choice point: conditional
  const Address rec = b.m.heap_address(0);
  const Cell y = b.m.deref(b.m.cell(rec + 1));
  ASSERT_TRUE(y.is_str());
  const Cell z = b.m.deref(b.m.cell(y.address() + 1));
  ASSERT_TRUE(z.is_ref());
  b.m.bind(z, Cell::integer(5));
  EXPECT_EQ(b.m.trail_top(), tr0 + 1);

  b.m.restore_to(0);
  EXPECT_EQ(b.m.trail_top(), tr0);
  EXPECT_TRUE(b.m.deref(b.m.cell(y.address() + 1)).is_ref());
}

TEST(Unify, BindsBothSides) {
  Bench b;
  const Address l = b.put("f(X,b)");
  const Address r = b.put("f(a,Y)");
  ASSERT_TRUE(b.m.unify(l, r));
  EXPECT_EQ(b.show("X"), "a");
  EXPECT_EQ(b.show("Y"), "b");
}

TEST(Unify, FailureLeavesNoBindings) {
  Bench b;
  const Address l = b.put("g(X, a, Y)");
  const Address r = b.put("g(1, b, 2)");
  EXPECT_FALSE(b.m.unify(l, r));
  EXPECT_EQ(b.show("X"), "_0");
  EXPECT_EQ(b.show("Y"), "_0");
  EXPECT_FALSE(b.m.unify(b.put("a"), b.put("b")));
}

TEST(Unify, ListSugar) {
  Bench b;
  ASSERT_TRUE(b.m.unify(b.put("[1,2|T]"), b.put("[1,2,3]")));
  EXPECT_EQ(b.show("T"), "[3]");
}

TEST(Unify, SharedVariablesAndDepth) {
  Bench b;
  ASSERT_TRUE(b.m.unify(b.put("p(X, X, Z)"), b.put("p(Y, f(Y2), Y)")));
  EXPECT_EQ(b.show("Z"), "f(_0)");
  EXPECT_FALSE(b.m.unify(b.put("q(A, A)"), b.put("q(1, 2)")));
}

TEST(Arith, HandTable) {
  // worked out by hand before the evaluator existed
  const std::vector<std::pair<std::string, std::int64_t>> table{
      {"2+3*4", 14},     {"(2+3)*4", 20},  {"7 // 2", 3},     {"-7 // 2", -3},
      {"7 // -2", -3},   {"-7 mod 2", 1},  {"7 mod -2", -1},  {"-7 mod -2", -1},
      {"7 mod 2", 1},    {"6 mod 3", 0},   {"-(5)", -5},      {"1 - 2 - 3", -4},
      {"10 - 4 * 2", 2}, {"0 - 0", 0},     {"- 3 * - 3", 9},  {"17 mod 5 + 17 // 5", 5}};
  for (const auto& [expr, want] : table) {
    Bench b;
    const Address a = b.put(expr);
    EXPECT_EQ(b.m.eval_arith(b.m.cell(a)), want) << expr;
  }
}

TEST(Arith, Errors) {
  auto kind_of = [](const std::string& expr) {
    Bench b;
    const Address a = b.put(expr);
    try {
      b.m.eval_arith(b.m.cell(a));
    } catch (const EngineError& e) {
      return e.kind();
    }
    ADD_FAILURE() << expr << " evaluated";
    return ErrorKind::resource;
  };
  EXPECT_EQ(kind_of("X + 1"), ErrorKind::instantiation);
  EXPECT_EQ(kind_of("foo + 1"), ErrorKind::type);
  EXPECT_EQ(kind_of("1 // 0"), ErrorKind::evaluation);
  EXPECT_EQ(kind_of("1 mod 0"), ErrorKind::evaluation);
  const std::string max = std::to_string(kMaxInt);
  EXPECT_EQ(kind_of(max + " + 1"), ErrorKind::representation);
  EXPECT_EQ(kind_of(max + " * 2"), ErrorKind::representation);
  EXPECT_EQ(kind_of("- " + max + " - 2"), ErrorKind::representation);
}

TEST(Arith, AgreesWithReferenceOnRandomExpressions) {
  std::mt19937_64 rng(7);
  auto leaf = [&] { return std::to_string(static_cast<int>(rng() % 41) - 20); };
  std::function<std::string(int)> gen = [&](int depth) -> std::string {
    if (depth == 0 || rng() % 4 == 0) return leaf();
    static const char* ops[] = {"+", "-", "*", "//", "mod"};
    return "(" + gen(depth - 1) + " " + ops[rng() % 5] + " " + gen(depth - 1) + ")";
  };
  const PredicateTable empty;
  naive::Interpreter ref(empty);
  for (int i = 0; i < 400; ++i) {
    const std::string expr = gen(4);
    std::string want;
    try {
      want = ref.solve(parse_goal("R is " + expr)).at(0);
    } catch (const naive::Error& e) {
      want = e.kind();
    }
    Bench b;
    std::string got;
    try {
      got = "ans(" + std::to_string(b.m.eval_arith(b.m.cell(b.put(expr)))) + ")";
    } catch (const EngineError& e) {
      got = to_string(e.kind());
    }
    EXPECT_EQ(got, want) << expr;
  }
}

TEST(Builtins, Comparisons) {
  auto holds = [](const std::string& goal) {
    auto l = harness::load_source("z.", goal);
    return solve(*l->program, l->query, SolveMode::all, [](const Machine&) {});
  };
  EXPECT_EQ(holds("3 =:= 1+2"), 1u);
  EXPECT_EQ(holds("a \\== b"), 1u);
  EXPECT_EQ(holds("a == a"), 1u);
  EXPECT_EQ(holds("f(X) == f(X)"), 1u);
  EXPECT_EQ(holds("f(X) == f(Y)"), 0u);
  EXPECT_EQ(holds("X = Y, X == Y"), 1u);
  EXPECT_EQ(holds("3 =\\= 4, 3 < 4, 4 > 3, 3 =< 3, 3 >= 3"), 1u);
  EXPECT_EQ(holds("3 < 3"), 0u);
  EXPECT_EQ(holds("X is 2 * 3, X =:= 6"), 1u);
  EXPECT_EQ(holds("true, fail"), 0u);
  EXPECT_EQ(holds("X = f(Y), Y = 1, X = f(1)"), 1u);
}

TEST(Solve, QueensAgainstPermutationOracle) {
  for (int n : {4, 6, 8}) {
    auto l = harness::load_file("queens.pl", "queens(" + std::to_string(n) + ",Q)");
    std::vector<std::string> got;
    solve(*l->program, l->query, SolveMode::all,
          [&](const Machine& m) { got.push_back(to_string(m.answer(l->query)[0].second)); });
    EXPECT_EQ(harness::sorted(got), harness::sorted(oracle::queens(n))) << n;
  }
  EXPECT_EQ(count("queens.pl", "queens(0,Q)"), 1u);
  EXPECT_EQ(count("queens.pl", "queens(3,Q)"), 0u);
}

TEST(Solve, MemberInClauseOrder) {
  auto l = harness::load_source("member(X,[X|_]). member(X,[_|T]) :- member(X,T).",
                                "member(X,[a,b,c])");
  std::vector<std::string> got;
  solve(*l->program, l->query, SolveMode::all,
        [&](const Machine& m) { got.push_back(to_string(m.answer(l->query)[0].second)); });
  EXPECT_EQ(got, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Solve, FirstModeStopsAtOne) {
  auto l = harness::load_file("map.pl", "map(C)");
  std::vector<std::string> got;
  solve(*l->program, l->query, SolveMode::first,
        [&](const Machine& m) { got.push_back(to_string(m.answer(l->query)[0].second)); });
  ASSERT_EQ(got.size(), 1u);
  EXPECT_TRUE(oracle::valid_coloring(got[0], 10, oracle::map10_edges()));
}

TEST(Solve, UnknownPredicateIsExistenceError) {
  auto l = harness::load_source("p :- nothing_here(1).", "p");
  try {
    solve(*l->program, l->query, SolveMode::all, [](const Machine&) {});
    FAIL();
  } catch (const EngineError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::existence);
    EXPECT_NE(std::string(e.what()).find("nothing_here/1"), std::string::npos);
  }
}

TEST(Solve, StackOverflowIsResourceError) {
  auto l = harness::load_source("loop(X) :- loop(f(X)).", "loop(a)");
  StackCapacity small;
  small.heap = 1 << 12;
  EXPECT_THROW(solve(*l->program, l->query, SolveMode::all, [](const Machine&) {}, small),
               EngineError);
}

TEST(Solve, CyclicTermPrintsBounded) {
  auto l = harness::load_source("z.", "X = f(X)");
  std::string shown;
  solve(*l->program, l->query, SolveMode::all,
        [&](const Machine& m) { shown = to_string(m.answer(l->query)[0].second); });
  EXPECT_NE(shown.find("..."), std::string::npos);
}

TEST(Solve, BenchmarksAgainstOracles) {
  auto values = [](const std::string& file, const std::string& goal) {
    auto l = harness::load_file(file, goal);
    std::vector<std::string> got;
    solve(*l->program, l->query, SolveMode::all,
          [&](const Machine& m) { got.push_back(to_string(m.answer(l->query)[0].second)); });
    return harness::sorted(got);
  };
  EXPECT_EQ(values("map.pl", "map(C)"),
            harness::sorted(oracle::colorings(10, oracle::map10_edges())));
  EXPECT_EQ(values("mapbigger.pl", "map([red,green|C])").size(),
            oracle::colorings_with_prefix(17, oracle::map17_edges(), {0, 1}).size());
  EXPECT_EQ(values("ham.pl", "ham(C)"),
            harness::sorted(oracle::hamiltonian_cycles(14, oracle::circulant14())));
  EXPECT_EQ(values("puzzle.pl", "magic(S)"), harness::sorted(oracle::magic_squares()));
  EXPECT_EQ(values("maze4x4.pl", "walk(P)"), harness::sorted(oracle::grid_walks(4)));
}

// Same answers, same order, as the tree-walking reference interpreter.
TEST(Solve, MatchesReferenceInterpreter) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"queens.pl", "queens(6,Q)"}, {"map.pl", "map(C)"}, {"puzzle.pl", "magic(S)"},
      {"maze4x4.pl", "walk(P)"}};
  for (const auto& [file, goal] : cases) {
    auto l = harness::load_file(file, goal);
    naive::Interpreter ref(l->table);
    EXPECT_EQ(engine_keys(*l), ref.solve(parse_goal(goal))) << goal;
  }
}

TEST(Solve, SmallProgramsMatchReference) {
  const std::string src = R"(
    app([], L, L).
    app([H|T], L, [H|R]) :- app(T, L, R).
    nat(z). nat(s(N)) :- nat2(N).
    nat2(z). nat2(s(z)).
    len([], 0).
    len([_|T], N) :- len(T, M), N is M + 1.
    twice(X, Y) :- Y = f(X, X).
    pick(X, [X|_]). pick(X, [_|T]) :- pick(X, T).
    )";
  for (const std::string goal :
       {"app(X, Y, [1,2,3])", "app([a|X], [c], [a,b,c])", "nat(X)", "len([a,b,c], N)",
        "twice(A, B), A = g(C)", "pick(X, [1,2,3]), pick(Y, [X,4]), X \\== Y",
        "app(X, [Y|Z], [1,2]), len(X, N)", "pick(X, [a,b]), pick(X, [b,c])", "len([X,Y], N)"}) {
    auto l = harness::load_source(src, goal);
    naive::Interpreter ref(l->table);
    EXPECT_EQ(engine_keys(*l), ref.solve(parse_goal(goal))) << goal;
  }
}

// Every answer, substituted back into the goal, is provable by the reference.
TEST(Solve, AnswersAreSound) {
  auto l = harness::load_file("ham.pl", "ham(C)");
  naive::Interpreter ref(l->table);
  std::size_t checked = 0;
  solve(*l->program, l->query, SolveMode::all, [&](const Machine& m) {
    if (checked++ % 50) return;
    const std::string c = to_string(m.answer(l->query)[0].second);
    EXPECT_EQ(ref.solve(parse_goal("ham(" + c + ")"), 1).size(), 1u) << c;
  });
  EXPECT_EQ(checked, 1538u);
}

// After backtracking to a choice point the bindings are exactly those that
// existed when it was pushed.
TEST(Trail, RestoreMatchesSnapshot) {
  struct Countdown : ChoicePointHook {
    bool on_choice_point(Machine&) override { return --left <= 0; }
    int left = 0;
  };
  auto l = harness::load_file("queens.pl", "queens(6,Q)");
  std::mt19937_64 rng(3);
  int checks = 0;
  for (int round = 0; round < 200; ++round) {
    Machine m(*l->program, 0);
    Countdown hook;
    m.set_hook(&hook);
    m.start(l->query);
    hook.left = 1 + static_cast<int>(rng() % 60);
    Machine::Event e;
    while ((e = m.run()) == Machine::Event::solution) {}
    if (e != Machine::Event::halted) continue;
    const std::size_t b = m.choice_top() - 1;
    const ChoicePoint saved = m.choice_point(b);
    const std::size_t h = saved.heap_top - m.heap_base();
    const std::vector<Cell> before(m.heap_cells().begin(), m.heap_cells().begin() + h);

    hook.left = 1 + static_cast<int>(rng() % 60);
    while ((e = m.run()) == Machine::Event::solution) {}
    if (e != Machine::Event::halted || m.choice_top() <= b) continue;
    const ChoicePoint& now = m.choice_point(b);
    if (now.alt != saved.alt || now.heap_top != saved.heap_top || now.goal != saved.goal) continue;
    m.restore_to(b);
    EXPECT_EQ(m.trail_top(), saved.trail_top - m.trail_base());
    const std::vector<Cell> after(m.heap_cells().begin(), m.heap_cells().begin() + h);
    EXPECT_TRUE(before == after) << "round " << round;
    ++checks;
  }
  EXPECT_GT(checks, 20);
}

TEST(Load, CountsPrivateAlternatives) {
  auto l = harness::load_source("c(1). c(2). c(3). d(a). d(b).", "c(X), d(Y)");
  Machine m(*l->program, 0);
  HaltAlways halt;
  m.set_hook(&halt);
  m.start(l->query);
  EXPECT_EQ(m.load(), 0);
  ASSERT_EQ(m.run(), Machine::Event::halted);
  EXPECT_EQ(m.load(), 2);  // c/1 has two untried clauses
  ASSERT_EQ(m.run(), Machine::Event::halted);
  EXPECT_EQ(m.load(), 3);  // plus one for d/1
  ASSERT_EQ(m.run(), Machine::Event::solution);
  ASSERT_EQ(m.run(), Machine::Event::solution);  // d(b): its choice point is gone
  EXPECT_EQ(m.load(), 2);
}

TEST(Stats, AlternativesMatchClauseCount) {
  // c/1 has 3 clauses: the first is entered by the call, two by backtracking
  auto l = harness::load_source("c(1). c(2). c(3).", "c(X)");
  MachineStats st;
  solve(*l->program, l->query, SolveMode::all, [](const Machine&) {}, {}, &st);
  EXPECT_EQ(st.alternatives, 2u);
  EXPECT_EQ(st.choice_points, 1u);
}
