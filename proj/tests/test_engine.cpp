#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "blockcheck/engine.hpp"
#include "blockcheck/parser.hpp"
#include "blockcheck/types.hpp"

using namespace bc;

static Program corpus(const char* f) {
  return parse_file(std::string(CORPUS_DIR) + "/" + f);
}

static std::string corpus_text(const char* f) {
  std::ifstream in(std::string(CORPUS_DIR) + "/" + f);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs with the process-global fresh-variable counter reset, so two runs of
// the same query produce byte-identical traces.
static Outcome run_fresh(const Program& p, const std::string& q,
                         const SelectionRule& r, RunLimits lim = {},
                         bool trace = false) {
  reset_fresh_counter();
  return run(p, parse_query(q), r, lim, trace);
}

static std::string sol_str(const Substitution& s, const std::string& v) {
  auto t = s.lookup(v);
  return t ? term_to_string(*t) : v;
}

// Independent n-queens validator: a permutation of 1..n with no two queens
// on a diagonal.
static bool valid_queens(const TermPtr& sol, int n) {
  std::vector<long> q;
  TermPtr t = sol;
  while (t->name() == "." && t->arity() == 2) {
    if (!t->args()[0]->is_int()) return false;
    q.push_back(t->args()[0]->int_value());
    t = t->args()[1];
  }
  if (t->name() != "[]" || (int)q.size() != n) return false;
  std::vector<long> sorted = q;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i)
    if (sorted[i] != i + 1) return false;
  for (size_t i = 0; i < q.size(); ++i)
    for (size_t j = i + 1; j < q.size(); ++j)
      if (std::abs(q[i] - q[j]) == (long)(j - i)) return false;
  return true;
}

TEST_CASE("is_blocked against block patterns") {
  BlockDecl d;
  d.patterns = {{'-', '?', '-'}, {'?', '-', '-'}};
  Atom a1 = parse_query("append(X,[2|Y],Z)")[0];
  CHECK(is_blocked(a1, d));  // first pattern: X and Z are variables
  Atom a2 = parse_query("append(X,[2|Y],[1|Z])")[0];
  CHECK_FALSE(is_blocked(a2, d));  // every pattern has a non-variable '-'
  BlockDecl none;
  CHECK_FALSE(is_blocked(a1, none));  // no declaration never blocks
}

TEST_CASE("wake-up order reproduces the section-2 derivation") {
  Program p = corpus("ex22_wake.pl");
  Outcome o = run_fresh(p, "a(X), b(X), c(X), d",
                        SelectionRule::left_based(), {}, true);
  CHECK(o.status == RunStatus::Success);
  REQUIRE(o.solutions.size() == 1);
  CHECK(sol_str(o.solutions[0], "X") == "1");
  CHECK(o.steps_used == 5);
  // c(X) runs first and binds X; the woken b runs before the woken a
  // (latest suspended first), b's body runs before a; d closes.
  CHECK(o.trace_text() ==
        "step=1 select=3 pi=3 atom=c(1) clause=c/1#3 waiting=1,2\n"
        "step=2 select=2 pi=2 atom=b(1) clause=b/1#2 waiting=1,2\n"
        "step=3 select=2 pi=2 atom=b2(1) clause=b2/1#4 waiting=1,2\n"
        "step=4 select=1 pi=1 atom=a(1) clause=a/1#1 waiting=1\n"
        "step=5 select=1 pi=1 atom=d clause=d/0#5 waiting=-\n");
}

TEST_CASE("leftmost-waiting wake policy wakes in query order") {
  Program p = corpus("ex22_wake.pl");
  Outcome o = run_fresh(
      p, "a(X), b(X), c(X), d",
      SelectionRule::left_based(WakePolicy::LeftmostWaitingFirst), {}, true);
  CHECK(o.status == RunStatus::Success);
  REQUIRE(o.trace.size() == 5);
  CHECK(o.trace[0].atom == "c(1)");
  CHECK(o.trace[1].atom == "a(1)");  // leftmost waiting, not latest woken
  CHECK(o.trace[2].atom == "b(1)");
  CHECK(o.trace[3].atom == "b2(1)");
  CHECK(o.trace[4].atom == "d");
}

TEST_CASE("permute, recursive call first (nonterminating direction)") {
  Program p = corpus("fig3_permute.pl");
  SUBCASE("forward query terminates with all permutations") {
    Outcome o = run_fresh(p, "permute([1,2,3],W)", SelectionRule::left_based());
    CHECK(o.status == RunStatus::Success);
    std::set<std::string> ws;
    for (const auto& s : o.solutions) ws.insert(sol_str(s, "W"));
    CHECK(ws == std::set<std::string>{"[1,2,3]", "[1,3,2]", "[2,1,3]",
                                      "[2,3,1]", "[3,1,2]", "[3,2,1]"});
  }
  SUBCASE("reverse query finds the answer, then loops") {
    RunLimits lim;
    lim.steps = 20000;
    Outcome o = run_fresh(p, "permute(V,[1])", SelectionRule::left_based(),
                          lim);
    CHECK(o.status == RunStatus::LimitExceeded);
    REQUIRE(o.solutions.size() == 1);  // the answer precedes the loop
    CHECK(sol_str(o.solutions[0], "V") == "[1]");
  }
  SUBCASE("left-based equals LD when nothing ever suspends") {
    Outcome lb = run_fresh(p, "permute([1,2,3],W)",
                           SelectionRule::left_based(), {}, true);
    Outcome ld =
        run_fresh(p, "permute([1,2,3],W)", SelectionRule::ld(), {}, true);
    CHECK(lb.trace_text() == ld.trace_text());
    CHECK(lb.solutions.size() == ld.solutions.size());
  }
}

TEST_CASE("permute, recursive call last (terminating in both directions)") {
  Program p = corpus("fig5_permute.pl");
  SUBCASE("reverse query terminates with both answers") {
    Outcome o = run_fresh(p, "permute(A,[1,2])", SelectionRule::left_based());
    CHECK(o.status == RunStatus::Success);
    REQUIRE(o.solutions.size() == 2);
    CHECK(sol_str(o.solutions[0], "A") == "[1,2]");
    CHECK(sol_str(o.solutions[1], "A") == "[2,1]");
    CHECK(o.steps_used == 15);
  }
  SUBCASE("open-tail query is outside every certified class and loops") {
    RunLimits lim;
    lim.steps = 20000;
    Outcome o =
        run_fresh(p, "permute(A,[1|B])", SelectionRule::left_based(), lim);
    CHECK(o.status == RunStatus::LimitExceeded);
  }
  SUBCASE("LD equals left-based step for step (route-A program/mode)") {
    Outcome lb = run_fresh(p, "permute(A,[1,2])", SelectionRule::left_based(),
                           {}, true);
    Outcome ld = run_fresh(p, "permute(A,[1,2])", SelectionRule::ld(), {},
                           true);
    CHECK(lb.trace_text() == ld.trace_text());
  }
  SUBCASE("all-variable query flounders") {
    Outcome o = run_fresh(p, "permute(V,W)", SelectionRule::left_based());
    CHECK(o.status == RunStatus::Floundered);
    CHECK(o.floundered_branches == 1);
    CHECK(o.solutions.empty());
  }
  SUBCASE("solution limit stops the search early") {
    RunLimits lim;
    lim.solutions = 1;
    Outcome o =
        run_fresh(p, "permute(A,[1,2])", SelectionRule::left_based(), lim);
    CHECK(o.status == RunStatus::Success);
    CHECK(o.solutions.size() == 1);
    CHECK(o.steps_used < 15);
  }
  SUBCASE("step limit yields limit_exceeded") {
    RunLimits lim;
    lim.steps = 3;
    Outcome o =
        run_fresh(p, "permute(A,[1,2])", SelectionRule::left_based(), lim);
    CHECK(o.status == RunStatus::LimitExceeded);
    CHECK(o.steps_used == 3);
  }
}

TEST_CASE("random delay-respecting rule") {
  Program p = corpus("fig5_permute.pl");
  SUBCASE("same seed replays the same derivation") {
    Outcome a = run_fresh(p, "permute(A,[1,2])", SelectionRule::random(7), {},
                          true);
    Outcome b = run_fresh(p, "permute(A,[1,2])", SelectionRule::random(7), {},
                          true);
    CHECK(a.trace_text() == b.trace_text());
  }
  SUBCASE("answer set agrees with the left-based rule") {
    std::multiset<std::string> lb, rnd;
    for (const auto& s :
         run_fresh(p, "permute(A,[1,2])", SelectionRule::left_based())
             .solutions)
      lb.insert(sol_str(s, "A"));
    for (const auto& s :
         run_fresh(p, "permute(A,[1,2])", SelectionRule::random(42))
             .solutions)
      rnd.insert(sol_str(s, "A"));
    CHECK(lb == rnd);
  }
}

TEST_CASE("n-queens coroutining") {
  Program p = corpus("fig10_nqueens.pl");
  SUBCASE("4-queens: both placements found, validated independently") {
    Outcome o = run_fresh(p, "nqueens(4,Sol)", SelectionRule::left_based());
    CHECK(o.status == RunStatus::Success);
    REQUIRE(o.solutions.size() == 2);
    for (const auto& s : o.solutions) {
      auto t = s.lookup("Sol");
      REQUIRE(t);
      CHECK(valid_queens(*t, 4));
    }
    CHECK(sol_str(o.solutions[0], "Sol") == "[3,1,4,2]");
    CHECK(sol_str(o.solutions[1], "Sol") == "[2,4,1,3]");
    CHECK(o.steps_used == 287);
  }
  SUBCASE("moving the generator call last wakes permute too early: loop") {
    std::string txt = corpus_text("fig10_nqueens.pl");
    const std::string from =
        "nqueens(N,Sol) :-\n"
        "  sequence(N,Seq),\n"
        "  safe(Sol),\n"
        "  permute(Sol,Seq).";
    auto pos = txt.find(from);
    REQUIRE(pos != std::string::npos);
    txt.replace(pos, from.size(),
                "nqueens(N,Sol) :-\n"
                "  safe(Sol),\n"
                "  permute(Sol,Seq),\n"
                "  sequence(N,Seq).");
    Program bad = parse_program(txt);
    RunLimits lim;
    lim.steps = 20000;
    Outcome o =
        run_fresh(bad, "nqueens(4,Sol)", SelectionRule::left_based(), lim);
    CHECK(o.status == RunStatus::LimitExceeded);
    CHECK(o.solutions.empty());
  }
  SUBCASE("sequence's block is redundant for this query: identical traces") {
    std::string txt = corpus_text("fig10_nqueens.pl");
    const std::string decl = ":- block sequence(-,?).\n";
    auto pos = txt.find(decl);
    REQUIRE(pos != std::string::npos);
    txt.erase(pos, decl.size());
    Program stripped = parse_program(txt);
    Outcome with = run_fresh(p, "nqueens(4,Sol)", SelectionRule::left_based(),
                             {}, true);
    Outcome without = run_fresh(stripped, "nqueens(4,Sol)",
                                SelectionRule::left_based(), {}, true);
    CHECK(with.trace.size() == without.trace.size());
    CHECK(with.trace_text() == without.trace_text());
  }
}

TEST_CASE("built-in evaluation and its error statuses") {
  Program p = parse_program(R"(
p(X,Y) :- Y is X + 2 - 1.
q :- 1 < a.
r(Y) :- X < 1, Y = X.
u(X) :- X = f(1).
)");
  SUBCASE("arithmetic evaluation") {
    Outcome o = run_fresh(p, "p(4,Y)", SelectionRule::left_based());
    CHECK(o.status == RunStatus::Success);
    REQUIRE(o.solutions.size() == 1);
    CHECK(sol_str(o.solutions[0], "Y") == "5");
  }
  SUBCASE("non-numeric input is a type error") {
    Outcome o = run_fresh(p, "q", SelectionRule::left_based());
    CHECK(o.status == RunStatus::TypeError);
    CHECK(o.error.find("a") != std::string::npos);
  }
  SUBCASE("unbound input is an instantiation error") {
    Outcome o = run_fresh(p, "r(Y)", SelectionRule::left_based());
    CHECK(o.status == RunStatus::InstantiationError);
    CHECK(o.solutions.empty());
  }
  SUBCASE("explicit unification built-in") {
    Outcome o = run_fresh(p, "u(X)", SelectionRule::left_based());
    CHECK(o.status == RunStatus::Success);
    CHECK(sol_str(o.solutions.at(0), "X") == "f(1)");
  }
  SUBCASE("unknown predicates are rejected up front") {
    CHECK_THROWS_AS(
        run(p, parse_query("nosuch(1)"), SelectionRule::left_based()),
        std::invalid_argument);
  }
}

TEST_CASE("occur check is optional; cycles are caught at answer time") {
  Program p = parse_program("s(X) :- X = f(X).\n");
  SUBCASE("with the occur check the clause simply fails") {
    RunLimits lim;
    lim.occur_check = true;
    Outcome o = run_fresh(p, "s(Y)", SelectionRule::left_based(), lim);
    CHECK(o.status == RunStatus::Failure);
  }
  SUBCASE("without it the cyclic answer is detected when materialized") {
    CHECK_THROWS_AS(run_fresh(p, "s(Y)", SelectionRule::left_based()),
                    std::runtime_error);
  }
}

TEST_CASE("persistence monitor") {
  Program fig6 = corpus("fig6_quicksort.pl");
  SUBCASE("simply typed run of quicksort: no violations") {
    reset_fresh_counter();
    MonitorReport r =
        monitor(fig6, parse_query("qsort([2,1,3],S)"), "M1", PiKind::Simply,
                SelectionRule::left_based());
    CHECK(r.applicable);
    CHECK(r.outcome.status == RunStatus::Success);
    CHECK(r.checks > 0);
    CHECK(r.violations.empty());
  }
  SUBCASE("robustly typed reverse run: bound outputs may be instantiated") {
    reset_fresh_counter();
    MonitorReport r =
        monitor(fig6, parse_query("qsort(L,[1,2,3])"), "M2", PiKind::Robustly,
                SelectionRule::left_based());
    CHECK(r.applicable);
    CHECK(r.outcome.status == RunStatus::Success);
    CHECK(r.outcome.solutions.size() == 6);  // all lists that sort to [1,2,3]
    CHECK(r.checks > 0);
    CHECK(r.violations.empty());
  }
  SUBCASE("ill-typed query is reported as not applicable") {
    MonitorReport r =
        monitor(fig6, parse_query("qsort(f(a),S)"), "M1", PiKind::Simply,
                SelectionRule::left_based());
    CHECK_FALSE(r.applicable);
    CHECK(r.why_not.find("query") != std::string::npos);
  }
  SUBCASE("failing static condition is reported as not applicable") {
    MonitorReport r =
        monitor(fig6, parse_query("qsort(L,[1,2,3])"), "M2", PiKind::Simply,
                SelectionRule::left_based());
    CHECK_FALSE(r.applicable);
    CHECK(r.why_not.find("program") != std::string::npos);
  }
  SUBCASE("well typed permute runs clean under the random rule") {
    Program fig3 = corpus("fig3_permute.pl");
    reset_fresh_counter();
    MonitorReport r =
        monitor(fig3, parse_query("permute([2,1],W)"), "M1", PiKind::Well,
                SelectionRule::random(3));
    CHECK(r.applicable);
    CHECK(r.violations.empty());
  }
}

TEST_CASE("random query generation") {
  std::mt19937_64 rng(11);
  SUBCASE("grammar-directed terms are members of their type") {
    Program p = corpus("fig6_quicksort.pl");
    TypeSystem ts(p.grammars);
    for (int i = 0; i < 50; ++i) {
      TermPtr t = random_term(ts, "numlist", rng);
      CHECK(ts.member(t, "numlist"));
      CHECK(vars_of(t).empty());
    }
  }
  SUBCASE("query atoms: ground typed inputs, fresh variable outputs") {
    Program p = corpus("fig10_nqueens.pl");
    TypeSystem ts(p.grammars);
    for (int i = 0; i < 20; ++i) {
      Atom a = random_query_atom(p, "M1", "nqueens/2", rng);
      CHECK(a.pred == "nqueens");
      CHECK(a.args[0]->is_int());
      CHECK(a.args[1]->is_var());
    }
    Atom d = random_query_atom(p, "M1", "delete/3", rng);  // delete(o,i,o)
    CHECK(d.args[0]->is_var());
    CHECK(ts.member(d.args[1], "intlist"));
    CHECK(d.args[2]->is_var());
  }
  SUBCASE("unknown mode is rejected") {
    Program p = corpus("fig6_quicksort.pl");
    CHECK_THROWS_AS(random_query_atom(p, "NOPE", "qsort/2", rng),
                    std::invalid_argument);
  }
}

TEST_CASE("trace serialization") {
  TraceEvent e;
  e.step = 2;
  e.selected = 1;
  e.pi_position = 3;
  e.atom = "p(X)";
  e.clause = "p/1#1";
  e.waiting = {2, 3};
  CHECK(e.line() == "step=2 select=1 pi=3 atom=p(X) clause=p/1#1 waiting=2,3");
  CHECK(e.jsonl() ==
        "{\"step\":2,\"select\":1,\"pi\":3,\"atom\":\"p(X)\","
        "\"clause\":\"p/1#1\",\"waiting\":[2,3]}");
}
