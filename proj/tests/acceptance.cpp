// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Each criterion is self-contained and uses only the public
// library API plus the independent oracles in tests/oracles.hpp.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "blockcheck/builtin_safety.hpp"
#include "blockcheck/engine.hpp"
#include "blockcheck/modes.hpp"
#include "blockcheck/parser.hpp"
#include "blockcheck/perm.hpp"
#include "blockcheck/subst.hpp"
#include "blockcheck/termination.hpp"
#include "blockcheck/types.hpp"
#include "oracles.hpp"

using namespace bc;

namespace {

int failures = 0;
std::vector<std::string> notes;

void expect(bool cond, const std::string& what) {
  if (!cond) {
    ++failures;
    notes.push_back(what);
  }
}

Program corpus(const std::string& f) {
  return parse_file(std::string(CORPUS_DIR) + "/" + f);
}

std::string corpus_text(const std::string& f) {
  std::ifstream in(std::string(CORPUS_DIR) + "/" + f);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome run_fresh(const Program& p, const std::string& q,
                  const SelectionRule& rule, RunLimits lim = {},
                  bool trace = false) {
  reset_fresh_counter();
  return run(p, parse_query(q), rule, lim, trace);
}

void criterion(int n, const std::string& title,
               const std::function<void()>& body) {
  int before = failures;
  notes.clear();
  try {
    body();
  } catch (const std::exception& e) {
    ++failures;
    notes.push_back(std::string("exception: ") + e.what());
  }
  bool ok = failures == before;
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", n,
              title.c_str());
  for (const auto& m : notes) std::printf("       %s\n", m.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------

void c1_classification() {
  {
    Program p = corpus("fig3_permute.pl");
    auto m1 = check_condition(p, "M1", PiKind::Nicely);
    expect(m1.holds, "fig3 M1 nicely moded");
    for (const auto& [ci, pi] : m1.witnesses)
      expect(pi == Permutation::identity(pi.size()),
             "fig3 M1 witness not identity at clause " + std::to_string(ci));
    expect(input_linear(p, "M1").holds, "fig3 M1 input-linear");

    auto m2 = check_condition(p, "M2", PiKind::Nicely);
    expect(m2.holds, "fig3 M2 permutation nicely moded");
    expect(m2.witnesses.count(1) &&
               m2.witnesses.at(1) == Permutation({2, 1}),
           "fig3 M2 clause-2 witness <2,1>");

    expect(!input_linear(p, "TEST").holds, "fig3 TEST not input-linear");
  }
  {
    Program p = corpus("fig6_quicksort.pl");
    expect(check_condition(p, "M1", PiKind::Simply).holds,
           "fig6 M1 simply typed");
    expect(!check_condition(p, "M2", PiKind::Simply).holds,
           "fig6 M2 not simply typed");
    expect(check_condition(p, "M2", PiKind::Robustly).holds,
           "fig6 M2 robustly typed");
    // append's 2nd position is the only bound output position in M2.
    auto bf = bound_free(p, "M2");
    expect(bf.is_bound("append/3", 1), "fig6 M2 append pos 2 bound");
    for (const auto& [key, positions] : bf.bound) {
      auto md = p.mode_of("M2", key);
      if (!md) continue;
      for (size_t i = 0; i < positions.size(); ++i)
        if (positions[i] && (*md)[i] == Mode::Out &&
            !(key == "append/3" && i == 1))
          expect(false, "fig6 M2 unexpected bound output " + key + "@" +
                            std::to_string(i + 1));
    }
  }
  {
    Program p = corpus("fig7_treelist.pl");
    for (const char* m : {"M1", "M2"})
      expect(check_condition(p, m, PiKind::Robustly).holds,
             std::string("fig7 ") + m + " robustly typed");
  }
}

void c2_derived_permutation() {
  auto d = derived_permutation(Permutation({4, 3, 1, 2}), Permutation({2, 1}),
                               2);
  expect(d == Permutation({5, 4, 3, 1, 2}),
         "worked example <4,3,1,2> + <2,1> at k=2, got " + d.to_string());
  for (int n = 1; n <= 4; ++n)
    for (const auto& pi : all_permutations(n))
      for (int m = 0; m <= 4; ++m)
        for (const auto& rho : all_permutations(m))
          for (int k = 1; k <= n; ++k) {
            Permutation got = derived_permutation(pi, rho, k);
            // Bijection on {1..n+m-1}.
            std::vector<bool> seen(n + m - 1, false);
            bool bij = got.size() == n + m - 1;
            for (int i = 1; bij && i <= got.size(); ++i) {
              int v = got(i);
              if (v < 1 || v > got.size() || seen[v - 1]) bij = false;
              else seen[v - 1] = true;
            }
            expect(bij, "not a bijection at n=" + std::to_string(n) +
                            " m=" + std::to_string(m));
            expect(got == oracle::brute_force_derived(pi, rho, k),
                   "mismatch with brute force at n=" + std::to_string(n) +
                       " m=" + std::to_string(m) +
                       " k=" + std::to_string(k));
          }
}

void c3_termination() {
  auto check = [](const char* f, const char* mode, bool certified,
                  const char* route) {
    TerminationReport r = termination_verdict(corpus(f), mode);
    expect(r.certified == certified && r.approach == route,
           std::string(f) + " " + mode + ": want " +
               (certified ? std::string("route ") + route : "uncertified") +
               ", got " +
               (r.certified ? "route " + r.approach : "uncertified"));
  };
  check("fig5_permute.pl", "M1", true, "B");   // non-speculative path
  check("fig5_permute.pl", "M2", true, "A");   // left = LD path
  check("fig4_delete.pl", "M1", true, "A");
  check("fig9_islist.pl", "M1", true, "B");    // non-speculative only
  check("fig6_quicksort.pl", "M1", true, "C");  // well fed only
  check("fig6_quicksort.pl", "M2", true, "C");
  check("fig10_nqueens.pl", "M1", true, "C");
  check("fig10_nqueens.pl", "M2", false, "");
}

// Independent n-queens validator: walks the ./2 list, requires a permutation
// of 1..n with no two queens on a diagonal.
bool valid_queens(const TermPtr& sol, int n) {
  std::vector<int> q;
  TermPtr t = sol;
  while (true) {
    if (t->is_compound() && t->name() == "[]" && t->args().empty()) break;
    if (t->is_var() || t->name() != "." || t->args().size() != 2) return false;
    const TermPtr& h = t->args()[0];
    if (!h->is_int()) return false;
    q.push_back((int)h->int_value());
    t = t->args()[1];
  }
  if ((int)q.size() != n) return false;
  std::vector<bool> used(n + 1, false);
  for (int v : q) {
    if (v < 1 || v > n || used[v]) return false;
    used[v] = true;
  }
  for (size_t i = 0; i < q.size(); ++i)
    for (size_t j = i + 1; j < q.size(); ++j)
      if (std::abs(q[i] - q[j]) == (int)(j - i)) return false;
  return true;
}

void c4_engine_behavior() {
  auto lb = SelectionRule::left_based();
  {
    Outcome o = run_fresh(corpus("fig3_permute.pl"), "permute(V,[1])", lb);
    expect(o.status == RunStatus::LimitExceeded,
           "fig3 permute(V,[1]) should hit the step limit, got " +
               status_name(o.status));
  }
  Program fig5 = corpus("fig5_permute.pl");
  {
    Outcome o = run_fresh(fig5, "permute(A,[1,2])", lb);
    expect(o.status == RunStatus::Success && o.solutions.size() == 2,
           "fig5 permute(A,[1,2]) should halt with exactly 2 solutions");
  }
  {
    Outcome o = run_fresh(fig5, "permute(A,[1|B])", lb);
    expect(o.status == RunStatus::LimitExceeded,
           "fig5 permute(A,[1|B]) should hit the step limit, got " +
               status_name(o.status));
  }
  {
    Program p = corpus("fig10_nqueens.pl");
    Outcome o = run_fresh(p, "nqueens(4,Sol)", lb);
    expect(o.status == RunStatus::Success,
           "nqueens(4,Sol) should terminate with success, got " +
               status_name(o.status));
    expect(!o.solutions.empty(), "nqueens(4,Sol) should yield solutions");
    for (const auto& s : o.solutions) {
      auto sol = s.lookup("Sol");
      expect(sol && valid_queens(*sol, 4),
             "invalid 4-queens placement " +
                 (sol ? term_to_string(*sol) : std::string("<unbound>")));
    }
  }
  {
    // sequence/2 moved to the end of nqueens/2's body: the generator runs
    // after the testers and the search no longer terminates.
    std::string txt = corpus_text("fig10_nqueens.pl");
    const std::string from =
        "nqueens(N,Sol) :-\n  sequence(N,Seq),\n  safe(Sol),\n"
        "  permute(Sol,Seq).";
    const std::string to =
        "nqueens(N,Sol) :-\n  safe(Sol),\n  permute(Sol,Seq),\n"
        "  sequence(N,Seq).";
    auto pos = txt.find(from);
    expect(pos != std::string::npos, "nqueens clause text not found");
    if (pos == std::string::npos) return;
    txt.replace(pos, from.size(), to);
    Outcome o = run_fresh(parse_program(txt), "nqueens(4,Sol)", lb);
    expect(o.status == RunStatus::LimitExceeded,
           "sequence-last nqueens should hit the step limit, got " +
               status_name(o.status));
  }
}

void c5_builtin_safety() {
  {
    Program p = corpus("fig6_quicksort.pl");
    expect(builtin_safety(p, "M1").holds, "fig6 M1 builtin safety certified");
    std::mt19937_64 rng(2024);
    auto preds = p.defined_predicates();
    for (int i = 0; i < 100; ++i) {
      Atom q = random_query_atom(p, "M1", preds[i % preds.size()], rng);
      RunLimits lim;
      lim.steps = 3000;
      lim.solutions = 2;
      Outcome o = run(p, {q}, SelectionRule::left_based(), lim);
      expect(o.status != RunStatus::InstantiationError &&
                 o.status != RunStatus::TypeError,
             "query " + atom_to_string(q) + " raised " +
                 status_name(o.status));
    }
  }
  {
    Program p = corpus("fig10_nqueens.pl");
    std::set<std::string> B = {"</2", "is/2", "=\\=/2"};
    expect(check_bground(p, "M1", B).holds, "fig10 B-groundness certified");
    // 50 bounded runs; the trace must show ground inputs on every selected
    // B-atom.
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> size(1, 5);
    for (int i = 0; i < 50; ++i) {
      std::string q = "nqueens(" + std::to_string(size(rng)) + ",Sol)";
      RunLimits lim;
      lim.steps = 4000;
      lim.solutions = 1;
      Outcome o = run_fresh(p, q, SelectionRule::left_based(), lim, true);
      for (const auto& e : o.trace) {
        auto hash = e.clause.find('#');
        std::string key = e.clause.substr(0, hash);
        if (e.clause.substr(hash) != "#builtin" || !B.count(key)) continue;
        Atom a = parse_query(e.atom).at(0);
        auto md = p.mode_of("M1", key);
        for (size_t pos = 0; pos < a.args.size(); ++pos)
          if ((*md)[pos] == Mode::In && !vars_of(a.args[pos]).empty())
            expect(false, q + ": selected B-atom " + e.atom +
                              " has a non-ground input");
      }
    }
  }
}

void c6_block_simplification() {
  Program p = corpus("fig10_nqueens.pl");
  expect(omit_blocks_by_safety(p, "M1").count("sequence/2") == 1,
         "sequence/2's block should be omissible in M1");
  std::string txt = corpus_text("fig10_nqueens.pl");
  const std::string decl = ":- block sequence(-,?).\n";
  auto pos = txt.find(decl);
  expect(pos != std::string::npos, "sequence block declaration not found");
  if (pos == std::string::npos) return;
  txt.erase(pos, decl.size());
  Outcome before =
      run_fresh(p, "nqueens(4,Sol)", SelectionRule::left_based(), {}, true);
  Outcome after = run_fresh(parse_program(txt), "nqueens(4,Sol)",
                            SelectionRule::left_based(), {}, true);
  expect(before.trace_text() == after.trace_text() && !before.trace.empty(),
         "traces differ after removing sequence's block (" +
             std::to_string(before.trace.size()) + " vs " +
             std::to_string(after.trace.size()) + " steps)");
}

void c7_monitor() {
  const char* files[] = {"fig3_permute.pl",   "fig4_delete.pl",
                         "fig5_permute.pl",   "fig6_quicksort.pl",
                         "fig7_treelist.pl",  "fig8_length.pl",
                         "fig9_islist.pl",    "fig10_nqueens.pl"};
  const PiKind order[] = {PiKind::Robustly, PiKind::Simply, PiKind::Well,
                          PiKind::Nicely};
  std::mt19937_64 rng(99);
  for (const char* f : files) {
    Program p = corpus(f);
    for (const auto& mode : p.mode_names()) {
      // Static gate: the monitored lemmas presuppose these.
      if (!input_linear(p, mode).holds) continue;
      if (!input_selectability(p, mode).holds) continue;
      PiKind kind = PiKind::Nicely;
      bool found = false;
      for (PiKind k : order)
        if (!found && check_condition(p, mode, k).holds) {
          kind = k;
          found = true;
        }
      if (!found) continue;
      auto preds = p.defined_predicates();
      size_t checks = 0;
      for (int i = 0; i < 100; ++i) {
        Atom q = random_query_atom(p, mode, preds[i % preds.size()], rng);
        RunLimits lim;
        lim.steps = 500;
        lim.solutions = 1;
        MonitorReport r =
            monitor(p, {q}, mode, kind, SelectionRule::left_based(), lim);
        if (!r.applicable) continue;  // e.g. no query witness for this kind
        checks += r.checks;
        for (const auto& v : r.violations)
          expect(false, std::string(f) + " " + mode + " " +
                            atom_to_string(q) + " step " +
                            std::to_string(v.step) + ": " + v.what);
      }
      expect(checks > 0, std::string(f) + " " + mode +
                             ": monitor never fired an assertion");
    }
  }
}

void c8_oracle_equivalence() {
  // Witness existence vs n! brute force on every corpus clause body.
  const char* files[] = {"fig3_permute.pl",   "fig4_delete.pl",
                         "fig5_permute.pl",   "fig6_quicksort.pl",
                         "fig7_treelist.pl",  "fig8_length.pl",
                         "fig9_islist.pl",    "fig10_nqueens.pl"};
  for (const char* f : files) {
    Program p = corpus(f);
    TypeSystem ts(p.grammars);
    for (const auto& mode : p.mode_names()) {
      ViewContext ctx(p, mode);
      auto bf = bound_free(p, mode);
      for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
        ModedAtomView head;
        std::vector<ModedAtomView> body;
        try {
          head = ctx.head_view(p.clauses[ci].head);
          for (const auto& a : p.clauses[ci].body) body.push_back(ctx.view(a));
        } catch (const std::exception&) {
          continue;  // mode does not cover this predicate
        }
        for (PiKind k : {PiKind::Nicely, PiKind::Well, PiKind::Simply,
                         PiKind::Robustly}) {
          bool brute = false;
          for (const auto& pi : all_permutations((int)body.size()))
            if (check_pi_kind(body, pi, k, ts, &head, &bf)) brute = true;
          auto w = find_permutation_nm(body, k, ts, &head, &bf);
          expect(w.pi.has_value() == brute,
                 std::string(f) + " " + mode + " clause " +
                     std::to_string(ci + 1) + " " + kind_name(k) +
                     ": witness search disagrees with brute force");
          if (w.pi)
            expect(check_pi_kind(body, *w.pi, k, ts, &head, &bf),
                   std::string(f) + " clause " + std::to_string(ci + 1) +
                       ": returned witness does not re-check");
        }
      }
    }
  }
  // Unifier vs the naive oracle on 200 random pairs.
  std::mt19937 rng(31415);
  for (int i = 0; i < 200; ++i) {
    TermPtr a = oracle::random_term(rng, 3);
    TermPtr b = oracle::random_term(rng, 3);
    auto fast = unify(a, b);
    auto slow = oracle::naive_unify(a, b);
    expect(fast.ok() == slow.has_value(),
           "unifiability disagrees on " + term_to_string(a) + " ~ " +
               term_to_string(b));
    if (fast.ok() && slow) {
      expect(term_equal(fast.mgu.apply(a), fast.mgu.apply(b)),
             "mgu is not a unifier for " + term_to_string(a));
      expect(term_equal(slow->apply(a), slow->apply(b)),
             "oracle unifier broken for " + term_to_string(a));
    }
  }
  // Type membership vs derivation enumeration to depth 4.
  auto grammars = predefined_grammars();
  TypeSystem ts(grammars);
  for (const char* type : {"list", "intlist", "numlist", "tree"}) {
    auto members = oracle::enumerate_members(grammars, type, 4);
    // Depth-4 trees number in the millions; a deterministic stride keeps the
    // check inside the runtime budget while still covering every shape class.
    size_t stride = std::max<size_t>(1, members.size() / 20000);
    for (size_t i = 0; i < members.size(); i += stride)
      expect(ts.member(members[i], type),
             std::string("enumerated ") + type + " member rejected: " +
                 term_to_string(members[i]));
  }
  std::mt19937 trng(2718);
  for (int i = 0; i < 500; ++i) {
    auto t = oracle::random_term(trng, 3);
    if (!vars_of(t).empty()) continue;
    for (const char* type : {"list", "intlist", "tree"})
      expect(ts.member(t, type) ==
                 oracle::derivation_member(grammars, type, t, 4),
             std::string("membership disagrees for ") + term_to_string(t) +
                 " : " + type);
  }
}

}  // namespace

int main() {
  criterion(1, "classification table (fig3/fig6/fig7)", c1_classification);
  criterion(2, "derived permutation: worked example + exhaustive n,m <= 4",
            c2_derived_permutation);
  criterion(3, "termination verdicts across the corpus", c3_termination);
  criterion(4, "engine loop/termination behavior at the 100000-step limit",
            c4_engine_behavior);
  criterion(5, "built-in error freedom: static certificates + random runs",
            c5_builtin_safety);
  criterion(6, "sequence/2 block removable with identical traces",
            c6_block_simplification);
  criterion(7, "persistence monitor clean on random type-correct queries",
            c7_monitor);
  criterion(8, "oracle equivalences (witness, unifier, type membership)",
            c8_oracle_equivalence);
  if (failures) {
    std::printf("%d check(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
