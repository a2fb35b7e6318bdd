#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "blockcheck/modes.hpp"
#include "blockcheck/parser.hpp"
#include "oracles.hpp"

using namespace bc;

static Program corpus(const char* f) {
  return parse_file(std::string(CORPUS_DIR) + "/" + f);
}

TEST_CASE("permute: the three-mode classification table") {
  Program p = corpus("fig3_permute.pl");
  SUBCASE("M1: nicely moded (identity witnesses) and input-linear") {
    auto v = check_condition(p, "M1", PiKind::Nicely);
    REQUIRE(v.holds);
    for (const auto& [ci, pi] : v.witnesses)
      CHECK(pi == Permutation::identity(pi.size()));
    CHECK(input_linear(p, "M1").holds);
  }
  SUBCASE("M2: permutation nicely moded, clause-2 witness <2,1>") {
    auto v = check_condition(p, "M2", PiKind::Nicely);
    REQUIRE(v.holds);
    CHECK(v.witnesses.at(1) == Permutation({2, 1}));
    CHECK(input_linear(p, "M2").holds);
  }
  SUBCASE("test mode: permutation nicely moded but not input-linear") {
    CHECK(check_condition(p, "TEST", PiKind::Nicely).holds);
    auto il = input_linear(p, "TEST");
    REQUIRE_FALSE(il.holds);
    REQUIRE(il.violations.size() == 1);
    CHECK(il.violations[0].where.find("delete/3") != std::string::npos);
    CHECK(il.violations[0].reason.find("X") != std::string::npos);
  }
  SUBCASE("well typed in both modes") {
    CHECK(check_condition(p, "M1", PiKind::Well).holds);
    auto v = check_condition(p, "M2", PiKind::Well);
    CHECK(v.holds);
    CHECK(v.witnesses.at(1) == Permutation({2, 1}));
  }
}

TEST_CASE("quicksort: simply in M1; robustly (not simply) in M2") {
  Program p = corpus("fig6_quicksort.pl");
  SUBCASE("M1 simply typed, qsort clause witness <4,1,2,3>") {
    auto v = check_condition(p, "M1", PiKind::Simply);
    REQUIRE(v.holds);
    CHECK(v.witnesses.at(1) == Permutation({4, 1, 2, 3}));
  }
  SUBCASE("M2 not simply typed: [X|Bs2] in an output position") {
    auto v = check_condition(p, "M2", PiKind::Simply);
    REQUIRE_FALSE(v.holds);
    bool found = false;
    for (const auto& viol : v.violations)
      if (viol.reason.find("[X|Bs2]") != std::string::npos &&
          viol.reason.find("output position") != std::string::npos)
        found = true;
    CHECK(found);
  }
  SUBCASE("M2 robustly typed; append 2nd is the only bound output") {
    auto v = check_condition(p, "M2", PiKind::Robustly);
    CHECK(v.applicable);
    CHECK(v.holds);
    auto bf = bound_free(p, "M2");
    CHECK(bf.is_bound("append/3", 1));
    for (const auto& [key, positions] : bf.bound) {
      auto md = p.mode_of("M2", key);
      if (!md) continue;
      for (size_t i = 0; i < positions.size(); ++i)
        if ((*md)[i] == Mode::Out && !(key == "append/3" && i == 1)) {
          CAPTURE(key);
          CAPTURE(i);
          CHECK_FALSE(positions[i]);
        }
    }
  }
  SUBCASE("M1 trivially robustly typed as well") {
    CHECK(check_condition(p, "M1", PiKind::Robustly).holds);
  }
  SUBCASE("input selectability in both modes") {
    CHECK(input_selectability(p, "M1").holds);
    CHECK(input_selectability(p, "M2").holds);
  }
}

TEST_CASE("treeList: robustly typed in both modes") {
  Program p = corpus("fig7_treelist.pl");
  for (const char* m : {"M1", "M2"}) {
    CAPTURE(m);
    auto v = check_condition(p, m, PiKind::Robustly);
    CHECK(v.applicable);
    CHECK(v.holds);
    CHECK(input_selectability(p, m).holds);
  }
  auto bf = bound_free(p, "M2");
  CHECK(bf.is_bound("append/3", 1));
  // treeList's output position (the 1st in M2) stays free: every body
  // occurrence has a variable there.
  CHECK_FALSE(bf.is_bound("treeList/2", 0));
}

TEST_CASE("nqueens: clause-1 witness <1,3,2> in M1; M2 breaks nicely") {
  Program p = corpus("fig10_nqueens.pl");
  SUBCASE("M1 nicely and well typed with witness <1,3,2>") {
    auto nm = check_condition(p, "M1", PiKind::Nicely);
    REQUIRE(nm.holds);
    CHECK(nm.witnesses.at(0) == Permutation({1, 3, 2}));
    auto wt = check_condition(p, "M1", PiKind::Well);
    REQUIRE(wt.holds);
    CHECK(wt.witnesses.at(0) == Permutation({1, 3, 2}));
  }
  SUBCASE("M2 not permutation nicely moded: N1 twice in outputs") {
    auto v = check_condition(p, "M2", PiKind::Nicely);
    REQUIRE_FALSE(v.holds);
    bool found = false;
    for (const auto& viol : v.violations)
      if (viol.where.find("sequence/2") != std::string::npos &&
          viol.reason.find("N1") != std::string::npos)
        found = true;
    CHECK(found);
  }
}

TEST_CASE("length: input-linearity waiver for len_aux([],N,N)") {
  Program p = corpus("fig8_length.pl");
  auto il = input_linear(p, "M1");
  REQUIRE_FALSE(il.holds);
  REQUIRE(il.violations.size() == 1);
  CHECK(il.violations[0].where.find("len_aux/3") != std::string::npos);
  CHECK(il.violations[0].reason.find("N") != std::string::npos);
  // Waive that one repetition: the program becomes input-linear.
  size_t ci = 0;
  for (; ci < p.clauses.size(); ++ci)
    if (p.clauses[ci].head.key() == "len_aux/3" && p.clauses[ci].body.empty())
      break;
  CHECK(input_linear(p, "M1", {{ci, "N", "constant-type"}}).holds);
}

TEST_CASE("input selectability negatives") {
  // Empty block declaration on a predicate with a bound input position:
  // the atom p(X) is selectable though its bound input is a variable.
  Program p = parse_program(
      "%:- mode(M1) p(i).\n"
      "%:- type p(list).\n"
      "p([]).\n");
  auto v = input_selectability(p, "M1");
  REQUIRE_FALSE(v.holds);
  CHECK(v.violations[0].reason.find("condition 1") != std::string::npos);

  // Block stronger than the types justify: q's sole input has type any, so
  // even a variable-input atom counts as "non-variable in all input
  // positions of non-variable type" and must be selectable.
  Program q = parse_program(
      ":- block q(-).\n"
      "%:- mode(M1) q(i).\n"
      "q(X).\n");
  auto vq = input_selectability(q, "M1");
  REQUIRE_FALSE(vq.holds);
  CHECK(vq.violations[0].reason.find("condition 2") != std::string::npos);
}

TEST_CASE("bound/free: all-variable heads give all-free positions") {
  Program p = parse_program(
      "%:- mode(M1) p(i,o).\n"
      "%:- mode(M1) q(i).\n"
      "p(X,Y) :- q(X).\n"
      "q(A).\n");
  auto bf = bound_free(p, "M1");
  for (const auto& [key, positions] : bf.bound)
    for (bool b : positions) CHECK_FALSE(b);
}

TEST_CASE("robustly typed not applicable when the precondition fails") {
  // p's bound input position has variable type `any`.
  Program p = parse_program(
      "%:- mode(M1) p(i).\n"
      "p(a).\n");
  auto v = check_condition(p, "M1", PiKind::Robustly);
  CHECK_FALSE(v.applicable);
}

TEST_CASE("witness search agrees with n! enumeration on all corpus bodies") {
  for (const char* f :
       {"fig3_permute.pl", "fig4_delete.pl", "fig5_permute.pl",
        "fig6_quicksort.pl", "fig7_treelist.pl", "fig8_length.pl",
        "fig9_islist.pl", "fig10_nqueens.pl", "ex22_wake.pl"}) {
    Program p = corpus(f);
    TypeSystem ts(p.grammars);
    for (const auto& mode : p.mode_names()) {
      ViewContext ctx(p, mode);
      for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
        const Clause& c = p.clauses[ci];
        ModedAtomView head;
        std::vector<ModedAtomView> body;
        try {
          head = ctx.head_view(c.head);
          for (const auto& a : c.body) body.push_back(ctx.view(a));
        } catch (const std::exception&) {
          continue;  // mode does not cover this predicate
        }
        for (PiKind kind : {PiKind::Nicely, PiKind::Well, PiKind::Simply}) {
          bool brute = false;
          for (const auto& pi : all_permutations((int)body.size()))
            if (check_pi_kind(body, pi, kind, ts, &head)) brute = true;
          auto w = find_permutation_nm(body, kind, ts, &head);
          CAPTURE(f);
          CAPTURE(mode);
          CAPTURE(ci);
          CAPTURE(kind_name(kind));
          CHECK(w.pi.has_value() == brute);
          if (w.pi) {
            // Witness soundness: the returned permutation re-checks.
            CHECK(check_pi_kind(body, *w.pi, kind, ts, &head));
          }
        }
      }
    }
  }
}

TEST_CASE("monotonicity: a simply witness is a nicely and well witness") {
  for (const char* f : {"fig6_quicksort.pl", "fig9_islist.pl",
                        "fig3_permute.pl", "fig5_permute.pl"}) {
    Program p = corpus(f);
    TypeSystem ts(p.grammars);
    for (const auto& mode : p.mode_names()) {
      auto v = check_condition(p, mode, PiKind::Simply);
      if (!v.holds) continue;
      ViewContext ctx(p, mode);
      for (const auto& [ci, pi] : v.witnesses) {
        const Clause& c = p.clauses[ci];
        ModedAtomView head = ctx.head_view(c.head);
        std::vector<ModedAtomView> body;
        for (const auto& a : c.body) body.push_back(ctx.view(a));
        CAPTURE(f);
        CAPTURE(mode);
        CAPTURE(ci);
        CHECK(check_pi_kind(body, pi, PiKind::Nicely, ts, &head));
        CHECK(check_pi_kind(body, pi, PiKind::Well, ts, &head));
      }
    }
  }
}

TEST_CASE("verdict JSON carries the schema fields") {
  Program p = corpus("fig3_permute.pl");
  auto v = check_condition(p, "M1", PiKind::Nicely);
  std::string j = v.to_json();
  for (const char* field :
       {"\"condition\"", "\"mode\"", "\"holds\"", "\"witnesses\"",
        "\"violations\""})
    CHECK(j.find(field) != std::string::npos);
}
