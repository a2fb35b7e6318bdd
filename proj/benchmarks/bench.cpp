#include <benchmark/benchmark.h>

#include <random>

#include "blockcheck/builtin_safety.hpp"
#include "blockcheck/engine.hpp"
#include "blockcheck/modes.hpp"
#include "blockcheck/parser.hpp"
#include "blockcheck/subst.hpp"
#include "blockcheck/termination.hpp"

using namespace bc;

namespace {

Program corpus(const char* f) {
  return parse_file(std::string(CORPUS_DIR) + "/" + f);
}

// Deep list pair with a variable tail: exercises the iterative unifier.
std::pair<TermPtr, TermPtr> list_pair(int n) {
  TermPtr a = Term::var("T");
  TermPtr b = Term::nil();
  for (int i = n; i >= 1; --i) {
    a = Term::cons(Term::integer(i), a);
    b = Term::cons(Term::integer(i), b);
  }
  return {a, b};
}

void BM_unify_list(benchmark::State& state) {
  auto [a, b] = list_pair((int)state.range(0));
  for (auto _ : state) {
    UnifyResult r = unify(a, b);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_unify_list)->Arg(16)->Arg(256)->Arg(1024);

void BM_parse_corpus(benchmark::State& state) {
  std::string path = std::string(CORPUS_DIR) + "/fig10_nqueens.pl";
  for (auto _ : state) {
    Program p = parse_file(path);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_parse_corpus);

// Full static pipeline on quicksort: all four pi-conditions, linearity,
// selectability, termination, built-in safety.
void BM_check_pipeline(benchmark::State& state) {
  Program p = corpus("fig6_quicksort.pl");
  for (auto _ : state) {
    for (const auto& mode : p.mode_names()) {
      for (PiKind k : {PiKind::Nicely, PiKind::Well, PiKind::Simply,
                       PiKind::Robustly})
        benchmark::DoNotOptimize(check_condition(p, mode, k));
      benchmark::DoNotOptimize(input_linear(p, mode));
      benchmark::DoNotOptimize(input_selectability(p, mode));
      benchmark::DoNotOptimize(termination_verdict(p, mode));
      benchmark::DoNotOptimize(builtin_safety(p, mode));
    }
  }
}
BENCHMARK(BM_check_pipeline);

void BM_run_nqueens(benchmark::State& state) {
  Program p = corpus("fig10_nqueens.pl");
  std::string q = "nqueens(" + std::to_string(state.range(0)) + ",Sol)";
  auto query = parse_query(q);
  for (auto _ : state) {
    Outcome o = run(p, query, SelectionRule::left_based());
    benchmark::DoNotOptimize(o);
  }
}
BENCHMARK(BM_run_nqueens)->Arg(4)->Arg(6);

// Looping query cut off by the step budget: measures raw step throughput.
void BM_run_steps(benchmark::State& state) {
  Program p = corpus("fig3_permute.pl");
  auto query = parse_query("permute(V,[1])");
  RunLimits lim;
  lim.steps = (size_t)state.range(0);
  for (auto _ : state) {
    Outcome o = run(p, query, SelectionRule::left_based(), lim);
    benchmark::DoNotOptimize(o);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_run_steps)->Arg(10000);

void BM_monitor_qsort(benchmark::State& state) {
  Program p = corpus("fig6_quicksort.pl");
  auto query = parse_query("qsort(L,[1,2,3])");
  for (auto _ : state) {
    MonitorReport r = monitor(p, query, "M2", PiKind::Robustly,
                              SelectionRule::left_based());
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_monitor_qsort);

}  // namespace

BENCHMARK_MAIN();
