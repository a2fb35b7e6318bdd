#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "blockcheck/modes.hpp"
#include "blockcheck/program.hpp"
#include "blockcheck/subst.hpp"

namespace bc {

// An atom is blocked iff some pattern of the declaration has a variable in
// every '-' position; the empty declaration never blocks.
bool is_blocked(const Atom& a, const BlockDecl& decl);

// Order among waiting atoms that became selectable.
//  - NewlyWokenFirst: a stack — the binding that wakes several atoms pushes
//    them left to right (so the rightmost, i.e. latest-suspended, runs
//    first), and the body of a resolved waiting atom is pushed right to left
//    (so it runs depth-first). This mimics how Prolog implementations
//    interleave woken goals with the interrupted computation.
//  - LeftmostWaitingFirst: the leftmost waiting selectable atom.
enum class WakePolicy { NewlyWokenFirst, LeftmostWaitingFirst };

struct SelectionRule {
  enum class Kind { LD, LeftBased, Random };
  Kind kind = Kind::LeftBased;
  WakePolicy wake = WakePolicy::NewlyWokenFirst;
  uint64_t seed = 0;

  static SelectionRule ld();
  static SelectionRule left_based(WakePolicy w = WakePolicy::NewlyWokenFirst);
  static SelectionRule random(uint64_t seed);
};

// A query atom with its delay bookkeeping. `waiting` is sticky: it is set
// when the atom sits in a selectable-free prefix, and inherited by the body
// atoms that replace a resolved waiting atom.
struct TrackedAtom {
  Atom atom;
  uint64_t id = 0;
  bool waiting = false;
  bool was_selectable = false;  // selectability at the previous scan
};

enum class RunStatus {
  Success,
  Failure,
  Floundered,
  LimitExceeded,
  InstantiationError,  // built-in selected with a variable input
  TypeError            // built-in selected with a non-numeric input
};
std::string status_name(RunStatus s);

// One successful resolution step, formatted stably for diffing.
struct TraceEvent {
  size_t step = 0;              // 1-based, across the whole search tree
  size_t selected = 0;          // 1-based index of the selected atom
  int pi_position = 0;          // its position under the running permutation
  std::string atom;             // the selected atom, after the answer so far
  std::string clause;           // "pred/arity#<n>" or "pred/arity#builtin"
  std::vector<size_t> waiting;  // 1-based indices of waiting atoms

  std::string line() const;
  std::string jsonl() const;
};

struct RunLimits {
  size_t steps = 100000;  // resolution steps across the whole search tree
  size_t solutions = 0;   // 0 = unlimited (exhaust the search space)
  // The engine's unifier skips the occur check by default: checking is
  // quadratic on derivations that grow a term step by step, and the programs
  // this engine targets are occur-check free. Binding cycles that slip
  // through are detected (and reported) when a term is materialized for an
  // answer or a trace. The analyses' unifier always occur-checks.
  bool occur_check = false;
};

struct Outcome {
  RunStatus status = RunStatus::Failure;
  std::vector<Substitution> solutions;  // restricted to the query variables
  size_t steps_used = 0;
  size_t floundered_branches = 0;
  std::vector<TraceEvent> trace;  // filled when requested
  std::string error;              // detail for the error statuses

  std::string trace_text() const;
};

// Depth-first exploration over clause order with the given selection rule.
// Built-ins (is/2, comparisons, =/2) are evaluated natively; selecting one
// with an unbound or non-numeric input aborts the run with the matching
// error status. Throws std::invalid_argument when the query uses a predicate
// that is neither defined nor built-in.
Outcome run(const Program& p, const std::vector<Atom>& query,
            const SelectionRule& rule, const RunLimits& limits = {},
            bool want_trace = false);

// Persistence monitor: replays `run` while asserting, after every step, that
// the resolvent satisfies `kind` under the derived permutation, that the
// step's MGU leaves the outputs of the non-selected atoms untouched, and —
// for robustly typed runs — that it leaves the selected atom's inputs
// untouched. The two MGU assertions are made only when the selected atom is
// non-variable in its bound input positions (the lemmas' hypothesis).
struct MonitorViolation {
  size_t step = 0;
  std::string what;     // which invariant broke
  std::string context;  // the resolvent, for diagnosis
};

struct MonitorReport {
  bool applicable = false;  // static check passed and witnesses exist
  std::string kind;
  std::string why_not;  // when not applicable
  Outcome outcome;
  size_t checks = 0;  // invariant assertions evaluated
  std::vector<MonitorViolation> violations;
};

MonitorReport monitor(const Program& p, const std::vector<Atom>& query,
                      const std::string& mode, PiKind kind,
                      const SelectionRule& rule, const RunLimits& limits = {});

// Grammar-directed random term of the given type: productions are sampled
// uniformly until the depth budget runs out, then only non-recursive
// productions are used. Primitive types yield small integers.
TermPtr random_term(const TypeSystem& ts, const std::string& type,
                    std::mt19937_64& rng, int depth = 5);

// A type-correct query atom for `key`: random ground terms (depth <= 5) on
// the input positions, fresh variables on the outputs.
Atom random_query_atom(const Program& p, const std::string& mode,
                       const std::string& key, std::mt19937_64& rng);

}  // namespace bc
