#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "blockcheck/depgraph.hpp"
#include "blockcheck/modes.hpp"
#include "blockcheck/norms.hpp"
#include "blockcheck/perm.hpp"
#include "blockcheck/program.hpp"

namespace bc {

// Route A precondition: the program is well typed under the textual (identity)
// body order, and the block declarations select every atom whose input
// positions of non-variable type are non-variable. Under these conditions the
// leftmost atom of a query is always selectable, so every left-based
// derivation is an LD-derivation and classical LD-termination applies to the
// program as written.
ConditionVerdict left_equals_ld(const Program& p, const std::string& mode);

// Route B precondition: the program is permutation simply typed and
// input-linear, and every simply typed atom unifies with some clause head
// (no derivation can fail, so speculative bindings are harmless). The atom
// shapes are enumerated over the depth-1 input constructors, which is
// exhaustive because simply typed clause heads are flat. Programs calling
// test built-ins (comparisons, =/2) are always speculative.
ConditionVerdict non_speculative(const Program& p, const std::string& mode);

// Checks the well-recurrence of one call-equivalence class against a fixed
// level mapping: |head| > |body atom| for every recursive call, under every
// correctly typed instantiation (no use of intermediate body bindings, which
// is what makes the property strong enough for arbitrary selection orders).
// Only ListLen and TermSize levels qualify: their values are nonnegative on
// all terms.
bool well_recurrent(const Program& p, const std::string& mode,
                    const std::set<std::string>& scc, const LevelMapping& lm,
                    std::string* why = nullptr);

// Route C, part 1: the set of robust predicates, computed bottom-up over the
// dependency graph. A predicate is accepted as robust when everything it
// strictly depends on is robust and its call-equivalence class is
// well-recurrent for some automatically found level mapping (single input
// positions, then pairs, then all inputs; ListLen before TermSize).
// Built-ins are robust by their table semantics. Preconditions: the program
// is permutation robustly typed, input-linear (modulo waivers) and has input
// selectability.
struct RobustnessResult {
  bool preconditions_ok = false;
  std::vector<Violation> precondition_failures;
  std::set<std::string> robust;
  std::map<std::string, std::string> notes;         // per predicate: why (not)
  std::map<std::string, LevelMapping> mappings;     // per recursive predicate
};

RobustnessResult robust_predicates(
    const Program& p, const std::string& mode,
    const std::vector<LinearityWaiver>& waivers = {});

// Route C, part 2: every body atom either sits in a safe position of the
// clause's witness permutation, or its whole call cone is robust. The
// verdict's witnesses are the body orders of the corresponding (reordered)
// program whose LD-termination remains to be shown.
ConditionVerdict well_fed(const Program& p, const std::string& mode,
                          const RobustnessResult& rob,
                          const std::vector<LinearityWaiver>& waivers = {});

// Residual obligation shared by all three routes: LD-termination of the
// program with clause bodies permuted by `reordering` (identity when a
// clause is absent). Each recursive component needs a level mapping that
// decreases on every recursive call; upper bounds for the call arguments are
// propagated through the preceding body atoms via inter-argument size
// relations, is/2 equalities and comparison guards.
bool ld_terminates(const Program& p, const std::string& mode,
                   const std::map<size_t, Permutation>& reordering,
                   std::vector<std::string>* notes = nullptr);

struct TerminationReport {
  std::string mode;
  bool certified = false;
  std::string approach;  // "A", "B", "C" or "" when not certified
  bool ld_obligation = false;  // residual LD-termination discharged
  std::map<size_t, Permutation> reordering;  // the certified body orders
  std::vector<std::string> notes;

  std::string summary() const;
  std::string to_json() const;
};

// Tries the three routes in order: A (left-based = LD on the program as
// written), B (non-speculative, reordered per the simply typed witnesses),
// C (well fed, reordered per the robustly typed witnesses). A route
// certifies termination when both its precondition and the residual
// LD-termination obligation go through.
TerminationReport termination_verdict(const Program& p,
                                      const std::string& mode);

}  // namespace bc
