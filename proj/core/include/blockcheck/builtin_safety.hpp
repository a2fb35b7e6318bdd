#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "blockcheck/modes.hpp"
#include "blockcheck/program.hpp"

namespace bc {

// Positions that every selectable atom of the predicate has non-variable:
// a block pattern whose only '-' sits at position k vetoes any atom with a
// variable there.
std::set<size_t> forced_nonvar_positions(const BlockDecl& bd, size_t arity);

// Error-freedom for built-ins whose input positions are bound and of
// constant type: under a permutation simply typed, input-linear program with
// input selectability, such a built-in is only selected with correctly typed
// (hence ground) inputs. Each call site must feed the built-in's inputs from
// constants or from head input variables that sit, directly, in constant-type
// positions forced non-variable by the clause head's block declaration.
// Built-ins with a non-constant input type (notably =/2 at type any) are
// reported unprotected.
ConditionVerdict builtin_safety(const Program& p, const std::string& mode);

// Per predicate: head argument positions holding a variable that also feeds
// the input of a body atom whose predicate is in B.
struct BPositionTable {
  std::map<std::string, std::set<size_t>> positions;
  bool contains(const std::string& key, size_t pos) const;
};

BPositionTable b_positions(const Program& p, const std::string& mode,
                           const std::set<std::string>& B);

// Built-ins used by the program whose input positions are all of constant
// type — the candidates for dropping block declarations altogether.
std::set<std::string> default_b_set(const Program& p);

// B-groundness: every B-position is an input position of constant type, and
// atoms of non-B predicates reach selection only with non-variable (hence
// ground) terms in their B-positions. A position not forced by the
// predicate's own block declaration is accepted when every call site in the
// program passes a ground term or a head-input variable that is itself
// forced ground at activation (the argument the motivating example makes for
// the third position of its diagonal check). When the verdict holds, the
// B members need no block declarations: their inputs stay ground throughout
// every delay-respecting derivation.
ConditionVerdict check_bground(const Program& p, const std::string& mode,
                               const std::set<std::string>& B);

// Predicates whose block declaration can be replaced by the empty one
// without changing the left-based derivations: every atom of every
// predicate that depends on them (in clause bodies, and in the query when
// given) occupies a safe position of its witness permutation.
std::set<std::string> omit_blocks_by_safety(
    const Program& p, const std::string& mode,
    const std::vector<Atom>* query = nullptr);

// Input-linearity waivers for repeated head-input variables.
//  - constant-type case: every occurrence is direct, in a constant-type
//    input position, and at least one of those positions is forced
//    non-variable by the block declaration — the repetition is an equality
//    check between ground constants.
//  - ground-type case: every occurrence (possibly nested) sits in a
//    ground-type input position and all atoms of every dependent predicate
//    are in safe positions — under left-based selection the clause only
//    fires with ground inputs, so the repetition checks rather than aliases.
struct WaiverReport {
  std::vector<LinearityWaiver> waivers;
  std::vector<Violation> rejected;  // repetitions no case covers
};

WaiverReport head_linearity_waivers(const Program& p, const std::string& mode);

}  // namespace bc
