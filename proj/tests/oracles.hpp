#pragma once

// Independent oracles used by the test suites. These are deliberately naive
// and written against the definitions only, so they share no code with the
// library implementations they validate.

#include <optional>
#include <random>
#include <vector>

#include "blockcheck/perm.hpp"
#include "blockcheck/program.hpp"
#include "blockcheck/subst.hpp"
#include "blockcheck/term.hpp"

namespace oracle {

// Naive unifier: recursive descent, composing single bindings and re-applying
// the whole substitution from scratch at every step.
std::optional<bc::Substitution> naive_unify(const bc::TermPtr& a,
                                            const bc::TermPtr& b);
std::optional<bc::Substitution> naive_unify(const bc::Atom& a,
                                            const bc::Atom& b);

// Random terms over a small fixed signature ({[], ./2, f/1, g/2, a, b, 0, 1}
// plus variables X..Z), depth-bounded.
bc::TermPtr random_term(std::mt19937& rng, int max_depth);
bc::Substitution random_subst(std::mt19937& rng, int max_depth);

// Brute-force reconstruction of the derived permutation: lay out the atom
// positions of query and clause body concretely, resolve, and read off each
// survivor's rank in the reordered sequence.
bc::Permutation brute_force_derived(const bc::Permutation& pi,
                                    const bc::Permutation& rho, int k);

// All terms derivable from a grammar to the given depth (for membership
// comparison). Variables never appear: these are the concrete members.
std::vector<bc::TermPtr> enumerate_members(
    const std::map<std::string, bc::TypeGrammar>& grammars,
    const std::string& type, int depth);

// Grammar-derivation membership test by explicit enumeration against
// enumerate_members (only usable for terms within the depth bound).
bool derivation_member(const std::map<std::string, bc::TypeGrammar>& grammars,
                       const std::string& type, const bc::TermPtr& t,
                       int depth);

// Enumerates ground instantiations of t over a small constant pool to the
// given depth and reports whether any lands in the type (type-consistency
// oracle, complete only at desk scale).
bool instantiation_consistent(
    const std::map<std::string, bc::TypeGrammar>& grammars,
    const std::string& type, const bc::TermPtr& t, int depth);

}  // namespace oracle
