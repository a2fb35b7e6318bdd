#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blockcheck/program.hpp"
#include "blockcheck/term.hpp"

namespace bc {

struct TypeClassification {
  bool variable_type = false;  // contains variables (hence all terms)
  bool ground = false;         // only ground members
  bool constant = false;       // ground and only constants
};

// Variable -> type-name demands accumulated while decomposing antecedents.
using TypeEnv = std::map<std::string, std::string>;

// Regular types closed under instantiation. Membership, type-consistency and
// the conservative implication check used by well-typedness all live here.
class TypeSystem {
public:
  explicit TypeSystem(std::map<std::string, TypeGrammar> grammars);

  bool has_type(const std::string& name) const { return grammars_.count(name) > 0; }

  // t in T for concrete terms; a variable is a member only of `any`.
  // Ground arithmetic +/- expressions over numeric leaves count as int/num
  // (the conceptual fact tables of the arithmetic built-ins).
  bool member(const TermPtr& t, const std::string& type) const;

  // Some instantiation of t lies in T.
  bool type_consistent(const TermPtr& t, const std::string& type) const;

  TypeClassification classify(const std::string& type) const;
  bool is_variable_type(const std::string& type) const;

  // S a subset of T, decided coinductively over the grammars (int <= num,
  // everything <= any, structural inclusion otherwise).
  bool subtype(const std::string& sub, const std::string& super) const;

  // Conservative check of  |= /\ ante  =>  /\ cons : true only if every
  // substitution satisfying the antecedent typings satisfies the consequent
  // ones. Decomposes antecedents into a variable->type environment
  // (conflicting demands make the antecedent unsatisfiable, so the
  // implication holds vacuously), then checks consequents against it.
  bool implies_typing(
      const std::vector<std::pair<TermPtr, std::string>>& antecedent,
      const std::vector<std::pair<TermPtr, std::string>>& consequent) const;

  // Environment derivation; nullopt means the antecedent is unsatisfiable.
  std::optional<TypeEnv> derive_env(
      const std::vector<std::pair<TermPtr, std::string>>& antecedent) const;

  // Membership where environment-typed variables count as members of their
  // assigned type.
  bool member_env(const TermPtr& t, const std::string& type,
                  const TypeEnv& env) const;

  const TypeGrammar* grammar(const std::string& name) const;

private:
  bool decompose(const TermPtr& t, const std::string& type, TypeEnv& env) const;
  bool intersect_demand(const std::string& var, const std::string& type,
                        TypeEnv& env) const;
  bool subtype_rec(const std::string& sub, const std::string& super,
                   std::set<std::pair<std::string, std::string>>& assumed) const;

  std::map<std::string, TypeGrammar> grammars_;
  mutable std::map<std::string, TypeClassification> classify_cache_;
};

bool is_arith_functor(const std::string& name, size_t arity);

}  // namespace bc
