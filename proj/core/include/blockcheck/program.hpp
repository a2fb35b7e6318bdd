#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blockcheck/term.hpp"

namespace bc {

enum class Mode { In, Out };

// Per-position I/O markers; length equals the predicate arity.
using ModeDecl = std::vector<Mode>;
// Per-position type names; length equals the predicate arity.
using TypeDecl = std::vector<std::string>;

// A block pattern is a vector over {'?', '-'}. An atom is blocked iff some
// pattern of its declaration has a variable in every '-' position.
struct BlockDecl {
  std::vector<std::vector<char>> patterns;
  bool empty() const { return patterns.empty(); }
};

// One alternative of a regular term grammar: a functor whose arguments are
// type names. Constants have no arguments.
struct Production {
  std::string functor;
  std::vector<std::string> arg_types;
};

struct TypeGrammar {
  std::string name;
  std::vector<Production> productions;  // empty for primitives
  bool primitive = false;               // any, int, num
};

enum class BuiltinClass { None, Arithmetic, Comparison, Unification };

struct BuiltinSpec {
  std::string key;              // "is/2", "</2", ...
  ModeDecl mode;
  TypeDecl types;
  BuiltinClass cls;
  // Conceptual fact-clause heads are non-variable in the input positions.
  bool bound_inputs = true;
  // Every correctly-typed input tuple matches some conceptual fact. False
  // for tests (comparisons), which makes programs using them speculative.
  bool total = false;
};

struct Program {
  std::vector<Clause> clauses;  // textual order
  // predicate key -> block declaration (defaults to empty declaration).
  std::map<std::string, BlockDecl> blocks;
  // mode name -> (predicate key -> mode decl).
  std::map<std::string, std::map<std::string, ModeDecl>> modes;
  std::map<std::string, TypeDecl> types;
  std::map<std::string, TypeGrammar> grammars;  // user typedefs + predefined

  std::vector<std::string> mode_names() const;
  std::vector<const Clause*> clauses_for(const std::string& key) const;
  std::vector<std::string> defined_predicates() const;  // textual order, unique
  bool defines(const std::string& key) const;
  BlockDecl block_for(const std::string& key) const;

  // Mode/type lookup falling back to the builtin table.
  std::optional<ModeDecl> mode_of(const std::string& mode_name,
                                  const std::string& key) const;
  std::optional<TypeDecl> type_of(const std::string& key) const;
};

const std::map<std::string, BuiltinSpec>& builtin_table();
bool is_builtin(const std::string& key);
const BuiltinSpec* builtin_spec(const std::string& key);

// Grammar table with the predefined types (any, int, num, list, intlist,
// numlist, tree) plus the program's own typedefs.
std::map<std::string, TypeGrammar> predefined_grammars();

}  // namespace bc
