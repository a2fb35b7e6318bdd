#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockcheck/perm.hpp"
#include "blockcheck/program.hpp"

namespace bc {

// Diagnostics carry "file:line:col: message".
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parses the Prolog subset of the corpus: clauses, `:- block` directives and
// the structured comments `%:- mode(Name) p(i,o).`, `%:- type p(list,list).`,
// `%:- typedef t -> alt ; alt.`. Non-fatal findings (e.g. a body predicate
// with no definition and no builtin entry) land in `warnings`.
Program parse_program(const std::string& text,
                      const std::string& filename = "<input>",
                      std::vector<std::string>* warnings = nullptr);

Program parse_file(const std::string& path,
                   std::vector<std::string>* warnings = nullptr);

// Convenience for tests: parse a single query "a1, ..., an".
std::vector<Atom> parse_query(const std::string& text);
TermPtr parse_term_text(const std::string& text);

// Pretty-prints the program; `reordering` maps clause index (position in
// p.clauses) to the permutation applied to its body ("corresponding"
// program). Identity when absent. Throws on length mismatch.
std::string emit_program(const Program& p,
                         const std::map<size_t, Permutation>& reordering = {});

}  // namespace bc
