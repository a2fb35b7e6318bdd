#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blockcheck/depgraph.hpp"
#include "blockcheck/perm.hpp"
#include "blockcheck/program.hpp"
#include "blockcheck/term.hpp"
#include "blockcheck/types.hpp"

namespace bc {

enum class NormKind { ListLen, TermSize, IntValue };
std::string norm_name(NormKind n);

// Linear expression over norm variables: constant + sum of coeff * |x|.
struct LinExpr {
  long constant = 0;
  std::map<std::string, long> coeffs;

  static LinExpr of_const(long c) { return LinExpr{c, {}}; }
  static LinExpr of_var(const std::string& v, long coeff = 1);
  LinExpr operator+(const LinExpr& o) const;
  LinExpr operator-(const LinExpr& o) const;
  bool is_constant() const { return coeffs.empty(); }
  // Norm variables are nonnegative for ListLen/TermSize, so an expression
  // with nonnegative coefficients and constant >= k is everywhere >= k.
  bool at_least(long k) const;
  std::string to_string() const;
  bool operator==(const LinExpr& o) const = default;
};

// Symbolic norm of a term. ListLen and TermSize are total (non-list /
// non-variable leaves count 0 resp. their symbol count); IntValue is partial:
// defined for integers, variables and +,- expressions only. Variables in
// `zero_vars` (typically: variables of constant type, whose members all have
// size 0 under ListLen) contribute 0 instead of a norm variable.
std::optional<LinExpr> symbolic_norm(
    const TermPtr& t, NormKind n,
    const std::set<std::string>* zero_vars = nullptr);

// Ground evaluation of a norm; nullopt when the term has variables (or
// IntValue is undefined on it).
std::optional<long> ground_norm(const TermPtr& t, NormKind n);

// Moded typed level mapping: per predicate, one norm summed over a subset of
// input argument positions (0-based). Depends only on inputs by construction.
struct LevelMapping {
  NormKind norm = NormKind::ListLen;
  std::map<std::string, std::vector<size_t>> positions;

  std::optional<LinExpr> level_of(
      const Atom& a, const std::set<std::string>* zero_vars = nullptr) const;
  std::string to_string() const;
};

// Inter-argument size relation for one predicate under ListLen:
//   sum of listlen over `outs`  <=  sum of listlen over `ins`  +  delta.
struct SizeRelation {
  std::vector<size_t> outs;  // 0-based output argument positions
  std::vector<size_t> ins;   // 0-based input argument positions
  long delta = 0;
  std::string to_string(const std::string& key) const;
};

// Upper-bound propagation state: for each variable, a ListLen upper bound
// over base variables, plus exact IntValue equalities from is/2 and lower
// bounds from comparison guards.
struct BoundEnv {
  std::map<std::string, LinExpr> listlen_ub;
  // Joint bounds: the sum of the named variables is at most the expression
  // (needed when a relation couples several outputs, e.g. append backwards).
  std::vector<std::pair<std::set<std::string>, LinExpr>> listlen_group_ub;
  std::map<std::string, LinExpr> intvalue_eq;
  std::map<std::string, long> intvalue_lb;

  // Upper bound of a ListLen norm expression given the environment; base
  // variables bound by themselves. nullopt when a coefficient is negative.
  std::optional<LinExpr> bound_listlen(const LinExpr& e) const;
  std::optional<LinExpr> resolve_intvalue(const LinExpr& e) const;
};

// Infers, bottom-up over the dependency graph, ListLen size relations per
// predicate (the all-outputs sum and each single-output projection, each
// with delta in {-1, 0}; the tightest verified variants are kept), verified
// by induction over the clauses taken in the given body order. `reordering`
// maps clause index to the body permutation (identity when absent).
std::map<std::string, std::vector<SizeRelation>> infer_size_relations(
    const Program& p, const std::string& mode, const DependencyGraph& g,
    const std::map<size_t, Permutation>& reordering = {});

// Variables of a clause whose type demands (from the declared typings of the
// head and every body atom) resolve to a constant type; their ListLen is 0.
std::set<std::string> constant_typed_vars(const Clause& c, const Program& p,
                                          const TypeSystem& ts);

// Folds one body atom into the environment: is/2 equalities, comparison
// guards as IntValue lower bounds, and size-relation output upper bounds.
void propagate_atom(
    BoundEnv& env, const Atom& a, const Program& p, const std::string& mode,
    const std::map<std::string, std::vector<SizeRelation>>& rels,
    const std::set<std::string>& zero_vars);

}  // namespace bc
