#include "blockcheck/builtin_safety.hpp"

#include <algorithm>
#include <sstream>

#include "blockcheck/depgraph.hpp"
#include "blockcheck/perm.hpp"
#include "blockcheck/types.hpp"

namespace bc {

namespace {

std::string clause_label(size_t ci, const Clause& c) {
  return "clause " + std::to_string(ci + 1) + " (" + c.head.key() + ")";
}

TypeDecl effective_types(const Program& p, const std::string& key,
                         size_t arity) {
  auto tys = p.type_of(key);
  return tys ? *tys : TypeDecl(arity, "any");
}

// Predicates with a body atom (or query atom) outside a safe position of the
// robustly typed witness permutations. Returns nullopt when the witnesses do
// not exist (the program is not permutation robustly typed).
std::optional<std::set<std::string>> unsafely_placed(
    const Program& p, const std::string& mode,
    const std::vector<Atom>* query) {
  auto rb = check_condition(p, mode, PiKind::Robustly);
  if (!rb.applicable || !rb.holds) return std::nullopt;
  std::set<std::string> unsafe;
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    auto wit = rb.witnesses.find(ci);
    Permutation pi = wit != rb.witnesses.end()
                         ? wit->second
                         : Permutation::identity((int)c.body.size());
    for (int i = 1; i <= (int)c.body.size(); ++i)
      if (!is_safe_position(pi, i)) unsafe.insert(c.body[i - 1].key());
  }
  if (query && !query->empty()) {
    TypeSystem ts(p.grammars);
    ViewContext ctx(p, mode);
    PositionClassification bf = bound_free(p, mode);
    std::vector<ModedAtomView> views;
    for (const auto& a : *query) views.push_back(ctx.view(a));
    auto w = find_permutation_nm(views, PiKind::Robustly, ts, nullptr, &bf);
    if (!w.pi) return std::nullopt;
    for (int i = 1; i <= (int)query->size(); ++i)
      if (!is_safe_position(*w.pi, i)) unsafe.insert((*query)[i - 1].key());
  }
  return unsafe;
}

}  // namespace

std::set<size_t> forced_nonvar_positions(const BlockDecl& bd, size_t arity) {
  std::set<size_t> forced;
  for (const auto& pat : bd.patterns) {
    std::vector<size_t> dashes;
    for (size_t i = 0; i < arity && i < pat.size(); ++i)
      if (pat[i] == '-') dashes.push_back(i);
    if (dashes.size() == 1) forced.insert(dashes[0]);
  }
  return forced;
}

ConditionVerdict builtin_safety(const Program& p, const std::string& mode) {
  ConditionVerdict v;
  v.condition = "built-in safety";
  v.mode = mode;
  TypeSystem ts(p.grammars);

  auto wr = head_linearity_waivers(p, mode);
  auto simply = check_condition(p, mode, PiKind::Simply);
  if (!simply.holds)
    v.violations.push_back({"program", "not permutation simply typed"});
  auto il = input_linear(p, mode, wr.waivers);
  if (!il.holds)
    for (const auto& viol : il.violations)
      v.violations.push_back({viol.where, "not input-linear: " + viol.reason});
  auto sel = input_selectability(p, mode);
  if (!sel.holds)
    for (const auto& viol : sel.violations)
      v.violations.push_back(
          {viol.where, "no input selectability: " + viol.reason});

  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    auto head_mode = p.mode_of(mode, c.head.key());
    TypeDecl head_types = effective_types(p, c.head.key(), c.head.arity());
    std::set<size_t> forced =
        forced_nonvar_positions(p.block_for(c.head.key()), c.head.arity());
    // Head-input variables certain to be ground constants at activation.
    std::set<std::string> ground_at_entry;
    if (head_mode)
      for (size_t k : forced)
        if ((*head_mode)[k] == Mode::In && c.head.args[k]->is_var() &&
            ts.classify(head_types[k]).constant)
          ground_at_entry.insert(c.head.args[k]->name());

    for (const auto& a : c.body) {
      const BuiltinSpec* bs = builtin_spec(a.key());
      if (!bs || p.defines(a.key())) continue;
      TypeDecl btypes = effective_types(p, a.key(), a.arity());
      bool ok = true;
      std::string reason;
      for (size_t i = 0; i < a.arity() && ok; ++i) {
        if (bs->mode[i] != Mode::In) continue;
        if (!ts.classify(btypes[i]).constant) {
          ok = false;
          reason = "input position " + std::to_string(i + 1) +
                   " has non-constant type " + btypes[i];
          break;
        }
        for (const auto& x : vars_of(a.args[i]))
          if (!ground_at_entry.count(x)) {
            ok = false;
            reason = "input variable " + x +
                     " is not forced ground by the clause head's block "
                     "declaration";
            break;
          }
      }
      if (!ok)
        v.violations.push_back(
            {clause_label(ci, c),
             "unprotected " + atom_to_string(a) + ": " + reason});
    }
  }
  v.holds = v.violations.empty();
  return v;
}

bool BPositionTable::contains(const std::string& key, size_t pos) const {
  auto it = positions.find(key);
  return it != positions.end() && it->second.count(pos);
}

BPositionTable b_positions(const Program& p, const std::string& mode,
                           const std::set<std::string>& B) {
  BPositionTable t;
  for (const auto& c : p.clauses) {
    for (const auto& a : c.body) {
      if (!B.count(a.key())) continue;
      auto md = p.mode_of(mode, a.key());
      if (!md) continue;
      std::set<std::string> invars;
      for (size_t i = 0; i < a.arity(); ++i)
        if ((*md)[i] == Mode::In)
          for (const auto& x : vars_of(a.args[i])) invars.insert(x);
      // Direct occurrences only: a variable nested below a constructor is
      // not grounded by the position being non-variable, so it must (and,
      // for B-groundness, will) show up directly somewhere else.
      for (size_t k = 0; k < c.head.arity(); ++k)
        if (c.head.args[k]->is_var() && invars.count(c.head.args[k]->name()))
          t.positions[c.head.key()].insert(k);
    }
  }
  return t;
}

std::set<std::string> default_b_set(const Program& p) {
  TypeSystem ts(p.grammars);
  std::set<std::string> B;
  for (const auto& c : p.clauses)
    for (const auto& a : c.body) {
      const BuiltinSpec* bs = builtin_spec(a.key());
      if (!bs || p.defines(a.key())) continue;
      TypeDecl btypes = effective_types(p, a.key(), a.arity());
      bool constant_inputs = true;
      for (size_t i = 0; i < a.arity(); ++i)
        if (bs->mode[i] == Mode::In && !ts.classify(btypes[i]).constant)
          constant_inputs = false;
      if (constant_inputs) B.insert(a.key());
    }
  return B;
}

ConditionVerdict check_bground(const Program& p, const std::string& mode,
                               const std::set<std::string>& B) {
  ConditionVerdict v;
  v.condition = "B-ground";
  v.mode = mode;
  TypeSystem ts(p.grammars);

  auto wr = head_linearity_waivers(p, mode);
  auto simply = check_condition(p, mode, PiKind::Simply);
  if (!simply.holds)
    v.violations.push_back({"program", "not permutation simply typed"});
  auto il = input_linear(p, mode, wr.waivers);
  if (!il.holds)
    for (const auto& viol : il.violations)
      v.violations.push_back({viol.where, "not input-linear: " + viol.reason});
  auto sel = input_selectability(p, mode, B);
  if (!sel.holds)
    for (const auto& viol : sel.violations)
      v.violations.push_back(
          {viol.where, "no input selectability: " + viol.reason});

  // B members must have all-constant-type inputs.
  for (const auto& b : B) {
    auto md = p.mode_of(mode, b);
    if (!md) {
      v.violations.push_back({b, "no mode for B member"});
      continue;
    }
    TypeDecl btypes = effective_types(p, b, md->size());
    for (size_t i = 0; i < md->size(); ++i)
      if ((*md)[i] == Mode::In && !ts.classify(btypes[i]).constant)
        v.violations.push_back(
            {b, "B member input position " + std::to_string(i + 1) +
                    " has non-constant type " + btypes[i]});
  }

  // Every variable feeding a B member must occur directly at some head
  // position: only then does groundness of the B-positions ground the call.
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    std::set<std::string> direct_head;
    for (size_t k = 0; k < c.head.arity(); ++k)
      if (c.head.args[k]->is_var()) direct_head.insert(c.head.args[k]->name());
    for (const auto& a : c.body) {
      if (!B.count(a.key())) continue;
      auto md = p.mode_of(mode, a.key());
      if (!md) continue;
      for (size_t i = 0; i < a.arity(); ++i) {
        if ((*md)[i] != Mode::In) continue;
        for (const auto& x : vars_of(a.args[i]))
          if (!direct_head.count(x))
            v.violations.push_back(
                {clause_label(ci, c),
                 "variable " + x + " feeding " + atom_to_string(a) +
                     " does not occur directly in the clause head"});
      }
    }
  }

  BPositionTable bp = b_positions(p, mode, B);
  // Ground-at-activation head variables, per predicate defined by one or
  // more clauses (intersection over clauses is not needed: forcing is a
  // property of the predicate's block declaration).
  auto ground_entry_vars = [&](const Clause& c) {
    std::set<std::string> g;
    auto md = p.mode_of(mode, c.head.key());
    if (!md) return g;
    TypeDecl htypes = effective_types(p, c.head.key(), c.head.arity());
    for (size_t k :
         forced_nonvar_positions(p.block_for(c.head.key()), c.head.arity()))
      if ((*md)[k] == Mode::In && c.head.args[k]->is_var() &&
          ts.classify(htypes[k]).constant)
        g.insert(c.head.args[k]->name());
    return g;
  };

  for (const auto& [key, poss] : bp.positions) {
    auto md = p.mode_of(mode, key);
    if (!md) {
      v.violations.push_back({key, "no mode declaration"});
      continue;
    }
    TypeDecl ktypes = effective_types(p, key, md->size());
    std::set<size_t> forced;
    {
      BlockDecl bd = p.block_for(key);
      forced = forced_nonvar_positions(bd, md->size());
    }
    for (size_t k : poss) {
      if ((*md)[k] != Mode::In || !ts.classify(ktypes[k]).constant) {
        v.violations.push_back(
            {key, "B-position " + std::to_string(k + 1) +
                      " is not an input position of constant type"});
        continue;
      }
      if (forced.count(k)) continue;  // the block guarantees non-variable
      if (B.count(key)) continue;     // selectability only binds non-B atoms
      // Not forced by the predicate's own block: every call site must pass
      // a term that is ground at activation.
      for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
        const Clause& c = p.clauses[ci];
        std::set<std::string> ground = ground_entry_vars(c);
        for (const auto& a : c.body) {
          if (a.key() != key) continue;
          const TermPtr& arg = a.args[k];
          bool certain = vars_of(arg).empty() ||
                         (arg->is_var() && ground.count(arg->name()));
          if (!certain)
            v.violations.push_back(
                {key, "B-position " + std::to_string(k + 1) +
                          " is not forced non-variable and " +
                          clause_label(ci, c) + " passes " +
                          term_to_string(arg)});
        }
      }
    }
  }
  v.holds = v.violations.empty();
  return v;
}

std::set<std::string> omit_blocks_by_safety(const Program& p,
                                            const std::string& mode,
                                            const std::vector<Atom>* query) {
  std::set<std::string> result;
  auto unsafe = unsafely_placed(p, mode, query);
  if (!unsafe) return result;
  DependencyGraph g = dependency_graph(p);
  for (const auto& key : p.defined_predicates()) {
    if (p.block_for(key).empty()) continue;
    bool omit = true;
    for (const auto& q : *unsafe)
      if (g.depends_on(q, key)) omit = false;
    if (omit) result.insert(key);
  }
  return result;
}

WaiverReport head_linearity_waivers(const Program& p,
                                    const std::string& mode) {
  WaiverReport r;
  TypeSystem ts(p.grammars);
  auto unsafe = unsafely_placed(p, mode, nullptr);
  DependencyGraph g = dependency_graph(p);
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    auto md = p.mode_of(mode, c.head.key());
    if (!md) continue;
    TypeDecl types = effective_types(p, c.head.key(), c.head.arity());
    std::set<size_t> forced =
        forced_nonvar_positions(p.block_for(c.head.key()), c.head.arity());
    std::map<std::string, int> count;
    std::map<std::string, std::vector<size_t>> direct, nested;
    for (size_t k = 0; k < c.head.arity(); ++k) {
      if ((*md)[k] != Mode::In) continue;
      const TermPtr& t = c.head.args[k];
      if (t->is_var()) {
        ++count[t->name()];
        direct[t->name()].push_back(k);
      } else {
        for (const auto& x : vars_of(t)) {
          ++count[x];
          nested[x].push_back(k);
        }
      }
    }
    for (const auto& [x, n] : count) {
      if (n < 2) continue;
      // constant-type case: direct occurrences only, constant types, at
      // least one occurrence forced non-variable (hence ground constant).
      bool constant_case = nested[x].empty();
      bool any_forced = false;
      for (size_t k : direct[x]) {
        if (!ts.classify(types[k]).constant) constant_case = false;
        if (forced.count(k)) any_forced = true;
      }
      if (constant_case && any_forced) {
        r.waivers.push_back(
            {ci, x,
             "equality check between constant-type inputs forced "
             "non-variable by the block declaration"});
        continue;
      }
      // ground-type case: all occurrences in ground-type input positions,
      // all dependents called from safe positions only.
      bool ground_case = true;
      for (size_t k : direct[x])
        if (!ts.classify(types[k]).ground) ground_case = false;
      for (size_t k : nested[x])
        if (!ts.classify(types[k]).ground) ground_case = false;
      if (ground_case && unsafe) {
        for (const auto& q : *unsafe)
          if (g.depends_on(q, c.head.key())) ground_case = false;
      } else {
        ground_case = false;
      }
      if (ground_case) {
        r.waivers.push_back(
            {ci, x,
             "equality check between ground-type inputs; every dependent "
             "is called from safe positions only"});
        continue;
      }
      r.rejected.push_back(
          {clause_label(ci, c),
           "repeated head-input variable " + x + " cannot be waived"});
    }
  }
  return r;
}

}  // namespace bc
