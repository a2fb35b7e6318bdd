#include "blockcheck/termination.hpp"

#include <algorithm>
#include <sstream>

#include "blockcheck/subst.hpp"
#include "json.hpp"

namespace bc {

namespace {

std::string clause_label(size_t ci, const Clause& c) {
  return "clause " + std::to_string(ci + 1) + " (" + c.head.key() + ")";
}

bool blocked_by(const BlockDecl& bd, const std::vector<bool>& isvar) {
  for (const auto& pat : bd.patterns) {
    bool all_dash_var = true;
    for (size_t i = 0; i < isvar.size() && i < pat.size(); ++i)
      if (pat[i] == '-' && !isvar[i]) all_dash_var = false;
    if (all_dash_var) return true;
  }
  return false;
}

std::vector<Atom> ordered_body(const Clause& c, size_t ci,
                               const std::map<size_t, Permutation>& reorder) {
  auto it = reorder.find(ci);
  if (it == reorder.end()) return c.body;
  return it->second.apply(c.body);
}

std::string fresh_letter(size_t i) {
  if (i < 26) return std::string(1, static_cast<char>('A' + i));
  return "V" + std::to_string(i + 1);
}

}  // namespace

ConditionVerdict left_equals_ld(const Program& p, const std::string& mode) {
  ConditionVerdict v;
  v.condition = "left-based = LD";
  v.mode = mode;
  TypeSystem ts(p.grammars);
  ViewContext ctx(p, mode);
  // Well typed under the textual body order.
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    try {
      ModedAtomView head = ctx.head_view(c.head);
      std::vector<ModedAtomView> body;
      for (const auto& a : c.body) body.push_back(ctx.view(a));
      std::string why;
      if (!check_pi_kind(body, Permutation::identity((int)body.size()),
                         PiKind::Well, ts, &head, nullptr, &why))
        v.violations.push_back(
            {clause_label(ci, c), "not well typed in textual order: " + why});
    } catch (const std::exception& e) {
      v.violations.push_back({clause_label(ci, c), e.what()});
    }
  }
  // The block declarations must select every atom whose input positions of
  // non-variable type are non-variable.
  for (const auto& key : p.defined_predicates()) {
    auto md = p.mode_of(mode, key);
    if (!md) {
      v.violations.push_back({key, "no mode declaration"});
      continue;
    }
    auto tys = p.type_of(key);
    TypeDecl types = tys ? *tys : TypeDecl(md->size(), "any");
    BlockDecl bd = p.block_for(key);
    const size_t arity = md->size();
    const size_t combos = size_t{1} << arity;
    for (size_t mask = 0; mask < combos; ++mask) {
      std::vector<bool> isvar(arity);
      for (size_t i = 0; i < arity; ++i) isvar[i] = (mask >> i) & 1;
      bool typed_inputs_nonvar = true;
      for (size_t i = 0; i < arity; ++i)
        if ((*md)[i] == Mode::In && !ts.is_variable_type(types[i]) && isvar[i])
          typed_inputs_nonvar = false;
      if (!typed_inputs_nonvar) continue;
      if (blocked_by(bd, isvar)) {
        v.violations.push_back(
            {key, "an atom with non-variable terms in every input position "
                  "of non-variable type can be blocked"});
        break;
      }
    }
  }
  v.holds = v.violations.empty();
  return v;
}

ConditionVerdict non_speculative(const Program& p, const std::string& mode) {
  ConditionVerdict v;
  v.condition = "non-speculative";
  v.mode = mode;
  TypeSystem ts(p.grammars);

  auto simply = check_condition(p, mode, PiKind::Simply);
  v.witnesses = simply.witnesses;
  if (!simply.holds) {
    v.violations.push_back({"program", "not permutation simply typed"});
    for (const auto& viol : simply.violations) v.violations.push_back(viol);
  }
  auto il = input_linear(p, mode);
  if (!il.holds)
    for (const auto& viol : il.violations)
      v.violations.push_back({viol.where, "not input-linear: " + viol.reason});

  // Test built-ins can fail on correctly typed input; any binding made
  // before such a call is speculative.
  std::set<std::string> flagged;
  for (const auto& c : p.clauses)
    for (const auto& a : c.body) {
      const BuiltinSpec* bs = builtin_spec(a.key());
      if (bs && !p.defines(a.key()) && !bs->total && flagged.insert(a.key()).second)
        v.violations.push_back(
            {a.key(), "test built-in: correctly typed calls may fail"});
    }

  // Every simply typed atom must unify with some clause head. Clause heads
  // of a simply typed program are flat, so enumerating depth-1 input shapes
  // (per-production constructors with fresh variable arguments, and for
  // constant types the constants occurring in heads plus one fresh constant)
  // is exhaustive.
  for (const auto& key : p.defined_predicates()) {
    auto md = p.mode_of(mode, key);
    if (!md) continue;  // already reported by the simply check
    auto tys = p.type_of(key);
    TypeDecl types = tys ? *tys : TypeDecl(md->size(), "any");
    std::vector<Clause> defs;
    for (const auto& c : p.clauses)
      if (c.head.key() == key) defs.push_back(c);
    size_t fresh = 0;
    std::vector<std::vector<TermPtr>> choices(md->size());
    bool enumerable = true;
    for (size_t i = 0; i < md->size() && enumerable; ++i) {
      if ((*md)[i] == Mode::Out || ts.is_variable_type(types[i])) {
        choices[i] = {Term::var(fresh_letter(fresh++))};
        continue;
      }
      const TypeGrammar* g = ts.grammar(types[i]);
      if (!g) {
        enumerable = false;
        break;
      }
      if (g->primitive) {
        // int / num: constants only; collect the constants a head could
        // match, plus one that no head mentions.
        long maxc = 0;
        for (const auto& c : defs)
          if (c.head.args[i]->is_int()) {
            choices[i].push_back(c.head.args[i]);
            maxc = std::max(maxc, c.head.args[i]->int_value());
          }
        choices[i].push_back(Term::integer(maxc + 1));
      } else {
        for (const auto& prod : g->productions) {
          std::vector<TermPtr> args;
          for (size_t k = 0; k < prod.arg_types.size(); ++k)
            args.push_back(Term::var(fresh_letter(fresh++)));
          choices[i].push_back(Term::fun(prod.functor, std::move(args)));
        }
      }
    }
    if (!enumerable) {
      v.violations.push_back({key, "cannot enumerate the input shapes"});
      continue;
    }
    size_t total = 1;
    for (const auto& c : choices) total *= std::max<size_t>(1, c.size());
    if (total > 512) {
      v.violations.push_back({key, "input shape space too large to enumerate"});
      continue;
    }
    std::string name = key.substr(0, key.rfind('/'));
    std::vector<size_t> pick(md->size(), 0);
    bool done = total == 0;
    while (!done) {
      Atom shape{name, {}};
      for (size_t i = 0; i < md->size(); ++i) shape.args.push_back(choices[i][pick[i]]);
      bool covered = false;
      for (const auto& c : defs) {
        Clause rc = rename_apart(c, vars_of(shape));
        if (unify(shape, rc.head).ok()) {
          covered = true;
          break;
        }
      }
      if (!covered) {
        v.violations.push_back(
            {key, "the simply typed atom " + atom_to_string(shape) +
                      " unifies with no clause head"});
        break;
      }
      // advance the cartesian counter
      size_t i = 0;
      for (; i < pick.size(); ++i) {
        if (++pick[i] < choices[i].size()) break;
        pick[i] = 0;
      }
      done = i == pick.size();
    }
  }
  v.holds = v.violations.empty();
  return v;
}

bool well_recurrent(const Program& p, const std::string& mode,
                    const std::set<std::string>& scc, const LevelMapping& lm,
                    std::string* why) {
  if (lm.norm == NormKind::IntValue) {
    if (why) *why = "integer-value levels are not well-founded without guards";
    return false;
  }
  (void)mode;
  TypeSystem ts(p.grammars);
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    if (!scc.count(c.head.key())) continue;
    auto zeros = constant_typed_vars(c, p, ts);
    auto hl = lm.level_of(c.head, &zeros);
    if (!hl) {
      if (why) *why = clause_label(ci, c) + ": level undefined on the head";
      return false;
    }
    for (const auto& a : c.body) {
      if (!scc.count(a.key())) continue;
      auto al = lm.level_of(a, &zeros);
      if (!al) {
        if (why) *why = clause_label(ci, c) + ": level undefined on " + atom_to_string(a);
        return false;
      }
      LinExpr diff = *hl - *al;
      if (!diff.at_least(1)) {
        if (why)
          *why = clause_label(ci, c) + ": no decrease to " + atom_to_string(a) +
                 " (" + hl->to_string() + " vs " + al->to_string() + ")";
        return false;
      }
    }
  }
  return true;
}

namespace {

// Candidate input-position subsets for the level search: singles, pairs,
// then all input positions.
std::vector<std::vector<size_t>> position_subsets(const std::vector<size_t>& ins) {
  std::vector<std::vector<size_t>> subsets;
  for (size_t i : ins) subsets.push_back({i});
  for (size_t i = 0; i < ins.size(); ++i)
    for (size_t j = i + 1; j < ins.size(); ++j) subsets.push_back({ins[i], ins[j]});
  if (ins.size() > 2) subsets.push_back(ins);
  return subsets;
}

std::vector<size_t> input_positions(const ModeDecl& md) {
  std::vector<size_t> ins;
  for (size_t i = 0; i < md.size(); ++i)
    if (md[i] == Mode::In) ins.push_back(i);
  return ins;
}

// Level mapping candidates for one component: per norm, either the subset
// walk (single predicate) or the all-inputs assignment (mutual recursion).
std::vector<LevelMapping> level_candidates(const Program& p,
                                           const std::string& mode,
                                           const std::vector<std::string>& scc,
                                           const std::vector<NormKind>& norms) {
  std::vector<LevelMapping> out;
  for (NormKind norm : norms) {
    if (scc.size() == 1) {
      auto md = p.mode_of(mode, scc[0]);
      if (!md) continue;
      for (const auto& subset : position_subsets(input_positions(*md))) {
        LevelMapping lm;
        lm.norm = norm;
        lm.positions[scc[0]] = subset;
        out.push_back(std::move(lm));
      }
    } else {
      LevelMapping lm;
      lm.norm = norm;
      bool ok = true;
      for (const auto& key : scc) {
        auto md = p.mode_of(mode, key);
        if (!md) {
          ok = false;
          break;
        }
        lm.positions[key] = input_positions(*md);
      }
      if (ok) out.push_back(std::move(lm));
    }
  }
  return out;
}

}  // namespace

RobustnessResult robust_predicates(const Program& p, const std::string& mode,
                                   const std::vector<LinearityWaiver>& waivers) {
  RobustnessResult r;
  auto rb = check_condition(p, mode, PiKind::Robustly);
  if (!rb.applicable)
    r.precondition_failures.push_back(
        {"program", "robustly typed condition not applicable"});
  if (!rb.holds)
    for (const auto& viol : rb.violations) r.precondition_failures.push_back(viol);
  auto il = input_linear(p, mode, waivers);
  if (!il.holds)
    for (const auto& viol : il.violations)
      r.precondition_failures.push_back({viol.where, "not input-linear: " + viol.reason});
  auto sel = input_selectability(p, mode);
  if (!sel.holds)
    for (const auto& viol : sel.violations)
      r.precondition_failures.push_back({viol.where, "no input selectability: " + viol.reason});
  r.preconditions_ok = r.precondition_failures.empty();
  if (!r.preconditions_ok) return r;

  DependencyGraph g = dependency_graph(p);
  for (const auto& scc_nodes : g.sccs) {
    std::set<std::string> scc(scc_nodes.begin(), scc_nodes.end());
    // Built-ins are sink nodes; their table semantics makes them robust.
    if (scc_nodes.size() == 1 && !p.defines(scc_nodes[0]) &&
        builtin_spec(scc_nodes[0])) {
      r.robust.insert(scc_nodes[0]);
      r.notes[scc_nodes[0]] = "built-in: terminates by its table semantics";
      continue;
    }
    // Everything strictly below must already be robust.
    std::string missing;
    for (const auto& m : scc_nodes) {
      auto it = g.refers_to.find(m);
      if (it == g.refers_to.end()) continue;
      for (const auto& callee : it->second)
        if (!scc.count(callee) && !r.robust.count(callee)) missing = callee;
    }
    if (!missing.empty()) {
      for (const auto& m : scc_nodes)
        r.notes[m] = "depends on non-robust " + missing;
      continue;
    }
    bool recursive = scc_nodes.size() > 1 ||
                     (g.refers_to.count(scc_nodes[0]) &&
                      g.refers_to.at(scc_nodes[0]).count(scc_nodes[0]));
    if (!recursive) {
      r.robust.insert(scc_nodes[0]);
      r.notes[scc_nodes[0]] = "non-recursive with robust callees";
      continue;
    }
    bool found = false;
    std::string last_why = "no decreasing level mapping found";
    for (const auto& lm : level_candidates(
             p, mode, scc_nodes, {NormKind::ListLen, NormKind::TermSize})) {
      std::string why;
      if (well_recurrent(p, mode, scc, lm, &why)) {
        for (const auto& m : scc_nodes) {
          r.robust.insert(m);
          r.mappings[m] = lm;
          r.notes[m] = "well-recurrent with " + lm.to_string();
        }
        found = true;
        break;
      }
      if (!why.empty()) last_why = why;
    }
    if (!found)
      for (const auto& m : scc_nodes) r.notes[m] = last_why;
  }
  return r;
}

ConditionVerdict well_fed(const Program& p, const std::string& mode,
                          const RobustnessResult& rob,
                          const std::vector<LinearityWaiver>& waivers) {
  (void)waivers;  // already reflected in `rob`
  ConditionVerdict v;
  v.condition = "well fed";
  v.mode = mode;
  if (!rob.preconditions_ok) {
    v.violations = rob.precondition_failures;
    v.holds = false;
    return v;
  }
  auto rb = check_condition(p, mode, PiKind::Robustly);
  v.witnesses = rb.witnesses;
  DependencyGraph g = dependency_graph(p);
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    auto wit = v.witnesses.find(ci);
    Permutation pi = wit != v.witnesses.end()
                         ? wit->second
                         : Permutation::identity((int)c.body.size());
    for (int i = 1; i <= (int)c.body.size(); ++i) {
      if (is_safe_position(pi, i)) continue;
      const Atom& a = c.body[i - 1];
      for (const auto& q : g.cone(a.key()))
        if (!rob.robust.count(q) &&
            !(builtin_spec(q) && !p.defines(q))) {
          v.violations.push_back(
              {clause_label(ci, c),
               atom_to_string(a) + " is not in a safe position and " + q +
                   " is not robust"});
          break;
        }
    }
  }
  v.holds = v.violations.empty();
  return v;
}

namespace {

// One component, one candidate level mapping: every recursive call must
// decrease under the bounds accumulated from the preceding body atoms.
bool check_scc_ld(const Program& p, const std::string& mode,
                  const std::set<std::string>& scc, const LevelMapping& lm,
                  const std::map<std::string, std::vector<SizeRelation>>& rels,
                  const std::map<size_t, Permutation>& reordering,
                  const TypeSystem& ts) {
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    if (!scc.count(c.head.key())) continue;
    auto zeros = constant_typed_vars(c, p, ts);
    auto hl = lm.level_of(c.head, &zeros);
    if (!hl) return false;
    BoundEnv env;
    for (const Atom& a : ordered_body(c, ci, reordering)) {
      if (scc.count(a.key())) {
        auto al = lm.level_of(a, &zeros);
        if (!al) return false;
        switch (lm.norm) {
          case NormKind::TermSize: {
            if (!(*hl - *al).at_least(1)) return false;
            break;
          }
          case NormKind::ListLen: {
            auto ub = env.bound_listlen(*al);
            if (!ub || !(*hl - *ub).at_least(1)) return false;
            break;
          }
          case NormKind::IntValue: {
            auto hr = env.resolve_intvalue(*hl);
            auto ar = env.resolve_intvalue(*al);
            if (!hr || !ar) return false;
            LinExpr diff = *hr - *ar;
            if (!diff.is_constant() || diff.constant < 1) return false;
            // Well-foundedness: the callee's level is bounded below by the
            // comparison guards seen so far.
            long lb = ar->constant;
            bool bounded = true;
            for (const auto& [var, coeff] : ar->coeffs) {
              auto it = env.intvalue_lb.find(var);
              if (coeff < 0 || it == env.intvalue_lb.end()) {
                bounded = false;
                break;
              }
              lb += coeff * it->second;
            }
            if (!bounded || lb < 0) return false;
            break;
          }
        }
      }
      propagate_atom(env, a, p, mode, rels, zeros);
    }
  }
  return true;
}

}  // namespace

bool ld_terminates(const Program& p, const std::string& mode,
                   const std::map<size_t, Permutation>& reordering,
                   std::vector<std::string>* notes) {
  TypeSystem ts(p.grammars);
  DependencyGraph g = dependency_graph(p);
  auto rels = infer_size_relations(p, mode, g, reordering);
  bool all_ok = true;
  for (const auto& scc_nodes : g.sccs) {
    std::set<std::string> scc(scc_nodes.begin(), scc_nodes.end());
    bool recursive = scc_nodes.size() > 1 ||
                     (g.refers_to.count(scc_nodes[0]) &&
                      g.refers_to.at(scc_nodes[0]).count(scc_nodes[0]));
    if (!recursive) continue;
    bool defined = true;
    for (const auto& m : scc_nodes)
      if (!p.defines(m)) defined = false;
    if (!defined) continue;
    bool found = false;
    for (const auto& lm : level_candidates(
             p, mode, scc_nodes,
             {NormKind::ListLen, NormKind::IntValue, NormKind::TermSize})) {
      if (check_scc_ld(p, mode, scc, lm, rels, reordering, ts)) {
        if (notes)
          notes->push_back("component {" + scc_nodes[0] +
                           "}: decreases under " + lm.to_string());
        found = true;
        break;
      }
    }
    if (!found) {
      all_ok = false;
      if (notes)
        notes->push_back("component {" + scc_nodes[0] +
                         "}: no decreasing level mapping found");
    }
  }
  return all_ok;
}

TerminationReport termination_verdict(const Program& p,
                                      const std::string& mode) {
  TerminationReport r;
  r.mode = mode;
  auto note_failures = [&](const std::string& route,
                           const std::vector<Violation>& viols) {
    size_t shown = 0;
    for (const auto& viol : viols) {
      if (shown++ == 3) {
        r.notes.push_back("route " + route + ": ... (" +
                          std::to_string(viols.size() - 3) + " more)");
        break;
      }
      r.notes.push_back("route " + route + ": " + viol.where + ": " + viol.reason);
    }
  };
  auto attempt = [&](const std::string& route,
                     const std::map<size_t, Permutation>& ro) {
    std::vector<std::string> ldnotes;
    bool ok = ld_terminates(p, mode, ro, &ldnotes);
    for (const auto& n : ldnotes)
      r.notes.push_back("route " + route + ", LD obligation: " + n);
    if (ok) {
      r.certified = true;
      r.approach = route;
      r.ld_obligation = true;
      r.reordering = ro;
    }
    return ok;
  };

  auto a = left_equals_ld(p, mode);
  if (a.holds) {
    r.notes.push_back(
        "route A: left-based derivations coincide with LD derivations");
    if (attempt("A", {})) return r;
  } else {
    note_failures("A", a.violations);
  }

  auto b = non_speculative(p, mode);
  auto sel = input_selectability(p, mode);
  if (b.holds && sel.holds) {
    r.notes.push_back(
        "route B: non-speculative, so the body order is irrelevant");
    if (attempt("B", b.witnesses)) return r;
  } else {
    note_failures("B", b.holds ? sel.violations : b.violations);
  }

  auto rob = robust_predicates(p, mode);
  auto wf = well_fed(p, mode, rob);
  if (wf.holds) {
    r.notes.push_back("route C: well fed (every atom in a safe position or "
                      "with a robust call cone)");
    if (attempt("C", wf.witnesses)) return r;
  } else {
    note_failures("C", wf.violations);
  }

  r.notes.push_back("not certified: no route establishes termination");
  return r;
}

std::string TerminationReport::summary() const {
  std::ostringstream os;
  os << "termination [mode " << mode << "]: ";
  if (certified)
    os << "certified via route " << approach;
  else
    os << "not certified";
  for (const auto& n : notes) os << "\n  " << n;
  return os.str();
}

std::string TerminationReport::to_json() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["certified"] = certified;
  j["approach"] = approach;
  j["ld_obligation"] = ld_obligation;
  nlohmann::json ro = nlohmann::json::object();
  for (const auto& [ci, pi] : reordering)
    ro[std::to_string(ci + 1)] = pi.to_string();
  j["reordering"] = ro;
  j["notes"] = notes;
  return j.dump(2);
}

}  // namespace bc
