#include "blockcheck/modes.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace bc {

std::string kind_name(PiKind k) {
  switch (k) {
    case PiKind::Nicely: return "permutation nicely moded";
    case PiKind::Well: return "permutation well typed";
    case PiKind::Simply: return "permutation simply typed";
    case PiKind::Robustly: return "permutation robustly typed";
  }
  return "?";
}

ModedAtomView make_view(const Atom& a, const ModeDecl& mode,
                        const TypeDecl& types) {
  if (mode.size() != a.arity() || types.size() != a.arity())
    throw std::runtime_error("mode/type arity mismatch for " + a.key());
  ModedAtomView v;
  v.atom = a;
  for (size_t i = 0; i < a.arity(); ++i) {
    if (mode[i] == Mode::In) {
      v.inputs.push_back(a.args[i]);
      v.input_types.push_back(types[i]);
      v.input_positions.push_back(i);
    } else {
      v.outputs.push_back(a.args[i]);
      v.output_types.push_back(types[i]);
      v.output_positions.push_back(i);
    }
  }
  return v;
}

ViewContext::ViewContext(const Program& p, std::string mode_name)
    : program_(&p), mode_name_(std::move(mode_name)) {}

ModedAtomView ViewContext::view(const Atom& a) const {
  auto m = program_->mode_of(mode_name_, a.key());
  if (!m)
    throw std::runtime_error("no mode declaration for " + a.key() +
                             " in mode " + mode_name_);
  auto t = program_->type_of(a.key());
  TypeDecl types = t ? *t : TypeDecl(a.arity(), "any");
  return make_view(a, *m, types);
}

ModedAtomView ViewContext::head_view(const Atom& h) const { return view(h); }

bool PositionClassification::is_bound(const std::string& key,
                                      size_t pos) const {
  auto it = bound.find(key);
  if (it == bound.end() || pos >= it->second.size()) return false;
  return it->second[pos];
}

PositionClassification bound_free(const Program& p, const std::string& mode,
                                  std::vector<std::string>* warnings) {
  if (warnings) {
    auto wt = check_condition(p, mode, PiKind::Well);
    if (!wt.holds)
      warnings->push_back("bound/free computed on a program that is not " +
                          kind_name(PiKind::Well) + " in mode " + mode);
  }
  PositionClassification pc;
  auto ensure = [&](const std::string& key, size_t arity) {
    auto& v = pc.bound[key];
    if (v.size() < arity) v.resize(arity, false);
  };
  auto mode_decl = [&](const std::string& key) {
    return p.mode_of(mode, key);
  };
  // Input positions: non-variable term in some clause head.
  for (const auto& c : p.clauses) {
    auto md = mode_decl(c.head.key());
    if (!md) continue;
    ensure(c.head.key(), c.head.arity());
    for (size_t i = 0; i < c.head.arity(); ++i)
      if ((*md)[i] == Mode::In && !c.head.args[i]->is_var())
        pc.bound[c.head.key()][i] = true;
  }
  // Output positions: non-variable term in some body atom.
  for (const auto& c : p.clauses)
    for (const auto& a : c.body) {
      auto md = mode_decl(a.key());
      if (!md) continue;
      ensure(a.key(), a.arity());
      for (size_t i = 0; i < a.arity(); ++i)
        if ((*md)[i] == Mode::Out && !a.args[i]->is_var())
          pc.bound[a.key()][i] = true;
    }
  // Built-ins: conceptual fact heads are non-variable in the inputs.
  for (const auto& c : p.clauses)
    for (const auto& a : c.body) {
      const BuiltinSpec* bs = builtin_spec(a.key());
      if (!bs || p.defines(a.key())) continue;
      if (!bs->bound_inputs) continue;
      ensure(a.key(), a.arity());
      for (size_t i = 0; i < a.arity(); ++i)
        if (bs->mode[i] == Mode::In) pc.bound[a.key()][i] = true;
    }
  return pc;
}

namespace {

using TypedVec = std::vector<std::pair<TermPtr, std::string>>;

TypedVec typed_pairs(const std::vector<TermPtr>& terms,
                     const std::vector<std::string>& types) {
  TypedVec out;
  for (size_t i = 0; i < terms.size(); ++i) out.emplace_back(terms[i], types[i]);
  return out;
}

std::string find_repeated_output_var(const std::vector<ModedAtomView>& body) {
  std::map<std::string, int> counts;
  for (const auto& v : body)
    for (const auto& t : v.outputs) {
      // count every occurrence, including repeats within one term
      std::vector<TermPtr> stack{t};
      while (!stack.empty()) {
        TermPtr cur = stack.back();
        stack.pop_back();
        if (cur->is_var()) {
          if (++counts[cur->name()] > 1) return cur->name();
        } else {
          for (const auto& a : cur->args()) stack.push_back(a);
        }
      }
    }
  return "";
}

bool set_intersects(const std::set<std::string>& a,
                    const std::set<std::string>& b, std::string* witness) {
  for (const auto& x : a)
    if (b.count(x)) {
      if (witness) *witness = x;
      return true;
    }
  return false;
}

bool check_nicely(const std::vector<ModedAtomView>& body, const Permutation& pi,
                  const ModedAtomView* head, std::string* why) {
  const int n = static_cast<int>(body.size());
  std::string rep = find_repeated_output_var(body);
  if (!rep.empty()) {
    if (why) *why = "output vector not linear: " + rep + " twice";
    return false;
  }
  std::vector<std::set<std::string>> outvars(n);
  for (int j = 0; j < n; ++j) outvars[j] = vars_of(body[j].outputs);
  for (int i = 0; i < n; ++i) {
    auto invars = vars_of(body[i].inputs);
    for (int j = 0; j < n; ++j) {
      if (pi(j + 1) < pi(i + 1)) continue;
      std::string w;
      if (set_intersects(invars, outvars[j], &w)) {
        if (why)
          *why = "input of atom " + std::to_string(i + 1) + " (" +
                 atom_to_string(body[i].atom) + ") shares " + w +
                 " with a pi-later output";
        return false;
      }
    }
  }
  if (head) {
    auto headin = vars_of(head->inputs);
    for (int j = 0; j < n; ++j) {
      std::string w;
      if (set_intersects(headin, outvars[j], &w)) {
        if (why) *why = "head input shares " + w + " with a body output";
        return false;
      }
    }
  }
  return true;
}

bool check_well(const std::vector<ModedAtomView>& body, const Permutation& pi,
                const TypeSystem& ts, const ModedAtomView* head,
                std::string* why) {
  const int n = static_cast<int>(body.size());
  TypedVec head_in;
  if (head) head_in = typed_pairs(head->inputs, head->input_types);
  for (int i = 0; i < n; ++i) {
    TypedVec ante = head_in;  // pi(0) = 0 < pi(i) always (clause case, L = 0)
    for (int j = 0; j < n; ++j)
      if (pi(j + 1) < pi(i + 1)) {
        auto tj = typed_pairs(body[j].outputs, body[j].output_types);
        ante.insert(ante.end(), tj.begin(), tj.end());
      }
    TypedVec cons = typed_pairs(body[i].inputs, body[i].input_types);
    if (!ts.implies_typing(ante, cons)) {
      if (why)
        *why = "typing of pi-earlier outputs does not force correctly typed "
               "input of atom " +
               std::to_string(i + 1) + " (" + atom_to_string(body[i].atom) +
               ")";
      return false;
    }
  }
  if (head) {  // i = n+1: the head output typing must follow from everything
    TypedVec ante = head_in;
    for (int j = 0; j < n; ++j) {
      auto tj = typed_pairs(body[j].outputs, body[j].output_types);
      ante.insert(ante.end(), tj.begin(), tj.end());
    }
    TypedVec cons = typed_pairs(head->outputs, head->output_types);
    if (!ts.implies_typing(ante, cons)) {
      if (why) *why = "head output typing not implied by body outputs";
      return false;
    }
  }
  return true;
}

bool flat_type_consistent(const TermPtr& t, const std::string& type,
                          const TypeSystem& ts) {
  return is_flat(t) && ts.type_consistent(t, type);
}

bool check_simply_extra(const std::vector<ModedAtomView>& body,
                        const TypeSystem& ts, const ModedAtomView* head,
                        std::string* why) {
  for (const auto& v : body)
    for (const auto& t : v.outputs)
      if (!t->is_var()) {
        if (why)
          *why = "non-variable term " + term_to_string(t) +
                 " in an output position of " + atom_to_string(v.atom);
        return false;
      }
  if (head) {
    std::set<std::string> seen;  // flatness across the vector: linear too
    for (size_t i = 0; i < head->inputs.size(); ++i) {
      const auto& t = head->inputs[i];
      const auto& ty = head->input_types[i];
      if (!flat_type_consistent(t, ty, ts)) {
        if (why)
          *why = "head input " + term_to_string(t) +
                 " is not flat type-consistent";
        return false;
      }
      if (ts.is_variable_type(ty) && !t->is_var()) {
        if (why)
          *why = "head input position of variable type " + ty +
                 " holds non-variable " + term_to_string(t);
        return false;
      }
    }
  }
  return true;
}

bool check_robustly_extra(const std::vector<ModedAtomView>& body,
                          const TypeSystem& ts, const ModedAtomView* head,
                          const PositionClassification& bf, std::string* why) {
  auto check_vec = [&](const ModedAtomView& v, bool as_head_input,
                       std::string* w) {
    const auto& terms = as_head_input ? v.inputs : v.outputs;
    const auto& types = as_head_input ? v.input_types : v.output_types;
    const auto& poss = as_head_input ? v.input_positions : v.output_positions;
    for (size_t i = 0; i < terms.size(); ++i) {
      bool b = bf.is_bound(v.atom.key(), poss[i]);
      if (!b && !terms[i]->is_var()) {
        if (w)
          *w = "non-variable term " + term_to_string(terms[i]) +
               " in a free position of " + atom_to_string(v.atom);
        return false;
      }
      if (b && !flat_type_consistent(terms[i], types[i], ts)) {
        if (w)
          *w = "term " + term_to_string(terms[i]) + " in a bound position of " +
               atom_to_string(v.atom) + " is not flat type-consistent";
        return false;
      }
    }
    return true;
  };
  for (const auto& v : body)
    if (!check_vec(v, false, why)) return false;
  if (head) {
    if (!check_vec(*head, true, why)) return false;
    // Condition 2: a variable x in a bound head output position of type tau
    // must also fill a bound position of type tau in t0..tn.
    for (size_t i = 0; i < head->outputs.size(); ++i) {
      if (!bf.is_bound(head->atom.key(), head->output_positions[i])) continue;
      const auto& t = head->outputs[i];
      if (!t->is_var()) continue;
      const std::string& tau = head->output_types[i];
      bool found = false;
      auto scan = [&](const ModedAtomView& v, bool as_head_input) {
        const auto& terms = as_head_input ? v.inputs : v.outputs;
        const auto& types = as_head_input ? v.input_types : v.output_types;
        const auto& poss =
            as_head_input ? v.input_positions : v.output_positions;
        for (size_t j = 0; j < terms.size(); ++j)
          if (bf.is_bound(v.atom.key(), poss[j]) && types[j] == tau &&
              terms[j]->is_var() && terms[j]->name() == t->name())
            found = true;
      };
      scan(*head, true);
      for (const auto& v : body) scan(v, false);
      if (!found) {
        if (why)
          *why = "variable " + t->name() +
                 " in a bound head output position of type " + tau +
                 " fills no bound position of that type in t0..tn";
        return false;
      }
    }
  }
  return true;
}

}  // namespace

bool check_pi_kind(const std::vector<ModedAtomView>& body,
                   const Permutation& pi, PiKind kind, const TypeSystem& ts,
                   const ModedAtomView* head, const PositionClassification* bf,
                   std::string* why) {
  switch (kind) {
    case PiKind::Nicely:
      return check_nicely(body, pi, head, why);
    case PiKind::Well:
      return check_well(body, pi, ts, head, why);
    case PiKind::Simply:
      return check_nicely(body, pi, head, why) &&
             check_well(body, pi, ts, head, why) &&
             check_simply_extra(body, ts, head, why);
    case PiKind::Robustly:
      if (!bf) throw std::invalid_argument(
          "robustly-typed check needs a bound/free classification");
      return check_nicely(body, pi, head, why) &&
             check_well(body, pi, ts, head, why) &&
             check_robustly_extra(body, ts, head, *bf, why);
  }
  return false;
}

namespace {

// Topological order of the producer->consumer sharing graph; edge j -> i when
// an output of atom j shares a variable with an input of atom i. Ties prefer
// textual order. Returns empty on a cycle.
std::vector<int> topo_order(const std::vector<ModedAtomView>& body) {
  const int n = static_cast<int>(body.size());
  std::vector<std::set<std::string>> in(n), out(n);
  for (int i = 0; i < n; ++i) {
    in[i] = vars_of(body[i].inputs);
    out[i] = vars_of(body[i].outputs);
  }
  std::vector<std::vector<int>> succ(n);
  std::vector<int> indeg(n, 0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      if (set_intersects(in[i], out[j], nullptr)) {
        succ[j].push_back(i);
        ++indeg[i];
      }
    }
  std::vector<int> order;
  std::vector<bool> done(n, false);
  for (int step = 0; step < n; ++step) {
    int pick = -1;
    for (int i = 0; i < n; ++i)
      if (!done[i] && indeg[i] == 0) {
        pick = i;
        break;
      }
    if (pick < 0) return {};
    done[pick] = true;
    order.push_back(pick);
    for (int s : succ[pick]) --indeg[s];
  }
  return order;
}

Permutation order_to_perm(const std::vector<int>& order) {
  std::vector<int> img(order.size());
  for (size_t rank = 0; rank < order.size(); ++rank)
    img[order[rank]] = static_cast<int>(rank) + 1;
  return Permutation(img);
}

}  // namespace

WitnessResult find_permutation_nm(const std::vector<ModedAtomView>& body,
                                  PiKind kind, const TypeSystem& ts,
                                  const ModedAtomView* head,
                                  const PositionClassification* bf) {
  const int n = static_cast<int>(body.size());
  WitnessResult r;
  auto try_pi = [&](const Permutation& pi) {
    std::string why;
    if (check_pi_kind(body, pi, kind, ts, head, bf, &why)) {
      r.pi = pi;
      return true;
    }
    if (r.reason.empty()) r.reason = why;
    return false;
  };
  if (try_pi(Permutation::identity(n))) return r;
  auto order = topo_order(body);
  if (!order.empty() && try_pi(order_to_perm(order))) return r;
  if (n <= 8) {
    for (const auto& pi : all_permutations(n))
      if (try_pi(pi)) return r;
  }
  // No witness: prefer a pi-independent blocker as the reported reason.
  std::string why;
  if ((kind == PiKind::Nicely || kind == PiKind::Simply ||
       kind == PiKind::Robustly) &&
      !find_repeated_output_var(body).empty())
    why = "output vector not linear: " + find_repeated_output_var(body) +
          " twice";
  else if (kind == PiKind::Simply && !check_simply_extra(body, ts, head, &why))
    ;  // why set
  else if (kind == PiKind::Robustly && bf &&
           !check_robustly_extra(body, ts, head, *bf, &why))
    ;  // why set
  else
    why.clear();
  if (!why.empty())
    r.reason = why;
  else if (r.reason.empty())
    r.reason = "no witness permutation found";
  return r;
}

ConditionVerdict check_condition(const Program& p, const std::string& mode,
                                 PiKind kind) {
  ConditionVerdict v;
  v.condition = kind_name(kind);
  v.mode = mode;
  TypeSystem ts(p.grammars);
  ViewContext ctx(p, mode);
  PositionClassification bf;
  if (kind == PiKind::Robustly) {
    // Precondition: permutation well typed program, bound positions of
    // non-variable type. Otherwise the condition is not applicable.
    auto wt = check_condition(p, mode, PiKind::Well);
    if (!wt.holds) {
      v.applicable = false;
      v.violations.push_back(
          {"program", "precondition failed: not " + kind_name(PiKind::Well)});
      return v;
    }
    bf = bound_free(p, mode);
    for (const auto& [key, positions] : bf.bound) {
      auto declared = p.type_of(key);
      TypeDecl tys =
          declared ? *declared : TypeDecl(positions.size(), "any");
      for (size_t i = 0; i < positions.size(); ++i)
        if (positions[i] && ts.is_variable_type(tys[i])) {
          v.applicable = false;
          v.violations.push_back(
              {key, "precondition failed: bound position " +
                        std::to_string(i + 1) + " has variable type " +
                        tys[i]});
          return v;
        }
    }
  }
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    std::string where =
        "clause " + std::to_string(ci + 1) + " (" + c.head.key() + ")";
    try {
      ModedAtomView head = ctx.head_view(c.head);
      std::vector<ModedAtomView> body;
      for (const auto& a : c.body) body.push_back(ctx.view(a));
      auto w = find_permutation_nm(body, kind, ts, &head,
                                   kind == PiKind::Robustly ? &bf : nullptr);
      if (w.pi)
        v.witnesses[ci] = *w.pi;
      else
        v.violations.push_back({where, w.reason});
    } catch (const std::exception& e) {
      v.violations.push_back({where, e.what()});
    }
  }
  v.holds = v.violations.empty();
  return v;
}

ConditionVerdict input_linear(const Program& p, const std::string& mode,
                              const std::vector<LinearityWaiver>& waivers) {
  ConditionVerdict v;
  v.condition = "input-linear";
  v.mode = mode;
  auto waived = [&](size_t ci, const std::string& var) {
    for (const auto& w : waivers)
      if (w.clause_index == ci && w.variable == var) return true;
    return false;
  };
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    std::string where =
        "clause " + std::to_string(ci + 1) + " (" + c.head.key() + ")";
    auto md = p.mode_of(mode, c.head.key());
    if (!md) {
      v.violations.push_back({where, "no mode declaration"});
      continue;
    }
    std::map<std::string, int> counts;
    for (size_t i = 0; i < c.head.arity(); ++i) {
      if ((*md)[i] != Mode::In) continue;
      std::vector<TermPtr> stack{c.head.args[i]};
      while (!stack.empty()) {
        TermPtr t = stack.back();
        stack.pop_back();
        if (t->is_var())
          ++counts[t->name()];
        else
          for (const auto& a : t->args()) stack.push_back(a);
      }
    }
    for (const auto& [var, cnt] : counts)
      if (cnt > 1 && !waived(ci, var))
        v.violations.push_back(
            {where, "head input vector not linear: " + var + " occurs " +
                        std::to_string(cnt) + " times"});
    for (const auto& a : c.body) {
      if (a.key() != "=/2") continue;
      auto amd = p.mode_of(mode, a.key());
      if (amd && (*amd)[0] == Mode::In && (*amd)[1] == Mode::In)
        v.violations.push_back(
            {where, "use of =(I,I): " + atom_to_string(a)});
    }
  }
  v.holds = v.violations.empty();
  return v;
}

ConditionVerdict input_selectability(const Program& p, const std::string& mode,
                                     const std::set<std::string>& exempt) {
  ConditionVerdict v;
  v.condition = "input selectability";
  v.mode = mode;
  TypeSystem ts(p.grammars);
  PositionClassification bf = bound_free(p, mode);
  // All predicates the program defines (built-ins have conceptual
  // definitions meeting the conditions and are exempt).
  for (const auto& key : p.defined_predicates()) {
    if (exempt.count(key)) continue;
    auto md = p.mode_of(mode, key);
    if (!md) {
      v.violations.push_back({key, "no mode declaration"});
      continue;
    }
    auto tys = p.type_of(key);
    TypeDecl types = tys ? *tys : TypeDecl(md->size(), "any");
    BlockDecl bd = p.block_for(key);
    const size_t arity = md->size();
    // Abstract atoms: per position var(true)/nonvar(false); free output
    // positions are pinned to var (the definition quantifies over atoms with
    // variables in all free output positions).
    std::vector<size_t> open;  // positions ranging over both values
    std::vector<bool> isvar(arity, false);
    for (size_t i = 0; i < arity; ++i) {
      bool free_output =
          (*md)[i] == Mode::Out && !bf.is_bound(key, i);
      if (free_output)
        isvar[i] = true;
      else
        open.push_back(i);
    }
    const size_t combos = size_t{1} << open.size();
    for (size_t mask = 0; mask < combos; ++mask) {
      for (size_t b = 0; b < open.size(); ++b)
        isvar[open[b]] = (mask >> b) & 1;
      bool blocked = false;
      for (const auto& pat : bd.patterns) {
        bool all_dash_var = true;
        for (size_t i = 0; i < arity; ++i)
          if (pat[i] == '-' && !isvar[i]) all_dash_var = false;
        if (all_dash_var) {
          blocked = true;
          break;
        }
      }
      bool selectable = !blocked;
      if (selectable) {
        for (size_t i = 0; i < arity; ++i)
          if ((*md)[i] == Mode::In && bf.is_bound(key, i) && isvar[i]) {
            v.violations.push_back(
                {key, "condition 1: selectable with a variable in bound "
                      "input position " +
                          std::to_string(i + 1)});
            mask = combos;  // one witness per predicate is enough
            break;
          }
        if (mask == combos) break;
      } else {
        bool typed_inputs_nonvar = true;
        for (size_t i = 0; i < arity; ++i)
          if ((*md)[i] == Mode::In && !ts.is_variable_type(types[i]) &&
              isvar[i])
            typed_inputs_nonvar = false;
        if (typed_inputs_nonvar) {
          v.violations.push_back(
              {key, "condition 2: blocked although every input position of "
                    "non-variable type is non-variable"});
          break;
        }
      }
    }
  }
  v.holds = v.violations.empty();
  return v;
}

std::string ConditionVerdict::to_json() const {
  nlohmann::json j;
  j["condition"] = condition;
  j["mode"] = mode;
  j["holds"] = holds;
  j["applicable"] = applicable;
  nlohmann::json ws = nlohmann::json::object();
  for (const auto& [ci, pi] : witnesses)
    ws[std::to_string(ci + 1)] = pi.to_string();
  j["witnesses"] = ws;
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& viol : violations)
    vs.push_back({{"where", viol.where}, {"reason", viol.reason}});
  j["violations"] = vs;
  return j.dump(2);
}

std::string ConditionVerdict::summary() const {
  std::ostringstream os;
  os << condition << " [mode " << mode << "]: ";
  if (!applicable)
    os << "not applicable";
  else
    os << (holds ? "holds" : "fails");
  for (const auto& viol : violations)
    os << "\n  " << viol.where << ": " << viol.reason;
  return os.str();
}

}  // namespace bc
