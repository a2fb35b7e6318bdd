#include "blockcheck/norms.hpp"

#include <algorithm>
#include <sstream>

namespace bc {

std::string norm_name(NormKind n) {
  switch (n) {
    case NormKind::ListLen: return "listlen";
    case NormKind::TermSize: return "termsize";
    case NormKind::IntValue: return "intvalue";
  }
  return "?";
}

LinExpr LinExpr::of_var(const std::string& v, long coeff) {
  LinExpr e;
  if (coeff != 0) e.coeffs[v] = coeff;
  return e;
}

LinExpr LinExpr::operator+(const LinExpr& o) const {
  LinExpr r = *this;
  r.constant += o.constant;
  for (const auto& [v, c] : o.coeffs) {
    r.coeffs[v] += c;
    if (r.coeffs[v] == 0) r.coeffs.erase(v);
  }
  return r;
}

LinExpr LinExpr::operator-(const LinExpr& o) const {
  LinExpr neg;
  neg.constant = -o.constant;
  for (const auto& [v, c] : o.coeffs) neg.coeffs[v] = -c;
  return *this + neg;
}

bool LinExpr::at_least(long k) const {
  if (constant < k) return false;
  return std::all_of(coeffs.begin(), coeffs.end(),
                     [](const auto& vc) { return vc.second >= 0; });
}

std::string LinExpr::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [v, c] : coeffs) {
    if (!first) os << (c >= 0 ? " + " : " - ");
    else if (c < 0) os << "-";
    long a = c < 0 ? -c : c;
    if (a != 1) os << a << "*";
    os << "|" << v << "|";
    first = false;
  }
  if (constant != 0 || first) {
    if (!first) os << (constant >= 0 ? " + " : " - ");
    os << (constant < 0 && first ? constant : (constant < 0 ? -constant : constant));
  }
  return os.str();
}

std::optional<LinExpr> symbolic_norm(const TermPtr& t, NormKind n,
                                     const std::set<std::string>* zero_vars) {
  switch (n) {
    case NormKind::ListLen: {
      if (t->is_var()) {
        if (zero_vars && zero_vars->count(t->name()))
          return LinExpr::of_const(0);
        return LinExpr::of_var(t->name());
      }
      if (t->name() == "." && t->arity() == 2) {
        auto tail = symbolic_norm(t->args()[1], n, zero_vars);
        if (!tail) return std::nullopt;
        return LinExpr::of_const(1) + *tail;
      }
      return LinExpr::of_const(0);  // [] and non-list terms
    }
    case NormKind::TermSize: {
      if (t->is_var()) {
        if (zero_vars && zero_vars->count(t->name()))
          return LinExpr::of_const(0);
        return LinExpr::of_var(t->name());
      }
      LinExpr e = LinExpr::of_const(1);
      for (const auto& a : t->args()) {
        auto sub = symbolic_norm(a, n, zero_vars);
        if (!sub) return std::nullopt;
        e = e + *sub;
      }
      return e;
    }
    case NormKind::IntValue: {
      if (t->is_var()) return LinExpr::of_var(t->name());
      if (t->is_int()) return LinExpr::of_const(t->int_value());
      if (t->arity() == 2 && (t->name() == "+" || t->name() == "-")) {
        auto l = symbolic_norm(t->args()[0], n, zero_vars);
        auto r = symbolic_norm(t->args()[1], n, zero_vars);
        if (!l || !r) return std::nullopt;
        return t->name() == "+" ? *l + *r : *l - *r;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<long> ground_norm(const TermPtr& t, NormKind n) {
  auto e = symbolic_norm(t, n);
  if (!e || !e->is_constant()) return std::nullopt;
  return e->constant;
}

std::optional<LinExpr> LevelMapping::level_of(
    const Atom& a, const std::set<std::string>* zero_vars) const {
  auto it = positions.find(a.key());
  if (it == positions.end()) return LinExpr::of_const(0);
  LinExpr e;
  for (size_t pos : it->second) {
    if (pos >= a.arity()) return std::nullopt;
    auto s = symbolic_norm(a.args[pos], norm, zero_vars);
    if (!s) return std::nullopt;
    e = e + *s;
  }
  return e;
}

std::string LevelMapping::to_string() const {
  std::ostringstream os;
  os << norm_name(norm) << "{";
  bool first = true;
  for (const auto& [key, poss] : positions) {
    if (!first) os << ", ";
    first = false;
    os << key << ":";
    for (size_t i = 0; i < poss.size(); ++i)
      os << (i ? "+" : "") << "arg" << (poss[i] + 1);
  }
  os << "}";
  return os.str();
}

std::string SizeRelation::to_string(const std::string& key) const {
  std::ostringstream os;
  os << key << ": ";
  for (size_t i = 0; i < outs.size(); ++i)
    os << (i ? "+" : "") << "out" << (outs[i] + 1);
  os << " <= ";
  for (size_t i = 0; i < ins.size(); ++i)
    os << (i ? "+" : "") << "in" << (ins[i] + 1);
  if (delta != 0) os << (delta > 0 ? " + " : " - ") << (delta > 0 ? delta : -delta);
  return os.str();
}

std::optional<LinExpr> BoundEnv::bound_listlen(const LinExpr& e) const {
  LinExpr work = e;
  LinExpr acc = LinExpr::of_const(0);
  // Apply joint bounds first: they preserve the coupling between outputs.
  bool changed = true;
  int fuel = 16;
  while (changed && fuel-- > 0) {
    changed = false;
    for (const auto& [vars, ub] : listlen_group_ub) {
      bool applies = !vars.empty();
      for (const auto& v : vars) {
        auto it = work.coeffs.find(v);
        if (it == work.coeffs.end() || it->second < 1) applies = false;
      }
      if (!applies) continue;
      for (const auto& v : vars) {
        if (--work.coeffs[v] == 0) work.coeffs.erase(v);
      }
      acc = acc + ub;
      changed = true;
    }
  }
  LinExpr r = LinExpr::of_const(work.constant) + acc;
  for (const auto& [v, c] : work.coeffs) {
    if (c < 0) return std::nullopt;
    auto it = listlen_ub.find(v);
    if (it == listlen_ub.end()) {
      r.coeffs[v] += c;  // base variable: bounded by itself
      continue;
    }
    LinExpr sub = it->second;
    sub.constant *= c;
    for (auto& [sv, sc] : sub.coeffs) sc *= c;
    r = r + sub;
  }
  return r;
}

std::optional<LinExpr> BoundEnv::resolve_intvalue(const LinExpr& e) const {
  LinExpr r = LinExpr::of_const(e.constant);
  for (const auto& [v, c] : e.coeffs) {
    auto it = intvalue_eq.find(v);
    if (it == intvalue_eq.end()) {
      r.coeffs[v] += c;
      if (r.coeffs[v] == 0) r.coeffs.erase(v);
      continue;
    }
    LinExpr sub = it->second;
    sub.constant *= c;
    for (auto& [sv, sc] : sub.coeffs) sc *= c;
    r = r + sub;
  }
  return r;
}

std::set<std::string> constant_typed_vars(const Clause& c, const Program& p,
                                          const TypeSystem& ts) {
  std::vector<std::pair<TermPtr, std::string>> typed;
  auto add = [&](const Atom& a) {
    auto tys = p.type_of(a.key());
    if (!tys) return;
    for (size_t i = 0; i < a.arity(); ++i) typed.emplace_back(a.args[i], (*tys)[i]);
  };
  add(c.head);
  for (const auto& a : c.body) add(a);
  auto env = ts.derive_env(typed);
  std::set<std::string> zeros;
  if (!env) return zeros;
  for (const auto& [var, type] : *env)
    if (ts.classify(type).constant) zeros.insert(var);
  return zeros;
}

void propagate_atom(
    BoundEnv& env, const Atom& a, const Program& p, const std::string& mode,
    const std::map<std::string, std::vector<SizeRelation>>& rels,
    const std::set<std::string>& zero_vars) {
  const std::string key = a.key();
  const BuiltinSpec* bs = builtin_spec(key);
  if (bs && !p.defines(key)) {
    if (bs->cls == BuiltinClass::Arithmetic && a.arity() == 2) {
      // X is E: exact IntValue equality; the result is an integer, so its
      // ListLen is 0.
      if (a.args[0]->is_var()) {
        auto e = symbolic_norm(a.args[1], NormKind::IntValue);
        if (e) {
          auto resolved = env.resolve_intvalue(*e);
          if (resolved) env.intvalue_eq[a.args[0]->name()] = *resolved;
        }
        env.listlen_ub[a.args[0]->name()] = LinExpr::of_const(0);
      }
    } else if (bs->cls == BuiltinClass::Comparison && a.arity() == 2) {
      // c < X / c =< X / X > c / X >= c give IntValue lower bounds.
      auto lower_bound = [&](const TermPtr& var, const TermPtr& cst,
                             long shift) {
        if (var->is_var() && cst->is_int()) {
          long lb = cst->int_value() + shift;
          auto it = env.intvalue_lb.find(var->name());
          if (it == env.intvalue_lb.end() || it->second < lb)
            env.intvalue_lb[var->name()] = lb;
        }
      };
      if (key == "</2") lower_bound(a.args[1], a.args[0], 1);
      if (key == "=</2") lower_bound(a.args[1], a.args[0], 0);
      if (key == ">/2") lower_bound(a.args[0], a.args[1], 1);
      if (key == ">=/2") lower_bound(a.args[0], a.args[1], 0);
    }
    return;
  }
  auto rit = rels.find(key);
  if (rit == rels.end()) return;
  for (const SizeRelation& rel : rit->second) {
    LinExpr insum;
    bool ok = true;
    for (size_t pos : rel.ins) {
      auto s = symbolic_norm(a.args[pos], NormKind::ListLen, &zero_vars);
      auto b = s ? env.bound_listlen(*s) : std::nullopt;
      if (!b) {
        ok = false;
        break;
      }
      insum = insum + *b;
    }
    if (!ok) continue;
    // Sum over the covered outputs is bounded; each variable occurring with
    // a positive unit coefficient is individually bounded after dropping the
    // (nonnegative) rest.
    LinExpr outsum;
    for (size_t pos : rel.outs) {
      auto s = symbolic_norm(a.args[pos], NormKind::ListLen, &zero_vars);
      if (!s) {
        ok = false;
        break;
      }
      outsum = outsum + *s;
    }
    if (!ok) continue;
    LinExpr total = insum;
    total.constant += rel.delta - outsum.constant;
    std::set<std::string> group;
    for (const auto& [v, c] : outsum.coeffs) {
      if (c != 1) continue;
      group.insert(v);
      if (env.listlen_ub.count(v)) continue;  // keep the first (tighter scan)
      env.listlen_ub[v] = total;
    }
    if (group.size() > 1) env.listlen_group_ub.emplace_back(group, total);
  }
}

namespace {

std::vector<Atom> ordered_body(const Clause& c, size_t ci,
                               const std::map<size_t, Permutation>& reorder) {
  auto it = reorder.find(ci);
  if (it == reorder.end()) return c.body;
  return it->second.apply(c.body);
}

// Verifies one candidate relation for every predicate in `scc` by induction.
bool verify_relation(
    const Program& p, const std::string& mode, const std::set<std::string>& scc,
    const std::map<std::string, SizeRelation>& candidate,
    const std::map<std::string, std::vector<SizeRelation>>& proven,
    const std::map<size_t, Permutation>& reorder, const TypeSystem& ts) {
  // Relations available inside the induction: everything proven for callees
  // plus the candidate as hypothesis for the SCC members.
  auto rels = proven;
  for (const auto& [key, rel] : candidate) rels[key].push_back(rel);
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    auto cand = candidate.find(c.head.key());
    if (cand == candidate.end()) continue;
    const SizeRelation& rel = cand->second;
    auto zeros = constant_typed_vars(c, p, ts);
    BoundEnv env;
    for (const Atom& a : ordered_body(c, ci, reorder))
      propagate_atom(env, a, p, mode, rels, zeros);
    LinExpr outsum, insum;
    for (size_t pos : rel.outs) {
      auto s = symbolic_norm(c.head.args[pos], NormKind::ListLen, &zeros);
      if (!s) return false;
      outsum = outsum + *s;
    }
    for (size_t pos : rel.ins) {
      auto s = symbolic_norm(c.head.args[pos], NormKind::ListLen, &zeros);
      if (!s) return false;
      insum = insum + *s;
    }
    auto out_ub = env.bound_listlen(outsum);
    if (!out_ub) return false;
    LinExpr slack = insum - *out_ub;
    slack.constant += rel.delta;
    if (!slack.at_least(0)) return false;
  }
  return true;
}

}  // namespace

std::map<std::string, std::vector<SizeRelation>> infer_size_relations(
    const Program& p, const std::string& mode, const DependencyGraph& g,
    const std::map<size_t, Permutation>& reordering) {
  std::map<std::string, std::vector<SizeRelation>> proven;
  TypeSystem ts(p.grammars);
  // SCCs come callees-first from Tarjan.
  for (const auto& scc_nodes : g.sccs) {
    std::set<std::string> scc(scc_nodes.begin(), scc_nodes.end());
    // Candidate shapes per predicate: all-outputs, then each single output,
    // with delta -1 preferred over 0.
    for (long delta : {-1L, 0L}) {
      for (int variant = -1;; ++variant) {
        std::map<std::string, SizeRelation> candidate;
        bool shaped = true;
        for (const auto& key : scc) {
          if (!p.defines(key)) {
            shaped = false;
            break;
          }
          auto md = p.mode_of(mode, key);
          if (!md) {
            shaped = false;
            break;
          }
          SizeRelation rel;
          rel.delta = delta;
          for (size_t i = 0; i < md->size(); ++i)
            if ((*md)[i] == Mode::In) rel.ins.push_back(i);
          std::vector<size_t> outs;
          for (size_t i = 0; i < md->size(); ++i)
            if ((*md)[i] == Mode::Out) outs.push_back(i);
          if (variant < 0)
            rel.outs = outs;  // all-outputs sum
          else if (static_cast<size_t>(variant) < outs.size())
            rel.outs = {outs[static_cast<size_t>(variant)]};
          else {
            shaped = false;
            break;
          }
          if (rel.outs.empty()) shaped = false;
          candidate[key] = rel;
        }
        if (!shaped) {
          if (variant < 0) continue;  // try single-output variants
          break;
        }
        if (verify_relation(p, mode, scc, candidate, proven, reordering, ts))
          for (const auto& [key, rel] : candidate) proven[key].push_back(rel);
      }
    }
  }
  return proven;
}

}  // namespace bc
