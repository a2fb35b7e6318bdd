#include "blockcheck/types.hpp"

#include <set>
#include <stdexcept>

namespace bc {

bool is_arith_functor(const std::string& name, size_t arity) {
  return arity == 2 && (name == "+" || name == "-");
}

TypeSystem::TypeSystem(std::map<std::string, TypeGrammar> grammars)
    : grammars_(std::move(grammars)) {}

const TypeGrammar* TypeSystem::grammar(const std::string& name) const {
  auto it = grammars_.find(name);
  return it == grammars_.end() ? nullptr : &it->second;
}

bool TypeSystem::is_variable_type(const std::string& type) const {
  return type == "any";
}

bool TypeSystem::member(const TermPtr& t, const std::string& type) const {
  const TypeGrammar* g = grammar(type);
  if (!g) throw std::invalid_argument("unresolved type: " + type);
  if (type == "any") return true;
  if (t->is_var()) return false;
  if (type == "int" || type == "num") {
    if (t->is_int()) return true;
    if (is_arith_functor(t->name(), t->arity()))
      return member(t->args()[0], type) && member(t->args()[1], type);
    return false;
  }
  for (const auto& p : g->productions) {
    if (p.functor != t->name() || p.arg_types.size() != t->arity()) continue;
    bool ok = true;
    for (size_t i = 0; i < t->arity() && ok; ++i)
      ok = member(t->args()[i], p.arg_types[i]);
    if (ok) return true;
  }
  return false;
}

bool TypeSystem::type_consistent(const TermPtr& t, const std::string& type) const {
  const TypeGrammar* g = grammar(type);
  if (!g) throw std::invalid_argument("unresolved type: " + type);
  if (type == "any" || t->is_var()) return true;
  if (type == "int" || type == "num") {
    if (t->is_int()) return true;
    if (is_arith_functor(t->name(), t->arity()))
      return type_consistent(t->args()[0], type) &&
             type_consistent(t->args()[1], type);
    return false;
  }
  for (const auto& p : g->productions) {
    if (p.functor != t->name() || p.arg_types.size() != t->arity()) continue;
    bool ok = true;
    for (size_t i = 0; i < t->arity() && ok; ++i)
      ok = type_consistent(t->args()[i], p.arg_types[i]);
    if (ok) return true;
  }
  return false;
}

TypeClassification TypeSystem::classify(const std::string& type) const {
  auto it = classify_cache_.find(type);
  if (it != classify_cache_.end()) return it->second;
  TypeClassification c;
  if (type == "any") {
    c.variable_type = true;
  } else if (type == "int" || type == "num") {
    c.ground = c.constant = true;
  } else {
    const TypeGrammar* g = grammar(type);
    if (!g) throw std::invalid_argument("unresolved type: " + type);
    // Ground iff no reachable production argument is `any`.
    std::set<std::string> visited;
    bool reaches_any = false;
    std::vector<std::string> stack{type};
    while (!stack.empty() && !reaches_any) {
      std::string cur = stack.back();
      stack.pop_back();
      if (!visited.insert(cur).second) continue;
      if (cur == "any") {
        reaches_any = true;
        break;
      }
      if (cur == "int" || cur == "num") continue;
      const TypeGrammar* cg = grammar(cur);
      if (!cg) throw std::invalid_argument("unresolved type: " + cur);
      for (const auto& p : cg->productions)
        for (const auto& at : p.arg_types) stack.push_back(at);
    }
    c.ground = !reaches_any;
    bool all_constants = true;
    for (const auto& p : g->productions)
      if (!p.arg_types.empty()) all_constants = false;
    c.constant = c.ground && all_constants;
  }
  classify_cache_[type] = c;
  return c;
}

bool TypeSystem::subtype(const std::string& sub, const std::string& super) const {
  std::set<std::pair<std::string, std::string>> assumed;
  return subtype_rec(sub, super, assumed);
}

bool TypeSystem::subtype_rec(
    const std::string& sub, const std::string& super,
    std::set<std::pair<std::string, std::string>>& assumed) const {
  if (sub == super || super == "any") return true;
  if (sub == "any") return false;
  if (sub == "int" && super == "num") return true;
  if (sub == "int" || sub == "num") return false;
  if (super == "int" || super == "num") return false;
  if (!assumed.insert({sub, super}).second) return true;  // coinductive
  const TypeGrammar* gs = grammar(sub);
  const TypeGrammar* gt = grammar(super);
  if (!gs || !gt) return false;
  for (const auto& ps : gs->productions) {
    bool covered = false;
    for (const auto& pt : gt->productions) {
      if (pt.functor != ps.functor || pt.arg_types.size() != ps.arg_types.size())
        continue;
      bool ok = true;
      for (size_t i = 0; i < ps.arg_types.size() && ok; ++i)
        ok = subtype_rec(ps.arg_types[i], pt.arg_types[i], assumed);
      if (ok) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

bool TypeSystem::intersect_demand(const std::string& var,
                                  const std::string& type, TypeEnv& env) const {
  if (type == "any") return true;
  auto it = env.find(var);
  if (it == env.end()) {
    env[var] = type;
    return true;
  }
  if (subtype(it->second, type)) return true;       // existing is tighter
  if (subtype(type, it->second)) {
    it->second = type;
    return true;
  }
  // Neither contains the other: within this grammar family the types are
  // disjoint, so the antecedent is unsatisfiable.
  return false;
}

bool TypeSystem::decompose(const TermPtr& t, const std::string& type,
                           TypeEnv& env) const {
  const TypeGrammar* g = grammar(type);
  if (!g) throw std::invalid_argument("unresolved type: " + type);
  if (type == "any") return true;
  if (t->is_var()) return intersect_demand(t->name(), type, env);
  if (type == "int" || type == "num") {
    if (t->is_int()) return true;
    if (is_arith_functor(t->name(), t->arity()))
      return decompose(t->args()[0], type, env) &&
             decompose(t->args()[1], type, env);
    return false;
  }
  for (const auto& p : g->productions) {
    if (p.functor != t->name() || p.arg_types.size() != t->arity()) continue;
    bool ok = true;
    for (size_t i = 0; i < t->arity() && ok; ++i)
      ok = decompose(t->args()[i], p.arg_types[i], env);
    if (ok) return true;
  }
  return false;
}

std::optional<TypeEnv> TypeSystem::derive_env(
    const std::vector<std::pair<TermPtr, std::string>>& antecedent) const {
  TypeEnv env;
  for (const auto& [t, ty] : antecedent)
    if (!decompose(t, ty, env)) return std::nullopt;
  return env;
}

bool TypeSystem::member_env(const TermPtr& t, const std::string& type,
                            const TypeEnv& env) const {
  const TypeGrammar* g = grammar(type);
  if (!g) throw std::invalid_argument("unresolved type: " + type);
  if (type == "any") return true;
  if (t->is_var()) {
    auto it = env.find(t->name());
    return it != env.end() && subtype(it->second, type);
  }
  if (type == "int" || type == "num") {
    if (t->is_int()) return true;
    if (is_arith_functor(t->name(), t->arity()))
      return member_env(t->args()[0], type, env) &&
             member_env(t->args()[1], type, env);
    return false;
  }
  for (const auto& p : g->productions) {
    if (p.functor != t->name() || p.arg_types.size() != t->arity()) continue;
    bool ok = true;
    for (size_t i = 0; i < t->arity() && ok; ++i)
      ok = member_env(t->args()[i], p.arg_types[i], env);
    if (ok) return true;
  }
  return false;
}

bool TypeSystem::implies_typing(
    const std::vector<std::pair<TermPtr, std::string>>& antecedent,
    const std::vector<std::pair<TermPtr, std::string>>& consequent) const {
  auto env = derive_env(antecedent);
  if (!env) return true;  // unsatisfiable antecedent
  for (const auto& [t, ty] : consequent)
    if (!member_env(t, ty, *env)) return false;
  return true;
}

}  // namespace bc
