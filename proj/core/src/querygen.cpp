#include <stdexcept>

#include "blockcheck/engine.hpp"
#include "blockcheck/types.hpp"

namespace bc {

namespace {

// A production is recursive when some argument type is itself non-primitive
// (conservative: any such production can grow the term).
bool base_production(const TypeSystem& ts, const Production& pr) {
  for (const auto& at : pr.arg_types) {
    const TypeGrammar* g = ts.grammar(at);
    if (g && !g->primitive) return false;
  }
  return true;
}

}  // namespace

TermPtr random_term(const TypeSystem& ts, const std::string& type,
                    std::mt19937_64& rng, int depth) {
  const TypeGrammar* g = ts.grammar(type);
  if (!g || g->primitive || g->productions.empty())
    return Term::integer(
        std::uniform_int_distribution<long>(0, 4)(rng));
  std::vector<const Production*> candidates;
  for (const auto& pr : g->productions)
    if (depth > 0 || base_production(ts, pr)) candidates.push_back(&pr);
  if (candidates.empty())  // no base case: take the smallest production
    candidates.push_back(&g->productions.front());
  const Production* pr = candidates[std::uniform_int_distribution<size_t>(
      0, candidates.size() - 1)(rng)];
  std::vector<TermPtr> args;
  args.reserve(pr->arg_types.size());
  for (const auto& at : pr->arg_types)
    args.push_back(random_term(ts, at, rng, depth - 1));
  return Term::fun(pr->functor, std::move(args));
}

Atom random_query_atom(const Program& p, const std::string& mode,
                       const std::string& key, std::mt19937_64& rng) {
  auto md = p.mode_of(mode, key);
  if (!md)
    throw std::invalid_argument("no mode " + mode + " for " + key);
  TypeDecl types;
  if (auto ty = p.type_of(key))
    types = *ty;
  else
    types.assign(md->size(), "any");
  TypeSystem ts(p.grammars);
  Atom a;
  a.pred = key.substr(0, key.rfind('/'));
  for (size_t i = 0; i < md->size(); ++i) {
    if ((*md)[i] == Mode::In)
      a.args.push_back(random_term(ts, types[i], rng));
    else
      a.args.push_back(Term::var(fresh_var_name("Q")));
  }
  return a;
}

}  // namespace bc
