#include "blockcheck/subst.hpp"

#include <deque>
#include <sstream>

namespace bc {

TermPtr Substitution::apply(const TermPtr& t) const {
  if (t->is_var()) {
    auto it = bindings_.find(t->name());
    return it == bindings_.end() ? t : it->second;
  }
  if (t->is_constant()) return t;
  bool changed = false;
  std::vector<TermPtr> args;
  args.reserve(t->arity());
  for (const auto& a : t->args()) {
    TermPtr na = apply(a);
    changed = changed || na.get() != a.get();
    args.push_back(std::move(na));
  }
  return changed ? Term::fun(t->name(), std::move(args)) : t;
}

Atom Substitution::apply(const Atom& a) const {
  Atom out;
  out.pred = a.pred;
  out.args.reserve(a.args.size());
  for (const auto& t : a.args) out.args.push_back(apply(t));
  return out;
}

std::vector<Atom> Substitution::apply(const std::vector<Atom>& q) const {
  std::vector<Atom> out;
  out.reserve(q.size());
  for (const auto& a : q) out.push_back(apply(a));
  return out;
}

std::vector<TermPtr> Substitution::apply(const std::vector<TermPtr>& ts) const {
  std::vector<TermPtr> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(apply(t));
  return out;
}

void Substitution::bind(const std::string& v, const TermPtr& t) {
  Substitution single;
  single.bindings_.emplace(v, t);
  for (auto& [var, term] : bindings_) term = single.apply(term);
  bindings_[v] = t;
  // Drop trivial x -> x entries that composition may have produced.
  for (auto it = bindings_.begin(); it != bindings_.end();) {
    if (it->second->is_var() && it->second->name() == it->first)
      it = bindings_.erase(it);
    else
      ++it;
  }
}

Substitution Substitution::composed(const Substitution& other) const {
  Substitution out;
  for (const auto& [v, t] : bindings_) {
    TermPtr nt = other.apply(t);
    if (!(nt->is_var() && nt->name() == v)) out.bindings_.emplace(v, nt);
  }
  for (const auto& [v, t] : other.bindings_) {
    if (!out.bindings_.count(v) && !bindings_.count(v))
      out.bindings_.emplace(v, t);
  }
  return out;
}

Substitution Substitution::restricted_to(
    const std::set<std::string>& vars) const {
  Substitution out;
  for (const auto& [v, t] : bindings_)
    if (vars.count(v)) out.bindings_.emplace(v, t);
  return out;
}

std::optional<TermPtr> Substitution::lookup(const std::string& v) const {
  auto it = bindings_.find(v);
  if (it == bindings_.end()) return std::nullopt;
  return it->second;
}

std::set<std::string> Substitution::domain() const {
  std::set<std::string> out;
  for (const auto& [v, t] : bindings_) out.insert(v);
  return out;
}

std::set<std::string> Substitution::range_vars() const {
  std::set<std::string> out;
  for (const auto& [v, t] : bindings_) collect_vars(t, out);
  return out;
}

std::string Substitution::to_string() const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [v, t] : bindings_) {
    if (!first) os << ", ";
    first = false;
    os << v << " -> " << term_to_string(t);
  }
  os << "}";
  return os.str();
}

namespace {

UnifyResult unify_lists(const std::vector<TermPtr>& as,
                        const std::vector<TermPtr>& bs, bool occur_check) {
  UnifyResult res;
  if (as.size() != bs.size()) return res;
  Substitution sigma;
  std::deque<std::pair<TermPtr, TermPtr>> work;
  for (size_t i = 0; i < as.size(); ++i) work.emplace_back(as[i], bs[i]);

  while (!work.empty()) {
    auto [l, r] = work.front();
    work.pop_front();
    l = sigma.apply(l);
    r = sigma.apply(r);
    if (l->is_var() && r->is_var()) {
      if (l->name() == r->name()) continue;
      sigma.bind(r->name(), l);  // clause-side variable goes into the domain
      continue;
    }
    if (l->is_var() || r->is_var()) {
      const TermPtr& v = l->is_var() ? l : r;
      const TermPtr& t = l->is_var() ? r : l;
      if (occurs_in(v->name(), t)) {
        res.status = occur_check ? UnifyResult::Status::Failure
                                 : UnifyResult::Status::CyclicTerm;
        return res;
      }
      sigma.bind(v->name(), t);
      continue;
    }
    if (l->name() != r->name() || l->arity() != r->arity()) return res;
    for (size_t i = 0; i < l->arity(); ++i)
      work.emplace_back(l->args()[i], r->args()[i]);
  }
  res.status = UnifyResult::Status::Ok;
  res.mgu = std::move(sigma);
  return res;
}

}  // namespace

UnifyResult unify(const TermPtr& a, const TermPtr& b, bool occur_check) {
  return unify_lists({a}, {b}, occur_check);
}

UnifyResult unify(const Atom& a, const Atom& b, bool occur_check) {
  if (a.pred != b.pred || a.args.size() != b.args.size()) return {};
  return unify_lists(a.args, b.args, occur_check);
}

}  // namespace bc
