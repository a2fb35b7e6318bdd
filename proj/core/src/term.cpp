#include "blockcheck/term.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <map>
#include <sstream>

namespace bc {

TermPtr Term::var(std::string name) {
  return std::make_shared<Term>(Kind::Var, std::move(name), std::vector<TermPtr>{});
}

TermPtr Term::fun(std::string functor, std::vector<TermPtr> args) {
  return std::make_shared<Term>(Kind::Compound, std::move(functor), std::move(args));
}

TermPtr Term::integer(long v) { return fun(std::to_string(v)); }

TermPtr Term::nil() { return fun("[]"); }

TermPtr Term::cons(TermPtr head, TermPtr tail) {
  return fun(".", {std::move(head), std::move(tail)});
}

TermPtr Term::list(const std::vector<TermPtr>& elems) {
  TermPtr t = nil();
  for (auto it = elems.rbegin(); it != elems.rend(); ++it) t = cons(*it, t);
  return t;
}

bool Term::is_int() const {
  if (!is_constant() || name_.empty()) return false;
  size_t i = (name_[0] == '-') ? 1 : 0;
  if (i == name_.size()) return false;
  for (; i < name_.size(); ++i)
    if (!isdigit(static_cast<unsigned char>(name_[i]))) return false;
  return true;
}

long Term::int_value() const { return std::strtol(name_.c_str(), nullptr, 10); }

bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind() != b->kind() || a->name() != b->name() ||
      a->arity() != b->arity())
    return false;
  for (size_t i = 0; i < a->arity(); ++i)
    if (!term_equal(a->args()[i], b->args()[i])) return false;
  return true;
}

bool is_flat(const TermPtr& t) {
  if (t->is_var()) return true;
  std::set<std::string> seen;
  for (const auto& a : t->args()) {
    if (!a->is_var()) return false;
    if (!seen.insert(a->name()).second) return false;
  }
  return true;
}

void collect_vars(const TermPtr& t, std::set<std::string>& out) {
  if (t->is_var()) {
    out.insert(t->name());
    return;
  }
  for (const auto& a : t->args()) collect_vars(a, out);
}

std::set<std::string> vars_of(const TermPtr& t) {
  std::set<std::string> s;
  collect_vars(t, s);
  return s;
}

std::set<std::string> vars_of(const std::vector<TermPtr>& ts) {
  std::set<std::string> s;
  for (const auto& t : ts) collect_vars(t, s);
  return s;
}

namespace {
void count_vars(const TermPtr& t, std::map<std::string, int>& counts) {
  if (t->is_var()) {
    counts[t->name()]++;
    return;
  }
  for (const auto& a : t->args()) count_vars(a, counts);
}
}  // namespace

bool is_linear(const std::vector<TermPtr>& ts) {
  std::map<std::string, int> counts;
  for (const auto& t : ts) count_vars(t, counts);
  for (const auto& [v, n] : counts)
    if (n > 1) return false;
  return true;
}

bool occurs_in(const std::string& var, const TermPtr& t) {
  if (t->is_var()) return t->name() == var;
  for (const auto& a : t->args())
    if (occurs_in(var, a)) return true;
  return false;
}

namespace {

bool is_list_shape(const TermPtr& t) {
  return t->is_compound() && t->name() == "." && t->arity() == 2;
}

void print_term(const TermPtr& t, std::ostream& os) {
  if (t->is_var()) {
    os << t->name();
    return;
  }
  if (t->name() == "[]" && t->arity() == 0) {
    os << "[]";
    return;
  }
  if (is_list_shape(t)) {
    os << "[";
    print_term(t->args()[0], os);
    TermPtr rest = t->args()[1];
    while (is_list_shape(rest)) {
      os << ",";
      print_term(rest->args()[0], os);
      rest = rest->args()[1];
    }
    if (!(rest->is_compound() && rest->name() == "[]" && rest->arity() == 0)) {
      os << "|";
      print_term(rest, os);
    }
    os << "]";
    return;
  }
  static const std::set<std::string> infix = {"+", "-"};
  if (t->arity() == 2 && infix.count(t->name())) {
    print_term(t->args()[0], os);
    os << t->name();
    print_term(t->args()[1], os);
    return;
  }
  os << t->name();
  if (t->arity() > 0) {
    os << "(";
    for (size_t i = 0; i < t->arity(); ++i) {
      if (i) os << ",";
      print_term(t->args()[i], os);
    }
    os << ")";
  }
}

}  // namespace

std::string term_to_string(const TermPtr& t) {
  std::ostringstream os;
  print_term(t, os);
  return os.str();
}

bool atom_equal(const Atom& a, const Atom& b) {
  if (a.pred != b.pred || a.args.size() != b.args.size()) return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!term_equal(a.args[i], b.args[i])) return false;
  return true;
}

std::set<std::string> vars_of(const Atom& a) { return vars_of(a.args); }

std::set<std::string> vars_of(const std::vector<Atom>& as) {
  std::set<std::string> s;
  for (const auto& a : as)
    for (const auto& t : a.args) collect_vars(t, s);
  return s;
}

std::string atom_to_string(const Atom& a) {
  static const std::set<std::string> infix = {"is", "<",  "=<", ">",
                                              ">=", "=\\=", "="};
  if (a.args.size() == 2 && infix.count(a.pred)) {
    return term_to_string(a.args[0]) + " " + a.pred + " " +
           term_to_string(a.args[1]);
  }
  std::string s = a.pred;
  if (!a.args.empty()) {
    s += "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
      if (i) s += ",";
      s += term_to_string(a.args[i]);
    }
    s += ")";
  }
  return s;
}

std::set<std::string> vars_of(const Clause& c) {
  std::set<std::string> s = vars_of(c.head);
  auto b = vars_of(c.body);
  s.insert(b.begin(), b.end());
  return s;
}

std::string clause_to_string(const Clause& c) {
  std::string s = atom_to_string(c.head);
  if (!c.body.empty()) {
    s += " :- ";
    for (size_t i = 0; i < c.body.size(); ++i) {
      if (i) s += ", ";
      s += atom_to_string(c.body[i]);
    }
  }
  return s + ".";
}

namespace {
std::atomic<long> g_fresh_counter{0};

TermPtr rename_term(const TermPtr& t,
                    const std::map<std::string, TermPtr>& renaming) {
  if (t->is_var()) {
    auto it = renaming.find(t->name());
    return it == renaming.end() ? t : it->second;
  }
  std::vector<TermPtr> args;
  args.reserve(t->arity());
  for (const auto& a : t->args()) args.push_back(rename_term(a, renaming));
  return Term::fun(t->name(), std::move(args));
}
}  // namespace

std::string fresh_var_name(const std::string& base) {
  // Strip a previous generation suffix so names stay short across renamings.
  std::string stem = base;
  auto pos = stem.rfind('_');
  if (pos != std::string::npos && pos + 1 < stem.size() &&
      std::all_of(stem.begin() + pos + 1, stem.end(),
                  [](char ch) { return isdigit(static_cast<unsigned char>(ch)); }))
    stem = stem.substr(0, pos);
  return stem + "_" + std::to_string(++g_fresh_counter);
}

void reset_fresh_counter() { g_fresh_counter = 0; }

Clause rename_apart(const Clause& c, const std::set<std::string>& avoid) {
  std::map<std::string, TermPtr> renaming;
  auto clause_vars = vars_of(c);
  std::set<std::string> taken = avoid;
  taken.insert(clause_vars.begin(), clause_vars.end());
  for (const auto& v : clause_vars) {
    if (!avoid.count(v)) continue;
    std::string fresh = fresh_var_name(v);
    while (taken.count(fresh)) fresh = fresh_var_name(v);
    taken.insert(fresh);
    renaming.emplace(v, Term::var(fresh));
  }
  if (renaming.empty()) return c;
  Clause out;
  out.head.pred = c.head.pred;
  for (const auto& t : c.head.args) out.head.args.push_back(rename_term(t, renaming));
  for (const auto& b : c.body) {
    Atom a;
    a.pred = b.pred;
    for (const auto& t : b.args) a.args.push_back(rename_term(t, renaming));
    out.body.push_back(std::move(a));
  }
  return out;
}

}  // namespace bc
