#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace bc {

// Terms are immutable and shared. A constant is a Compound with no arguments;
// integers are constants whose name is a decimal literal.
class Term;
using TermPtr = std::shared_ptr<const Term>;

class Term {
public:
  enum class Kind { Var, Compound };

  static TermPtr var(std::string name);
  static TermPtr fun(std::string functor, std::vector<TermPtr> args = {});
  static TermPtr integer(long v);
  static TermPtr nil();
  static TermPtr cons(TermPtr head, TermPtr tail);
  static TermPtr list(const std::vector<TermPtr>& elems);

  Kind kind() const { return kind_; }
  bool is_var() const { return kind_ == Kind::Var; }
  bool is_compound() const { return kind_ == Kind::Compound; }
  bool is_constant() const { return is_compound() && args_.empty(); }
  bool is_int() const;

  const std::string& name() const { return name_; }
  const std::vector<TermPtr>& args() const { return args_; }
  size_t arity() const { return args_.size(); }
  long int_value() const;  // pre: is_int()

  Term(Kind k, std::string name, std::vector<TermPtr> args)
      : kind_(k), name_(std::move(name)), args_(std::move(args)) {}

private:
  Kind kind_;
  std::string name_;
  std::vector<TermPtr> args_;
};

bool term_equal(const TermPtr& a, const TermPtr& b);

// A flat term is a variable or f(x1,...,xn) with distinct variable arguments.
bool is_flat(const TermPtr& t);

void collect_vars(const TermPtr& t, std::set<std::string>& out);
std::set<std::string> vars_of(const TermPtr& t);
std::set<std::string> vars_of(const std::vector<TermPtr>& ts);

// True iff no variable occurs more than once across the whole vector.
bool is_linear(const std::vector<TermPtr>& ts);

bool occurs_in(const std::string& var, const TermPtr& t);

std::string term_to_string(const TermPtr& t);

struct Atom {
  std::string pred;
  std::vector<TermPtr> args;

  size_t arity() const { return args.size(); }
  // Predicate key "name/arity" used by all per-predicate tables.
  std::string key() const { return pred + "/" + std::to_string(args.size()); }
};

bool atom_equal(const Atom& a, const Atom& b);
std::set<std::string> vars_of(const Atom& a);
std::set<std::string> vars_of(const std::vector<Atom>& as);
std::string atom_to_string(const Atom& a);

struct Clause {
  Atom head;
  std::vector<Atom> body;  // empty for facts
};

std::set<std::string> vars_of(const Clause& c);
std::string clause_to_string(const Clause& c);

// Fresh-variable generation: globally interned counter so traces are
// deterministic within a process run. reset_fresh_counter() is for tests.
std::string fresh_var_name(const std::string& base);
void reset_fresh_counter();

// Returns a variant of c sharing no variable with avoid.
Clause rename_apart(const Clause& c, const std::set<std::string>& avoid);

}  // namespace bc
