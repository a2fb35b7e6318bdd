#pragma once

#include <map>
#include <optional>

#include "blockcheck/term.hpp"

namespace bc {

// Idempotent substitution: no variable of the domain occurs in the range,
// and x is never bound to x itself.
class Substitution {
public:
  Substitution() = default;

  TermPtr apply(const TermPtr& t) const;
  Atom apply(const Atom& a) const;
  std::vector<Atom> apply(const std::vector<Atom>& q) const;
  std::vector<TermPtr> apply(const std::vector<TermPtr>& ts) const;

  // this := this composed with {v -> t} (t is applied to the existing range,
  // keeping the result idempotent). pre: v does not occur in apply(t).
  void bind(const std::string& v, const TermPtr& t);

  // this followed by other.
  Substitution composed(const Substitution& other) const;

  Substitution restricted_to(const std::set<std::string>& vars) const;

  bool empty() const { return bindings_.empty(); }
  size_t size() const { return bindings_.size(); }
  std::optional<TermPtr> lookup(const std::string& v) const;
  const std::map<std::string, TermPtr>& bindings() const { return bindings_; }

  std::set<std::string> domain() const;
  std::set<std::string> range_vars() const;

  std::string to_string() const;

private:
  std::map<std::string, TermPtr> bindings_;
};

struct UnifyResult {
  enum class Status { Ok, Failure, CyclicTerm };
  Status status = Status::Failure;
  Substitution mgu;  // valid iff status == Ok

  bool ok() const { return status == Status::Ok; }
};

// MGU of two terms / atoms. With occur_check the cyclic case is a plain
// Failure; without it the cycle is still detected and reported as CyclicTerm
// instead of building an infinite term. When two variables meet, the
// second (clause-side) variable is bound to the first (query-side) one.
UnifyResult unify(const TermPtr& a, const TermPtr& b, bool occur_check = true);
UnifyResult unify(const Atom& a, const Atom& b, bool occur_check = true);

}  // namespace bc
