#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blockcheck/perm.hpp"
#include "blockcheck/program.hpp"
#include "blockcheck/types.hpp"

namespace bc {

// The four pi-conditions, ordered by strength of the output-shape demands.
enum class PiKind { Nicely, Well, Simply, Robustly };
std::string kind_name(PiKind k);

// An atom split into input terms s and output terms t per the active mode,
// with the per-position types alongside.
struct ModedAtomView {
  Atom atom;
  std::vector<TermPtr> inputs;
  std::vector<TermPtr> outputs;
  std::vector<std::string> input_types;
  std::vector<std::string> output_types;
  // 0-based argument index of each input/output position.
  std::vector<size_t> input_positions;
  std::vector<size_t> output_positions;
};

ModedAtomView make_view(const Atom& a, const ModeDecl& mode,
                        const TypeDecl& types);

// Resolves views for a fixed program + mode name. Throws std::runtime_error
// when an atom has no mode; missing types default every position to `any`.
class ViewContext {
public:
  ViewContext(const Program& p, std::string mode_name);
  ModedAtomView view(const Atom& a) const;
  ModedAtomView head_view(const Atom& h) const;  // head: inputs<->outputs kept,
                                                 // the split is the same; the
                                                 // caller interprets t0/s_{n+1}
  const Program& program() const { return *program_; }
  const std::string& mode_name() const { return mode_name_; }

private:
  const Program* program_;
  std::string mode_name_;
};

// Per predicate, per argument position: bound or free (Def of bound/free,
// computed program-wide under one mode).
struct PositionClassification {
  std::map<std::string, std::vector<bool>> bound;  // key -> 0-based positions
  bool is_bound(const std::string& key, size_t pos) const;
};

PositionClassification bound_free(const Program& p, const std::string& mode,
                                  std::vector<std::string>* warnings = nullptr);

struct Violation {
  std::string where;   // "clause 3 (safe_aux/3)" or "query"
  std::string reason;  // strongest failed sub-condition
};

struct ConditionVerdict {
  std::string condition;
  std::string mode;
  bool holds = false;
  // Robustly-typedness presupposes a permutation well typed program whose
  // bound positions have non-variable type; when that fails we report
  // "not applicable" instead of a bare false.
  bool applicable = true;
  std::map<size_t, Permutation> witnesses;  // clause index -> body permutation
  std::vector<Violation> violations;

  std::string to_json() const;
  std::string summary() const;
};

struct WitnessResult {
  std::optional<Permutation> pi;
  std::string reason;  // strongest failed sub-condition when pi is absent
};

// Checks a concrete pi against the definitional clauses; head == nullptr
// means query-level conditions (L = 1). bf is required for Robustly.
bool check_pi_kind(const std::vector<ModedAtomView>& body,
                   const Permutation& pi, PiKind kind, const TypeSystem& ts,
                   const ModedAtomView* head = nullptr,
                   const PositionClassification* bf = nullptr,
                   std::string* why = nullptr);

// Searches for a witness permutation: topological sort of the
// producer->consumer variable-sharing graph (ties broken by textual order),
// falling back to exhaustive search for bodies of length <= 8.
WitnessResult find_permutation_nm(const std::vector<ModedAtomView>& body,
                                  PiKind kind, const TypeSystem& ts,
                                  const ModedAtomView* head = nullptr,
                                  const PositionClassification* bf = nullptr);

ConditionVerdict check_condition(const Program& p, const std::string& mode,
                                 PiKind kind);

// A repeated head-input variable excused by a section-7.3 argument
// (produced by builtin-safety, consumed here).
struct LinearityWaiver {
  size_t clause_index;
  std::string variable;
  std::string justification;
};

ConditionVerdict input_linear(const Program& p, const std::string& mode,
                              const std::vector<LinearityWaiver>& waivers = {});

// Def of input selectability over the {var, nonvar} abstraction. Built-ins
// are exempt (their conceptual definitions meet the conditions); predicates
// listed in `exempt` (e.g. B-members under a B-ground discipline) are
// skipped too.
ConditionVerdict input_selectability(const Program& p, const std::string& mode,
                                     const std::set<std::string>& exempt = {});

}  // namespace bc
