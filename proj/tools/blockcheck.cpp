// blockcheck: static verification and coroutining execution for logic
// programs with block declarations.
//
// Exit codes: 0 pass, 1 analysis/query failure, 2 input error, 3 engine
// step limit.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "blockcheck/builtin_safety.hpp"
#include "blockcheck/engine.hpp"
#include "blockcheck/modes.hpp"
#include "blockcheck/parser.hpp"
#include "blockcheck/termination.hpp"
#include "blockcheck/types.hpp"

using nlohmann::json;
using namespace bc;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kInputError = 2;
constexpr int kLimit = 3;

const std::vector<PiKind> kKinds = {PiKind::Nicely, PiKind::Well,
                                    PiKind::Simply, PiKind::Robustly};

Program load(const std::string& file) {
  std::vector<std::string> warnings;
  Program p = parse_file(file, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return p;
}

// Modes to analyze: --mode wins; --all-modes sweeps; default is the first
// declared mode.
std::vector<std::string> pick_modes(const Program& p, const std::string& mode,
                                    bool all_modes) {
  if (!mode.empty()) {
    auto names = p.mode_names();
    if (std::find(names.begin(), names.end(), mode) == names.end())
      throw std::invalid_argument("unknown mode " + mode);
    return {mode};
  }
  auto names = p.mode_names();
  if (names.empty()) throw std::invalid_argument("program declares no modes");
  if (all_modes) return names;
  return {names.front()};
}

uint64_t default_seed() {
  if (const char* env = std::getenv("BLOCKCHECK_SEED"))
    return std::strtoull(env, nullptr, 10);
  return 0;
}

void print_violations(const ConditionVerdict& v) {
  for (const auto& viol : v.violations)
    std::cout << "    " << viol.where << ": " << viol.reason << "\n";
}

// ---------------------------------------------------------------------------
// check

struct CheckOutcome {
  std::map<std::string, ConditionVerdict> conditions;
  WaiverReport waivers;
  ConditionVerdict linear;
  ConditionVerdict selectability;
  PositionClassification bf;
};

CheckOutcome run_check(const Program& p, const std::string& mode,
                       bool use_waivers) {
  CheckOutcome out;
  for (PiKind k : kKinds)
    out.conditions.emplace(kind_name(k), check_condition(p, mode, k));
  if (use_waivers) out.waivers = head_linearity_waivers(p, mode);
  out.linear = input_linear(p, mode, out.waivers.waivers);
  out.selectability = input_selectability(p, mode);
  out.bf = bound_free(p, mode);
  return out;
}

json check_json(const std::string& mode, const CheckOutcome& o) {
  json j;
  j["mode"] = mode;
  for (const auto& [name, v] : o.conditions)
    j["conditions"][name] = json::parse(v.to_json());
  j["input_linear"] = json::parse(o.linear.to_json());
  j["input_selectability"] = json::parse(o.selectability.to_json());
  for (const auto& w : o.waivers.waivers)
    j["waivers"].push_back({{"clause", w.clause_index},
                            {"variable", w.variable},
                            {"justification", w.justification}});
  for (const auto& [key, positions] : o.bf.bound) {
    json row = json::array();
    for (bool b : positions) row.push_back(b ? "bound" : "free");
    j["bound_free"][key] = row;
  }
  return j;
}

int cmd_check(const Program& p, const std::vector<std::string>& modes,
              const std::vector<std::string>& requested, bool use_waivers,
              bool as_json) {
  int rc = kPass;
  json all = json::array();
  for (const auto& mode : modes) {
    CheckOutcome o = run_check(p, mode, use_waivers);
    bool any_pi = false;
    for (const auto& [name, v] : o.conditions) any_pi = any_pi || v.holds;
    bool pass;
    if (requested.empty()) {
      pass = any_pi && o.linear.holds && o.selectability.holds;
    } else {
      pass = true;
      for (const auto& r : requested) {
        if (r == "input-linear") pass = pass && o.linear.holds;
        else if (r == "selectability") pass = pass && o.selectability.holds;
        else {
          bool found = false;
          for (const auto& [name, v] : o.conditions)
            if (name.find(r) != std::string::npos) {
              found = true;
              pass = pass && v.holds;
            }
          if (!found)
            throw std::invalid_argument("unknown condition " + r);
        }
      }
    }
    if (!pass) rc = kFail;
    if (as_json) {
      json j = check_json(mode, o);
      j["pass"] = pass;
      all.push_back(j);
      continue;
    }
    std::cout << "mode " << mode << ":\n";
    for (PiKind k : kKinds) {
      const auto& v = o.conditions.at(kind_name(k));
      std::cout << "  " << kind_name(k) << ": "
                << (v.holds ? "holds" : v.applicable ? "fails"
                                                     : "not applicable")
                << "\n";
      if (!v.holds) print_violations(v);
    }
    std::cout << "  input-linear: " << (o.linear.holds ? "holds" : "fails")
              << "\n";
    if (!o.linear.holds) print_violations(o.linear);
    for (const auto& w : o.waivers.waivers)
      std::cout << "    waiver: clause " << w.clause_index + 1 << " variable "
                << w.variable << " (" << w.justification << ")\n";
    std::cout << "  input selectability: "
              << (o.selectability.holds ? "holds" : "fails") << "\n";
    if (!o.selectability.holds) print_violations(o.selectability);
    std::cout << "  bound positions:";
    bool none = true;
    for (const auto& [key, positions] : o.bf.bound)
      for (size_t i = 0; i < positions.size(); ++i)
        if (positions[i]) {
          std::cout << " " << key << "@" << i + 1;
          none = false;
        }
    std::cout << (none ? " (none)\n" : "\n");
    std::cout << "  verdict: " << (pass ? "pass" : "fail") << "\n";
  }
  if (as_json) std::cout << all.dump(2) << "\n";
  return rc;
}

// ---------------------------------------------------------------------------
// verify-termination

int cmd_verify_termination(const Program& p,
                           const std::vector<std::string>& modes,
                           const std::string& query_text, bool as_json) {
  int rc = kPass;
  json all = json::array();
  for (const auto& mode : modes) {
    TerminationReport rep = termination_verdict(p, mode);
    bool query_ok = true;
    std::string query_note;
    if (!query_text.empty() && rep.certified) {
      // The theorems cover queries satisfying the same condition the route
      // imposed on the program.
      PiKind kind = rep.approach == "A"   ? PiKind::Well
                    : rep.approach == "B" ? PiKind::Simply
                                          : PiKind::Robustly;
      ViewContext vc(p, mode);
      TypeSystem ts(p.grammars);
      PositionClassification bf = bound_free(p, mode);
      std::vector<ModedAtomView> views;
      for (const auto& a : parse_query(query_text)) views.push_back(vc.view(a));
      WitnessResult w = find_permutation_nm(views, kind, ts, nullptr, &bf);
      query_ok = w.pi.has_value();
      query_note = query_ok
                       ? "query is " + kind_name(kind)
                       : "query is not " + kind_name(kind) + ": " + w.reason;
    }
    bool pass = rep.certified && query_ok;
    if (!pass) rc = kFail;
    if (as_json) {
      json j = json::parse(rep.to_json());
      if (!query_text.empty()) {
        j["query"] = query_text;
        j["query_ok"] = query_ok;
        j["query_note"] = query_note;
      }
      j["pass"] = pass;
      all.push_back(j);
    } else {
      std::string s = rep.summary();
      if (!s.empty() && s.back() != '\n') s += '\n';
      std::cout << s;
      if (!query_note.empty()) std::cout << "  " << query_note << "\n";
      std::cout << "  verdict: " << (pass ? "pass" : "fail") << "\n";
    }
  }
  if (as_json) std::cout << all.dump(2) << "\n";
  return rc;
}

// ---------------------------------------------------------------------------
// verify-errors

int cmd_verify_errors(const Program& p, const std::vector<std::string>& modes,
                      const std::vector<std::string>& bset_opt, bool as_json) {
  int rc = kPass;
  json all = json::array();
  for (const auto& mode : modes) {
    ConditionVerdict guarded = builtin_safety(p, mode);
    std::set<std::string> B(bset_opt.begin(), bset_opt.end());
    if (B.empty()) B = default_b_set(p);
    ConditionVerdict bground = check_bground(p, mode, B);
    bool pass = guarded.holds || bground.holds;
    if (!pass) rc = kFail;
    if (as_json) {
      json j;
      j["mode"] = mode;
      j["guarded_builtins"] = json::parse(guarded.to_json());
      j["b_set"] = json::array();
      for (const auto& b : B) j["b_set"].push_back(b);
      j["b_groundness"] = json::parse(bground.to_json());
      j["pass"] = pass;
      all.push_back(j);
      continue;
    }
    std::cout << "mode " << mode << ":\n";
    std::cout << "  guarded built-ins (simply typed route): "
              << (guarded.holds ? "certified" : "fails") << "\n";
    if (!guarded.holds) print_violations(guarded);
    std::cout << "  B-groundness with B = {";
    bool first = true;
    for (const auto& b : B) {
      std::cout << (first ? "" : ", ") << b;
      first = false;
    }
    std::cout << "}: " << (bground.holds ? "certified" : "fails") << "\n";
    if (!bground.holds) print_violations(bground);
    if (!pass)
      std::cout << "  warning: built-in calls are not certified error-free\n";
    std::cout << "  verdict: " << (pass ? "pass" : "fail") << "\n";
  }
  if (as_json) std::cout << all.dump(2) << "\n";
  return rc;
}

// ---------------------------------------------------------------------------
// simplify

int cmd_simplify(const std::string& file, const Program& p,
                 const std::string& mode, const std::string& query_text,
                 const std::string& validate_query) {
  std::vector<Atom> query;
  if (!query_text.empty()) query = parse_query(query_text);
  std::set<std::string> omit =
      omit_blocks_by_safety(p, mode, query_text.empty() ? nullptr : &query);

  std::set<std::string> omit_names;
  for (const auto& key : omit)
    if (!p.block_for(key).empty())
      omit_names.insert(key.substr(0, key.rfind('/')));

  std::ifstream in(file);
  std::string line;
  std::ostringstream out;
  while (std::getline(in, line)) {
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    bool omitted = false;
    if (trimmed.rfind(":- block ", 0) == 0) {
      for (const auto& name : omit_names)
        if (trimmed.find(" " + name + "(") != std::string::npos ||
            trimmed.find("block " + name + "(") != std::string::npos) {
          omitted = true;
          break;
        }
    }
    if (omitted) {
      out << "% block omitted (every caller reaches this predicate in a safe "
             "position of its witness permutation):\n";
      out << "% " << line << "\n";
    } else {
      out << line << "\n";
    }
  }
  std::string rewritten = out.str();
  std::cout << rewritten;

  if (!validate_query.empty()) {
    Program stripped = parse_program(rewritten);
    reset_fresh_counter();
    Outcome before = run(p, parse_query(validate_query),
                         SelectionRule::left_based(), {}, true);
    reset_fresh_counter();
    Outcome after = run(stripped, parse_query(validate_query),
                        SelectionRule::left_based(), {}, true);
    bool same = before.trace_text() == after.trace_text();
    std::cout << "% validation: left-based traces of " << validate_query
              << (same ? " identical (" : " DIFFER (")
              << before.trace.size() << " vs " << after.trace.size()
              << " steps)\n";
    if (!same) return kFail;
  }
  return kPass;
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const Program& p, const std::string& query_text,
            const std::string& rule_name, const std::string& wake_name,
            uint64_t seed, RunLimits limits, const std::string& trace_fmt,
            const std::string& monitor_kind, const std::string& mode,
            bool as_json) {
  SelectionRule rule = SelectionRule::left_based();
  if (rule_name == "ld") rule = SelectionRule::ld();
  else if (rule_name == "random") rule = SelectionRule::random(seed);
  else if (rule_name == "left-based") {
    rule = SelectionRule::left_based(wake_name == "leftmost-waiting"
                                         ? WakePolicy::LeftmostWaitingFirst
                                         : WakePolicy::NewlyWokenFirst);
  } else {
    throw std::invalid_argument("unknown rule " + rule_name);
  }

  std::vector<Atom> query = parse_query(query_text);

  if (!monitor_kind.empty()) {
    PiKind kind;
    if (monitor_kind == "nicely") kind = PiKind::Nicely;
    else if (monitor_kind == "well") kind = PiKind::Well;
    else if (monitor_kind == "simply") kind = PiKind::Simply;
    else if (monitor_kind == "robustly") kind = PiKind::Robustly;
    else throw std::invalid_argument("unknown monitor kind " + monitor_kind);
    MonitorReport rep = monitor(p, query, mode, kind, rule, limits);
    if (as_json) {
      json j;
      j["applicable"] = rep.applicable;
      j["kind"] = rep.kind;
      if (!rep.applicable) j["why_not"] = rep.why_not;
      j["status"] = status_name(rep.outcome.status);
      j["checks"] = rep.checks;
      for (const auto& v : rep.violations)
        j["violations"].push_back(
            {{"step", v.step}, {"what", v.what}, {"context", v.context}});
      if (rep.violations.empty()) j["violations"] = json::array();
      std::cout << j.dump(2) << "\n";
    } else {
      if (!rep.applicable) {
        std::cout << "monitor not applicable: " << rep.why_not << "\n";
      } else {
        std::cout << "monitor (" << rep.kind << "): "
                  << status_name(rep.outcome.status) << ", " << rep.checks
                  << " checks, " << rep.violations.size() << " violations\n";
        for (const auto& v : rep.violations)
          std::cout << "  step " << v.step << ": " << v.what << "\n    "
                    << v.context << "\n";
      }
    }
    if (!rep.applicable || !rep.violations.empty()) return kFail;
    if (rep.outcome.status == RunStatus::LimitExceeded) return kLimit;
    return kPass;
  }

  Outcome o = run(p, query, rule, limits, !trace_fmt.empty());
  if (as_json) {
    json j;
    j["status"] = status_name(o.status);
    j["steps"] = o.steps_used;
    j["floundered_branches"] = o.floundered_branches;
    j["solutions"] = json::array();
    for (const auto& s : o.solutions) {
      json sol = json::object();
      for (const auto& a : query)
        for (const auto& v : vars_of(a))
          if (auto t = s.lookup(v)) sol[v] = term_to_string(*t);
      j["solutions"].push_back(sol);
    }
    if (!o.error.empty()) j["error"] = o.error;
    if (trace_fmt == "jsonl") {
      j["trace"] = json::array();
      for (const auto& e : o.trace) j["trace"].push_back(json::parse(e.jsonl()));
    }
    std::cout << j.dump(2) << "\n";
  } else {
    if (trace_fmt == "jsonl")
      for (const auto& e : o.trace) std::cout << e.jsonl() << "\n";
    else if (!trace_fmt.empty())
      std::cout << o.trace_text();
    std::cout << "status: " << status_name(o.status) << "\n";
    if (!o.error.empty()) std::cout << "error: " << o.error << "\n";
    std::cout << "steps: " << o.steps_used << "\n";
    if (o.floundered_branches)
      std::cout << "floundered branches: " << o.floundered_branches << "\n";
    for (const auto& s : o.solutions) {
      std::cout << "solution:";
      bool any = false;
      for (const auto& a : query)
        for (const auto& v : vars_of(a))
          if (auto t = s.lookup(v)) {
            std::cout << " " << v << " = " << term_to_string(*t);
            any = true;
          }
      std::cout << (any ? "\n" : " (empty)\n");
    }
  }
  switch (o.status) {
    case RunStatus::Success: return kPass;
    case RunStatus::LimitExceeded: return kLimit;
    default: return kFail;
  }
}

// ---------------------------------------------------------------------------
// corpus-test

int cmd_corpus_test(const std::string& dir, bool as_json) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".pl") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "error: no .pl files in " << dir << "\n";
    return kInputError;
  }
  int rc = kPass;
  json all = json::array();
  for (const auto& f : files) {
    Program p;
    try {
      p = load(f);
    } catch (const std::exception& ex) {
      std::cerr << f << ": parse error: " << ex.what() << "\n";
      return kInputError;
    }
    for (const auto& mode : p.mode_names()) {
      CheckOutcome o = run_check(p, mode, true);
      TerminationReport t = termination_verdict(p, mode);
      ConditionVerdict errs = builtin_safety(p, mode);
      ConditionVerdict bg = check_bground(p, mode, default_b_set(p));
      // Internal consistency: text and JSON verdicts must agree.
      bool consistent = true;
      for (const auto& [name, v] : o.conditions)
        consistent =
            consistent && json::parse(v.to_json())["holds"] == v.holds;
      consistent = consistent &&
                   json::parse(t.to_json())["certified"] == t.certified;
      if (!consistent) rc = kFail;

      std::string held;
      for (PiKind k : kKinds)
        if (o.conditions.at(kind_name(k)).holds)
          held += (held.empty() ? "" : ",") + kind_name(k);
      if (as_json) {
        json j;
        j["file"] = fs::path(f).filename().string();
        j["mode"] = mode;
        j["pi_conditions"] = held;
        j["input_linear"] = o.linear.holds;
        j["input_selectability"] = o.selectability.holds;
        j["termination"] = t.certified ? t.approach : "";
        j["builtins"] =
            errs.holds ? "guarded" : bg.holds ? "b-ground" : "uncertified";
        j["consistent"] = consistent;
        all.push_back(j);
      } else {
        std::cout << fs::path(f).filename().string() << " " << mode
                  << ": pi=[" << (held.empty() ? "none" : held)
                  << "] linear=" << (o.linear.holds ? "y" : "n")
                  << " select=" << (o.selectability.holds ? "y" : "n")
                  << " term=" << (t.certified ? t.approach : "-")
                  << " builtins="
                  << (errs.holds ? "guarded"
                                 : bg.holds ? "b-ground" : "uncertified")
                  << (consistent ? "" : "  [INTERNAL MISMATCH]") << "\n";
      }
    }
  }
  if (as_json) std::cout << all.dump(2) << "\n";
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Static verification and coroutining execution for logic "
               "programs with block declarations"};
  app.require_subcommand(1);

  std::string file, mode, query, bad;
  bool all_modes = false, as_json = false, no_waivers = false;
  std::vector<std::string> requested, bset;
  std::string rule = "left-based", wake = "newly-woken", trace_fmt,
              monitor_kind, validate_query, dir = "corpus";
  uint64_t seed = default_seed();
  RunLimits limits;

  auto add_common = [&](CLI::App* c, bool needs_file = true) {
    if (needs_file) c->add_option("file", file, "program file")->required();
    c->add_flag("--json", as_json, "JSON output");
  };
  auto add_mode = [&](CLI::App* c) {
    c->add_option("--mode", mode, "mode name (default: first declared)");
    c->add_flag("--all-modes", all_modes, "analyze every declared mode");
  };

  CLI::App* check = app.add_subcommand(
      "check", "pi-conditions, input-linearity, selectability, bound/free");
  add_common(check);
  add_mode(check);
  check->add_option("--condition", requested,
                    "require only these (nicely|well|simply|robustly|"
                    "input-linear|selectability)");
  check->add_flag("--no-waivers", no_waivers,
                  "disable head-linearity waivers");

  CLI::App* vt = app.add_subcommand("verify-termination",
                                    "certify left-based termination");
  add_common(vt);
  add_mode(vt);
  vt->add_option("--query", query, "also check the query's typedness");

  CLI::App* ve = app.add_subcommand("verify-errors",
                                    "certify built-in error freedom");
  add_common(ve);
  add_mode(ve);
  ve->add_option("--bset", bset, "B-set members (e.g. --bset is/2 --bset </2)");

  CLI::App* si = app.add_subcommand(
      "simplify", "rewrite the source dropping redundant block declarations");
  add_common(si);
  si->add_option("--mode", mode, "mode name (default: first declared)");
  si->add_option("--query", query, "restrict call sites to this query");
  si->add_option("--validate-query", validate_query,
                 "diff left-based traces before/after");

  CLI::App* ru = app.add_subcommand("run", "execute a query");
  add_common(ru);
  ru->add_option("--query", query, "the query")->required();
  ru->add_option("--rule", rule, "ld | left-based | random");
  ru->add_option("--wake", wake, "newly-woken | leftmost-waiting");
  ru->add_option("--seed", seed, "rng seed (default: $BLOCKCHECK_SEED or 0)");
  ru->add_option("--steps", limits.steps, "step budget (default 100000)");
  ru->add_option("--solutions", limits.solutions,
                 "solution cap (0 = exhaust)");
  ru->add_flag("--occur-check", limits.occur_check,
               "occur check in the engine unifier");
  ru->add_option("--trace", trace_fmt, "text | jsonl")
      ->expected(0, 1)->default_str("text");
  ru->add_option("--monitor", monitor_kind,
                 "persistence monitor kind (nicely|well|simply|robustly)");
  ru->add_option("--mode", mode, "mode for --monitor");

  CLI::App* ct = app.add_subcommand("corpus-test",
                                    "sweep a directory of programs");
  add_common(ct, false);
  ct->add_option("--dir", dir, "directory of .pl files (default: corpus)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ct->parsed()) return cmd_corpus_test(dir, as_json);
    Program p = load(file);
    if (si->parsed()) {
      auto modes = pick_modes(p, mode, false);
      return cmd_simplify(file, p, modes.front(), query, validate_query);
    }
    if (ru->parsed()) {
      if (!monitor_kind.empty() && mode.empty())
        mode = pick_modes(p, "", false).front();
      if (ru->count("--trace") && trace_fmt.empty()) trace_fmt = "text";
      return cmd_run(p, query, rule, wake, seed, limits, trace_fmt,
                     monitor_kind, mode, as_json);
    }
    auto modes = pick_modes(p, mode, all_modes);
    if (check->parsed())
      return cmd_check(p, modes, requested, !no_waivers, as_json);
    if (vt->parsed()) return cmd_verify_termination(p, modes, query, as_json);
    if (ve->parsed()) return cmd_verify_errors(p, modes, bset, as_json);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
