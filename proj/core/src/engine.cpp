#include "blockcheck/engine.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "blockcheck/perm.hpp"
#include "blockcheck/types.hpp"

namespace bc {

bool is_blocked(const Atom& a, const BlockDecl& decl) {
  for (const auto& pat : decl.patterns) {
    if (pat.size() != a.arity()) continue;
    bool all_var = true;
    for (size_t i = 0; i < pat.size(); ++i)
      if (pat[i] == '-' && !a.args[i]->is_var()) {
        all_var = false;
        break;
      }
    if (all_var) return true;
  }
  return false;
}

SelectionRule SelectionRule::ld() {
  SelectionRule r;
  r.kind = Kind::LD;
  return r;
}

SelectionRule SelectionRule::left_based(WakePolicy w) {
  SelectionRule r;
  r.kind = Kind::LeftBased;
  r.wake = w;
  return r;
}

SelectionRule SelectionRule::random(uint64_t seed) {
  SelectionRule r;
  r.kind = Kind::Random;
  r.seed = seed;
  return r;
}

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Success: return "success";
    case RunStatus::Failure: return "failure";
    case RunStatus::Floundered: return "floundered";
    case RunStatus::LimitExceeded: return "limit_exceeded";
    case RunStatus::InstantiationError: return "instantiation_error";
    case RunStatus::TypeError: return "type_error";
  }
  return "?";
}

std::string TraceEvent::line() const {
  std::ostringstream os;
  os << "step=" << step << " select=" << selected << " pi=" << pi_position
     << " atom=" << atom << " clause=" << clause << " waiting=";
  for (size_t i = 0; i < waiting.size(); ++i)
    os << (i ? "," : "") << waiting[i];
  if (waiting.empty()) os << "-";
  return os.str();
}

std::string TraceEvent::jsonl() const {
  auto esc = [](const std::string& s) {
    std::string r;
    for (char c : s) {
      if (c == '"' || c == '\\') r += '\\';
      r += c;
    }
    return r;
  };
  std::ostringstream os;
  os << "{\"step\":" << step << ",\"select\":" << selected
     << ",\"pi\":" << pi_position << ",\"atom\":\"" << esc(atom)
     << "\",\"clause\":\"" << esc(clause) << "\",\"waiting\":[";
  for (size_t i = 0; i < waiting.size(); ++i)
    os << (i ? "," : "") << waiting[i];
  os << "]}";
  return os.str();
}

std::string Outcome::trace_text() const {
  std::string out;
  for (const auto& e : trace) {
    out += e.line();
    out += "\n";
  }
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// Triangular binding store with a trail, so backtracking undoes bindings
// instead of copying substitutions (terms stay structure-shared across the
// search tree).

class Bindings {
 public:
  explicit Bindings(bool occur_check = false) : occur_check_(occur_check) {}

  size_t mark() const { return trail_.size(); }

  void undo(size_t m) {
    while (trail_.size() > m) {
      map_.erase(trail_.back());
      trail_.pop_back();
    }
  }

  // Variables bound since `m`, in binding order.
  const std::vector<std::string>& trail() const { return trail_; }

  std::set<std::string> bound_since(size_t m) const {
    return std::set<std::string>(trail_.begin() + m, trail_.end());
  }

  // Follows variable chains; the result is a free variable or a compound
  // whose arguments are unresolved.
  TermPtr deref(TermPtr t) const {
    while (t->is_var()) {
      auto it = map_.find(t->name());
      if (it == map_.end()) break;
      t = it->second;
    }
    return t;
  }

  // Deep resolution (used for answers, traces and the monitor). Binding
  // cycles — possible since the engine's unifier may skip the occur check —
  // are detected here instead.
  TermPtr resolve(const TermPtr& t) const {
    std::set<std::string> on_path;
    return resolve_rec(t, on_path);
  }

  Atom resolve(const Atom& a) const {
    Atom r;
    r.pred = a.pred;
    r.args.reserve(a.args.size());
    for (const auto& t : a.args) r.args.push_back(resolve(t));
    return r;
  }

  bool occurs(const std::string& v, TermPtr t) const {
    t = deref(t);
    if (t->is_var()) return t->name() == v;
    for (const auto& a : t->args())
      if (occurs(v, a)) return true;
    return false;
  }

  // Unification. On failure, bindings made so far stay on the trail; the
  // caller undoes to its mark.
  bool unify(TermPtr x, TermPtr y) {
    x = deref(x);
    y = deref(y);
    if (x->is_var()) {
      if (y->is_var() && y->name() == x->name()) return true;
      if (occur_check_ && !y->is_var() && occurs(x->name(), y)) return false;
      bind(x->name(), y);
      return true;
    }
    if (y->is_var()) {
      if (occur_check_ && occurs(y->name(), x)) return false;
      bind(y->name(), x);
      return true;
    }
    if (x->name() != y->name() || x->arity() != y->arity()) return false;
    for (size_t i = 0; i < x->arity(); ++i)
      if (!unify(x->args()[i], y->args()[i])) return false;
    return true;
  }

  bool unify(const Atom& a, const Atom& b) {
    if (a.pred != b.pred || a.arity() != b.arity()) return false;
    for (size_t i = 0; i < a.arity(); ++i)
      if (!unify(a.args[i], b.args[i])) return false;
    return true;
  }

 private:
  void bind(const std::string& v, const TermPtr& t) {
    map_.emplace(v, t);
    trail_.push_back(v);
  }

  TermPtr resolve_rec(const TermPtr& t, std::set<std::string>& on_path) const {
    TermPtr d = t;
    std::vector<std::string> entered;
    while (d->is_var()) {
      auto it = map_.find(d->name());
      if (it == map_.end()) break;
      if (!on_path.insert(d->name()).second)
        throw std::runtime_error("cyclic binding through " + d->name());
      entered.push_back(d->name());
      d = it->second;
    }
    TermPtr result = d;
    if (!d->is_var() && !d->args().empty()) {
      std::vector<TermPtr> args;
      args.reserve(d->args().size());
      bool changed = false;
      for (const auto& a : d->args()) {
        TermPtr r = resolve_rec(a, on_path);
        changed = changed || r != a;
        args.push_back(std::move(r));
      }
      if (changed) result = Term::fun(d->name(), std::move(args));
    }
    for (const auto& v : entered) on_path.erase(v);
    return result;
  }

  bool occur_check_ = false;
  std::unordered_map<std::string, TermPtr> map_;
  std::vector<std::string> trail_;
};

// Every clause variable gets a process-fresh name per resolution attempt, so
// the global binding store never sees two attempts share a variable.
Clause freshen(const Clause& c) {
  Substitution sub;
  for (const auto& v : vars_of(c)) sub.bind(v, Term::var(fresh_var_name(v)));
  Clause out;
  out.head = sub.apply(c.head);
  out.body = sub.apply(c.body);
  return out;
}

// ---------------------------------------------------------------------------
// Arithmetic evaluation (the conceptual fact tables of is/2 and comparisons).

enum class EvalStatus { Ok, Unbound, NonNumeric };

struct EvalResult {
  EvalStatus status = EvalStatus::Ok;
  long value = 0;
  std::string detail;
};

EvalResult eval_arith(const Bindings& b, TermPtr t) {
  t = b.deref(t);
  if (t->is_var())
    return {EvalStatus::Unbound, 0, "unbound " + term_to_string(t)};
  if (t->is_int()) return {EvalStatus::Ok, t->int_value(), ""};
  const std::string& f = t->name();
  if (t->arity() == 2 && (f == "+" || f == "-" || f == "*")) {
    EvalResult l = eval_arith(b, t->args()[0]);
    if (l.status != EvalStatus::Ok) return l;
    EvalResult r = eval_arith(b, t->args()[1]);
    if (r.status != EvalStatus::Ok) return r;
    long v = f == "+" ? l.value + r.value
                      : f == "-" ? l.value - r.value : l.value * r.value;
    return {EvalStatus::Ok, v, ""};
  }
  if (t->arity() == 1 && f == "-") {
    EvalResult l = eval_arith(b, t->args()[0]);
    if (l.status != EvalStatus::Ok) return l;
    return {EvalStatus::Ok, -l.value, ""};
  }
  return {EvalStatus::NonNumeric, 0,
          "non-numeric " + term_to_string(b.resolve(t))};
}

bool compare(const std::string& pred, long a, long b) {
  if (pred == "<") return a < b;
  if (pred == "=<") return a <= b;
  if (pred == ">") return a > b;
  if (pred == ">=") return a >= b;
  if (pred == "=\\=") return a != b;
  throw std::logic_error("unknown comparison " + pred);
}

// ---------------------------------------------------------------------------
// The query is an intrusive doubly-linked list mutated in place; a journal
// records every mutation so backtracking can undo it. This keeps the cost of
// a step independent of the query length (derivations that pile up blocked
// atoms would otherwise make the search quadratic).

struct Node {
  Atom atom;
  uint64_t id = 0;
  bool waiting = false;
  bool alive = true;
  int blocking = 0;        // block patterns of this atom still matching
  uint64_t live_mask = 0;  // bit per still-matching block pattern
  Node* prev = nullptr;
  Node* next = nullptr;
};

struct JEntry {
  enum class Op {
    Splice,       // a = removed node, b/c = first/last inserted (may be null)
    Wait,         // a->waiting was set true
    PatternDead,  // pattern idx of a stopped matching (blocking decremented)
    WakePush,     // a was pushed on the wake stack
    WakePop,      // a was popped off the wake stack
    Watch,        // a watcher for a was appended to watchers[var]
    Fps,          // fps was moved; a = old value
    Pi            // pi was replaced (trace/monitor runs only)
  };
  Op op;
  Node* a = nullptr;
  Node* b = nullptr;
  Node* c = nullptr;
  size_t idx = 0;
  std::string var;
  Permutation old_pi;
};

struct MonitorCtx {
  PiKind kind;
  const TypeSystem* ts = nullptr;
  const ViewContext* vc = nullptr;
  const PositionClassification* bf = nullptr;
  std::map<size_t, Permutation> rho;  // clause index -> body witness
  MonitorReport* report = nullptr;
};

struct Frame {
  Node* sel = nullptr;
  size_t tmark = 0;  // trail mark taken before the step that made this frame
  size_t jmark = 0;  // journal mark, same moment
  bool initialized = false;
  bool is_builtin = false;
  bool builtin_done = false;
  std::vector<size_t> alts;  // clause indices still to try
  size_t next_alt = 0;
};

struct SearchCtx {
  const Program* p = nullptr;
  SelectionRule rule;
  RunLimits limits;
  bool want_trace = false;
  std::set<std::string> qvars;
  std::mt19937_64 rng;
  uint64_t next_id = 0;
  Bindings b{false};
  Outcome out;
  bool stop = false;  // limit, error or solution quota reached
  MonitorCtx* mon = nullptr;

  Node* head = nullptr;  // sentinel
  Node* tail = nullptr;  // sentinel
  Node* fps = nullptr;   // leftmost atom the marking scan has not passed
  std::vector<Node*> wake;
  std::unordered_map<std::string, std::vector<std::pair<Node*, size_t>>>
      watchers;  // variable -> (atom, block-pattern index)
  std::vector<JEntry> journal;
  std::unordered_map<std::string, const BlockDecl*> blockmap;
  Permutation pi;  // maintained only for trace/monitor runs

  bool track_pi() const { return want_trace || mon != nullptr; }
};

const BlockDecl* block_of(const SearchCtx& ctx, const std::string& key) {
  auto it = ctx.blockmap.find(key);
  return it == ctx.blockmap.end() ? nullptr : it->second;
}

bool selectable(const Node* n) { return n->blocking == 0; }

// --- journal helpers -------------------------------------------------------

void j_wait(SearchCtx& ctx, Node* n) {
  n->waiting = true;
  ctx.journal.push_back({JEntry::Op::Wait, n});
}

void j_wake_push(SearchCtx& ctx, Node* n) {
  ctx.wake.push_back(n);
  ctx.journal.push_back({JEntry::Op::WakePush, n});
}

Node* j_wake_pop(SearchCtx& ctx) {
  Node* n = ctx.wake.back();
  ctx.wake.pop_back();
  ctx.journal.push_back({JEntry::Op::WakePop, n});
  return n;
}

void j_fps(SearchCtx& ctx, Node* to) {
  if (ctx.fps == to) return;
  ctx.journal.push_back({JEntry::Op::Fps, ctx.fps});
  ctx.fps = to;
}

void j_pi(SearchCtx& ctx, Permutation next) {
  JEntry e{JEntry::Op::Pi};
  e.old_pi = ctx.pi;
  ctx.journal.push_back(std::move(e));
  ctx.pi = std::move(next);
}

void journal_undo(SearchCtx& ctx, size_t m) {
  while (ctx.journal.size() > m) {
    JEntry e = std::move(ctx.journal.back());
    ctx.journal.pop_back();
    switch (e.op) {
      case JEntry::Op::Splice: {
        // Unlink and free the inserted span, relink the removed node (its
        // own prev/next pointers were left untouched when it was unlinked).
        Node* left = e.a->prev;
        Node* right = e.a->next;
        if (e.b) {
          Node* x = e.b;
          while (true) {
            Node* nx = x->next;
            delete x;
            if (x == e.c) break;
            x = nx;
          }
        }
        left->next = e.a;
        right->prev = e.a;
        e.a->alive = true;
        break;
      }
      case JEntry::Op::Wait:
        e.a->waiting = false;
        break;
      case JEntry::Op::PatternDead:
        e.a->live_mask |= uint64_t{1} << e.idx;
        e.a->blocking++;
        break;
      case JEntry::Op::WakePush:
        ctx.wake.pop_back();
        break;
      case JEntry::Op::WakePop:
        ctx.wake.push_back(e.a);
        break;
      case JEntry::Op::Watch:
        ctx.watchers[e.var].pop_back();
        break;
      case JEntry::Op::Fps:
        ctx.fps = e.a;
        break;
      case JEntry::Op::Pi:
        ctx.pi = std::move(e.old_pi);
        break;
    }
  }
}

// Counts the block patterns that currently match the (dereferenced) atom and
// registers a watcher on every variable they wait on: a pattern stops
// matching forever once any of its '-' variables is bound.
void init_blocking(SearchCtx& ctx, Node* n) {
  const BlockDecl* bd = block_of(ctx, n->atom.key());
  if (!bd) return;
  for (size_t pi = 0; pi < bd->patterns.size(); ++pi) {
    const auto& pat = bd->patterns[pi];
    if (pat.size() != n->atom.arity()) continue;
    std::vector<std::string> vars;
    bool matches = true;
    for (size_t i = 0; i < pat.size(); ++i) {
      if (pat[i] != '-') continue;
      TermPtr d = ctx.b.deref(n->atom.args[i]);
      if (!d->is_var()) {
        matches = false;
        break;
      }
      vars.push_back(d->name());
    }
    if (!matches) continue;
    n->blocking++;
    n->live_mask |= uint64_t{1} << pi;
    for (const auto& v : vars) {
      ctx.watchers[v].push_back({n, pi});
      JEntry e{JEntry::Op::Watch, n};
      e.var = v;
      ctx.journal.push_back(std::move(e));
    }
  }
}

// Processes the variables bound since trail mark `tm`: each binding kills
// the block patterns watching the variable; an atom whose last pattern dies
// is woken (pushed) if it is waiting.
void process_wakes(SearchCtx& ctx, size_t tm) {
  const auto& trail = ctx.b.trail();
  // Watcher entries may be appended while we iterate (they are not, since
  // firing registers nothing), but the trail is stable here.
  for (size_t i = tm; i < trail.size(); ++i) {
    auto it = ctx.watchers.find(trail[i]);
    if (it == ctx.watchers.end()) continue;
    // Mapped references survive rehashing, so registering new watchers
    // below cannot invalidate `entries` (the fired variable is bound and is
    // never registered again).
    const auto& entries = it->second;
    const size_t n_entries = entries.size();
    for (size_t w = 0; w < n_entries; ++w) {
      auto [n, pat] = entries[w];
      // The pattern may already be dead (another of its watched variables
      // fired first within this step); the mask makes the death exact.
      if (!n->alive || !(n->live_mask & (uint64_t{1} << pat))) continue;
      // Recheck under dereferencing: a variable bound to another variable
      // leaves the pattern matching, it just has to be watched through the
      // alias from now on.
      const BlockDecl* bd = block_of(ctx, n->atom.key());
      const auto& p = bd->patterns[pat];
      bool still = true;
      std::vector<std::string> vars;
      for (size_t k = 0; k < p.size(); ++k) {
        if (p[k] != '-') continue;
        TermPtr d = ctx.b.deref(n->atom.args[k]);
        if (!d->is_var()) {
          still = false;
          break;
        }
        vars.push_back(d->name());
      }
      if (still) {
        for (const auto& v : vars) {
          ctx.watchers[v].push_back({n, pat});
          JEntry e{JEntry::Op::Watch, n};
          e.var = v;
          ctx.journal.push_back(std::move(e));
        }
        continue;
      }
      n->live_mask &= ~(uint64_t{1} << pat);
      n->blocking--;
      JEntry e{JEntry::Op::PatternDead, n};
      e.idx = pat;
      ctx.journal.push_back(std::move(e));
      if (n->blocking == 0 && n->waiting) j_wake_push(ctx, n);
    }
  }
}

// Marks the blocked prefix starting at fps as waiting (Def 2.1's R1) and
// returns the leftmost selectable atom at or right of fps, advancing fps.
Node* marking_scan(SearchCtx& ctx) {
  Node* n = ctx.fps;
  while (n != ctx.tail && !selectable(n)) {
    if (!n->waiting) j_wait(ctx, n);
    n = n->next;
  }
  j_fps(ctx, n);
  return n == ctx.tail ? nullptr : n;
}

// Returns the node to select, or nullptr (floundered).
Node* select_node(SearchCtx& ctx) {
  switch (ctx.rule.kind) {
    case SelectionRule::Kind::LD:
      marking_scan(ctx);  // keep Def 2.1 waiting flags comparable
      return ctx.head->next == ctx.tail ? nullptr : ctx.head->next;
    case SelectionRule::Kind::Random: {
      // Full scan: mark the blocked prefix, then pick uniformly.
      std::vector<Node*> sel;
      bool before_first = true;
      for (Node* n = ctx.head->next; n != ctx.tail; n = n->next) {
        if (selectable(n)) {
          before_first = false;
          sel.push_back(n);
        } else if (before_first && !n->waiting) {
          j_wait(ctx, n);
        }
      }
      if (sel.empty()) return nullptr;
      return sel[std::uniform_int_distribution<size_t>(0, sel.size() - 1)(
          ctx.rng)];
    }
    case SelectionRule::Kind::LeftBased:
      break;
  }
  if (ctx.rule.wake == WakePolicy::NewlyWokenFirst) {
    while (!ctx.wake.empty()) {
      Node* n = j_wake_pop(ctx);
      if (n->alive) return n;
    }
    return marking_scan(ctx);
  }
  // LeftmostWaitingFirst: leftmost waiting selectable atom, else leftmost
  // selectable; mark the blocked prefix along the way.
  Node* first_sel = nullptr;
  for (Node* n = ctx.head->next; n != ctx.tail; n = n->next) {
    if (selectable(n)) {
      if (n->waiting) return n;
      if (!first_sel) first_sel = n;
    } else if (!first_sel && !n->waiting) {
      j_wait(ctx, n);
    }
  }
  return first_sel;
}

bool budget(SearchCtx& ctx) {
  if (ctx.out.steps_used >= ctx.limits.steps) {
    ctx.out.status = RunStatus::LimitExceeded;
    ctx.out.error = "step limit reached";
    ctx.stop = true;
    return false;
  }
  ctx.out.steps_used++;
  return true;
}

void record_trace(SearchCtx& ctx, Node* sel, const std::string& clause_label) {
  if (!ctx.want_trace) return;
  TraceEvent e;
  e.step = ctx.out.steps_used;
  size_t i = 0;
  for (Node* n = ctx.head->next; n != ctx.tail; n = n->next, ++i) {
    if (n == sel) e.selected = i + 1;
    if (n->waiting) e.waiting.push_back(i + 1);
  }
  e.pi_position = ctx.pi(static_cast<int>(e.selected));
  e.atom = atom_to_string(ctx.b.resolve(sel->atom));
  e.clause = clause_label;
  ctx.out.trace.push_back(std::move(e));
}

// Replaces `sel` with `body` in the query. New nodes inherit the waiting
// flag; blocked ones get watchers; selectable waiting ones are pushed right
// to left (a woken clause body runs depth-first, leftmost atom first).
// Binding-induced wake-ups are pushed afterwards by the caller, so they run
// before the new body — like goals woken during head unification.
std::pair<Node*, Node*> splice(SearchCtx& ctx, Node* sel,
                               const std::vector<Atom>& body) {
  Node* left = sel->prev;
  Node* right = sel->next;
  Node* first = nullptr;
  Node* last = nullptr;
  std::vector<Node*> created;
  for (const auto& a : body) {
    Node* n = new Node;
    n->atom = a;
    n->id = ctx.next_id++;
    n->waiting = sel->waiting;
    n->prev = last ? last : left;
    if (last) last->next = n;
    if (!first) first = n;
    last = n;
    created.push_back(n);
  }
  Node* leftmost_link = first ? first : right;
  left->next = leftmost_link;
  if (first) {
    last->next = right;
    right->prev = last;
    first->prev = left;
  } else {
    right->prev = left;
  }
  sel->alive = false;  // sel keeps its prev/next for the undo
  ctx.journal.push_back({JEntry::Op::Splice, sel, first, last});
  for (Node* n : created) init_blocking(ctx, n);
  for (size_t i = created.size(); i-- > 0;)
    if (created[i]->waiting && selectable(created[i]))
      j_wake_push(ctx, created[i]);
  if (ctx.fps == sel) j_fps(ctx, first ? first : right);
  return {first, last};
}

void record_solution(SearchCtx& ctx) {
  Substitution answer;
  for (const auto& v : ctx.qvars) {
    TermPtr r = ctx.b.resolve(Term::var(v));
    if (r->is_var() && r->name() == v) continue;
    answer.bind(v, r);
  }
  ctx.out.solutions.push_back(std::move(answer));
  if (ctx.limits.solutions &&
      ctx.out.solutions.size() >= ctx.limits.solutions)
    ctx.stop = true;
}

// The persistence assertions of one step (monitor runs only). `before` is
// the pre-step query, deeply resolved; `body` the freshened clause body
// (empty for built-ins); `dom` the variables the step bound.
void monitor_step(SearchCtx& ctx, const std::vector<Atom>& before, size_t sel,
                  const std::set<std::string>& dom,
                  const std::vector<Atom>& body) {
  MonitorCtx& m = *ctx.mon;
  m.report->checks++;
  auto violation = [&](const std::string& what) {
    std::string q;
    size_t i = 0;
    for (Node* n = ctx.head->next; n != ctx.tail; n = n->next, ++i)
      q += (i ? ", " : "") + atom_to_string(ctx.b.resolve(n->atom));
    m.report->violations.push_back({ctx.out.steps_used, what, q});
  };

  // Kind persistence under the derived permutation.
  std::vector<ModedAtomView> views;
  for (Node* n = ctx.head->next; n != ctx.tail; n = n->next)
    views.push_back(m.vc->view(ctx.b.resolve(n->atom)));
  std::string why;
  if (!check_pi_kind(views, ctx.pi, m.kind, *m.ts, nullptr, m.bf, &why))
    violation("resolvent is not " + kind_name(m.kind) + ": " + why);

  // The MGU lemmas assume the selected atom was non-variable in its bound
  // input positions.
  ModedAtomView sv = m.vc->view(before[sel]);
  const std::string skey = before[sel].key();
  bool builtin = !ctx.p->defines(skey) && builtin_spec(skey) != nullptr;
  for (size_t i = 0; i < sv.inputs.size(); ++i) {
    bool bound = builtin || m.bf->is_bound(skey, sv.input_positions[i]);
    if (bound && sv.inputs[i]->is_var()) return;  // hypothesis fails
  }

  std::set<std::string> other_outputs;
  auto add_outputs = [&](const Atom& a) {
    ModedAtomView v = m.vc->view(a);
    for (size_t j = 0; j < v.outputs.size(); ++j) {
      // Robust typing exists precisely to let bound output positions be
      // instantiated, so only free-position outputs are protected there.
      if (m.kind == PiKind::Robustly &&
          m.bf->is_bound(a.key(), v.output_positions[j]))
        continue;
      collect_vars(v.outputs[j], other_outputs);
    }
  };
  for (const auto& a : body) add_outputs(a);
  for (size_t i = 0; i < before.size(); ++i)
    if (i != sel) add_outputs(before[i]);
  std::set<std::string> protect = other_outputs;
  if (m.kind == PiKind::Robustly)
    for (const auto& t : sv.inputs) collect_vars(t, protect);

  // The lemmas assert that SOME mgu leaves the protected variables unbound;
  // mgus differ only in orientation, so the engine's mgu is compliant up to
  // renaming. A protected variable is genuinely instantiated only when it
  // dereferences to a non-variable, or when two protected variables end up
  // aliased (no orientation can spare both).
  auto describe = [&](const std::string& x) {
    return other_outputs.count(x)
               ? "output variable " + x + " of a non-selected atom"
               : "input variable " + x + " of the selected atom";
  };
  std::map<std::string, std::vector<std::string>> alias;
  for (const auto& x : dom) {
    if (!protect.count(x)) continue;
    TermPtr d = ctx.b.deref(Term::var(x));
    if (!d->is_var())
      violation("MGU instantiates " + describe(x));
    else
      alias[d->name()].push_back(x);
  }
  for (const auto& [rep, xs] : alias) {
    if (xs.size() > 1)
      violation("MGU aliases " + describe(xs[0]) + " and " + describe(xs[1]));
    else if (protect.count(rep))
      violation("MGU aliases " + describe(xs[0]) + " and " + describe(rep));
  }
}

// Pre-step snapshot used by the monitor and the derived permutation.
struct StepObs {
  std::vector<Atom> before;  // resolved pre-step query (monitor only)
  size_t sel_index = 0;      // 0-based (trace/monitor only)
  size_t query_size = 0;
};

StepObs observe(SearchCtx& ctx, Node* sel) {
  StepObs o;
  if (!ctx.track_pi()) return o;
  size_t i = 0;
  for (Node* n = ctx.head->next; n != ctx.tail; n = n->next, ++i) {
    if (n == sel) o.sel_index = i;
    if (ctx.mon) o.before.push_back(ctx.b.resolve(n->atom));
  }
  o.query_size = i;
  return o;
}

void advance_pi(SearchCtx& ctx, const StepObs& o, const Permutation& rho) {
  if (!ctx.track_pi()) return;
  j_pi(ctx, derived_permutation(ctx.pi, rho,
                                static_cast<int>(o.sel_index) + 1));
}

// One built-in evaluation; true when the call succeeded (query updated).
bool eval_builtin(SearchCtx& ctx, Node* sel, const BuiltinSpec& spec,
                  size_t tm, const StepObs& obs) {
  const Atom& a = sel->atom;
  auto fail_with = [&](RunStatus st, const std::string& detail) {
    ctx.out.status = st;
    ctx.out.error = atom_to_string(ctx.b.resolve(a)) + ": " + detail;
    ctx.stop = true;
    return false;
  };
  bool ok = false;
  if (spec.cls == BuiltinClass::Comparison) {
    EvalResult l = eval_arith(ctx.b, a.args[0]);
    EvalResult r =
        l.status == EvalStatus::Ok ? eval_arith(ctx.b, a.args[1]) : l;
    const EvalResult& bad = l.status != EvalStatus::Ok ? l : r;
    if (bad.status == EvalStatus::Unbound)
      return fail_with(RunStatus::InstantiationError, bad.detail);
    if (bad.status == EvalStatus::NonNumeric)
      return fail_with(RunStatus::TypeError, bad.detail);
    ok = compare(a.pred, l.value, r.value);
  } else if (spec.cls == BuiltinClass::Arithmetic) {  // is/2
    EvalResult r = eval_arith(ctx.b, a.args[1]);
    if (r.status == EvalStatus::Unbound)
      return fail_with(RunStatus::InstantiationError, r.detail);
    if (r.status == EvalStatus::NonNumeric)
      return fail_with(RunStatus::TypeError, r.detail);
    ok = ctx.b.unify(a.args[0], Term::integer(r.value));
  } else {  // =/2
    ok = ctx.b.unify(a.args[0], a.args[1]);
  }
  if (!ok) return false;
  if (!budget(ctx)) return false;
  record_trace(ctx, sel, a.key() + "#builtin");

  splice(ctx, sel, {});
  process_wakes(ctx, tm);
  advance_pi(ctx, obs, Permutation::identity(0));
  if (ctx.mon)
    monitor_step(ctx, obs.before, obs.sel_index, ctx.b.bound_since(tm), {});
  return true;
}

// One resolution attempt against program clause `ci`; true when the head
// unified (query updated).
bool try_clause(SearchCtx& ctx, Node* sel, size_t ci, size_t tm,
                const StepObs& obs) {
  Clause rc = freshen(ctx.p->clauses[ci]);
  if (!ctx.b.unify(rc.head, sel->atom)) return false;
  if (!budget(ctx)) return false;
  record_trace(ctx, sel, rc.head.key() + "#" + std::to_string(ci + 1));

  splice(ctx, sel, rc.body);
  process_wakes(ctx, tm);

  Permutation rho = Permutation::identity(static_cast<int>(rc.body.size()));
  if (ctx.mon) {
    auto it = ctx.mon->rho.find(ci);
    if (it != ctx.mon->rho.end()) rho = it->second;
  }
  advance_pi(ctx, obs, rho);
  if (ctx.mon)
    monitor_step(ctx, obs.before, obs.sel_index, ctx.b.bound_since(tm),
                 rc.body);
  return true;
}

void search(SearchCtx& ctx) {
  std::vector<Frame> stack;
  stack.push_back({});  // root frame; nothing to undo when it pops
  while (!stack.empty() && !ctx.stop) {
    Frame& f = stack.back();
    if (!f.initialized) {
      if (ctx.head->next == ctx.tail) {
        record_solution(ctx);
        ctx.b.undo(f.tmark);
        journal_undo(ctx, f.jmark);
        stack.pop_back();
        continue;
      }
      Node* sel = select_node(ctx);
      if (!sel) {
        ctx.out.floundered_branches++;
        ctx.b.undo(f.tmark);
        journal_undo(ctx, f.jmark);
        stack.pop_back();
        continue;
      }
      f.sel = sel;
      const std::string key = sel->atom.key();
      if (ctx.p->defines(key)) {
        for (size_t ci = 0; ci < ctx.p->clauses.size(); ++ci)
          if (ctx.p->clauses[ci].head.key() == key) f.alts.push_back(ci);
      } else if (builtin_spec(key)) {
        f.is_builtin = true;
      } else {
        throw std::invalid_argument("unresolvable predicate " + key);
      }
      f.initialized = true;
    }

    size_t tm = ctx.b.mark();
    size_t jm = ctx.journal.size();
    bool stepped = false;
    if (f.is_builtin) {
      if (f.builtin_done) {
        ctx.b.undo(f.tmark);
        journal_undo(ctx, f.jmark);
        stack.pop_back();
        continue;
      }
      f.builtin_done = true;
      StepObs obs = observe(ctx, f.sel);
      stepped = eval_builtin(ctx, f.sel,
                             *builtin_spec(f.sel->atom.key()), tm, obs);
    } else {
      if (f.next_alt >= f.alts.size()) {
        ctx.b.undo(f.tmark);
        journal_undo(ctx, f.jmark);
        stack.pop_back();
        continue;
      }
      size_t ci = f.alts[f.next_alt++];
      StepObs obs = observe(ctx, f.sel);
      stepped = try_clause(ctx, f.sel, ci, tm, obs);
    }
    if (!stepped) {
      ctx.b.undo(tm);
      journal_undo(ctx, jm);
      continue;
    }
    Frame nf;
    nf.tmark = tm;
    nf.jmark = jm;
    stack.push_back(std::move(nf));  // invalidates f
  }
  // Unwind whatever is left (early stop) so all journal nodes are freed.
  ctx.b.undo(0);
  journal_undo(ctx, 0);
}

Outcome run_impl(const Program& p, const std::vector<Atom>& query,
                 const SelectionRule& rule, const RunLimits& limits,
                 bool want_trace, MonitorCtx* mon, const Permutation& pi0) {
  SearchCtx ctx;
  ctx.p = &p;
  ctx.rule = rule;
  ctx.limits = limits;
  ctx.want_trace = want_trace;
  ctx.b = Bindings(limits.occur_check);
  ctx.rng.seed(rule.seed);
  ctx.mon = mon;
  for (const auto& [key, bd] : p.blocks)
    if (!bd.empty()) ctx.blockmap.emplace(key, &bd);
  for (const auto& a : query) {
    if (!p.defines(a.key()) && !builtin_spec(a.key()))
      throw std::invalid_argument("unresolvable predicate " + a.key());
    for (const auto& x : vars_of(a)) ctx.qvars.insert(x);
  }

  ctx.head = new Node;
  ctx.tail = new Node;
  ctx.head->next = ctx.tail;
  ctx.tail->prev = ctx.head;
  for (const auto& a : query) {
    Node* n = new Node;
    n->atom = a;
    n->id = ctx.next_id++;
    n->prev = ctx.tail->prev;
    n->next = ctx.tail;
    ctx.tail->prev->next = n;
    ctx.tail->prev = n;
    init_blocking(ctx, n);
  }
  // Watchers registered for the initial query must survive backtracking to
  // the root, so clear the journal of their registration entries.
  ctx.journal.clear();
  ctx.fps = ctx.head->next;
  ctx.pi = pi0.size() == static_cast<int>(query.size())
               ? pi0
               : Permutation::identity(static_cast<int>(query.size()));

  try {
    search(ctx);
  } catch (...) {
    for (Node* n = ctx.head; n;) {
      Node* nx = n->next;
      delete n;
      n = nx;
    }
    throw;
  }
  for (Node* n = ctx.head; n;) {
    Node* nx = n->next;
    delete n;
    n = nx;
  }

  if (ctx.out.status == RunStatus::LimitExceeded ||
      ctx.out.status == RunStatus::InstantiationError ||
      ctx.out.status == RunStatus::TypeError)
    return ctx.out;
  if (!ctx.out.solutions.empty())
    ctx.out.status = RunStatus::Success;
  else if (ctx.out.floundered_branches > 0)
    ctx.out.status = RunStatus::Floundered;
  else
    ctx.out.status = RunStatus::Failure;
  return ctx.out;
}

}  // namespace

Outcome run(const Program& p, const std::vector<Atom>& query,
            const SelectionRule& rule, const RunLimits& limits,
            bool want_trace) {
  return run_impl(p, query, rule, limits, want_trace, nullptr, Permutation());
}

MonitorReport monitor(const Program& p, const std::vector<Atom>& query,
                      const std::string& mode, PiKind kind,
                      const SelectionRule& rule, const RunLimits& limits) {
  MonitorReport rep;
  rep.kind = kind_name(kind);
  ConditionVerdict cv = check_condition(p, mode, kind);
  if (!cv.holds) {
    rep.why_not = "program is not " + kind_name(kind) + " in mode " + mode;
    return rep;
  }
  TypeSystem ts(p.grammars);
  ViewContext vc(p, mode);
  PositionClassification bf = bound_free(p, mode);

  std::vector<ModedAtomView> qviews;
  qviews.reserve(query.size());
  for (const auto& a : query) qviews.push_back(vc.view(a));
  WitnessResult w = find_permutation_nm(qviews, kind, ts, nullptr, &bf);
  if (!w.pi) {
    rep.why_not = "query is not " + kind_name(kind) + ": " + w.reason;
    return rep;
  }
  rep.applicable = true;

  MonitorCtx mon;
  mon.kind = kind;
  mon.ts = &ts;
  mon.vc = &vc;
  mon.bf = &bf;
  mon.rho = cv.witnesses;
  mon.report = &rep;
  rep.outcome = run_impl(p, query, rule, limits, false, &mon, *w.pi);
  return rep;
}

}  // namespace bc
