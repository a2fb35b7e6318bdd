#include "blockcheck/depgraph.hpp"

#include <algorithm>
#include <functional>

namespace bc {

namespace {

// Tarjan's algorithm; components are emitted callees-first.
struct Tarjan {
  const std::map<std::string, std::set<std::string>>& edges;
  std::map<std::string, int> index, low;
  std::map<std::string, bool> on_stack;
  std::vector<std::string> stack;
  int counter = 0;
  std::vector<std::vector<std::string>> sccs;

  void visit(const std::string& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    auto it = edges.find(v);
    if (it != edges.end())
      for (const auto& w : it->second) {
        if (!index.count(w)) {
          visit(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      }
    if (low[v] == index[v]) {
      std::vector<std::string> comp;
      std::string w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      std::reverse(comp.begin(), comp.end());
      sccs.push_back(std::move(comp));
    }
  }
};

}  // namespace

DependencyGraph dependency_graph(const Program& p) {
  DependencyGraph g;
  auto add_node = [&](const std::string& key) {
    if (std::find(g.nodes.begin(), g.nodes.end(), key) == g.nodes.end())
      g.nodes.push_back(key);
    g.refers_to.emplace(key, std::set<std::string>{});
  };
  for (const auto& key : p.defined_predicates()) add_node(key);
  for (const auto& c : p.clauses)
    for (const auto& a : c.body) {
      add_node(a.key());
      g.refers_to[c.head.key()].insert(a.key());
    }
  Tarjan t{g.refers_to, {}, {}, {}, {}, 0, {}};
  for (const auto& n : g.nodes)
    if (!t.index.count(n)) t.visit(n);
  g.sccs = std::move(t.sccs);
  for (size_t i = 0; i < g.sccs.size(); ++i)
    for (const auto& n : g.sccs[i]) g.scc_of[n] = static_cast<int>(i);
  return g;
}

bool DependencyGraph::similar(const std::string& p,
                              const std::string& q) const {
  auto a = scc_of.find(p), b = scc_of.find(q);
  return a != scc_of.end() && b != scc_of.end() && a->second == b->second;
}

bool DependencyGraph::depends_on(const std::string& p,
                                 const std::string& q) const {
  if (p == q) return true;
  std::set<std::string> seen{p};
  std::vector<std::string> work{p};
  while (!work.empty()) {
    std::string cur = work.back();
    work.pop_back();
    auto it = refers_to.find(cur);
    if (it == refers_to.end()) continue;
    for (const auto& next : it->second) {
      if (next == q) return true;
      if (seen.insert(next).second) work.push_back(next);
    }
  }
  return false;
}

bool DependencyGraph::strictly(const std::string& p,
                               const std::string& q) const {
  return depends_on(p, q) && !similar(p, q);
}

std::set<std::string> DependencyGraph::cone(const std::string& p) const {
  std::set<std::string> seen{p};
  std::vector<std::string> work{p};
  while (!work.empty()) {
    std::string cur = work.back();
    work.pop_back();
    auto it = refers_to.find(cur);
    if (it == refers_to.end()) continue;
    for (const auto& next : it->second)
      if (seen.insert(next).second) work.push_back(next);
  }
  return seen;
}

}  // namespace bc
