#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "blockcheck/program.hpp"

namespace bc {

// Predicate dependency graph: p refers to q if a clause with head p has a
// body atom q. Nodes are predicate keys; built-ins appearing in bodies are
// sink nodes.
struct DependencyGraph {
  std::vector<std::string> nodes;  // stable order: definition, then discovery
  std::map<std::string, std::set<std::string>> refers_to;

  // Strongly connected components, indexed in reverse topological order
  // (callees before callers); scc_of maps node -> component id.
  std::vector<std::vector<std::string>> sccs;
  std::map<std::string, int> scc_of;

  bool depends_on(const std::string& p, const std::string& q) const;  // p ⊒ q
  bool strictly(const std::string& p, const std::string& q) const;    // p ⊐ q
  bool similar(const std::string& p, const std::string& q) const;     // p ≈ q
  // Every q with p ⊒ q (p's call cone, including p itself).
  std::set<std::string> cone(const std::string& p) const;
};

DependencyGraph dependency_graph(const Program& p);

}  // namespace bc
