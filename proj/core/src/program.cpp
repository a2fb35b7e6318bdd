#include "blockcheck/program.hpp"

#include <algorithm>

namespace bc {

std::vector<std::string> Program::mode_names() const {
  std::vector<std::string> out;
  for (const auto& [name, table] : modes) out.push_back(name);
  return out;
}

std::vector<const Clause*> Program::clauses_for(const std::string& key) const {
  std::vector<const Clause*> out;
  for (const auto& c : clauses)
    if (c.head.key() == key) out.push_back(&c);
  return out;
}

std::vector<std::string> Program::defined_predicates() const {
  std::vector<std::string> out;
  for (const auto& c : clauses) {
    std::string k = c.head.key();
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

bool Program::defines(const std::string& key) const {
  return std::any_of(clauses.begin(), clauses.end(),
                     [&](const Clause& c) { return c.head.key() == key; });
}

BlockDecl Program::block_for(const std::string& key) const {
  auto it = blocks.find(key);
  return it == blocks.end() ? BlockDecl{} : it->second;
}

std::optional<ModeDecl> Program::mode_of(const std::string& mode_name,
                                         const std::string& key) const {
  auto mit = modes.find(mode_name);
  if (mit != modes.end()) {
    auto pit = mit->second.find(key);
    if (pit != mit->second.end()) return pit->second;
  }
  if (const BuiltinSpec* b = builtin_spec(key)) return b->mode;
  return std::nullopt;
}

std::optional<TypeDecl> Program::type_of(const std::string& key) const {
  auto it = types.find(key);
  if (it != types.end()) return it->second;
  if (const BuiltinSpec* b = builtin_spec(key)) return b->types;
  return std::nullopt;
}

const std::map<std::string, BuiltinSpec>& builtin_table() {
  static const std::map<std::string, BuiltinSpec> table = [] {
    std::map<std::string, BuiltinSpec> t;
    auto add = [&t](const std::string& key, ModeDecl mode, TypeDecl types,
                    BuiltinClass cls, bool total) {
      t[key] = BuiltinSpec{key, std::move(mode), std::move(types), cls, true,
                           total};
    };
    // is/2 evaluates its (input) right-hand side; always has an answer.
    add("is/2", {Mode::Out, Mode::In}, {"num", "num"}, BuiltinClass::Arithmetic,
        true);
    // Comparisons are tests: some correctly typed atoms fail.
    add("</2", {Mode::In, Mode::In}, {"num", "num"}, BuiltinClass::Comparison,
        false);
    add("=</2", {Mode::In, Mode::In}, {"num", "num"}, BuiltinClass::Comparison,
        false);
    add(">/2", {Mode::In, Mode::In}, {"num", "num"}, BuiltinClass::Comparison,
        false);
    add(">=/2", {Mode::In, Mode::In}, {"num", "num"}, BuiltinClass::Comparison,
        false);
    add("=\\=/2", {Mode::In, Mode::In}, {"num", "num"},
        BuiltinClass::Comparison, false);
    // =(I,I) is the equality test the mode discipline always flags.
    add("=/2", {Mode::In, Mode::In}, {"any", "any"}, BuiltinClass::Unification,
        false);
    return t;
  }();
  return table;
}

bool is_builtin(const std::string& key) { return builtin_table().count(key) > 0; }

const BuiltinSpec* builtin_spec(const std::string& key) {
  auto it = builtin_table().find(key);
  return it == builtin_table().end() ? nullptr : &it->second;
}

std::map<std::string, TypeGrammar> predefined_grammars() {
  std::map<std::string, TypeGrammar> g;
  auto prim = [&g](const std::string& name) {
    g[name] = TypeGrammar{name, {}, true};
  };
  prim("any");
  prim("int");
  prim("num");
  g["list"] = TypeGrammar{"list", {{"[]", {}}, {".", {"any", "list"}}}, false};
  g["intlist"] =
      TypeGrammar{"intlist", {{"[]", {}}, {".", {"int", "intlist"}}}, false};
  g["numlist"] =
      TypeGrammar{"numlist", {{"[]", {}}, {".", {"num", "numlist"}}}, false};
  g["tree"] = TypeGrammar{
      "tree", {{"leaf", {}}, {"node", {"tree", "any", "tree"}}}, false};
  return g;
}

}  // namespace bc
