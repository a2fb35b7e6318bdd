#include "blockcheck/parser.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace bc {

namespace {

enum class Tok {
  End,
  Ident,    // lowercase identifier or quoted/symbolic functor
  Var,      // uppercase or _ identifier
  Int,
  Punct,    // ( ) [ ] | , ; . :- -> ? - + < =< > >= =\= = is-less punct ops
  MetaStart // "%:-"
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1, col = 1;
};

class Lexer {
public:
  Lexer(const std::string& src, std::string file)
      : src_(src), file_(std::move(file)) {}

  Token next() {
    skip_layout();
    Token t;
    t.line = line_;
    t.col = col_;
    if (eof()) return t;
    char c = peek();
    if (c == '%') {  // structured comment start, plain ones eaten by layout
      advance();     // '%'
      advance();     // ':'
      advance();     // '-'
      t.kind = Tok::MetaStart;
      t.text = "%:-";
      return t;
    }
    if (isdigit(static_cast<unsigned char>(c))) {
      while (!eof() && isdigit(static_cast<unsigned char>(peek())))
        t.text += take();
      t.kind = Tok::Int;
      return t;
    }
    if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (!eof() && (isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
        t.text += take();
      t.kind = (isupper(static_cast<unsigned char>(t.text[0])) || t.text[0] == '_')
                   ? Tok::Var
                   : Tok::Ident;
      return t;
    }
    // punctuation / symbolic operators, longest match first
    static const char* ops[] = {":-", "=\\=", "=<", ">=", "->", "<", ">",
                                "=",  "+",    "-",  "(",  ")",  "[", "]",
                                "|",  ",",    ";",  ".",  "?"};
    for (const char* op : ops) {
      size_t len = strlen(op);
      if (src_.compare(pos_, len, op) == 0) {
        for (size_t i = 0; i < len; ++i) advance();
        t.kind = Tok::Punct;
        t.text = op;
        return t;
      }
    }
    throw error("unexpected character '" + std::string(1, c) + "'");
  }

  ParseError error(const std::string& msg) const {
    std::ostringstream os;
    os << file_ << ":" << line_ << ":" << col_ << ": " << msg;
    return ParseError(os.str());
  }

private:
  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  char take() {
    char c = src_[pos_];
    advance();
    return c;
  }
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_layout() {
    while (!eof()) {
      char c = peek();
      if (isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '%' && src_.compare(pos_, 3, "%:-") != 0) {
        while (!eof() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  const std::string& src_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

bool is_infix_pred(const Token& t) {
  if (t.kind == Tok::Ident && t.text == "is") return true;
  if (t.kind != Tok::Punct) return false;
  return t.text == "<" || t.text == "=<" || t.text == ">" || t.text == ">=" ||
         t.text == "=\\=" || t.text == "=";
}

class Parser {
public:
  Parser(const std::string& src, std::string file,
         std::vector<std::string>* warnings)
      : lex_(src, file), file_(std::move(file)), warnings_(warnings) {
    shift();
  }

  Program parse() {
    Program p;
    p.grammars = predefined_grammars();
    while (cur_.kind != Tok::End) {
      if (cur_.kind == Tok::MetaStart) {
        parse_meta(p);
      } else if (cur_.kind == Tok::Punct && cur_.text == ":-") {
        parse_block_directive(p);
      } else {
        parse_clause(p);
      }
    }
    validate(p);
    return p;
  }

  std::vector<Atom> parse_query_only() {
    std::vector<Atom> q;
    if (cur_.kind == Tok::End) return q;
    q.push_back(parse_atom());
    while (accept_punct(",")) q.push_back(parse_atom());
    if (cur_.kind == Tok::Punct && cur_.text == ".") shift();
    expect_end();
    return q;
  }

  TermPtr parse_term_only() {
    TermPtr t = parse_expr();
    expect_end();
    return t;
  }

private:
  void shift() { cur_ = lex_.next(); }

  bool accept_punct(const std::string& s) {
    if (cur_.kind == Tok::Punct && cur_.text == s) {
      shift();
      return true;
    }
    return false;
  }

  void expect_punct(const std::string& s) {
    if (!accept_punct(s)) throw err("expected '" + s + "'");
  }

  void expect_end() {
    if (cur_.kind != Tok::End) throw err("trailing input");
  }

  std::string expect_ident() {
    if (cur_.kind != Tok::Ident) throw err("expected identifier");
    std::string s = cur_.text;
    shift();
    return s;
  }

  ParseError err(const std::string& msg) const {
    std::ostringstream os;
    os << file_ << ":" << cur_.line << ":" << cur_.col << ": " << msg;
    return ParseError(os.str());
  }

  // A predicate name: plain identifier or a symbolic operator (for
  // directives such as `%:- type =\=(int,int).`).
  std::string parse_pred_name() {
    if (cur_.kind == Tok::Ident) {
      std::string s = cur_.text;
      shift();
      return s;
    }
    if (cur_.kind == Tok::Punct &&
        (cur_.text == "<" || cur_.text == "=<" || cur_.text == ">" ||
         cur_.text == ">=" || cur_.text == "=\\=" || cur_.text == "=")) {
      std::string s = cur_.text;
      shift();
      return s;
    }
    throw err("expected predicate name");
  }

  // ---- terms -------------------------------------------------------------

  TermPtr parse_primary() {
    if (cur_.kind == Tok::Var) {
      std::string name = cur_.text;
      shift();
      if (name == "_") name = "_A" + std::to_string(++anon_counter_);
      return Term::var(name);
    }
    if (cur_.kind == Tok::Int) {
      std::string v = cur_.text;
      shift();
      return Term::fun(v);
    }
    if (accept_punct("[")) return parse_list_tail();
    if (accept_punct("(")) {
      TermPtr t = parse_expr();
      expect_punct(")");
      return t;
    }
    if (cur_.kind == Tok::Ident) {
      std::string f = cur_.text;
      shift();
      if (accept_punct("(")) {
        std::vector<TermPtr> args;
        args.push_back(parse_expr());
        while (accept_punct(",")) args.push_back(parse_expr());
        expect_punct(")");
        return Term::fun(f, std::move(args));
      }
      return Term::fun(f);
    }
    throw err("expected term");
  }

  TermPtr parse_list_tail() {
    if (accept_punct("]")) return Term::nil();
    std::vector<TermPtr> elems;
    elems.push_back(parse_expr());
    while (accept_punct(",")) elems.push_back(parse_expr());
    TermPtr tail = Term::nil();
    if (accept_punct("|")) tail = parse_expr();
    expect_punct("]");
    for (auto it = elems.rbegin(); it != elems.rend(); ++it)
      tail = Term::cons(*it, tail);
    return tail;
  }

  TermPtr parse_expr() {
    TermPtr t = parse_primary();
    while (cur_.kind == Tok::Punct && (cur_.text == "+" || cur_.text == "-")) {
      std::string op = cur_.text;
      shift();
      TermPtr rhs = parse_primary();
      t = Term::fun(op, {t, rhs});
    }
    return t;
  }

  Atom parse_atom() {
    TermPtr t = parse_expr();
    if (is_infix_pred(cur_)) {
      std::string op = cur_.text;
      shift();
      TermPtr rhs = parse_expr();
      return Atom{op, {t, rhs}};
    }
    if (t->is_var()) throw err("a variable is not a valid atom");
    return Atom{t->name(), t->args()};
  }

  // ---- program items -----------------------------------------------------

  void parse_clause(Program& p) {
    Atom head = parse_atom();
    Clause c;
    c.head = std::move(head);
    if (accept_punct(":-")) {
      c.body.push_back(parse_atom());
      while (accept_punct(",")) c.body.push_back(parse_atom());
    }
    expect_punct(".");
    p.clauses.push_back(std::move(c));
  }

  void parse_block_directive(Program& p) {
    expect_punct(":-");
    std::string kw = expect_ident();
    if (kw != "block") throw err("unknown directive ':- " + kw + "'");
    std::string declared_key;
    do {
      std::string name = parse_pred_name();
      expect_punct("(");
      std::vector<char> pattern;
      do {
        if (accept_punct("?"))
          pattern.push_back('?');
        else if (accept_punct("-"))
          pattern.push_back('-');
        else
          throw err("block pattern entries must be '?' or '-'");
      } while (accept_punct(","));
      expect_punct(")");
      std::string key = name + "/" + std::to_string(pattern.size());
      if (declared_key.empty()) {
        if (p.blocks.count(key))
          throw err("duplicate block declaration for " + key);
      }
      p.blocks[key].patterns.push_back(std::move(pattern));
      declared_key = key;
    } while (accept_punct(","));
    expect_punct(".");
  }

  void parse_meta(Program& p) {
    shift();  // consume %:-
    std::string kw = expect_ident();
    if (kw == "mode") {
      expect_punct("(");
      if (cur_.kind != Tok::Ident && cur_.kind != Tok::Var)
        throw err("expected mode name");
      std::string mode_name = cur_.text;
      shift();
      expect_punct(")");
      std::string pred = parse_pred_name();
      expect_punct("(");
      ModeDecl decl;
      do {
        std::string io = expect_ident();
        if (io == "i")
          decl.push_back(Mode::In);
        else if (io == "o")
          decl.push_back(Mode::Out);
        else
          throw err("mode markers must be 'i' or 'o'");
      } while (accept_punct(","));
      expect_punct(")");
      expect_punct(".");
      std::string key = pred + "/" + std::to_string(decl.size());
      p.modes[mode_name][key] = std::move(decl);
    } else if (kw == "type") {
      std::string pred = parse_pred_name();
      expect_punct("(");
      TypeDecl decl;
      do {
        decl.push_back(expect_ident());
      } while (accept_punct(","));
      expect_punct(")");
      expect_punct(".");
      std::string key = pred + "/" + std::to_string(decl.size());
      p.types[key] = std::move(decl);
    } else if (kw == "typedef") {
      std::string name = expect_ident();
      expect_punct("->");
      std::vector<Production> prods;
      do {
        TermPtr alt = parse_expr();
        Production prod;
        if (alt->is_var()) throw err("typedef alternative cannot be a variable");
        prod.functor = alt->name();
        for (const auto& a : alt->args()) {
          if (!a->is_compound() || a->arity() != 0)
            throw err("typedef argument positions must be type names");
          prod.arg_types.push_back(a->name());
        }
        prods.push_back(std::move(prod));
      } while (accept_punct(";"));
      expect_punct(".");
      p.grammars[name] = TypeGrammar{name, std::move(prods), false};
    } else {
      throw err("unknown structured directive '%:- " + kw + "'");
    }
  }

  void validate(const Program& p) {
    // Arity coherence and resolvable types.
    for (const auto& [mode_name, table] : p.modes)
      for (const auto& [key, decl] : table)
        check_arity(key, decl.size(), "mode(" + mode_name + ")");
    for (const auto& [key, decl] : p.types) {
      check_arity(key, decl.size(), "type");
      for (const auto& ty : decl)
        if (!p.grammars.count(ty)) throw err("unknown type name '" + ty + "'");
    }
    for (const auto& [name, g] : p.grammars)
      for (const auto& prod : g.productions)
        for (const auto& at : prod.arg_types)
          if (!p.grammars.count(at))
            throw err("unknown type name '" + at + "' in typedef " + name);
    for (const auto& [key, bd] : p.blocks)
      for (const auto& pat : bd.patterns)
        check_arity(key, pat.size(), "block");
    // Every body predicate must resolve.
    if (warnings_) {
      for (const auto& c : p.clauses)
        for (const auto& a : c.body) {
          std::string key = a.key();
          if (!p.defines(key) && !is_builtin(key))
            warnings_->push_back(file_ + ": predicate " + key +
                                 " has no definition and is not a builtin");
        }
    }
  }

  void check_arity(const std::string& key, size_t n, const std::string& what) {
    size_t declared = std::stoul(key.substr(key.rfind('/') + 1));
    if (declared != n)
      throw err(what + " declaration arity mismatch for " + key);
  }

  Lexer lex_;
  std::string file_;
  std::vector<std::string>* warnings_;
  Token cur_;
  int anon_counter_ = 0;
};

}  // namespace

Program parse_program(const std::string& text, const std::string& filename,
                      std::vector<std::string>* warnings) {
  Parser p(text, filename, warnings);
  return p.parse();
}

Program parse_file(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ":0:0: cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_program(buf.str(), path, warnings);
}

std::vector<Atom> parse_query(const std::string& text) {
  Parser p(text, "<query>", nullptr);
  return p.parse_query_only();
}

TermPtr parse_term_text(const std::string& text) {
  Parser p(text, "<term>", nullptr);
  return p.parse_term_only();
}

std::string emit_program(const Program& p,
                         const std::map<size_t, Permutation>& reordering) {
  std::ostringstream os;
  for (const auto& [mode_name, table] : p.modes)
    for (const auto& [key, decl] : table) {
      os << "%:- mode(" << mode_name << ") "
         << key.substr(0, key.rfind('/')) << "(";
      for (size_t i = 0; i < decl.size(); ++i)
        os << (i ? "," : "") << (decl[i] == Mode::In ? "i" : "o");
      os << ").\n";
    }
  for (const auto& [key, decl] : p.types) {
    os << "%:- type " << key.substr(0, key.rfind('/')) << "(";
    for (size_t i = 0; i < decl.size(); ++i) os << (i ? "," : "") << decl[i];
    os << ").\n";
  }
  auto predefined = predefined_grammars();
  for (const auto& [name, g] : p.grammars) {
    if (predefined.count(name)) continue;
    os << "%:- typedef " << name << " -> ";
    for (size_t i = 0; i < g.productions.size(); ++i) {
      if (i) os << " ; ";
      const auto& prod = g.productions[i];
      if (prod.functor == "." && prod.arg_types.size() == 2) {
        os << "[" << prod.arg_types[0] << "|" << prod.arg_types[1] << "]";
      } else {
        os << prod.functor;
        if (!prod.arg_types.empty()) {
          os << "(";
          for (size_t j = 0; j < prod.arg_types.size(); ++j)
            os << (j ? "," : "") << prod.arg_types[j];
          os << ")";
        }
      }
    }
    os << ".\n";
  }
  os << "\n";
  // Emit each predicate's block declaration just before its first clause.
  std::set<std::string> emitted_blocks;
  for (size_t ci = 0; ci < p.clauses.size(); ++ci) {
    const Clause& c = p.clauses[ci];
    std::string key = c.head.key();
    if (!emitted_blocks.count(key)) {
      emitted_blocks.insert(key);
      BlockDecl bd = p.block_for(key);
      if (!bd.empty()) {
        os << ":- block ";
        for (size_t i = 0; i < bd.patterns.size(); ++i) {
          if (i) os << ", ";
          os << c.head.pred << "(";
          for (size_t j = 0; j < bd.patterns[i].size(); ++j)
            os << (j ? "," : "") << bd.patterns[i][j];
          os << ")";
        }
        os << ".\n";
      }
    }
    std::vector<Atom> body = c.body;
    auto rit = reordering.find(ci);
    if (rit != reordering.end()) {
      if (rit->second.size() != static_cast<int>(body.size()))
        throw ParseError("reordering permutation length mismatch for clause " +
                         std::to_string(ci));
      body = rit->second.apply(body);
    }
    os << atom_to_string(c.head);
    if (!body.empty()) {
      os << " :-\n";
      for (size_t i = 0; i < body.size(); ++i)
        os << "  " << atom_to_string(body[i]) << (i + 1 < body.size() ? ",\n" : "");
    }
    os << ".\n";
  }
  return os.str();
}

}  // namespace bc
