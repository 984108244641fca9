#include "fcb/bif.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>

#include "fcb/error.hpp"
#include "fcb/instance_io.hpp"

namespace fcb {

namespace {

constexpr double kNormTolerance = 1e-6;

struct Token {
  enum Kind { Word, Punct, End } kind = End;
  std::string text;
  int line = 0;
  int column = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space_and_comments();
    Token t;
    t.line = line_;
    t.column = column_;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (is_punct(c)) {
      t.kind = Token::Punct;
      t.text = std::string(1, c);
      advance();
      return t;
    }
    if (c == '"') {
      advance();
      t.kind = Token::Word;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        t.text.push_back(text_[pos_]);
        advance();
      }
      if (pos_ >= text_.size()) throw ParseError("unterminated string", t.line, t.column);
      advance();
      return t;
    }
    t.kind = Token::Word;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           !is_punct(text_[pos_]) && text_[pos_] != '"') {
      t.text.push_back(text_[pos_]);
      advance();
    }
    return t;
  }

 private:
  static bool is_punct(char c) {
    return c == '{' || c == '}' || c == '(' || c == ')' || c == '[' || c == ']' || c == '|' ||
           c == ',' || c == ';';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (text_.compare(pos_, 2, "//") == 0) {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (text_.compare(pos_, 2, "/*") == 0) {
        const int l = line_, col = column_;
        advance();
        advance();
        while (pos_ < text_.size() && text_.compare(pos_, 2, "*/") != 0) advance();
        if (pos_ >= text_.size()) throw ParseError("unterminated comment", l, col);
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

struct ProbabilityBlock {
  int child = -1;
  std::vector<int> parents;
  std::optional<std::vector<double>> table;
  std::optional<std::vector<double>> default_row;
  std::map<int, std::vector<double>> rows;  // row index -> values
  int line = 0;
  int column = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) { shift(); }

  BifNetwork parse() {
    BifNetwork net;
    std::vector<ProbabilityBlock> blocks;
    while (tok_.kind != Token::End) {
      const Token head = expect_word();
      if (head.text == "network") {
        net.name = expect_word().text;
        skip_block(net.warnings);
      } else if (head.text == "variable") {
        parse_variable(net);
      } else if (head.text == "probability") {
        blocks.push_back(parse_probability(net));
      } else {
        throw ParseError("unexpected \"" + head.text + "\" at top level", head.line, head.column);
      }
    }

    std::vector<char> seen(net.model.size(), 0);
    for (ProbabilityBlock& b : blocks) {
      if (seen[b.child])
        throw ParseError("second probability block for " + net.model.nodes[b.child].name, b.line, b.column);
      seen[b.child] = 1;
      assemble(net.model, b);
    }
    for (int i = 0; i < net.model.size(); ++i)
      if (!seen[i]) throw ParseError("no probability block for " + net.model.nodes[i].name, 0, 0);
    return net;
  }

 private:
  void shift() { tok_ = lex_.next(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what + (tok_.kind == Token::End ? " at end of input" : ", found \"" + tok_.text + "\""),
                     tok_.line, tok_.column);
  }

  Token expect_word() {
    if (tok_.kind != Token::Word) fail("expected a name");
    Token t = tok_;
    shift();
    return t;
  }

  void expect(char c) {
    if (tok_.kind != Token::Punct || tok_.text[0] != c) fail(std::string("expected '") + c + "'");
    shift();
  }

  bool at(char c) const { return tok_.kind == Token::Punct && tok_.text[0] == c; }

  double number() {
    const Token t = expect_word();
    char* end = nullptr;
    const double v = std::strtod(t.text.c_str(), &end);
    if (end == t.text.c_str() || *end != '\0' || !std::isfinite(v))
      throw ParseError("expected a number, found \"" + t.text + "\"", t.line, t.column);
    return v;
  }

  // Skips a braced block; `property` statements inside produce warnings.
  void skip_block(std::vector<std::string>& warnings) {
    expect('{');
    int depth = 1;
    while (depth > 0) {
      if (tok_.kind == Token::End) fail("unterminated block");
      if (at('{')) ++depth;
      if (at('}')) --depth;
      if (tok_.kind == Token::Word && tok_.text == "property")
        warnings.push_back("ignored property at line " + std::to_string(tok_.line));
      shift();
    }
  }

  void skip_statement() {
    while (!at(';')) {
      if (tok_.kind == Token::End || at('}')) fail("expected ';'");
      shift();
    }
    shift();
  }

  void parse_variable(BifNetwork& net) {
    const Token name = expect_word();
    if (net.model.find(name.text) >= 0)
      throw ParseError("duplicate variable " + name.text, name.line, name.column);
    Node node;
    node.name = name.text;
    bool typed = false;
    expect('{');
    while (!at('}')) {
      const Token key = expect_word();
      if (key.text == "type") {
        const Token kind = expect_word();
        if (kind.text != "discrete")
          throw Error(ErrorKind::UnsupportedConstruct,
                      "variable " + node.name + " has type " + kind.text + " (line " +
                          std::to_string(kind.line) + ")");
        expect('[');
        const Token count = expect_word();
        expect(']');
        expect('{');
        while (!at('}')) {
          node.states.push_back(expect_word().text);
          if (at(',')) shift();
        }
        expect('}');
        expect(';');
        if (std::to_string(node.states.size()) != count.text)
          throw ParseError("variable " + node.name + " declares " + count.text + " states but lists " +
                               std::to_string(node.states.size()),
                           count.line, count.column);
        typed = true;
      } else if (key.text == "property") {
        net.warnings.push_back("ignored property of " + node.name);
        skip_statement();
      } else {
        throw ParseError("unexpected \"" + key.text + "\" in variable block", key.line, key.column);
      }
    }
    expect('}');
    if (!typed) throw ParseError("variable " + node.name + " has no type", name.line, name.column);
    net.model.nodes.push_back(std::move(node));
  }

  int variable_id(const CausalModel& m, const Token& t) const {
    const int id = m.find(t.text);
    if (id < 0) throw ParseError("unknown variable " + t.text, t.line, t.column);
    return id;
  }

  std::vector<double> number_list(int expected) {
    std::vector<double> v;
    while (!at(';')) {
      v.push_back(number());
      if (at(',')) shift();
    }
    if (expected >= 0 && static_cast<int>(v.size()) != expected)
      fail("expected " + std::to_string(expected) + " probabilities, got " + std::to_string(v.size()));
    shift();
    return v;
  }

  ProbabilityBlock parse_probability(BifNetwork& net) {
    const CausalModel& m = net.model;
    ProbabilityBlock b;
    b.line = tok_.line;
    b.column = tok_.column;
    expect('(');
    b.child = variable_id(m, expect_word());
    if (at('|')) {
      shift();
      while (!at(')')) {
        b.parents.push_back(variable_id(m, expect_word()));
        if (at(',')) shift();
      }
    }
    expect(')');
    const int card = m.cardinality(b.child);
    int rows = 1;
    for (int p : b.parents) rows *= m.cardinality(p);

    expect('{');
    while (!at('}')) {
      if (at('(')) {
        shift();
        int r = 0;
        std::size_t i = 0;
        while (!at(')')) {
          const Token s = expect_word();
          if (i >= b.parents.size()) throw ParseError("too many parent states", s.line, s.column);
          const auto& states = m.nodes[b.parents[i]].states;
          const auto it = std::find(states.begin(), states.end(), s.text);
          if (it == states.end())
            throw ParseError("unknown state " + s.text + " of " + m.nodes[b.parents[i]].name, s.line, s.column);
          r = r * static_cast<int>(states.size()) + static_cast<int>(it - states.begin());
          ++i;
          if (at(',')) shift();
        }
        if (i != b.parents.size()) fail("too few parent states");
        shift();
        b.rows[r] = number_list(card);
      } else {
        const Token key = expect_word();
        if (key.text == "table") {
          b.table = number_list(card * rows);
        } else if (key.text == "default") {
          b.default_row = number_list(card);
        } else if (key.text == "property") {
          net.warnings.push_back("ignored property at line " + std::to_string(key.line));
          skip_statement();
        } else {
          throw ParseError("unexpected \"" + key.text + "\" in probability block", key.line, key.column);
        }
      }
    }
    expect('}');
    return b;
  }

  static void assemble(CausalModel& m, const ProbabilityBlock& b) {
    Node& n = m.nodes[b.child];
    n.parents = b.parents;
    const int card = n.cardinality();
    int rows = 1;
    for (int p : b.parents) rows *= m.cardinality(p);
    n.cpt.assign(static_cast<std::size_t>(rows) * card, 0.0);
    for (int r = 0; r < rows; ++r) {
      const std::vector<double>* src = nullptr;
      std::vector<double> from_table;
      if (auto it = b.rows.find(r); it != b.rows.end()) {
        src = &it->second;
      } else if (b.table) {
        // Table order: child state slowest, parent assignments fastest.
        for (int x = 0; x < card; ++x) from_table.push_back((*b.table)[static_cast<std::size_t>(x) * rows + r]);
        src = &from_table;
      } else if (b.default_row) {
        src = &*b.default_row;
      } else {
        throw ParseError("missing row " + std::to_string(r) + " for " + n.name, b.line, b.column);
      }
      double sum = 0.0;
      for (double p : *src) {
        if (p < 0) throw Error(ErrorKind::Normalization, "negative probability in " + n.name);
        sum += p;
      }
      if (std::abs(sum - 1.0) > kNormTolerance) {
        std::ostringstream os;
        os << "row " << r << " of " << n.name << " sums to " << sum << " (line " << b.line << ")";
        throw Error(ErrorKind::Normalization, os.str());
      }
      for (int x = 0; x < card; ++x) n.cpt[static_cast<std::size_t>(r) * card + x] = (*src)[x] / sum;
    }
  }

  Lexer lex_;
  Token tok_;
};

}  // namespace

int BifNetwork::edge_count() const {
  int e = 0;
  for (const Node& n : model.nodes) e += static_cast<int>(n.parents.size());
  return e;
}

BifNetwork parse_bif(std::string_view text) { return Parser(text).parse(); }

BifNetwork load_bif(const std::string& path) { return parse_bif(read_text_file(path)); }

std::string write_bif(const CausalModel& model, const std::string& name) {
  std::ostringstream os;
  os.precision(17);
  os << "network " << name << " {\n}\n";
  for (const Node& n : model.nodes) {
    os << "variable " << n.name << " {\n  type discrete [ " << n.states.size() << " ] { ";
    for (std::size_t i = 0; i < n.states.size(); ++i) os << (i ? ", " : "") << n.states[i];
    os << " };\n}\n";
  }
  for (int i = 0; i < model.size(); ++i) {
    const Node& n = model.nodes[i];
    os << "probability ( " << n.name;
    for (std::size_t p = 0; p < n.parents.size(); ++p)
      os << (p ? ", " : " | ") << model.nodes[n.parents[p]].name;
    os << " ) {\n";
    const int card = n.cardinality();
    const int rows = model.row_count(i);
    for (int r = 0; r < rows; ++r) {
      if (n.parents.empty()) {
        os << "  table ";
      } else {
        std::vector<int> pv(n.parents.size());
        int rem = r;
        for (std::size_t k = n.parents.size(); k-- > 0;) {
          pv[k] = rem % model.cardinality(n.parents[k]);
          rem /= model.cardinality(n.parents[k]);
        }
        os << "  (";
        for (std::size_t k = 0; k < pv.size(); ++k)
          os << (k ? ", " : "") << model.nodes[n.parents[k]].states[pv[k]];
        os << ") ";
      }
      for (int x = 0; x < card; ++x) os << (x ? ", " : "") << n.cpt[static_cast<std::size_t>(r) * card + x];
      os << ";\n";
    }
    os << "}\n";
  }
  return os.str();
}

}  // namespace fcb
