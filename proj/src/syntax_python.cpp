// Indentation-driven backend for python. The file is folded into logical
// lines (bracket and backslash continuations joined) and blocks are recovered
// from their indentation.
#include "syntax_common.hpp"

#include <cctype>
#include <cstring>

namespace doccheck::syntax {
namespace {

enum class PyTok { name, string, op, other };

struct PyToken {
  PyTok kind;
  std::size_t begin;
  std::size_t end;
};

struct LogicalLine {
  int indent = 0;
  std::vector<PyToken> tokens;
  std::size_t begin() const { return tokens.front().begin; }
  std::size_t end() const { return tokens.back().end; }
};

bool name_start(unsigned char ch) { return std::isalpha(ch) || ch == '_' || ch >= 0x80; }
bool name_char(unsigned char ch) { return std::isalnum(ch) || ch == '_' || ch >= 0x80; }

class PyLexer {
public:
  PyLexer(std::string_view text, SyntaxTree& tree) : text_(text), tree_(tree) {}

  std::vector<LogicalLine> run() {
    std::size_t i = 0;
    int depth = 0;
    bool line_open = false;
    LogicalLine current;
    int indent = 0;
    bool at_bol = true;

    auto flush = [&] {
      if (!current.tokens.empty()) lines_.push_back(std::move(current));
      current = LogicalLine{};
      line_open = false;
    };

    while (i < text_.size()) {
      if (at_bol) {
        indent = 0;
        std::size_t j = i;
        while (j < text_.size() && (text_[j] == ' ' || text_[j] == '\t' || text_[j] == '\f')) {
          indent = text_[j] == '\t' ? (indent / 8 + 1) * 8 : indent + 1;
          ++j;
        }
        i = j;
        at_bol = false;
        continue;
      }
      char ch = text_[i];
      if (ch == '\n') {
        if (depth == 0) flush();
        at_bol = depth == 0;
        ++i;
        continue;
      }
      if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\f') {
        ++i;
        continue;
      }
      if (ch == '\\' && i + 1 < text_.size() && (text_[i + 1] == '\n' || text_[i + 1] == '\r')) {
        i += 2;
        if (i < text_.size() && text_[i - 1] == '\r' && text_[i] == '\n') ++i;
        continue;
      }
      if (ch == '#') {
        std::size_t j = text_.find('\n', i);
        if (j == std::string_view::npos) j = text_.size();
        std::size_t e = j;
        while (e > i && (text_[e - 1] == '\r' || text_[e - 1] == ' ' || text_[e - 1] == '\t')) --e;
        tree_.comments.push_back({{i, e}, CommentStyle::line, '#'});
        i = j;
        continue;
      }
      if (!line_open) {
        current.indent = indent;
        line_open = true;
      }
      std::size_t string_end = try_string(i);
      if (string_end != i) {
        current.tokens.push_back({PyTok::string, i, string_end});
        i = string_end;
        continue;
      }
      if (name_start(static_cast<unsigned char>(ch))) {
        std::size_t j = i + 1;
        while (j < text_.size() && name_char(static_cast<unsigned char>(text_[j]))) ++j;
        current.tokens.push_back({PyTok::name, i, j});
        i = j;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(ch))) {
        std::size_t j = i + 1;
        while (j < text_.size() &&
               (name_char(static_cast<unsigned char>(text_[j])) || text_[j] == '.')) {
          ++j;
        }
        current.tokens.push_back({PyTok::other, i, j});
        i = j;
        continue;
      }
      std::size_t len = 1;
      if (text_.compare(i, 2, "->") == 0 || text_.compare(i, 2, ":=") == 0 ||
          text_.compare(i, 2, "**") == 0 || text_.compare(i, 2, "==") == 0) {
        len = 2;
      }
      if (ch == '(' || ch == '[' || ch == '{') ++depth;
      if ((ch == ')' || ch == ']' || ch == '}') && depth > 0) --depth;
      current.tokens.push_back({PyTok::op, i, i + len});
      i += len;
    }
    if (depth != 0) {
      tree_.diagnostics.push_back("line " + std::to_string(line_of(text_, text_.size())) +
                                  ": unclosed bracket at end of file");
    }
    flush();
    return std::move(lines_);
  }

private:
  // Returns the end of a string literal starting at i, or i if none.
  std::size_t try_string(std::size_t i) {
    std::size_t j = i;
    while (j < text_.size() && j < i + 2 && std::strchr("rRbBuUfF", text_[j]) != nullptr &&
           text_[j] != '\0') {
      ++j;
    }
    if (j >= text_.size() || (text_[j] != '"' && text_[j] != '\'')) return i;
    if (j > i && i > 0 && name_char(static_cast<unsigned char>(text_[i - 1]))) return i;
    const char quote = text_[j];
    const bool triple = text_.compare(j, 3, std::string(3, quote)) == 0;
    std::size_t k = j + (triple ? 3 : 1);
    while (k < text_.size()) {
      char ch = text_[k];
      if (ch == '\\') {
        k += 2;
        continue;
      }
      if (triple) {
        if (text_.compare(k, 3, std::string(3, quote)) == 0) return k + 3;
      } else {
        if (ch == quote) return k + 1;
        if (ch == '\n') break;
      }
      ++k;
    }
    tree_.diagnostics.push_back("line " + std::to_string(line_of(text_, i)) +
                                ": unterminated string literal");
    return triple ? text_.size() : k;
  }

  std::string_view text_;
  SyntaxTree& tree_;
  std::vector<LogicalLine> lines_;
};

class PythonBackend final : public SyntaxBackend {
public:
  SyntaxTree parse(std::string_view text) const override {
    SyntaxTree tree;
    PyLexer lexer(text, tree);
    std::vector<LogicalLine> lines = lexer.run();
    Walker walker{text, lines, tree};
    walker.block(0, lines.size(), -1, {}, 0);
    return tree;
  }

private:
  struct Walker {
    std::string_view text;
    const std::vector<LogicalLine>& lines;
    SyntaxTree& tree;

    std::string_view str(const PyToken& t) const { return text.substr(t.begin, t.end - t.begin); }

    // Index of the header-terminating ':' in a def/class line, or npos.
    std::size_t header_colon(const LogicalLine& line) const {
      int depth = 0;
      for (std::size_t k = 0; k < line.tokens.size(); ++k) {
        std::string_view s = str(line.tokens[k]);
        if (line.tokens[k].kind != PyTok::op) continue;
        if (s == "(" || s == "[" || s == "{") ++depth;
        else if (s == ")" || s == "]" || s == "}") --depth;
        else if (s == ":" && depth == 0) return k;
      }
      return std::string_view::npos;
    }

    // Lines [begin, end) all belong to a block whose header sits at
    // `parent_indent`.
    void block(std::size_t begin, std::size_t end, int parent_indent,
               const std::vector<std::string>& scopes, int depth) {
      std::size_t i = begin;
      while (i < end) {
        const LogicalLine& line = lines[i];
        std::size_t first = 0;
        bool is_def = false;
        bool is_class = false;
        if (str(line.tokens[0]) == "async" && line.tokens.size() > 1 &&
            str(line.tokens[1]) == "def") {
          first = 1;
        }
        is_def = str(line.tokens[first]) == "def";
        is_class = first == 0 && str(line.tokens[0]) == "class";
        if (!is_def && !is_class) {
          ++i;
          continue;
        }
        std::size_t colon = header_colon(line);
        std::size_t body_end = i + 1;
        while (body_end < end && lines[body_end].indent > line.indent) ++body_end;
        if (colon == std::string_view::npos || line.tokens.size() <= first + 1 ||
            lines[i].tokens[first + 1].kind != PyTok::name) {
          tree.diagnostics.push_back("line " + std::to_string(line_of(text, line.begin())) +
                                     ": malformed definition header");
          i = body_end;
          continue;
        }
        std::string name(str(line.tokens[first + 1]));
        const bool inline_body = colon + 1 < line.tokens.size();
        std::size_t span_end = inline_body || body_end == i + 1 ? line.end()
                                                                : lines[body_end - 1].end();
        if (!inline_body && body_end == i + 1) {
          tree.diagnostics.push_back("line " + std::to_string(line_of(text, line.begin())) +
                                     ": definition without a body");
        }

        std::vector<std::string> inner = scopes;
        inner.push_back(name);
        if (is_def) {
          FunctionNode fn;
          fn.name = name;
          fn.scopes = scopes;
          std::size_t start = line.begin();
          for (std::size_t d = i; d > begin; --d) {
            const LogicalLine& prev = lines[d - 1];
            if (prev.indent != line.indent || str(prev.tokens[0]) != "@") break;
            start = prev.begin();
          }
          fn.span = {start, span_end};
          fn.signature = {line.begin(), line.tokens[colon].end};
          fn.depth = depth;
          // The docstring is a string-only first statement.
          if (inline_body) {
            fn.doc_literal = string_statement(line.tokens, colon + 1);
          } else if (i + 1 < body_end) {
            fn.doc_literal = string_statement(lines[i + 1].tokens, 0);
          }
          tree.functions.push_back(std::move(fn));
        }
        if (!inline_body) block(i + 1, body_end, line.indent, inner, depth + (is_def ? 1 : 0));
        i = body_end;
      }
      (void)parent_indent;
    }

    std::optional<Span> string_statement(const std::vector<PyToken>& toks, std::size_t from) const {
      if (from >= toks.size() || toks[from].kind != PyTok::string) return std::nullopt;
      std::size_t k = from;
      while (k < toks.size() && toks[k].kind == PyTok::string) ++k;
      if (k < toks.size() && str(toks[k]) != ";") return std::nullopt;
      return Span{toks[from].begin, toks[k - 1].end};
    }
  };
};

}  // namespace

std::unique_ptr<SyntaxBackend> make_python_backend() { return std::make_unique<PythonBackend>(); }

}  // namespace doccheck::syntax
