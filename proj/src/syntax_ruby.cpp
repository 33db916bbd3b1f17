// Keyword-block backend for ruby: `def`/`class`/`module`/`do`/... are paired
// with `end` on a token stream that understands ruby's literal zoo well
// enough not to be fooled by it.
#include "syntax_common.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

namespace doccheck::syntax {
namespace {

enum class RbTok { ident, constant, string, punct, newline };

struct RbToken {
  RbTok kind;
  std::size_t begin;
  std::size_t end;
  bool space_before = false;
};

bool rb_ident_start(unsigned char ch) { return std::isalpha(ch) || ch == '_' || ch >= 0x80; }
bool rb_ident_char(unsigned char ch) { return std::isalnum(ch) || ch == '_' || ch >= 0x80; }

char closing_delimiter(char open) {
  switch (open) {
    case '(': return ')';
    case '[': return ']';
    case '{': return '}';
    case '<': return '>';
    default: return open;
  }
}

class RbLexer {
public:
  RbLexer(std::string_view text, SyntaxTree& tree) : text_(text), tree_(tree) {}

  std::vector<RbToken> run() {
    std::size_t i = 0;
    while (i < text_.size()) i = step(i);
    return std::move(tokens_);
  }

private:
  char at(std::size_t i) const { return i < text_.size() ? text_[i] : '\0'; }

  void diag(std::size_t offset, std::string_view msg) {
    tree_.diagnostics.push_back("line " + std::to_string(line_of(text_, offset)) + ": " +
                                std::string(msg));
  }

  void push(RbTok kind, std::size_t b, std::size_t e) {
    bool space = b > 0 && (text_[b - 1] == ' ' || text_[b - 1] == '\t');
    tokens_.push_back({kind, b, e, space});
  }

  bool value_expected() const {
    if (tokens_.empty()) return true;
    const RbToken& t = tokens_.back();
    if (t.kind == RbTok::newline) return true;
    if (t.kind == RbTok::string || t.kind == RbTok::constant) return false;
    std::string_view s = text_.substr(t.begin, t.end - t.begin);
    if (t.kind == RbTok::ident) {
      return s == "if" || s == "unless" || s == "while" || s == "until" || s == "and" ||
             s == "or" || s == "not" || s == "return" || s == "when" || s == "puts" ||
             s == "then" || s == "else" || s == "elsif" || s == "split" || s == "match" ||
             s == "scan" || s == "gsub" || s == "sub";
    }
    return s != ")" && s != "]" && s != "}";
  }

  // Skips `#{ ... }` starting after the opening brace.
  std::size_t skip_interpolation(std::size_t j) {
    int depth = 0;
    while (j < text_.size()) {
      char ch = text_[j];
      if (ch == '"' || ch == '\'') {
        j = skip_delimited(j + 1, ch, ch, ch == '"');
        continue;
      }
      if (ch == '{') ++depth;
      if (ch == '}') {
        if (depth == 0) return j + 1;
        --depth;
      }
      ++j;
    }
    return j;
  }

  // j is just past the opening delimiter.
  std::size_t skip_delimited(std::size_t j, char open, char close, bool interpolate) {
    std::size_t start = j;
    int depth = 0;
    while (j < text_.size()) {
      char ch = text_[j];
      if (ch == '\\') {
        j += 2;
        continue;
      }
      if (interpolate && ch == '#' && at(j + 1) == '{') {
        j = skip_interpolation(j + 2);
        continue;
      }
      if (ch == close && depth == 0) return j + 1;
      if (open != close) {
        if (ch == open) ++depth;
        else if (ch == close) --depth;
      }
      ++j;
    }
    diag(start, "unterminated literal");
    return text_.size();
  }

  std::size_t skip_pending_heredocs(std::size_t nl) {
    std::size_t j = nl + 1;
    for (const auto& [id, squiggly] : heredocs_) {
      bool found = false;
      while (j < text_.size()) {
        std::size_t eol = text_.find('\n', j);
        if (eol == std::string_view::npos) eol = text_.size();
        std::string_view line = text_.substr(j, eol - j);
        std::size_t a = 0;
        if (squiggly) {
          while (a < line.size() && (line[a] == ' ' || line[a] == '\t')) ++a;
        }
        std::size_t b = line.size();
        while (b > a && (line[b - 1] == '\r' || line[b - 1] == ' ')) --b;
        j = eol + 1;
        if (line.substr(a, b - a) == id) {
          found = true;
          break;
        }
      }
      if (!found) diag(nl, "unterminated heredoc");
    }
    heredocs_.clear();
    return std::min(j, text_.size());
  }

  std::size_t step(std::size_t i) {
    const char ch = text_[i];
    const char next = at(i + 1);
    const bool line_start = i == 0 || text_[i - 1] == '\n';
    if (line_start && text_.compare(i, 7, "__END__") == 0) return text_.size();
    if (line_start && text_.compare(i, 6, "=begin") == 0) {
      std::size_t e = text_.find("\n=end", i);
      if (e == std::string_view::npos) {
        diag(i, "unterminated =begin block");
        return text_.size();
      }
      e = text_.find('\n', e + 1);
      return e == std::string_view::npos ? text_.size() : e;
    }
    if (ch == '\n') {
      push(RbTok::newline, i, i + 1);
      if (!heredocs_.empty()) return skip_pending_heredocs(i);
      return i + 1;
    }
    if (ch == ' ' || ch == '\t' || ch == '\r') return i + 1;
    if (ch == '\\' && next == '\n') return i + 2;
    if (ch == '#') {
      std::size_t j = text_.find('\n', i);
      if (j == std::string_view::npos) j = text_.size();
      std::size_t e = j;
      while (e > i && (text_[e - 1] == '\r' || text_[e - 1] == ' ' || text_[e - 1] == '\t')) --e;
      tree_.comments.push_back({{i, e}, CommentStyle::line, '#'});
      return j;
    }
    if (ch == '"' || ch == '`') {
      std::size_t j = skip_delimited(i + 1, ch, ch, true);
      push(RbTok::string, i, j);
      return j;
    }
    if (ch == '\'') {
      std::size_t j = skip_delimited(i + 1, ch, ch, false);
      push(RbTok::string, i, j);
      return j;
    }
    if (ch == ':' && next == '"') {
      std::size_t j = skip_delimited(i + 2, '"', '"', true);
      push(RbTok::string, i, j);
      return j;
    }
    if (ch == ':' && rb_ident_start(static_cast<unsigned char>(next))) {
      std::size_t j = i + 2;
      while (j < text_.size() && rb_ident_char(static_cast<unsigned char>(text_[j]))) ++j;
      if (at(j) == '?' || at(j) == '!' || at(j) == '=') ++j;
      push(RbTok::string, i, j);
      return j;
    }
    if (ch == '<' && next == '<' && (at(i + 2) == '~' || at(i + 2) == '-' ||
                                     std::isupper(static_cast<unsigned char>(at(i + 2))) ||
                                     at(i + 2) == '\'' || at(i + 2) == '"')) {
      std::size_t j = i + 2;
      bool squiggly = at(j) == '~' || at(j) == '-';
      if (squiggly) ++j;
      char quote = (at(j) == '\'' || at(j) == '"') ? text_[j] : '\0';
      if (quote) ++j;
      std::size_t id_begin = j;
      while (j < text_.size() && rb_ident_char(static_cast<unsigned char>(text_[j]))) ++j;
      if (j > id_begin && (!quote || at(j) == quote)) {
        heredocs_.push_back({std::string(text_.substr(id_begin, j - id_begin)), squiggly});
        if (quote) ++j;
        push(RbTok::string, i, j);
        return j;
      }
    }
    if (ch == '%' && value_expected()) {
      std::size_t j = i + 1;
      char kind = 'Q';
      if (std::strchr("qQwWiIrsx", at(j)) != nullptr && at(j) != '\0') kind = text_[j++];
      char open = at(j);
      if (open != '\0' && !std::isalnum(static_cast<unsigned char>(open)) && open != ' ' &&
          open != '\n') {
        bool interp = kind == 'Q' || kind == 'W' || kind == 'I' || kind == 'r' || kind == 'x';
        std::size_t e = skip_delimited(j + 1, open, closing_delimiter(open), interp);
        push(RbTok::string, i, e);
        return e;
      }
    }
    if (ch == '/' && (value_expected() ||
                      (!tokens_.empty() && tokens_.back().kind == RbTok::ident && i > 0 &&
                       text_[i - 1] == ' ' && next != ' ' && next != '='))) {
      std::size_t j = skip_delimited(i + 1, '/', '/', true);
      while (j < text_.size() && std::isalpha(static_cast<unsigned char>(text_[j]))) ++j;
      push(RbTok::string, i, j);
      return j;
    }
    if (ch == '?' && value_expected() && next != '\0' && next != ' ' && next != '\n' &&
        !rb_ident_char(static_cast<unsigned char>(at(i + 2)))) {
      push(RbTok::string, i, i + 2);
      return i + 2;
    }
    if (rb_ident_start(static_cast<unsigned char>(ch)) || ch == '@' || ch == '$') {
      std::size_t j = i + 1;
      while (at(j) == '@') ++j;
      while (j < text_.size() && rb_ident_char(static_cast<unsigned char>(text_[j]))) ++j;
      if ((at(j) == '?' || at(j) == '!') && at(j + 1) != '=') ++j;
      RbTok kind = std::isupper(static_cast<unsigned char>(ch)) ? RbTok::constant : RbTok::ident;
      push(kind, i, j);
      return j;
    }
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::size_t j = i + 1;
      while (j < text_.size() && (rb_ident_char(static_cast<unsigned char>(text_[j])) ||
                                  (text_[j] == '.' && std::isdigit(static_cast<unsigned char>(at(j + 1)))))) {
        ++j;
      }
      push(RbTok::string, i, j);
      return j;
    }
    static constexpr std::string_view kOps[] = {"**=", "<=>", "===", "...", "||=", "&&=", "::",
                                                "==",  "!=",  ">=",  "<=",  "&&",  "||",  "<<",
                                                ">>",  "**",  "=~",  "!~",  "+=",  "-=",  "*=",
                                                "/=",  "..",  "->",  "=>"};
    for (std::string_view op : kOps) {
      if (text_.compare(i, op.size(), op) == 0) {
        push(RbTok::punct, i, i + op.size());
        return i + op.size();
      }
    }
    push(RbTok::punct, i, i + 1);
    return i + 1;
  }

  std::string_view text_;
  SyntaxTree& tree_;
  std::vector<RbToken> tokens_;
  std::vector<std::pair<std::string, bool>> heredocs_;
};

class RubyBackend final : public SyntaxBackend {
public:
  SyntaxTree parse(std::string_view text) const override {
    SyntaxTree tree;
    RbLexer lexer(text, tree);
    Parser parser{text, lexer.run(), tree};
    parser.run();
    return tree;
  }

private:
  enum class Block { def, type, other };

  struct Open {
    Block kind;
    std::size_t tok;
    std::size_t sig_end = 0;
    std::string name;
    std::size_t scope_names = 0;  // names pushed for this block
    bool loop_do_pending = false;
  };

  struct Parser {
    std::string_view text;
    std::vector<RbToken> toks;
    SyntaxTree& tree;
    std::vector<Open> stack;
    std::vector<std::string> scopes;
    std::vector<FunctionNode> done;

    std::string_view str(std::size_t i) const {
      return text.substr(toks[i].begin, toks[i].end - toks[i].begin);
    }
    bool is(std::size_t i, std::string_view s) const {
      return i < toks.size() && toks[i].kind != RbTok::string && str(i) == s;
    }
    bool word(std::size_t i) const {
      return i < toks.size() && (toks[i].kind == RbTok::ident || toks[i].kind == RbTok::constant);
    }

    // A keyword is only a keyword when it is not a method call, symbol or label.
    bool keyword(std::size_t i, std::string_view kw) const {
      if (!is(i, kw) || toks[i].kind != RbTok::ident) return false;
      if (i > 0 && (is(i - 1, ".") || is(i - 1, "&."))) return false;
      if (i + 1 < toks.size() && is(i + 1, ":") && toks[i + 1].begin == toks[i].end) return false;
      return true;
    }

    bool statement_start(std::size_t i) const {
      if (i == 0) return true;
      const RbToken& p = toks[i - 1];
      if (p.kind == RbTok::newline) return true;
      if (p.kind == RbTok::string || p.kind == RbTok::constant) return false;
      std::string_view s = str(i - 1);
      if (p.kind == RbTok::ident) {
        return s == "then" || s == "do" || s == "else" || s == "begin" || s == "and" ||
               s == "or" || s == "not";
      }
      return s != ")" && s != "]" && s != "}";
    }

    std::size_t line_end(std::size_t i) const {
      int depth = 0;
      std::size_t last = i;
      for (std::size_t k = i; k < toks.size(); ++k) {
        if (toks[k].kind == RbTok::newline && depth == 0) break;
        if (toks[k].kind == RbTok::punct) {
          std::string_view s = str(k);
          if (s == "(" || s == "[" || s == "{") ++depth;
          if (s == ")" || s == "]" || s == "}") --depth;
        }
        if (toks[k].kind != RbTok::newline) last = k;
      }
      return last;
    }

    std::size_t close_paren(std::size_t open) const {
      int depth = 0;
      for (std::size_t k = open; k < toks.size(); ++k) {
        if (is(k, "(")) ++depth;
        if (is(k, ")") && --depth == 0) return k;
      }
      return toks.size() - 1;
    }

    void run() {
      for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind == RbTok::newline) {
          for (Open& o : stack) o.loop_do_pending = false;
          continue;
        }
        if (toks[i].kind != RbTok::ident) continue;
        if (keyword(i, "def")) {
          i = on_def(i);
        } else if ((keyword(i, "class") || keyword(i, "module"))) {
          Open o{Block::type, i};
          std::size_t n = i + 1;
          if (is(n, "<<")) {
            stack.push_back(o);
            continue;
          }
          while (word(n)) {
            scopes.emplace_back(str(n));
            ++o.scope_names;
            if (is(n + 1, "::")) n += 2;
            else break;
          }
          stack.push_back(o);
        } else if (keyword(i, "do")) {
          if (!stack.empty() && stack.back().loop_do_pending) {
            stack.back().loop_do_pending = false;
          } else {
            stack.push_back({Block::other, i});
          }
        } else if (keyword(i, "begin") || keyword(i, "case")) {
          stack.push_back({Block::other, i});
        } else if ((keyword(i, "if") || keyword(i, "unless")) && statement_start(i)) {
          stack.push_back({Block::other, i});
        } else if ((keyword(i, "while") || keyword(i, "until") || keyword(i, "for")) &&
                   statement_start(i)) {
          Open o{Block::other, i};
          o.loop_do_pending = true;
          stack.push_back(o);
        } else if (keyword(i, "end")) {
          on_end(i);
        }
      }
      for (const Open& o : stack) {
        tree.diagnostics.push_back("line " + std::to_string(line_of(text, toks[o.tok].begin)) +
                                   ": block is never closed by 'end'");
      }
      std::stable_sort(done.begin(), done.end(), [](const FunctionNode& a, const FunctionNode& b) {
        return a.span.begin < b.span.begin;
      });
      tree.functions = std::move(done);
    }

    int def_depth() const {
      int d = 0;
      for (const Open& o : stack) d += o.kind == Block::def ? 1 : 0;
      return d;
    }

    std::size_t on_def(std::size_t i) {
      std::size_t n = i + 1;
      if ((is(n, "self") || word(n)) && is(n + 1, ".") && n + 2 < toks.size()) n += 2;
      if (n >= toks.size() || toks[n].kind == RbTok::newline) {
        tree.diagnostics.push_back("line " + std::to_string(line_of(text, toks[i].begin)) +
                                   ": malformed def");
        return i;
      }
      std::string name(str(n));
      std::size_t after = n + 1;
      if (toks[n].kind == RbTok::punct) {
        // operator methods: ==, [], []=, +@, <=>, ...
        while (after < toks.size() && toks[after].kind == RbTok::punct &&
               toks[after].begin == toks[after - 1].end && !is(after, "(")) {
          name += str(after);
          ++after;
        }
      } else if (is(after, "=") && toks[after].begin == toks[n].end &&
                 (is(after + 1, "(") || (after + 1 < toks.size() &&
                                         !toks[after + 1].space_before))) {
        name += "=";
        ++after;
      }
      std::size_t sig_end = after - 1;
      if (is(after, "(")) {
        sig_end = close_paren(after);
        after = sig_end + 1;
      } else {
        std::size_t le = line_end(n);
        if (le >= after && !is(after, "=")) sig_end = le;
      }
      if (is(after, "=")) {  // endless method
        std::size_t last = line_end(after);
        FunctionNode fn;
        fn.name = name;
        fn.scopes = scopes;
        fn.span = {toks[i].begin, toks[last].end};
        fn.signature = {toks[i].begin, toks[sig_end].end};
        fn.depth = def_depth();
        done.push_back(std::move(fn));
        return last;
      }
      Open o{Block::def, i, sig_end, name};
      stack.push_back(o);
      scopes.push_back(name);
      o.scope_names = 1;
      stack.back().scope_names = 1;
      return sig_end;
    }

    void on_end(std::size_t i) {
      if (stack.empty()) {
        tree.diagnostics.push_back("line " + std::to_string(line_of(text, toks[i].begin)) +
                                   ": unmatched 'end'");
        return;
      }
      Open o = stack.back();
      stack.pop_back();
      for (std::size_t k = 0; k < o.scope_names; ++k) scopes.pop_back();
      if (o.kind != Block::def) return;
      FunctionNode fn;
      fn.name = o.name;
      fn.scopes = scopes;
      fn.span = {toks[o.tok].begin, toks[i].end};
      fn.signature = {toks[o.tok].begin, toks[o.sig_end].end};
      fn.depth = def_depth();
      done.push_back(std::move(fn));
    }
  };
};

}  // namespace

std::unique_ptr<SyntaxBackend> make_ruby_backend() { return std::make_unique<RubyBackend>(); }

}  // namespace doccheck::syntax
