// Backend for the brace-delimited languages: java, javascript, php, go, rust,
// csharp, c and cpp. A hand-rolled lexer feeds a bracket-matched token stream
// to a recursive declaration scanner.
#include "syntax_common.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace doccheck::syntax {
namespace {

enum class Tok { ident, number, string, punct };

struct Token {
  Tok kind;
  std::size_t begin;
  std::size_t end;
};

struct Dialect {
  LanguageId lang;
  bool hash_comments = false;
  bool preprocessor = false;
  bool backtick_raw = false;
  bool template_literals = false;
  bool regex_literals = false;
  bool single_quote_strings = false;
  bool rust = false;
  bool php_tags = false;
  bool nested_block_comments = false;
};

Dialect dialect_for(LanguageId lang) {
  Dialect d{lang};
  switch (lang) {
    case LanguageId::javascript:
      d.template_literals = true;
      d.regex_literals = true;
      d.single_quote_strings = true;
      break;
    case LanguageId::php:
      d.hash_comments = true;
      d.single_quote_strings = true;
      d.php_tags = true;
      break;
    case LanguageId::go:
      d.backtick_raw = true;
      break;
    case LanguageId::rust:
      d.rust = true;
      d.nested_block_comments = true;
      break;
    case LanguageId::c:
    case LanguageId::cpp:
    case LanguageId::csharp:
      d.preprocessor = true;
      break;
    default:
      break;
  }
  return d;
}

bool ident_start(unsigned char ch) {
  return std::isalpha(ch) || ch == '_' || ch == '$' || ch >= 0x80;
}
bool ident_char(unsigned char ch) {
  return std::isalnum(ch) || ch == '_' || ch == '$' || ch >= 0x80;
}

constexpr std::array<std::string_view, 36> kOperators = {
    "<<<", ">>>", "===", "!==", "...", "<=>", "**=", "?\?=", "::", "->", "=>", "==", "!=",
    "<=",  ">=",  "&&",  "||",  "++",  "--",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=",
    "^=",  "<<",  ">>",  "??",  "?.",  "**",  ".=",  "#[",  ":=", "!"};

class Lexer {
public:
  Lexer(std::string_view text, const Dialect& d, SyntaxTree& tree)
      : text_(text), d_(d), tree_(tree) {}

  std::vector<Token> run() {
    std::size_t i = 0;
    if (d_.php_tags) i = skip_html(0);
    while (i < text_.size()) {
      i = step(i);
    }
    return std::move(tokens_);
  }

private:
  char at(std::size_t i) const { return i < text_.size() ? text_[i] : '\0'; }

  void diag(std::size_t offset, std::string_view msg) {
    tree_.diagnostics.push_back("line " + std::to_string(line_of(text_, offset)) + ": " +
                                std::string(msg));
  }

  bool at_line_start(std::size_t i) const {
    while (i > 0) {
      char ch = text_[i - 1];
      if (ch == '\n') return true;
      if (ch != ' ' && ch != '\t' && ch != '\r') return false;
      --i;
    }
    return true;
  }

  std::size_t skip_html(std::size_t i) {
    std::size_t open = text_.find("<?", i);
    if (open == std::string_view::npos) return text_.size();
    std::size_t j = open + 2;
    if (text_.compare(j, 3, "php") == 0) j += 3;
    else if (at(j) == '=') j += 1;
    return j;
  }

  void push(Tok kind, std::size_t b, std::size_t e) { tokens_.push_back({kind, b, e}); }

  bool regex_allowed() const {
    if (tokens_.empty()) return true;
    const Token& t = tokens_.back();
    std::string_view s = text_.substr(t.begin, t.end - t.begin);
    if (t.kind == Tok::number || t.kind == Tok::string) return false;
    if (t.kind == Tok::ident) {
      return s == "return" || s == "typeof" || s == "case" || s == "in" || s == "of" ||
             s == "delete" || s == "void" || s == "throw" || s == "instanceof" || s == "yield" ||
             s == "await";
    }
    return s != ")" && s != "]" && s != "}";
  }

  std::size_t skip_quoted(std::size_t i, char quote, bool escapes) {
    std::size_t j = i + 1;
    while (j < text_.size()) {
      char ch = text_[j];
      if (escapes && ch == '\\') {
        j += 2;
        continue;
      }
      if (ch == quote) return j + 1;
      ++j;
    }
    diag(i, "unterminated string literal");
    return text_.size();
  }

  std::size_t skip_verbatim(std::size_t i) {  // C# @"..." with "" escapes
    std::size_t j = i + 1;
    while (j < text_.size()) {
      if (text_[j] == '"') {
        if (at(j + 1) == '"') {
          j += 2;
          continue;
        }
        return j + 1;
      }
      ++j;
    }
    diag(i, "unterminated verbatim string");
    return text_.size();
  }

  std::size_t skip_template(std::size_t i) {  // at the opening backtick
    std::size_t j = i + 1;
    while (j < text_.size()) {
      char ch = text_[j];
      if (ch == '\\') {
        j += 2;
        continue;
      }
      if (ch == '`') return j + 1;
      if (ch == '$' && at(j + 1) == '{') {
        j = skip_embedded_expression(j + 2);
        continue;
      }
      ++j;
    }
    diag(i, "unterminated template literal");
    return text_.size();
  }

  std::size_t skip_embedded_expression(std::size_t j) {
    int depth = 0;
    while (j < text_.size()) {
      char ch = text_[j];
      if (ch == '"' || ch == '\'') {
        j = skip_quoted(j, ch, true);
      } else if (ch == '`') {
        j = skip_template(j);
      } else if (ch == '{') {
        ++depth;
        ++j;
      } else if (ch == '}') {
        if (depth == 0) return j + 1;
        --depth;
        ++j;
      } else {
        ++j;
      }
    }
    return j;
  }

  std::size_t skip_regex(std::size_t i) {
    std::size_t j = i + 1;
    bool in_class = false;
    while (j < text_.size()) {
      char ch = text_[j];
      if (ch == '\n') break;
      if (ch == '\\') {
        j += 2;
        continue;
      }
      if (ch == '[') in_class = true;
      else if (ch == ']') in_class = false;
      else if (ch == '/' && !in_class) {
        ++j;
        while (j < text_.size() && ident_char(static_cast<unsigned char>(text_[j]))) ++j;
        return j;
      }
      ++j;
    }
    diag(i, "unterminated regular expression");
    return j;
  }

  std::size_t skip_block_comment(std::size_t i) {
    std::size_t j = i + 2;
    int depth = 1;
    while (j < text_.size()) {
      if (d_.nested_block_comments && text_[j] == '/' && at(j + 1) == '*') {
        ++depth;
        j += 2;
        continue;
      }
      if (text_[j] == '*' && at(j + 1) == '/') {
        if (--depth == 0) return j + 2;
        j += 2;
        continue;
      }
      ++j;
    }
    diag(i, "unterminated block comment");
    return text_.size();
  }

  std::size_t skip_raw_cpp(std::size_t quote) {  // R"delim( ... )delim"
    std::size_t paren = text_.find('(', quote + 1);
    if (paren == std::string_view::npos) return skip_quoted(quote, '"', true);
    std::string close = ")" + std::string(text_.substr(quote + 1, paren - quote - 1)) + "\"";
    std::size_t end = text_.find(close, paren + 1);
    if (end == std::string_view::npos) {
      diag(quote, "unterminated raw string");
      return text_.size();
    }
    return end + close.size();
  }

  std::size_t skip_raw_rust(std::size_t i) {  // at first '#' or '"' after r
    std::size_t hashes = 0;
    std::size_t j = i;
    while (at(j) == '#') {
      ++hashes;
      ++j;
    }
    if (at(j) != '"') return i;
    std::string close = "\"" + std::string(hashes, '#');
    std::size_t end = text_.find(close, j + 1);
    if (end == std::string_view::npos) {
      diag(i, "unterminated raw string");
      return text_.size();
    }
    return end + close.size();
  }

  std::size_t skip_heredoc(std::size_t i) {  // php <<<ID / <<<'ID' / <<<"ID"
    std::size_t j = i + 3;
    while (at(j) == ' ') ++j;
    bool quoted = at(j) == '\'' || at(j) == '"';
    if (quoted) ++j;
    std::size_t id_begin = j;
    while (j < text_.size() && ident_char(static_cast<unsigned char>(text_[j]))) ++j;
    std::string id(text_.substr(id_begin, j - id_begin));
    if (id.empty()) return i + 3;
    std::size_t line = text_.find('\n', j);
    while (line != std::string_view::npos) {
      std::size_t k = line + 1;
      while (at(k) == ' ' || at(k) == '\t') ++k;
      if (text_.compare(k, id.size(), id) == 0 &&
          !ident_char(static_cast<unsigned char>(at(k + id.size())))) {
        return k + id.size();
      }
      line = text_.find('\n', k);
    }
    diag(i, "unterminated heredoc");
    return text_.size();
  }

  std::size_t step(std::size_t i) {
    const char ch = text_[i];
    const char next = at(i + 1);
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n' || ch == '\f' || ch == '\v') {
      return i + 1;
    }
    if (d_.php_tags && ch == '?' && next == '>') {
      return skip_html(i + 2);
    }
    if (d_.preprocessor && ch == '#' && at_line_start(i)) {
      std::size_t j = i;
      while (j < text_.size() && text_[j] != '\n') {
        if (text_[j] == '\\' && at(j + 1) == '\n') ++j;
        else if (text_[j] == '/' && at(j + 1) == '*') {
          j = skip_block_comment(j);
          continue;
        }
        ++j;
      }
      return j;
    }
    if (ch == '/' && next == '/') {
      std::size_t j = text_.find('\n', i);
      if (j == std::string_view::npos) j = text_.size();
      CommentStyle style = CommentStyle::line;
      if ((at(i + 2) == '/' && at(i + 3) != '/') || at(i + 2) == '!') style = CommentStyle::doc_line;
      std::size_t e = j;
      while (e > i && (text_[e - 1] == '\r' || text_[e - 1] == ' ' || text_[e - 1] == '\t')) --e;
      tree_.comments.push_back({{i, e}, style, '/'});
      return j;
    }
    if (d_.hash_comments && ch == '#' && next != '[') {
      std::size_t j = text_.find('\n', i);
      if (j == std::string_view::npos) j = text_.size();
      std::size_t e = j;
      while (e > i && (text_[e - 1] == '\r' || text_[e - 1] == ' ' || text_[e - 1] == '\t')) --e;
      tree_.comments.push_back({{i, e}, CommentStyle::line, '#'});
      return j;
    }
    if (ch == '/' && next == '*') {
      std::size_t j = skip_block_comment(i);
      CommentStyle style = CommentStyle::block;
      if (at(i + 2) == '*' && at(i + 3) != '/' && at(i + 3) != '*') style = CommentStyle::doc_block;
      tree_.comments.push_back({{i, j}, style, '/'});
      return j;
    }
    if (ch == '"') {
      std::size_t j = skip_quoted(i, '"', true);
      push(Tok::string, i, j);
      return j;
    }
    if (ch == '\'') {
      if (d_.single_quote_strings) {
        std::size_t j = skip_quoted(i, '\'', true);
        push(Tok::string, i, j);
        return j;
      }
      return lex_char(i);
    }
    if (ch == '`') {
      std::size_t j = d_.template_literals ? skip_template(i)
                      : d_.backtick_raw    ? skip_quoted(i, '`', false)
                                           : i + 1;
      push(j == i + 1 ? Tok::punct : Tok::string, i, j);
      return j;
    }
    if (d_.lang == LanguageId::csharp && (ch == '@' || ch == '$')) {
      std::size_t j = i;
      bool verbatim = false;
      while (at(j) == '@' || at(j) == '$') {
        verbatim = verbatim || at(j) == '@';
        ++j;
      }
      if (at(j) == '"') {
        std::size_t e = verbatim ? skip_verbatim(j) : skip_quoted(j, '"', true);
        push(Tok::string, i, e);
        return e;
      }
    }
    if (d_.lang == LanguageId::php && ch == '<' && text_.compare(i, 3, "<<<") == 0) {
      std::size_t j = skip_heredoc(i);
      if (j > i + 3) {
        push(Tok::string, i, j);
        return j;
      }
    }
    if (d_.regex_literals && ch == '/' && regex_allowed()) {
      std::size_t j = skip_regex(i);
      push(Tok::string, i, j);
      return j;
    }
    if (ident_start(static_cast<unsigned char>(ch))) {
      std::size_t j = i + 1;
      while (j < text_.size() && ident_char(static_cast<unsigned char>(text_[j]))) ++j;
      std::string_view word = text_.substr(i, j - i);
      if (d_.lang == LanguageId::cpp && at(j) == '"' &&
          (word == "R" || word == "u8R" || word == "LR" || word == "uR" || word == "UR")) {
        std::size_t e = skip_raw_cpp(j);
        push(Tok::string, i, e);
        return e;
      }
      if (d_.rust && (word == "r" || word == "br") && (at(j) == '#' || at(j) == '"')) {
        std::size_t e = skip_raw_rust(j);
        if (e > j) {
          push(Tok::string, i, e);
          return e;
        }
      }
      if (d_.rust && word == "b" && (at(j) == '"' || at(j) == '\'')) {
        std::size_t e = at(j) == '"' ? skip_quoted(j, '"', true) : lex_char_end(j);
        push(Tok::string, i, e);
        return e;
      }
      if (!d_.single_quote_strings && at(j) == '\'' &&
          (word == "L" || word == "u" || word == "U" || word == "u8")) {
        std::size_t e = lex_char_end(j);
        push(Tok::string, i, e);
        return e;
      }
      if (at(j) == '"' && (word == "L" || word == "u" || word == "U" || word == "u8") &&
          d_.preprocessor) {
        std::size_t e = skip_quoted(j, '"', true);
        push(Tok::string, i, e);
        return e;
      }
      push(Tok::ident, i, j);
      return j;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) ||
        (ch == '.' && std::isdigit(static_cast<unsigned char>(next)))) {
      std::size_t j = i + 1;
      while (j < text_.size()) {
        char c = text_[j];
        if (ident_char(static_cast<unsigned char>(c)) && c != '$') {
          ++j;
        } else if (c == '.' && std::isdigit(static_cast<unsigned char>(at(j + 1)))) {
          ++j;
        } else if ((c == '+' || c == '-') && (text_[j - 1] == 'e' || text_[j - 1] == 'E') &&
                   !(text_[i] == '0' && (at(i + 1) == 'x' || at(i + 1) == 'X'))) {
          ++j;
        } else {
          break;
        }
      }
      push(Tok::number, i, j);
      return j;
    }
    for (std::string_view op : kOperators) {
      if (text_.compare(i, op.size(), op) == 0 && op.size() > 1) {
        push(Tok::punct, i, i + op.size());
        return i + op.size();
      }
    }
    push(Tok::punct, i, i + 1);
    return i + 1;
  }

  std::size_t lex_char_end(std::size_t i) {  // i at opening quote
    std::size_t j = i + 1;
    if (at(j) == '\\') j += 2;
    while (j < text_.size() && text_[j] != '\'' && text_[j] != '\n' && j < i + 16) ++j;
    if (at(j) == '\'') return j + 1;
    return i + 1;
  }

  std::size_t lex_char(std::size_t i) {
    if (d_.rust) {
      // 'x' and '\n' are chars; 'a followed by no closing quote is a lifetime.
      std::size_t j = i + 1;
      if (at(j) == '\\') {
        std::size_t e = lex_char_end(i);
        push(Tok::string, i, e);
        return e;
      }
      std::size_t k = j;
      if (k < text_.size()) {
        unsigned char lead = static_cast<unsigned char>(text_[k]);
        std::size_t len = lead < 0x80 ? 1 : lead < 0xE0 ? 2 : lead < 0xF0 ? 3 : 4;
        k += len;
      }
      if (at(k) == '\'') {
        push(Tok::string, i, k + 1);
        return k + 1;
      }
      push(Tok::punct, i, i + 1);
      return i + 1;
    }
    std::size_t e = lex_char_end(i);
    push(e == i + 1 ? Tok::punct : Tok::string, i, e);
    return e;
  }

  std::string_view text_;
  const Dialect& d_;
  SyntaxTree& tree_;
  std::vector<Token> tokens_;
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

enum class Ctx { decl, type, body };

struct Scope {
  Ctx ctx;
  std::vector<std::string> names;
  int depth;
};

enum class Kind { function, type, transparent, block, init_brace };

struct Classified {
  Kind kind = Kind::block;
  std::string name;
  std::vector<std::string> qualifiers;
  std::size_t start = 0;  // token index where the definition begins
};

bool is_one_of(std::string_view s, std::initializer_list<std::string_view> words) {
  return std::find(words.begin(), words.end(), s) != words.end();
}

class Scanner {
public:
  Scanner(std::string_view text, const Dialect& d, std::vector<Token> tokens, SyntaxTree& tree)
      : text_(text), d_(d), toks_(std::move(tokens)), tree_(tree) {
    match_brackets();
  }

  void run() {
    Scope file{Ctx::decl, {}, 0};
    scan(0, toks_.size(), file);
    std::stable_sort(tree_.functions.begin(), tree_.functions.end(),
                     [](const FunctionNode& a, const FunctionNode& b) {
                       return a.span.begin < b.span.begin;
                     });
  }

private:
  std::string_view str(std::size_t i) const {
    return text_.substr(toks_[i].begin, toks_[i].end - toks_[i].begin);
  }
  bool is(std::size_t i, std::string_view s) const {
    return i < toks_.size() && toks_[i].kind != Tok::string && str(i) == s;
  }
  bool ident(std::size_t i) const { return i < toks_.size() && toks_[i].kind == Tok::ident; }

  void diag(std::size_t tok, std::string_view msg) {
    tree_.diagnostics.push_back("line " + std::to_string(line_of(text_, toks_[tok].begin)) +
                                ": " + std::string(msg));
  }

  void match_brackets() {
    match_.assign(toks_.size(), kNone);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < toks_.size(); ++i) {
      if (toks_[i].kind != Tok::punct) continue;
      std::string_view s = str(i);
      if (s == "(" || s == "[" || s == "{" || s == "#[") {
        stack.push_back(i);
      } else if (s == ")" || s == "]" || s == "}") {
        char open = s == ")" ? '(' : s == "]" ? '[' : '{';
        auto opener = [&](std::size_t k) {
          std::string_view o = str(k);
          return o.back() == open;
        };
        auto it = std::find_if(stack.rbegin(), stack.rend(), opener);
        if (it == stack.rend()) {
          diag(i, "unmatched '" + std::string(s) + "'");
          continue;
        }
        std::size_t depth = static_cast<std::size_t>(it - stack.rbegin());
        for (std::size_t k = 0; k < depth; ++k) {
          diag(stack.back(), "unclosed '" + std::string(str(stack.back())) + "'");
          stack.pop_back();
        }
        match_[stack.back()] = i;
        match_[i] = stack.back();
        stack.pop_back();
      }
    }
    for (std::size_t open : stack) diag(open, "unclosed '" + std::string(str(open)) + "'");
  }

  bool opens(std::size_t i) const {
    if (toks_[i].kind != Tok::punct) return false;
    std::string_view s = str(i);
    return s == "(" || s == "[" || s == "{" || s == "#[";
  }

  // Top-level token indices of [begin, end): bracket groups collapse to
  // their opening token.
  std::vector<std::size_t> top_level(std::size_t begin, std::size_t end) const {
    std::vector<std::size_t> out;
    for (std::size_t j = begin; j < end;) {
      out.push_back(j);
      if (opens(j) && match_[j] != kNone && match_[j] < end) j = match_[j] + 1;
      else ++j;
    }
    return out;
  }

  bool nested_functions_in_args() const {
    return d_.lang == LanguageId::javascript || d_.lang == LanguageId::php || d_.rust;
  }

  void scan(std::size_t begin, std::size_t end, const Scope& scope) {
    std::size_t stmt = begin;
    for (std::size_t i = begin; i < end; ++i) {
      const Token& t = toks_[i];
      if (t.kind != Tok::punct) continue;
      std::string_view s = str(i);
      if (s == "(" || s == "[" || s == "#[") {
        std::size_t close = match_[i] == kNone ? end : std::min(match_[i], end);
        if (nested_functions_in_args() && s == "(") {
          scan(i + 1, close, Scope{Ctx::body, scope.names, scope.depth});
        }
        i = close;
        continue;
      }
      if (s == ";") {
        stmt = i + 1;
        continue;
      }
      if (s == ":" && d_.lang == LanguageId::cpp && i == stmt + 1 &&
          is_one_of(str(stmt), {"public", "private", "protected"})) {
        stmt = i + 1;
        continue;
      }
      if (s == "}") {
        stmt = i + 1;
        continue;
      }
      if (s == "{") {
        std::size_t close = match_[i] == kNone ? end : std::min(match_[i], end);
        Classified c = classify(stmt, i, scope);
        if (c.kind == Kind::init_brace) {
          i = close;
          continue;
        }
        enter(c, i, close, scope);
        i = close;
        stmt = close + 1;
      }
    }
  }

  void enter(const Classified& c, std::size_t open, std::size_t close, const Scope& scope) {
    switch (c.kind) {
      case Kind::function: {
        FunctionNode fn;
        fn.name = c.name;
        fn.scopes = scope.names;
        fn.scopes.insert(fn.scopes.end(), c.qualifiers.begin(), c.qualifiers.end());
        std::size_t span_end = close < toks_.size() ? toks_[close].end : text_.size();
        fn.span = {toks_[c.start].begin, span_end};
        fn.signature = {toks_[c.start].begin, open > c.start ? toks_[open - 1].end : toks_[open].begin};
        fn.depth = scope.depth;
        std::vector<std::string> inner = fn.scopes;
        inner.push_back(fn.name);
        tree_.functions.push_back(std::move(fn));
        scan(open + 1, close, Scope{Ctx::body, std::move(inner), scope.depth + 1});
        break;
      }
      case Kind::type: {
        std::vector<std::string> inner = scope.names;
        if (!c.name.empty()) inner.push_back(c.name);
        scan(open + 1, close, Scope{Ctx::type, std::move(inner), scope.depth});
        break;
      }
      case Kind::transparent:
        scan(open + 1, close, Scope{Ctx::decl, scope.names, scope.depth});
        break;
      case Kind::block:
      case Kind::init_brace:
        scan(open + 1, close, Scope{Ctx::body, scope.names, scope.depth});
        break;
    }
  }

  Classified classify(std::size_t hs, std::size_t brace, const Scope& scope) {
    if (hs >= brace) return {};
    switch (d_.lang) {
      case LanguageId::javascript: return classify_js(hs, brace, scope);
      case LanguageId::php: return classify_php(hs, brace);
      case LanguageId::go: return classify_go(hs, brace);
      case LanguageId::rust: return classify_rust(hs, brace);
      default: return classify_clike(hs, brace, scope);
    }
  }

  // Walks back from `kw` over modifier words and attribute groups.
  std::size_t walk_back(std::size_t kw, std::size_t hs,
                        std::initializer_list<std::string_view> modifiers) const {
    std::size_t start = kw;
    while (start > hs) {
      std::size_t p = start - 1;
      if (ident(p) && is_one_of(str(p), modifiers)) {
        start = p;
        continue;
      }
      if (toks_[p].kind == Tok::string && p > hs && is(p - 1, "extern")) {
        start = p - 1;
        continue;
      }
      if (is(p, ")") && match_[p] != kNone && match_[p] > hs && is(match_[p] - 1, "pub")) {
        start = match_[p] - 1;
        continue;
      }
      if (is(p, "]") && match_[p] != kNone && match_[p] >= hs) {
        std::size_t o = match_[p];
        if (is(o, "#[")) {
          start = o;
          continue;
        }
        if (o > hs && is(o - 1, "#")) {
          start = o - 1;
          continue;
        }
      }
      break;
    }
    return start;
  }

  // A `(` group that ends exactly at the token before the brace.
  bool params_end_at(std::size_t open, std::size_t brace) const {
    return is(open, "(") && match_[open] != kNone && match_[open] + 1 == brace;
  }

  Classified classify_js(std::size_t hs, std::size_t brace, const Scope& scope) {
    std::vector<std::size_t> top = top_level(hs, brace);
    const std::size_t last = top.back();

    for (std::size_t k = 0; k < top.size(); ++k) {
      std::size_t j = top[k];
      if (is(j, "class") && !is(last, "(")) {
        Classified c{Kind::type};
        if (ident(j + 1) && !is(j + 1, "extends")) c.name = std::string(str(j + 1));
        return c;
      }
    }
    // function declarations and named function expressions
    for (std::size_t k = top.size(); k-- > 0;) {
      std::size_t j = top[k];
      if (!is(j, "function")) continue;
      std::size_t n = j + 1;
      if (is(n, "*")) ++n;
      if (ident(n) && params_end_at(n + 1, brace)) {
        Classified c{Kind::function, std::string(str(n))};
        c.start = walk_back(j, hs, {"async", "export", "default"});
        return c;
      }
      if (params_end_at(n, brace)) return binding(top, k, hs);
      break;
    }
    if (is(last, "=>")) {
      for (std::size_t k = 0; k < top.size(); ++k) {
        if (is(top[k], "=")) return binding(top, k + 1, hs);
      }
      return {};
    }
    if (scope.ctx == Ctx::type && params_end_at(last, brace)) {
      std::size_t open = last;
      if (open > hs && (ident(open - 1) || toks_[open - 1].kind == Tok::string)) {
        std::size_t n = open - 1;
        Classified c{Kind::function, std::string(str(n))};
        if (toks_[n].kind == Tok::string) c.name = c.name.substr(1, c.name.size() - 2);
        std::size_t start = n;
        if (start > hs && is(start - 1, "#")) {
          --start;
          c.name = "#" + c.name;
        }
        while (start > hs && (is(start - 1, "*") ||
                              (ident(start - 1) && is_one_of(str(start - 1),
                                                             {"static", "async", "get", "set"})))) {
          --start;
        }
        c.start = start;
        return c;
      }
    }
    return {};
  }

  // `name = function ...` / `a.b.name = (...) =>`: the binding names the function.
  Classified binding(const std::vector<std::size_t>& top, std::size_t after_eq, std::size_t hs) {
    if (after_eq < 2 || !is(top[after_eq - 1], "=")) return {};
    std::size_t eq = top[after_eq - 1];
    if (eq == hs || !ident(eq - 1)) return {};
    std::size_t n = eq - 1;
    Classified c{Kind::function, std::string(str(n))};
    std::size_t start = n;
    while (start >= hs + 2 && is(start - 1, ".") && ident(start - 2)) start -= 2;
    c.start = walk_back(start, hs, {"const", "let", "var", "export", "static"});
    return c;
  }

  Classified classify_php(std::size_t hs, std::size_t brace) {
    std::vector<std::size_t> top = top_level(hs, brace);
    for (std::size_t k = 0; k < top.size(); ++k) {
      std::size_t j = top[k];
      if (is(j, "function")) {
        std::size_t n = j + 1;
        if (is(n, "&")) ++n;
        if (ident(n) && is(n + 1, "(")) {
          Classified c{Kind::function, std::string(str(n))};
          c.start = walk_back(j, hs, {"public", "private", "protected", "static", "abstract",
                                      "final"});
          return c;
        }
        return {};
      }
    }
    for (std::size_t k = 0; k < top.size(); ++k) {
      std::size_t j = top[k];
      if (is_one_of(str(j), {"class", "interface", "trait", "enum"}) && ident(j)) {
        if (k > 0 && is(top[k - 1], "::")) continue;
        Classified c{Kind::type};
        if (ident(j + 1) && !is_one_of(str(j + 1), {"extends", "implements"})) {
          c.name = std::string(str(j + 1));
        }
        return c;
      }
      if (is(j, "namespace")) return {Kind::transparent};
    }
    return {};
  }

  Classified classify_go(std::size_t hs, std::size_t brace) {
    std::vector<std::size_t> top = top_level(hs, brace);
    for (std::size_t k = 0; k < top.size(); ++k) {
      std::size_t j = top[k];
      if (!is(j, "func")) continue;
      std::size_t n = j + 1;
      std::vector<std::string> qualifiers;
      if (is(n, "(") && match_[n] != kNone) {
        std::size_t close = match_[n];
        std::string receiver;
        for (std::size_t r : top_level(n + 1, close)) {
          if (ident(r)) receiver = std::string(str(r));
        }
        n = close + 1;
        if (!ident(n)) return {};  // function literal
        if (!receiver.empty()) qualifiers.push_back(receiver);
      }
      if (ident(n) && (is(n + 1, "(") || is(n + 1, "["))) {
        Classified c{Kind::function, std::string(str(n))};
        c.qualifiers = std::move(qualifiers);
        c.start = j;
        return c;
      }
      return {};
    }
    return {};
  }

  std::string rust_type_name(std::size_t j, std::size_t end) const {
    int angle = 0;
    std::string name;
    for (; j < end; ++j) {
      std::string_view s = str(j);
      if (s == "<") ++angle;
      else if (s == ">") --angle;
      else if (s == ">>") angle -= 2;
      else if (angle == 0 && s == "where") break;
      else if (angle == 0 && ident(j) && !is_one_of(s, {"dyn", "mut", "const"})) {
        name = std::string(s);
        if (!is(j + 1, "::")) break;
      }
    }
    return name;
  }

  Classified classify_rust(std::size_t hs, std::size_t brace) {
    std::vector<std::size_t> top = top_level(hs, brace);
    for (std::size_t k = 0; k < top.size(); ++k) {
      std::size_t j = top[k];
      if (is(j, "fn") && ident(j + 1)) {
        Classified c{Kind::function, std::string(str(j + 1))};
        c.start = walk_back(j, hs, {"pub", "async", "unsafe", "const", "extern", "default"});
        return c;
      }
    }
    for (std::size_t k = 0; k < top.size(); ++k) {
      std::size_t j = top[k];
      if (is(j, "impl")) {
        std::size_t from = j + 1;
        for (std::size_t m = k + 1; m < top.size(); ++m) {
          if (is(top[m], "for")) from = top[m] + 1;
        }
        return {Kind::type, rust_type_name(from, brace)};
      }
      if (is_one_of(str(j), {"trait", "mod", "struct", "enum", "union"}) && ident(j) &&
          ident(j + 1)) {
        return {Kind::type, std::string(str(j + 1))};
      }
    }
    return {};
  }

  // Index of the `<` matching the `>` (or `>>`) at `close`, scanning back to hs.
  std::size_t angle_open(std::size_t close, std::size_t hs) const {
    int depth = 0;
    for (std::size_t j = close + 1; j-- > hs;) {
      if (is(j, ">")) ++depth;
      else if (is(j, ">>")) depth += 2;
      else if (is(j, "<")) {
        if (--depth == 0) return j;
      } else if (!ident(j) && !is(j, ",") && !is(j, ".") && !is(j, "::") && !is(j, "*") &&
                 !is(j, "&") && !is(j, "?")) {
        return kNone;
      }
    }
    return kNone;
  }

  // C# generic constraints: `where T : class, new()`.
  bool constraint(std::size_t j, std::size_t hs) const {
    return d_.lang == LanguageId::csharp && j > hs && (is(j - 1, ":") || is(j - 1, ","));
  }

  bool clike_keyword(std::string_view s) const {
    return is_one_of(s, {"if", "while", "for", "switch", "catch", "return", "sizeof", "alignof",
                         "decltype", "typeof", "new", "delete", "throw", "else", "do", "try",
                         "synchronized", "using", "lock", "fixed", "foreach", "checked",
                         "unchecked", "when", "case", "default", "noexcept", "static_assert",
                         "__attribute__", "__declspec", "alignas", "defined", "nameof", "await",
                         "throws", "requires"});
  }

  std::vector<std::string_view> type_keywords() const {
    switch (d_.lang) {
      case LanguageId::java: return {"class", "interface", "enum", "record"};
      case LanguageId::csharp: return {"class", "interface", "struct", "enum", "record"};
      case LanguageId::cpp: return {"class", "struct", "union", "enum"};
      default: return {"struct", "union", "enum"};
    }
  }

  Classified classify_clike(std::size_t hs, std::size_t brace, const Scope& scope) {
    std::vector<std::size_t> top = top_level(hs, brace);

    // C++ constructor initializer lists may contain brace-initialized members.
    if (d_.lang == LanguageId::cpp && (ident(brace - 1) || is(brace - 1, ">"))) {
      for (std::size_t k = 0; k + 1 < top.size(); ++k) {
        if (is(top[k], "(") && is(top[k + 1], ":")) return {Kind::init_brace};
      }
    }

    if ((d_.lang == LanguageId::java || d_.lang == LanguageId::csharp) &&
        std::any_of(top.begin(), top.end(),
                    [&](std::size_t j) { return is(j, "new") && !constraint(j, hs); })) {
      return {Kind::type};
    }

    bool has_assign = false;
    for (std::size_t k = 0; k < top.size(); ++k) {
      std::size_t j = top[k];
      if ((is(j, "=") || is(j, "=>")) && !(j > hs && is(j - 1, "operator"))) has_assign = true;
    }
    if (has_assign) return {};

    if (d_.lang == LanguageId::cpp || d_.lang == LanguageId::csharp) {
      if (is(top.front(), "namespace")) return {Kind::transparent};
      if (d_.lang == LanguageId::cpp && is(top.front(), "extern") && top.size() == 2 &&
          toks_[top[1]].kind == Tok::string) {
        return {Kind::transparent};
      }
    }
    // First identifier immediately followed by a parameter list.
    std::size_t name_tok = kNone;
    std::size_t params = kNone;
    std::string name;
    for (std::size_t k = 0; k < top.size(); ++k) {
      std::size_t j = top[k];
      if (!is(j, "(")) continue;
      if (j == hs) continue;
      std::size_t p = j - 1;
      // generic method names: Name<T>(...)
      if ((d_.lang == LanguageId::csharp || d_.lang == LanguageId::cpp) &&
          (is(p, ">") || is(p, ">>"))) {
        std::size_t lt = angle_open(p, hs);
        if (lt != kNone && lt > hs) p = lt - 1;
      }
      if (ident(p) && !clike_keyword(str(p)) && !(p > hs && is(p - 1, "@"))) {
        name_tok = p;
        params = j;
        name = std::string(str(p));
        if (p > hs && is(p - 1, "~")) name = "~" + name;
        break;
      }
      // operator overloads: operator== (...), operator() (...)
      std::size_t q = p;
      while (q > hs && !ident(q)) --q;
      if (ident(q) && str(q) == "operator" && q < j) {
        name_tok = q;
        params = j;
        name = "operator";
        for (std::size_t m = q + 1; m < j; ++m) name += str(m);
        if (j == q + 1 && is(j, "(") && match_[j] == j + 1 && is(j + 2, "(")) {
          name += "()";
          params = j + 2;
        }
        break;
      }
    }

    const auto keywords = type_keywords();
    for (std::size_t k = 0; k < top.size(); ++k) {
      std::size_t j = top[k];
      if (!ident(j) || std::find(keywords.begin(), keywords.end(), str(j)) == keywords.end()) {
        continue;
      }
      if (str(j) == "class" && k > 0 && is(top[k - 1], "enum")) continue;
      if (constraint(j, hs)) continue;
      std::size_t n = j + 1;
      if (is(n, "class") || is(n, "struct")) ++n;
      while (n < brace && (is(n, "[") || is(n, "__declspec") || is(n, "alignas"))) {
        if (is(n, "[")) n = match_[n] == kNone ? brace : match_[n] + 1;
        else if (is(n + 1, "(") && match_[n + 1] != kNone) n = match_[n + 1] + 1;
        else ++n;
      }
      std::string type_name;
      while (ident(n)) {
        type_name = std::string(str(n));
        if (is(n + 1, "::")) n += 2;
        else break;
      }
      if (name_tok == kNone || name_tok == n) return {Kind::type, type_name};
    }

    if (name_tok == kNone) return {};
    if (scope.ctx == Ctx::body) return {};
    if (match_[params] == kNone || match_[params] >= brace) return {};
    for (std::size_t m : top_level(match_[params] + 1, brace)) {
      if (toks_[m].kind == Tok::string || toks_[m].kind == Tok::number) return {};
    }

    Classified c{Kind::function, name};
    c.start = hs;
    // Qualifiers of out-of-line definitions: A::B::name
    std::size_t q = name_tok;
    if (q > hs && is(q - 1, "~")) --q;
    std::vector<std::string> quals;
    while (q >= hs + 2 && is(q - 1, "::")) {
      std::size_t p = q - 2;
      if (is(p, ">")) {
        int depth = 0;
        while (p > hs) {
          if (is(p, ">")) ++depth;
          else if (is(p, "<") && --depth == 0) break;
          --p;
        }
        if (p == hs) break;
        --p;
      }
      if (!ident(p)) break;
      quals.insert(quals.begin(), std::string(str(p)));
      q = p;
    }
    c.qualifiers = std::move(quals);
    return c;
  }

  std::string_view text_;
  const Dialect& d_;
  std::vector<Token> toks_;
  std::vector<std::size_t> match_;
  SyntaxTree& tree_;
};

class BraceBackend final : public SyntaxBackend {
public:
  explicit BraceBackend(LanguageId lang) : dialect_(dialect_for(lang)) {}

  SyntaxTree parse(std::string_view text) const override {
    SyntaxTree tree;
    Lexer lexer(text, dialect_, tree);
    std::vector<Token> tokens = lexer.run();
    Scanner scanner(text, dialect_, std::move(tokens), tree);
    scanner.run();
    return tree;
  }

private:
  Dialect dialect_;
};

}  // namespace

std::unique_ptr<SyntaxBackend> make_brace_backend(LanguageId lang) {
  return std::make_unique<BraceBackend>(lang);
}

}  // namespace doccheck::syntax
