#include "doccheck/extract.hpp"

#include "doccheck/error.hpp"
#include "syntax_common.hpp"

#include <algorithm>
#include <regex>
#include <fstream>
#include <sstream>

namespace doccheck {
namespace syntax {

std::unique_ptr<SyntaxBackend> make_backend(LanguageId lang) {
  switch (lang) {
    case LanguageId::python: return make_python_backend();
    case LanguageId::ruby: return make_ruby_backend();
    default: return make_brace_backend(lang);
  }
}

std::size_t line_of(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

Span trim_span(std::string_view text, Span span) {
  auto space = [](char ch) { return ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n'; };
  while (span.begin < span.end && space(text[span.begin])) ++span.begin;
  while (span.end > span.begin && space(text[span.end - 1])) --span.end;
  return span;
}

}  // namespace syntax

namespace extract {
namespace {

bool is_space(char ch) {
  return ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n' || ch == '\f' || ch == '\v';
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char ch : s) {
    if (is_space(ch)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(ch);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// Own-line: only whitespace between the previous newline and `offset`.
bool starts_own_line(std::string_view text, std::size_t offset) {
  while (offset > 0) {
    char ch = text[offset - 1];
    if (ch == '\n') return true;
    if (ch != ' ' && ch != '\t') return false;
    --offset;
  }
  return true;
}

bool blank_between(std::string_view text, std::size_t a, std::size_t b) {
  for (std::size_t i = a; i < b; ++i) {
    if (!is_space(text[i])) return false;
  }
  return true;
}

using syntax::CommentNode;
using syntax::CommentStyle;

bool line_style_ok(LanguageId lang, const CommentNode& c, std::string_view text) {
  std::string_view body = text.substr(c.span.begin, c.span.end - c.span.begin);
  switch (lang) {
    case LanguageId::ruby: return c.marker == '#';
    case LanguageId::rust: return body.starts_with("///") && !body.starts_with("////");
    case LanguageId::python: return false;
    default:
      return c.marker == '/' && (c.style == CommentStyle::line || c.style == CommentStyle::doc_line);
  }
}

bool block_style_ok(LanguageId lang, const CommentNode& c) {
  switch (lang) {
    case LanguageId::java:
    case LanguageId::javascript:
    case LanguageId::php:
    case LanguageId::c:
    case LanguageId::cpp:
    case LanguageId::csharp:
      return c.style == CommentStyle::block || c.style == CommentStyle::doc_block;
    case LanguageId::rust: return c.style == CommentStyle::doc_block;
    default: return false;
  }
}

// The documentation comment attached to a definition starting at `start`.
std::optional<syntax::Span> attached_comment(std::string_view text, LanguageId lang,
                                             const std::vector<CommentNode>& comments,
                                             std::size_t start) {
  auto it = std::upper_bound(comments.begin(), comments.end(), start,
                             [](std::size_t pos, const CommentNode& c) { return pos < c.span.end; });
  if (it == comments.begin()) return std::nullopt;
  std::size_t k = static_cast<std::size_t>(it - comments.begin()) - 1;
  const CommentNode& nearest = comments[k];
  if (nearest.span.end > start) return std::nullopt;
  if (!blank_between(text, nearest.span.end, start)) return std::nullopt;
  if (!starts_own_line(text, nearest.span.begin)) return std::nullopt;
  const std::size_t fn_line = syntax::line_of(text, start);
  const std::size_t last_line = syntax::line_of(text, nearest.span.end - 1);
  if (fn_line - last_line > 1) return std::nullopt;

  if (block_style_ok(lang, nearest)) return nearest.span;
  if (!line_style_ok(lang, nearest, text)) return std::nullopt;

  std::size_t first = k;
  while (first > 0) {
    const CommentNode& prev = comments[first - 1];
    const CommentNode& cur = comments[first];
    if (!line_style_ok(lang, prev, text) || !starts_own_line(text, prev.span.begin)) break;
    if (!blank_between(text, prev.span.end, cur.span.begin)) break;
    if (syntax::line_of(text, cur.span.begin) - syntax::line_of(text, prev.span.begin) != 1) break;
    --first;
  }
  return syntax::Span{comments[first].span.begin, nearest.span.end};
}

std::string strip_string_literal(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size() && raw[i] != '"' && raw[i] != '\'') ++i;
  raw.remove_prefix(i);
  if (raw.empty()) return {};
  const char q = raw.front();
  const std::string triple(3, q);
  if (raw.size() >= 6 && raw.starts_with(triple) && raw.ends_with(triple)) {
    return std::string(raw.substr(3, raw.size() - 6));
  }
  if (raw.size() >= 2 && raw.back() == q) return std::string(raw.substr(1, raw.size() - 2));
  return std::string(raw.substr(1));
}

// C# XML documentation: keep the <summary> body when present and drop the
// remaining markup. <see cref="X"/> style references keep their target.
std::vector<std::string> strip_xml_doc(const std::vector<std::string>& lines) {
  std::string joined;
  for (const std::string& line : lines) joined += line + "\n";
  const std::size_t open = joined.find("<summary>");
  if (open != std::string::npos) {
    std::size_t close = joined.find("</summary>", open);
    if (close == std::string::npos) close = joined.size();
    joined = joined.substr(open + 9, close - open - 9);
  }
  static const std::regex ref(R"re(<(?:see|seealso|paramref|typeparamref)\s+\w+\s*=\s*"([^"]*)"\s*/>)re");
  static const std::regex tag(R"(</?[A-Za-z][^>]*>)");
  joined = std::regex_replace(joined, ref, "$1");
  joined = std::regex_replace(joined, tag, "");
  std::vector<std::string> out;
  for (std::string_view line : split_lines(joined)) out.emplace_back(trim(line));
  return out;
}

}  // namespace

std::string normalize_docstring(std::string_view raw, LanguageId language) {
  raw = trim(raw);
  if (raw.empty()) return {};

  std::vector<std::string> lines;
  bool block = false;
  const bool quoted = raw.front() == '"' || raw.front() == '\'' ||
                      (language == LanguageId::python && raw.find_first_of("\"'") != std::string_view::npos &&
                       raw.find_first_of("\"'") <= 2);
  if (quoted) {
    const std::string body = strip_string_literal(raw);
    for (std::string_view line : split_lines(body)) {
      lines.emplace_back(trim(line));
    }
  } else if (raw.starts_with("/*")) {
    block = true;
    std::string_view body = raw.substr(2);
    if (body.ends_with("*/")) body.remove_suffix(2);
    for (std::string_view line : split_lines(body)) {
      line = trim(line);
      while (!line.empty() && line.front() == '*') line.remove_prefix(1);
      lines.emplace_back(trim(line));
    }
  } else {
    for (std::string_view line : split_lines(raw)) {
      line = trim(line);
      if (line.starts_with("//")) {
        while (!line.empty() && line.front() == '/') line.remove_prefix(1);
        if (!line.empty() && line.front() == '!') line.remove_prefix(1);
      } else {
        while (!line.empty() && line.front() == '#') line.remove_prefix(1);
      }
      lines.emplace_back(trim(line));
    }
  }

  if (language == LanguageId::csharp) lines = strip_xml_doc(lines);

  std::string paragraph;
  bool started = false;
  for (const std::string& line : lines) {
    if (line.empty()) {
      if (started) break;
      continue;
    }
    if (block && line.front() == '@') break;  // javadoc-style block tags end the summary
    started = true;
    paragraph += line;
    paragraph += ' ';
  }
  return collapse_whitespace(paragraph);
}

ParseResult parse_file(const SourceFile& file) {
  ParseResult result;
  const std::string_view text = file.text;
  if (text.empty()) return result;

  auto backend = syntax::make_backend(file.language);
  syntax::SyntaxTree tree = backend->parse(text);
  result.diagnostics = std::move(tree.diagnostics);

  for (const syntax::FunctionNode& fn : tree.functions) {
    FunctionRecord rec;
    rec.function_name = fn.name;
    rec.qualified_name.clear();
    for (const std::string& scope : fn.scopes) rec.qualified_name += scope + ".";
    rec.qualified_name += fn.name;
    rec.signature = collapse_whitespace(
        text.substr(fn.signature.begin, fn.signature.end - fn.signature.begin));
    rec.code = std::string(text.substr(fn.span.begin, fn.span.end - fn.span.begin));
    rec.byte_span = {fn.span.begin, fn.span.end};
    rec.line_span = {syntax::line_of(text, fn.span.begin),
                     syntax::line_of(text, fn.span.end == 0 ? 0 : fn.span.end - 1)};
    rec.file = file.path.generic_string();
    rec.language = file.language;

    std::optional<syntax::Span> doc;
    if (file.language == LanguageId::python) {
      doc = fn.doc_literal;
    } else {
      doc = attached_comment(text, file.language, tree.comments, fn.span.begin);
    }
    if (doc) {
      rec.docstring_raw = std::string(text.substr(doc->begin, doc->end - doc->begin));
      rec.docstring = normalize_docstring(*rec.docstring_raw, file.language);
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

SourceFile read_source(const std::filesystem::path& path, LanguageId language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "read failed for " + path.string());
  return SourceFile{path, language, ss.str()};
}

ScanResult scan_tree(const std::filesystem::path& root, const ScanOptions& options) {
  namespace fs = std::filesystem;
  ScanResult result;
  if (!fs::exists(root)) throw Error(ErrorKind::Io, "no such path: " + root.string());

  std::vector<std::pair<std::string, fs::path>> matches;
  auto consider = [&](const fs::path& p, const fs::path& rel) {
    auto lang = language_for_path(p);
    if (!lang || !options.languages.contains(*lang)) return;
    matches.emplace_back(rel.generic_string(), p);
  };

  if (fs::is_regular_file(root)) {
    consider(root, root.filename());
  } else {
    std::error_code ec;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot list " + root.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (ec) {
        result.errors.push_back("IoError: " + ec.message());
        ec.clear();
        continue;
      }
      const fs::path& p = it->path();
      const std::string name = p.filename().string();
      const bool hidden = !name.empty() && name.front() == '.';
      if (it->is_directory(ec)) {
        if (hidden || std::find(options.deny_dirs.begin(), options.deny_dirs.end(), name) !=
                          options.deny_dirs.end()) {
          it.disable_recursion_pending();
        }
        continue;
      }
      if (hidden || !it->is_regular_file(ec)) continue;
      consider(p, fs::relative(p, root));
    }
  }

  std::sort(matches.begin(), matches.end());
  for (const auto& [rel, p] : matches) {
    try {
      result.files.push_back(read_source(p, *language_for_path(p)));
    } catch (const Error& e) {
      result.errors.push_back(e.what());
    }
  }
  return result;
}

nlohmann::ordered_json to_json(const FunctionRecord& r) {
  nlohmann::ordered_json j;
  j["function_name"] = r.function_name;
  j["qualified_name"] = r.qualified_name;
  j["signature"] = r.signature;
  j["code"] = r.code;
  j["docstring_raw"] = r.docstring_raw ? nlohmann::ordered_json(*r.docstring_raw) : nullptr;
  j["docstring"] = r.docstring ? nlohmann::ordered_json(*r.docstring) : nullptr;
  j["byte_span"] = {r.byte_span.first, r.byte_span.second};
  j["line_span"] = {r.line_span.first, r.line_span.second};
  j["file"] = r.file;
  j["language"] = to_string(r.language);
  return j;
}

FunctionRecord record_from_json(const nlohmann::json& j) {
  FunctionRecord r;
  try {
    r.function_name = j.at("function_name").get<std::string>();
    r.qualified_name = j.at("qualified_name").get<std::string>();
    r.signature = j.at("signature").get<std::string>();
    r.code = j.at("code").get<std::string>();
    if (!j.at("docstring_raw").is_null()) r.docstring_raw = j["docstring_raw"].get<std::string>();
    if (!j.at("docstring").is_null()) r.docstring = j["docstring"].get<std::string>();
    r.byte_span = {j.at("byte_span").at(0).get<std::size_t>(), j["byte_span"].at(1).get<std::size_t>()};
    r.line_span = {j.at("line_span").at(0).get<std::size_t>(), j["line_span"].at(1).get<std::size_t>()};
    r.file = j.at("file").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadFormat, std::string("function record: ") + e.what());
  }
  auto lang = parse_language(j.at("language").get<std::string>());
  if (!lang) throw Error(ErrorKind::BadFormat, "function record: unknown language");
  r.language = *lang;
  return r;
}

std::string to_jsonl(const std::vector<FunctionRecord>& records) {
  std::string out;
  for (const FunctionRecord& r : records) {
    out += to_json(r).dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

namespace {

std::string_view leading_blank(std::string_view source, std::size_t line_start) {
  std::size_t e = line_start;
  while (e < source.size() && (source[e] == ' ' || source[e] == '\t')) ++e;
  return source.substr(line_start, e - line_start);
}

std::size_t line_start_of(std::string_view source, std::size_t pos) {
  const std::size_t nl = source.rfind('\n', pos == 0 ? 0 : pos - 1);
  return pos == 0 || nl == std::string_view::npos ? 0 : nl + 1;
}

std::vector<std::string> text_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t b = 0;
  while (true) {
    const std::size_t e = text.find('\n', b);
    std::string line(text.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
    out.push_back(line);
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) {
    s.replace(at, from.size(), to);
  }
  return s;
}

std::string python_literal(std::string_view text) {
  std::string body = replace_all(replace_all(std::string(text), "\\", "\\\\"), "\"\"\"", "\\\"\\\"\\\"");
  if (!body.empty() && body.back() == '"') body += ' ';
  return "\"\"\"" + body + "\"\"\"";
}

// Comment lines without leading indentation, for the brace and ruby families.
std::vector<std::string> comment_lines(LanguageId lang, std::string_view text) {
  std::vector<std::string> lines = text_lines(text);
  auto prefixed = [&](const std::string& marker) {
    for (std::string& l : lines) l = l.empty() ? marker : marker + " " + l;
    return lines;
  };
  switch (lang) {
    case LanguageId::ruby: return prefixed("#");
    case LanguageId::go: return prefixed("//");
    case LanguageId::rust: return prefixed("///");
    case LanguageId::csharp: {
      prefixed("///");
      lines.insert(lines.begin(), "/// <summary>");
      lines.push_back("/// </summary>");
      return lines;
    }
    default: {
      for (std::string& l : lines) l = replace_all(l, "*/", "* /");
      if (lines.size() == 1) return {"/** " + lines[0] + " */"};
      std::vector<std::string> out = {"/**"};
      for (const std::string& l : lines) out.push_back(l.empty() ? " *" : " * " + l);
      out.push_back(" */");
      return out;
    }
  }
}

std::string join_lines(const std::vector<std::string>& lines, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) out += (i ? sep : "") + lines[i];
  return out;
}

// Offset of the ':' that closes a python def header inside `code`.
std::size_t python_header_colon(std::string_view code) {
  std::size_t i = 0;
  while (i < code.size()) {  // skip decorator lines
    std::size_t b = i;
    while (b < code.size() && (code[b] == ' ' || code[b] == '\t')) ++b;
    if (b >= code.size() || code[b] != '@') break;
    const std::size_t nl = code.find('\n', b);
    i = nl == std::string_view::npos ? code.size() : nl + 1;
  }
  int depth = 0;
  for (; i < code.size(); ++i) {
    const char ch = code[i];
    if (ch == '#') {
      while (i < code.size() && code[i] != '\n') ++i;
    } else if (ch == '"' || ch == '\'') {
      for (++i; i < code.size() && code[i] != ch; ++i) {
        if (code[i] == '\\') ++i;
      }
    } else if (ch == '(' || ch == '[' || ch == '{') {
      ++depth;
    } else if (ch == ')' || ch == ']' || ch == '}') {
      --depth;
    } else if (ch == ':' && depth == 0) {
      return i;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "no python def header in record " + std::string(code.substr(0, 40)));
}

}  // namespace

DocEdit doc_edit(const FunctionRecord& rec, std::string_view source, std::string_view text) {
  const auto [fb, fe] = rec.byte_span;
  if (fe > source.size() || source.substr(fb, fe - fb) != rec.code) {
    throw Error(ErrorKind::InvalidArgument, "record does not match the source: " + rec.function_name);
  }
  const bool python = rec.language == LanguageId::python;

  if (rec.docstring_raw) {
    const std::string& raw = *rec.docstring_raw;
    std::size_t at = python ? source.substr(0, fe).find(raw, fb) : source.substr(0, fb).rfind(raw);
    if (at == std::string_view::npos) throw Error(ErrorKind::InvalidArgument, "docstring not found in source");
    if (python) return {at, at + raw.size(), python_literal(text)};
    const std::string indent(leading_blank(source, line_start_of(source, at)));
    return {at, at + raw.size(), join_lines(comment_lines(rec.language, text), "\n" + indent)};
  }

  if (!python) {
    const std::size_t ls = line_start_of(source, fb);
    const std::string indent(leading_blank(source, ls));
    std::string rep;
    for (const std::string& l : comment_lines(rec.language, text)) rep += indent + l + "\n";
    if (starts_own_line(source, fb)) return {ls, ls, rep};
    // a definition in mid-line (function expression): move it onto its own line
    return {fb, fb, "\n" + rep + indent};
  }

  // python: the literal becomes the first statement of the body
  const std::size_t colon = fb + python_header_colon(rec.code);
  std::size_t i = colon + 1;
  while (i < fe && (source[i] == ' ' || source[i] == '\t')) ++i;
  if (i < fe && source[i] != '\n' && source[i] != '#' && source[i] != '\r') {
    // one-line body: split it off onto its own line
    const std::string indent = std::string(leading_blank(source, line_start_of(source, colon))) + "    ";
    return {i, i, "\n" + indent + python_literal(text) + "\n" + indent};
  }
  std::size_t ls = source.find('\n', colon);
  ls = ls == std::string_view::npos ? source.size() : ls + 1;
  while (ls < fe) {  // first non-blank body line
    const std::string_view blank = leading_blank(source, ls);
    const std::size_t after = ls + blank.size();
    if (after < source.size() && source[after] != '\n' && source[after] != '\r') break;
    const std::size_t nl = source.find('\n', ls);
    if (nl == std::string_view::npos) break;
    ls = nl + 1;
  }
  const std::string indent(leading_blank(source, ls));
  return {ls, ls, indent + python_literal(text) + "\n"};
}

nlohmann::ordered_json to_json(const DocEdit& e) {
  nlohmann::ordered_json j;
  j["begin"] = e.begin;
  j["end"] = e.end;
  j["replacement"] = e.replacement;
  return j;
}

}  // namespace extract
}  // namespace doccheck
