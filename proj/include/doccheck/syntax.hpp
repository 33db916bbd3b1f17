#pragma once

#include "doccheck/languages.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Language backends produce a flat concrete-syntax summary of a file: the
// function definitions it contains and every comment. The extraction layer
// only ever talks to this interface.
namespace doccheck::syntax {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // half-open

  bool operator==(const Span&) const = default;
};

enum class CommentStyle {
  line,        // `//`, `#`
  doc_line,    // `///`, `//!`
  block,       // `/* */`
  doc_block,   // `/** */`
};

struct CommentNode {
  Span span;
  CommentStyle style = CommentStyle::line;
  char marker = '/';  // first marker character ('/' or '#')
};

struct FunctionNode {
  std::string name;
  std::vector<std::string> scopes;  // outermost first
  Span span;                        // whole definition
  Span signature;                   // header text up to the body
  std::optional<Span> doc_literal;  // first-statement string literal (python)
  int depth = 0;                    // function nesting depth
};

struct SyntaxTree {
  std::vector<FunctionNode> functions;  // source order
  std::vector<CommentNode> comments;    // source order
  std::vector<std::string> diagnostics;
};

class SyntaxBackend {
public:
  virtual ~SyntaxBackend() = default;
  virtual SyntaxTree parse(std::string_view text) const = 0;
};

std::unique_ptr<SyntaxBackend> make_backend(LanguageId lang);

// Shared helpers for backends.
std::size_t line_of(std::string_view text, std::size_t offset);  // 1-based
Span trim_span(std::string_view text, Span span);

}  // namespace doccheck::syntax
