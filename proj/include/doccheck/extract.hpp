#pragma once

#include "doccheck/languages.hpp"

#include "json.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace doccheck::extract {

struct SourceFile {
  std::filesystem::path path;
  LanguageId language = LanguageId::python;
  std::string text;
};

struct FunctionRecord {
  std::string function_name;
  std::string qualified_name;
  std::string signature;
  std::string code;
  std::optional<std::string> docstring_raw;
  std::optional<std::string> docstring;
  std::pair<std::size_t, std::size_t> byte_span;  // 0-based, half-open
  std::pair<std::size_t, std::size_t> line_span;  // 1-based, inclusive
  std::string file;
  LanguageId language = LanguageId::python;

  bool operator==(const FunctionRecord&) const = default;
};

struct ParseResult {
  std::vector<FunctionRecord> records;
  std::vector<std::string> diagnostics;  // non-empty means the file only partially parsed
};

ParseResult parse_file(const SourceFile& file);

std::string normalize_docstring(std::string_view raw, LanguageId language);

struct ScanOptions {
  std::set<LanguageId> languages;
  std::vector<std::string> deny_dirs = {"node_modules", "vendor", "third_party", "build",
                                        "target", "__pycache__", "dist"};
};

struct ScanResult {
  std::vector<SourceFile> files;
  std::vector<std::string> errors;  // IoError per unreadable file
};

ScanResult scan_tree(const std::filesystem::path& root, const ScanOptions& options);

SourceFile read_source(const std::filesystem::path& path, LanguageId language);

nlohmann::ordered_json to_json(const FunctionRecord& record);
FunctionRecord record_from_json(const nlohmann::json& j);

// One record per line, LF terminated.
std::string to_jsonl(const std::vector<FunctionRecord>& records);

// A splice of `source` that documents `record` with `text` in the
// language's own comment form: it replaces the attached docstring, or
// inserts one where parse_file will find it. Bytes outside [begin, end)
// are untouched.
struct DocEdit {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string replacement;

  bool operator==(const DocEdit&) const = default;
};

DocEdit doc_edit(const FunctionRecord& record, std::string_view source, std::string_view text);
nlohmann::ordered_json to_json(const DocEdit& edit);

}  // namespace doccheck::extract
