#include "doccheck/languages.hpp"

#include "doccheck/error.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace doccheck {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnparsableFile: return "UnparsableFile";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::DegenerateRecord: return "DegenerateRecord";
    case ErrorKind::BatchTooSmall: return "BatchTooSmall";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::CorpusEmpty: return "CorpusEmpty";
    case ErrorKind::UnknownId: return "UnknownId";
    case ErrorKind::SequenceTooLong: return "SequenceTooLong";
    case ErrorKind::AllPositionsMasked: return "AllPositionsMasked";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::EmptyGeneration: return "EmptyGeneration";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyReference: return "EmptyReference";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SingleClassTrain: return "SingleClassTrain";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BadFormat: return "BadFormat";
  }
  return "Unknown";
}

std::string_view to_string(LanguageId lang) {
  switch (lang) {
    case LanguageId::java: return "java";
    case LanguageId::javascript: return "javascript";
    case LanguageId::python: return "python";
    case LanguageId::ruby: return "ruby";
    case LanguageId::rust: return "rust";
    case LanguageId::go: return "go";
    case LanguageId::csharp: return "csharp";
    case LanguageId::cpp: return "cpp";
    case LanguageId::c: return "c";
    case LanguageId::php: return "php";
  }
  return "unknown";
}

std::optional<LanguageId> parse_language(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (LanguageId lang : kAllLanguages) {
    if (to_string(lang) == lower) return lang;
  }
  // Common aliases.
  if (lower == "js") return LanguageId::javascript;
  if (lower == "py") return LanguageId::python;
  if (lower == "rb") return LanguageId::ruby;
  if (lower == "golang") return LanguageId::go;
  if (lower == "c#" || lower == "cs") return LanguageId::csharp;
  if (lower == "c++" || lower == "cxx") return LanguageId::cpp;
  return std::nullopt;
}

namespace {

constexpr std::string_view kJava[] = {".java"};
constexpr std::string_view kJs[] = {".js", ".mjs", ".cjs", ".jsx"};
constexpr std::string_view kPython[] = {".py"};
constexpr std::string_view kRuby[] = {".rb"};
constexpr std::string_view kRust[] = {".rs"};
constexpr std::string_view kGo[] = {".go"};
constexpr std::string_view kCsharp[] = {".cs"};
constexpr std::string_view kCpp[] = {".cpp", ".cc", ".cxx", ".hpp", ".hh", ".hxx"};
constexpr std::string_view kC[] = {".c", ".h"};
constexpr std::string_view kPhp[] = {".php"};

}  // namespace

std::span<const std::string_view> extensions(LanguageId lang) {
  switch (lang) {
    case LanguageId::java: return kJava;
    case LanguageId::javascript: return kJs;
    case LanguageId::python: return kPython;
    case LanguageId::ruby: return kRuby;
    case LanguageId::rust: return kRust;
    case LanguageId::go: return kGo;
    case LanguageId::csharp: return kCsharp;
    case LanguageId::cpp: return kCpp;
    case LanguageId::c: return kC;
    case LanguageId::php: return kPhp;
  }
  return {};
}

std::optional<LanguageId> language_for_path(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  for (LanguageId lang : kAllLanguages) {
    for (std::string_view e : extensions(lang)) {
      if (e == ext) return lang;
    }
  }
  return std::nullopt;
}

bool fully_supported(LanguageId lang) {
  switch (lang) {
    case LanguageId::python:
    case LanguageId::java:
    case LanguageId::javascript:
    case LanguageId::ruby:
    case LanguageId::go:
    case LanguageId::php:
      return true;
    default:
      return false;
  }
}

}  // namespace doccheck
