#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace doccheck {

enum class ErrorKind {
  UnparsableFile,
  Io,
  DegenerateRecord,
  BatchTooSmall,
  EmptyDataset,
  CorpusEmpty,
  UnknownId,
  SequenceTooLong,
  AllPositionsMasked,
  NonFiniteLoss,
  EmptyGeneration,
  LengthMismatch,
  EmptyReference,
  EmptyInput,
  SingleClassTrain,
  InvalidArgument,
  BadFormat,
};

std::string_view to_string(ErrorKind kind);

// All library failures carry a kind so callers (CLI, HTTP) can map them to
// exit codes and status lines without string matching.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace doccheck
