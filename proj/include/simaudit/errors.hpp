#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace simaudit {

enum class ErrorKind {
  // sol_extract
  UnbalancedBraces,
  UnterminatedBlockComment,
  UnterminatedString,
  // callgraph
  DuplicateUnitId,
  // corpus
  ArchiveCorrupt,
  LabelFileMalformed,
  FormatVersionMismatch,
  FileCorrupt,
  // simindex
  EmptyText,
  ProviderUnavailable,
  DimensionMismatch,
  ProviderMismatch,
  // agents
  ProviderError,
  ParseError,
  MissingTemplateSlot,
  // cli
  Io,
  Usage,
};

std::string_view to_string(ErrorKind kind);

/// Process exit status for an error surfaced by the CLI.
///   2 = IO, 3 = format, 4 = provider, 64 = usage.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Lexical failure at a byte offset of a source file.
class SourceError : public Error {
 public:
  SourceError(ErrorKind kind, std::string file, std::size_t offset,
              const std::string& what);

  const std::string& file() const noexcept { return file_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string file_;
  std::size_t offset_;
};

/// A role response that could not be parsed, even after the re-prompt.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string raw_response);

  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace simaudit
