#include "simaudit/errors.hpp"

namespace simaudit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnbalancedBraces: return "UnbalancedBraces";
    case ErrorKind::UnterminatedBlockComment: return "UnterminatedBlockComment";
    case ErrorKind::UnterminatedString: return "UnterminatedString";
    case ErrorKind::DuplicateUnitId: return "DuplicateUnitId";
    case ErrorKind::ArchiveCorrupt: return "ArchiveCorrupt";
    case ErrorKind::LabelFileMalformed: return "LabelFileMalformed";
    case ErrorKind::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorKind::FileCorrupt: return "FileCorrupt";
    case ErrorKind::EmptyText: return "EmptyText";
    case ErrorKind::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ProviderMismatch: return "ProviderMismatch";
    case ErrorKind::ProviderError: return "ProviderError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingTemplateSlot: return "MissingTemplateSlot";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::ArchiveCorrupt:
      return 2;
    case ErrorKind::ProviderUnavailable:
    case ErrorKind::ProviderError:
    case ErrorKind::ParseError:
      return 4;
    case ErrorKind::Usage:
      return 64;
    default:
      return 3;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

SourceError::SourceError(ErrorKind kind, std::string file, std::size_t offset,
                         const std::string& what)
    : Error(kind, file + ":" + std::to_string(offset) + ": " + what),
      file_(std::move(file)),
      offset_(offset) {}

ParseError::ParseError(const std::string& message, std::string raw_response)
    : Error(ErrorKind::ParseError, message), raw_(std::move(raw_response)) {}

}  // namespace simaudit
