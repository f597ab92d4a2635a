#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simaudit {

enum class UnitKind { Function, Modifier, Constructor, Fallback, Receive };

std::string_view to_string(UnitKind kind);
UnitKind unit_kind_from_string(std::string_view text);

/// Half-open byte range [begin, end) into the source file.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

/// One function-like definition lifted out of a Solidity file.
///
/// unit_id is `<file-path>::<contract>::<name>#<ordinal>`, where ordinal
/// counts same-named units (overloads) inside one contract, starting at 0.
/// File-level free functions use an empty contract name.
struct FunctionUnit {
  std::string unit_id;
  UnitKind kind = UnitKind::Function;
  std::string name;
  std::string contract;
  std::string file_path;
  std::string raw_source;
  std::string normalized_source;
  std::string content_hash;
  std::vector<std::string> declared_calls;
  SourceSpan source_span;

  friend bool operator==(const FunctionUnit&, const FunctionUnit&) = default;
};

/// Extracts every function, modifier, constructor, fallback and receive
/// definition that has a body, in source order.
///
/// declared_calls holds header modifier invocations followed by body call
/// targets, each name once, in order of first appearance. Builtins, type
/// conversions, `emit`/`revert`/`new` targets and inline assembly are
/// excluded.
///
/// Throws SourceError (UnbalancedBraces, UnterminatedString,
/// UnterminatedBlockComment) carrying the file path and byte offset.
std::vector<FunctionUnit> extract_units(std::string_view source,
                                        std::string_view file_path);

/// Strips comments (string literals are respected) and collapses every
/// whitespace run to a single space, then trims.
std::string normalize(std::string_view raw);

/// Lowercase hex SHA-256 of the exact bytes.
std::string content_hash(std::string_view normalized);

/// Version of the call deny-list below; bump on any change to it.
inline constexpr int kCallDenylistVersion = 1;

std::span<const std::string_view> call_denylist();

/// True for names that never become call-graph edges: builtins, keywords
/// that precede `(`, and elementary type conversions such as `uint256(x)`.
bool is_builtin_call(std::string_view name);

}  // namespace simaudit
