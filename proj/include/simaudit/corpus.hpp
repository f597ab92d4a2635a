#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simaudit/embedding.hpp"
#include "simaudit/sol_extract.hpp"

namespace simaudit {

enum class Label { Clean, Vulnerable };

std::string_view to_string(Label label);

/// A reference-library function. vuln_note is set iff label == Vulnerable.
struct CorpusEntry {
  std::string entry_id;
  FunctionUnit unit;
  std::string package;
  std::string version;
  Label label = Label::Clean;
  std::optional<std::string> vuln_note;
  std::optional<EmbeddingVector> embedding;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct CorpusMeta {
  std::string created_at;
  std::string embedder_id;  // empty until the corpus is embedded
  std::size_t dimension = 0;
  double delta = 0.65;

  friend bool operator==(const CorpusMeta&, const CorpusMeta&) = default;
};

struct CorpusStats {
  std::size_t files_seen = 0;
  std::size_t functions_seen = 0;
  std::size_t functions_kept = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Deduplicated reference codebase.
///
/// Two units are duplicates iff their content hashes are equal and their
/// normalized texts are byte-equal; the first occurrence is kept.
class CorpusIndex {
 public:
  CorpusIndex() = default;

  const std::vector<CorpusEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  CorpusStats stats() const;
  const CorpusMeta& meta() const { return meta_; }
  CorpusMeta& meta() { return meta_; }

  /// Records one unit from `package`@`version`. Returns false when the unit
  /// duplicates an existing entry (functions_seen still increases).
  bool add_unit(FunctionUnit unit, const std::string& package, const std::string& version);
  void note_file_seen() { ++files_seen_; }

  /// Entry whose normalized text is byte-equal to `unit`'s, if any.
  const CorpusEntry* find_clone(const FunctionUnit& unit) const;
  const CorpusEntry* find(std::string_view entry_id) const;

  void set_label(std::size_t index, Label label, std::optional<std::string> note);

  /// Attaches an embedding; its provider and dimension must match meta().
  void set_embedding(std::size_t index, EmbeddingVector embedding);

  /// Rebuilds an index from persisted parts, validating every invariant.
  /// Throws Error(FileCorrupt) on violations.
  static CorpusIndex from_parts(CorpusMeta meta, CorpusStats stats,
                                std::vector<CorpusEntry> entries);

  friend bool operator==(const CorpusIndex& a, const CorpusIndex& b) {
    return a.meta_ == b.meta_ && a.stats() == b.stats() && a.entries_ == b.entries_;
  }

 private:
  std::string unique_entry_id(const std::string& base) const;
  void insert_entry(CorpusEntry entry);

  CorpusMeta meta_;
  std::size_t files_seen_ = 0;
  std::size_t functions_seen_ = 0;
  std::vector<CorpusEntry> entries_;
  std::multimap<std::string, std::size_t> by_hash_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

struct IngestReport {
  std::size_t files = 0;
  std::size_t functions_seen = 0;
  std::size_t functions_kept = 0;
  /// Non-fatal problems: no .sol members, or a member that failed to lex.
  std::vector<std::string> warnings;
};

/// Extracts every `.sol` member of a gzip tar archive into `index`.
/// Throws Error(ArchiveCorrupt) / Error(Io); an archive without .sol
/// members only produces a warning.
IngestReport ingest_archive(const std::filesystem::path& archive, const std::string& package,
                            const std::string& version, CorpusIndex& index);

/// Same as ingest_archive, over members already in memory.
IngestReport ingest_sources(const std::vector<std::pair<std::string, std::string>>& files,
                            const std::string& package, const std::string& version,
                            CorpusIndex& index);

struct LabelRow {
  std::size_t line = 0;
  std::string package;
  std::string version;
  std::string match_kind;
  std::string match_value;
  std::string note;
};

struct LabelReport {
  std::size_t rows = 0;
  std::size_t entries_labeled = 0;
  std::vector<LabelRow> no_match;
};

/// Marks entries Vulnerable from a CSV with header
/// `package,version,match_kind,match_value,note`, match_kind in {name, hash}.
/// Empty package or version (or `*`) match any value. Unmatched rows are
/// reported, not fatal. Throws Error(LabelFileMalformed).
LabelReport apply_labels(CorpusIndex& index, const std::filesystem::path& labels_path);
LabelReport apply_labels(CorpusIndex& index, std::istream& labels, const std::string& label);

inline constexpr int kIndexFormatVersion = 1;

/// JSON Lines: a header object, then one entry per line.
void save_index(const CorpusIndex& index, const std::filesystem::path& path);
void write_index(const CorpusIndex& index, std::ostream& out);

/// Throws Error(FormatVersionMismatch), Error(FileCorrupt) or Error(Io).
CorpusIndex load_index(const std::filesystem::path& path);
CorpusIndex read_index(std::istream& in, const std::string& label);

/// `openzeppelin-contracts-4.4.1.tgz` -> {"openzeppelin-contracts", "4.4.1"}.
/// The version is the text after the last '-' that is followed by a digit;
/// names without one get version "unversioned".
std::pair<std::string, std::string> package_from_archive_name(const std::filesystem::path& archive);

}  // namespace simaudit
