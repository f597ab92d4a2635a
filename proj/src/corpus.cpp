#include "simaudit/corpus.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "simaudit/csv.hpp"
#include "simaudit/errors.hpp"
#include "simaudit/tar_reader.hpp"

namespace simaudit {

using detail::json;

std::string_view to_string(Label label) {
  return label == Label::Vulnerable ? "vulnerable" : "clean";
}

CorpusStats CorpusIndex::stats() const {
  return {files_seen_, functions_seen_, entries_.size()};
}

const CorpusEntry* CorpusIndex::find_clone(const FunctionUnit& unit) const {
  auto [lo, hi] = by_hash_.equal_range(unit.content_hash);
  for (auto it = lo; it != hi; ++it) {
    const auto& candidate = entries_[it->second];
    // Equal hashes are only a hint; the texts decide.
    if (candidate.unit.normalized_source == unit.normalized_source) return &candidate;
  }
  return nullptr;
}

const CorpusEntry* CorpusIndex::find(std::string_view entry_id) const {
  auto it = by_id_.find(entry_id);
  return it == by_id_.end() ? nullptr : &entries_[it->second];
}

std::string CorpusIndex::unique_entry_id(const std::string& base) const {
  if (!by_id_.count(base)) return base;
  for (int n = 1;; ++n) {
    auto candidate = base + "~" + std::to_string(n);
    if (!by_id_.count(candidate)) return candidate;
  }
}

void CorpusIndex::insert_entry(CorpusEntry entry) {
  const auto pos = entries_.size();
  by_hash_.emplace(entry.unit.content_hash, pos);
  by_id_.emplace(entry.entry_id, pos);
  entries_.push_back(std::move(entry));
}

bool CorpusIndex::add_unit(FunctionUnit unit, const std::string& package,
                           const std::string& version) {
  ++functions_seen_;
  if (find_clone(unit)) return false;
  CorpusEntry entry;
  entry.entry_id = unique_entry_id(package + "@" + version + ":" + unit.unit_id);
  entry.unit = std::move(unit);
  entry.package = package;
  entry.version = version;
  insert_entry(std::move(entry));
  return true;
}

void CorpusIndex::set_label(std::size_t index, Label label, std::optional<std::string> note) {
  auto& e = entries_.at(index);
  if (label == Label::Vulnerable && (!note || note->empty()))
    throw Error(ErrorKind::LabelFileMalformed,
                "vulnerable label for '" + e.entry_id + "' needs a note");
  e.label = label;
  e.vuln_note = label == Label::Vulnerable ? std::move(note) : std::nullopt;
}

void CorpusIndex::set_embedding(std::size_t index, EmbeddingVector embedding) {
  if (embedding.provider_id != meta_.embedder_id)
    throw Error(ErrorKind::ProviderMismatch, "embedding from '" + embedding.provider_id +
                                                 "' but index uses '" + meta_.embedder_id + "'");
  if (embedding.dimension() != meta_.dimension)
    throw Error(ErrorKind::DimensionMismatch,
                "embedding has dimension " + std::to_string(embedding.dimension()) +
                    ", index expects " + std::to_string(meta_.dimension));
  entries_.at(index).embedding = std::move(embedding);
}

CorpusIndex CorpusIndex::from_parts(CorpusMeta meta, CorpusStats stats,
                                    std::vector<CorpusEntry> entries) {
  CorpusIndex index;
  index.meta_ = std::move(meta);
  index.files_seen_ = stats.files_seen;
  index.functions_seen_ = stats.functions_seen;
  if (stats.functions_kept != entries.size())
    throw Error(ErrorKind::FileCorrupt, "functions_kept=" + std::to_string(stats.functions_kept) +
                                            " but index holds " + std::to_string(entries.size()) +
                                            " entries");
  if (stats.functions_kept > stats.functions_seen)
    throw Error(ErrorKind::FileCorrupt, "functions_kept exceeds functions_seen");
  for (auto& e : entries) {
    if (index.by_id_.count(e.entry_id))
      throw Error(ErrorKind::FileCorrupt, "duplicate entry id '" + e.entry_id + "'");
    if (index.find_clone(e.unit))
      throw Error(ErrorKind::FileCorrupt, "duplicate normalized text in '" + e.entry_id + "'");
    if ((e.label == Label::Vulnerable) != e.vuln_note.has_value())
      throw Error(ErrorKind::FileCorrupt, "label/note mismatch in '" + e.entry_id + "'");
    if (e.embedding) {
      if (e.embedding->dimension() != index.meta_.dimension)
        throw Error(ErrorKind::FileCorrupt, "embedding dimension mismatch in '" + e.entry_id + "'");
      for (double v : e.embedding->values)
        if (!std::isfinite(v))
          throw Error(ErrorKind::FileCorrupt, "non-finite embedding in '" + e.entry_id + "'");
    }
    index.insert_entry(std::move(e));
  }
  return index;
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

IngestReport ingest_sources(const std::vector<std::pair<std::string, std::string>>& files,
                            const std::string& package, const std::string& version,
                            CorpusIndex& index) {
  if (package.empty() || version.empty())
    throw Error(ErrorKind::Usage, "package and version must be non-empty");
  IngestReport report;
  for (const auto& [path, contents] : files) {
    if (!ends_with(path, ".sol")) continue;
    ++report.files;
    index.note_file_seen();
    std::vector<FunctionUnit> units;
    try {
      units = extract_units(contents, path);
    } catch (const SourceError& e) {
      report.warnings.push_back(std::string("skipped ") + e.what());
      continue;
    }
    for (auto& u : units) {
      ++report.functions_seen;
      if (index.add_unit(std::move(u), package, version)) ++report.functions_kept;
    }
  }
  if (report.files == 0) report.warnings.push_back("no .sol members");
  return report;
}

IngestReport ingest_archive(const std::filesystem::path& archive, const std::string& package,
                            const std::string& version, CorpusIndex& index) {
  std::vector<std::pair<std::string, std::string>> files;
  for (auto& m : read_tar_gz(archive)) files.emplace_back(std::move(m.path), std::move(m.contents));
  auto report = ingest_sources(files, package, version, index);
  for (auto& w : report.warnings) w = archive.string() + ": " + w;
  return report;
}

LabelReport apply_labels(CorpusIndex& index, std::istream& labels, const std::string& label) {
  const auto rows = parse_csv(labels, label);
  LabelReport report;
  if (rows.empty()) return report;
  const std::vector<std::string> header{"package", "version", "match_kind", "match_value", "note"};
  if (rows.front().fields != header)
    throw Error(ErrorKind::LabelFileMalformed,
                label + ": header must be package,version,match_kind,match_value,note");

  auto wildcard = [](const std::string& v) { return v.empty() || v == "*"; };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    const auto where = label + ":" + std::to_string(rows[r].line);
    if (f.size() != header.size())
      throw Error(ErrorKind::LabelFileMalformed, where + ": expected 5 fields");
    LabelRow row{rows[r].line, f[0], f[1], f[2], f[3], f[4]};
    if (row.match_kind != "name" && row.match_kind != "hash")
      throw Error(ErrorKind::LabelFileMalformed,
                  where + ": match_kind must be 'name' or 'hash'");
    if (row.match_value.empty())
      throw Error(ErrorKind::LabelFileMalformed, where + ": empty match_value");
    if (row.note.empty())
      throw Error(ErrorKind::LabelFileMalformed, where + ": vulnerable rows need a note");
    ++report.rows;

    std::size_t matched = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
      const auto& e = index.entries()[i];
      if (!wildcard(row.package) && e.package != row.package) continue;
      if (!wildcard(row.version) && e.version != row.version) continue;
      const bool hit = row.match_kind == "name" ? e.unit.name == row.match_value
                                                : e.unit.content_hash == row.match_value;
      if (!hit) continue;
      index.set_label(i, Label::Vulnerable, row.note);
      ++matched;
    }
    if (matched == 0)
      report.no_match.push_back(std::move(row));
    else
      report.entries_labeled += matched;
  }
  return report;
}

LabelReport apply_labels(CorpusIndex& index, const std::filesystem::path& labels_path) {
  std::ifstream in(labels_path);
  if (!in) throw Error(ErrorKind::Io, "cannot open label file " + labels_path.string());
  return apply_labels(index, in, labels_path.string());
}

void write_index(const CorpusIndex& index, std::ostream& out) {
  const auto& meta = index.meta();
  const auto stats = index.stats();
  json header{{"format_version", kIndexFormatVersion},
              {"embedder_id", meta.embedder_id},
              {"dimension", meta.dimension},
              {"delta", meta.delta},
              {"created_at", meta.created_at},
              {"stats",
               {{"files_seen", stats.files_seen},
                {"functions_seen", stats.functions_seen},
                {"functions_kept", stats.functions_kept}}}};
  out << header.dump() << '\n';
  for (const auto& e : index.entries()) out << detail::entry_to_json(e).dump() << '\n';
}

void save_index(const CorpusIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write index " + path.string());
  write_index(index, out);
  if (!out) throw Error(ErrorKind::Io, "failed writing index " + path.string());
}

CorpusIndex read_index(std::istream& in, const std::string& label) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::FileCorrupt, label + ": empty index file");
  CorpusMeta meta;
  CorpusStats stats;
  try {
    const auto header = json::parse(line);
    const auto& version = header.at("format_version");
    if (!version.is_number_integer() || version.get<int>() != kIndexFormatVersion)
      throw Error(ErrorKind::FormatVersionMismatch,
                  label + ": index format_version " + version.dump() + ", expected " +
                      std::to_string(kIndexFormatVersion));
    meta.embedder_id = header.at("embedder_id").get<std::string>();
    meta.dimension = header.at("dimension").get<std::size_t>();
    meta.delta = header.at("delta").get<double>();
    meta.created_at = header.at("created_at").get<std::string>();
    const auto& s = header.at("stats");
    stats = {s.at("files_seen").get<std::size_t>(), s.at("functions_seen").get<std::size_t>(),
             s.at("functions_kept").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FileCorrupt, label + ":1: bad header: " + e.what());
  }

  std::vector<CorpusEntry> entries;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      entries.push_back(detail::entry_from_json(json::parse(line), meta.embedder_id));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::FileCorrupt, label + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::FileCorrupt, label + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  try {
    return CorpusIndex::from_parts(std::move(meta), stats, std::move(entries));
  } catch (const Error& e) {
    throw Error(ErrorKind::FileCorrupt, label + ": " + e.what());
  }
}

CorpusIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open index " + path.string());
  return read_index(in, path.string());
}

std::pair<std::string, std::string> package_from_archive_name(
    const std::filesystem::path& archive) {
  std::string name = archive.filename().string();
  for (std::string_view ext : {".tar.gz", ".tgz"}) {
    if (ends_with(name, ext)) {
      name.resize(name.size() - ext.size());
      break;
    }
  }
  for (auto pos = name.rfind('-'); pos != std::string::npos && pos > 0;
       pos = name.rfind('-', pos - 1)) {
    if (pos + 1 < name.size() && std::isdigit(static_cast<unsigned char>(name[pos + 1])))
      return {name.substr(0, pos), name.substr(pos + 1)};
  }
  return {name, "unversioned"};
}

}  // namespace simaudit
