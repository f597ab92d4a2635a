#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "simaudit/corpus.hpp"
#include "simaudit/scan.hpp"
#include "simaudit/simindex.hpp"
#include "simaudit/tar_reader.hpp"

namespace simaudit::testing {

/// ustar members, gzip-compressed. Paths longer than 100 bytes are split
/// into the prefix field.
void write_tar_gz(const std::filesystem::path& out, const std::vector<ArchiveMember>& members);
std::string tar_bytes(const std::vector<ArchiveMember>& members);

/// Every regular file under `dir`, as members named `prefix/<relative path>`.
std::vector<ArchiveMember> members_from_dir(const std::filesystem::path& dir, const std::string& prefix);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path fixture_dir();

struct SyntheticArchive {
  std::string package;
  std::string version;
  std::vector<ArchiveMember> members;
};

/// `total` generated functions spread over a few package archives, of
/// which `duplicates` are comment/whitespace re-renderings of earlier ones.
/// Distinct normalized texts = total - duplicates by construction.
struct SyntheticCorpus {
  std::vector<SyntheticArchive> archives;
  std::size_t total = 0;
  std::size_t distinct = 0;
};

SyntheticCorpus make_synthetic_corpus(std::size_t total, std::size_t duplicates, unsigned seed);

/// Writes each archive as `<dir>/<package>-<version>.tar.gz`.
void write_synthetic_archives(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

/// The reference library under fixtures/e2e/reference, ingested as
/// openzeppelin-contracts@2.5.0 and embedded with `embedder`.
CorpusIndex e2e_index(EmbeddingProvider& embedder);

/// fixtures/e2e/target/*.sol, named "target/<file>".
std::vector<SourceFile> e2e_target_sources();

}  // namespace simaudit::testing
