#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <stdexcept>

#include <unistd.h>
#include <zlib.h>

#ifndef SIMAUDIT_FIXTURE_DIR
#error "SIMAUDIT_FIXTURE_DIR must be defined"
#endif

namespace simaudit::testing {

namespace fs = std::filesystem;

namespace {

void put_octal(char* field, std::size_t width, std::uint64_t value) {
  std::snprintf(field, width, "%0*llo", static_cast<int>(width - 1), static_cast<unsigned long long>(value));
}

std::string header_for(const std::string& path, std::size_t size) {
  std::string block(512, '\0');
  std::string name = path, prefix;
  if (name.size() > 100) {
    const auto cut = name.rfind('/', 155);
    if (cut == std::string::npos || name.size() - cut - 1 > 100)
      throw std::invalid_argument("path too long for ustar: " + path);
    prefix = name.substr(0, cut);
    name = name.substr(cut + 1);
  }
  std::memcpy(&block[0], name.data(), name.size());
  put_octal(&block[100], 8, 0644);
  put_octal(&block[108], 8, 0);
  put_octal(&block[116], 8, 0);
  put_octal(&block[124], 12, size);
  put_octal(&block[136], 12, 0);
  block[156] = '0';
  std::memcpy(&block[257], "ustar", 6);
  std::memcpy(&block[263], "00", 2);
  std::memcpy(&block[345], prefix.data(), prefix.size());
  std::memset(&block[148], ' ', 8);
  unsigned sum = 0;
  for (unsigned char c : block) sum += c;
  std::snprintf(&block[148], 8, "%06o", sum);
  block[155] = ' ';
  return block;
}

}  // namespace

std::string tar_bytes(const std::vector<ArchiveMember>& members) {
  std::string out;
  for (const auto& m : members) {
    out += header_for(m.path, m.contents.size());
    out += m.contents;
    out.append((512 - m.contents.size() % 512) % 512, '\0');
  }
  out.append(1024, '\0');
  return out;
}

void write_tar_gz(const fs::path& out, const std::vector<ArchiveMember>& members) {
  const auto bytes = tar_bytes(members);
  gzFile gz = gzopen(out.c_str(), "wb");
  if (!gz) throw std::runtime_error("cannot create " + out.string());
  const bool ok = gzwrite(gz, bytes.data(), static_cast<unsigned>(bytes.size())) == static_cast<int>(bytes.size());
  gzclose(gz);
  if (!ok) throw std::runtime_error("short write to " + out.string());
}

std::vector<ArchiveMember> members_from_dir(const fs::path& dir, const std::string& prefix) {
  std::vector<ArchiveMember> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      out.push_back({prefix + "/" + fs::relative(e.path(), dir).generic_string(), read_file(e.path())});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("simaudit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
           std::to_string(rd()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path fixture_dir() { return SIMAUDIT_FIXTURE_DIR; }

namespace {

struct Body {
  std::string name;
  int mul;
  int add;
};

std::string render(const Body& b, int style) {
  const auto m = std::to_string(b.mul), a = std::to_string(b.add);
  switch (style) {
    case 1:
      return "    function " + b.name + "(uint256 x) public pure returns (uint256) {\n        return x * " + m +
             " + " + a + ";\n    }\n";
    case 2:
      return "    /// @notice generated\n    function " + b.name +
             "(uint256 x) public pure returns (uint256) { // body\n        /* scaled */ return x * " + m + " + " + a +
             "; // done\n    }\n";
    case 3:
      return "\tfunction " + b.name + "(uint256 x)\tpublic pure returns (uint256)\n\t{\n\t\treturn x * " + m +
             "   +   " + a + ";\n\t}\n";
    default:
      return "    function " + b.name + "(uint256 x) public pure returns (uint256) { return x * " + m + " + " + a +
             "; }\n";
  }
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(std::size_t total, std::size_t duplicates, unsigned seed) {
  if (duplicates > total || (duplicates > 0 && duplicates == total))
    throw std::invalid_argument("need at least one original per duplicate set");
  std::mt19937 rng(seed);
  const std::size_t originals = total - duplicates;
  std::vector<Body> bodies;
  for (std::size_t i = 0; i < originals; ++i)
    bodies.push_back({"f" + std::to_string(i), static_cast<int>(rng() % 97) + 1, static_cast<int>(rng() % 1000)});

  // Every original once (style 0..3), then duplicates of random originals
  // in a different style, then a shuffle.
  std::vector<std::pair<std::size_t, int>> placements;
  for (std::size_t i = 0; i < originals; ++i) placements.emplace_back(i, static_cast<int>(rng() % 4));
  for (std::size_t i = 0; i < duplicates; ++i) placements.emplace_back(rng() % originals, static_cast<int>(rng() % 4));
  std::shuffle(placements.begin(), placements.end(), rng);

  SyntheticCorpus out;
  out.total = total;
  out.distinct = originals;
  const std::size_t packages = 4, files_per_package = 3;
  for (std::size_t p = 0; p < packages; ++p)
    out.archives.push_back({"synthetic-lib" + std::to_string(p), "1." + std::to_string(p) + ".0", {}});
  std::vector<std::string> files(packages * files_per_package);
  for (std::size_t i = 0; i < placements.size(); ++i)
    files[i % files.size()] += render(bodies[placements[i].first], placements[i].second);
  for (std::size_t f = 0; f < files.size(); ++f) {
    auto& archive = out.archives[f / files_per_package];
    const auto contract = "Gen" + std::to_string(f);
    archive.members.push_back({"package/contracts/" + contract + ".sol",
                               "pragma solidity ^0.8.0;\n\ncontract " + contract + " {\n" + files[f] + "}\n"});
  }
  for (auto& a : out.archives) a.members.push_back({"package/README.md", "generated\n"});
  return out;
}

void write_synthetic_archives(const SyntheticCorpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& a : corpus.archives) write_tar_gz(dir / (a.package + "-" + a.version + ".tar.gz"), a.members);
}

CorpusIndex e2e_index(EmbeddingProvider& embedder) {
  CorpusIndex index;
  std::vector<std::pair<std::string, std::string>> files;
  for (auto& m : members_from_dir(fixture_dir() / "e2e/reference", "openzeppelin-contracts-2.5.0"))
    files.emplace_back(std::move(m.path), std::move(m.contents));
  ingest_sources(files, "openzeppelin-contracts", "2.5.0", index);
  embed_corpus(index, embedder);
  return index;
}

std::vector<SourceFile> e2e_target_sources() {
  std::vector<SourceFile> out;
  for (auto& m : members_from_dir(fixture_dir() / "e2e/target", "target")) out.push_back({m.path, m.contents});
  return out;
}

}  // namespace simaudit::testing
