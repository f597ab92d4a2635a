#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace simaudit {

struct ArchiveMember {
  std::string path;
  std::string contents;
};

/// Regular-file members of a gzip-compressed tar archive, in archive order.
/// Understands ustar prefixes, GNU long names and pax `path` records.
/// Throws Error(ArchiveCorrupt) on bad gzip data, checksum failures or
/// truncation, and Error(Io) when the file cannot be read.
std::vector<ArchiveMember> read_tar_gz(const std::filesystem::path& archive);

/// Decompresses a whole gzip stream held in memory.
std::string gunzip(const std::string& compressed, const std::string& label);

}  // namespace simaudit
