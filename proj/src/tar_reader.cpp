#include "simaudit/tar_reader.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "simaudit/errors.hpp"

namespace simaudit {

namespace {

constexpr std::size_t kBlock = 512;

std::uint64_t parse_octal(const char* field, std::size_t len, const std::string& label) {
  // GNU base-256 encoding for large sizes.
  if (static_cast<unsigned char>(field[0]) & 0x80) {
    std::uint64_t v = static_cast<unsigned char>(field[0]) & 0x7f;
    for (std::size_t i = 1; i < len; ++i) v = (v << 8) | static_cast<unsigned char>(field[i]);
    return v;
  }
  std::uint64_t v = 0;
  std::size_t i = 0;
  while (i < len && (field[i] == ' ' || field[i] == '\0')) ++i;
  for (; i < len && field[i] != '\0' && field[i] != ' '; ++i) {
    if (field[i] < '0' || field[i] > '7')
      throw Error(ErrorKind::ArchiveCorrupt, label + ": bad octal field in tar header");
    v = v * 8 + static_cast<std::uint64_t>(field[i] - '0');
  }
  return v;
}

std::string field_string(const char* field, std::size_t len) {
  return std::string(field, strnlen(field, len));
}

bool checksum_ok(const char* header, const std::string& label) {
  const auto expected = parse_octal(header + 148, 8, label);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    const bool in_chksum = i >= 148 && i < 156;
    sum += in_chksum ? ' ' : static_cast<unsigned char>(header[i]);
  }
  return sum == expected;
}

std::optional<std::string> pax_path(const std::string& records) {
  std::optional<std::string> path;
  std::size_t pos = 0;
  while (pos < records.size()) {
    const auto space = records.find(' ', pos);
    if (space == std::string::npos) break;
    const auto len = std::stoul(records.substr(pos, space - pos));
    if (len == 0 || pos + len > records.size()) break;
    const auto record = records.substr(space + 1, len - (space - pos) - 2);
    if (record.rfind("path=", 0) == 0) path = record.substr(5);
    pos += len;
  }
  return path;
}

}  // namespace

std::string gunzip(const std::string& compressed, const std::string& label) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK)
    throw Error(ErrorKind::ArchiveCorrupt, label + ": cannot initialise inflate");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  std::string out;
  char buf[1 << 15];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorKind::ArchiveCorrupt, label + ": gzip data is corrupt");
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorKind::ArchiveCorrupt, label + ": gzip stream is truncated");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<ArchiveMember> read_tar_gz(const std::filesystem::path& archive) {
  const std::string label = archive.string();
  std::ifstream in(archive, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open archive " + label);
  const std::string compressed((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string tar = gunzip(compressed, label);

  std::vector<ArchiveMember> members;
  std::optional<std::string> long_name;
  std::size_t pos = 0;
  while (pos + kBlock <= tar.size()) {
    const char* h = tar.data() + pos;
    if (std::all_of(h, h + kBlock, [](char c) { return c == '\0'; })) break;
    if (!checksum_ok(h, label))
      throw Error(ErrorKind::ArchiveCorrupt, label + ": tar header checksum mismatch at offset " +
                                                 std::to_string(pos));
    const auto size = parse_octal(h + 124, 12, label);
    const char type = h[156];
    const std::size_t data = pos + kBlock;
    if (data + size > tar.size())
      throw Error(ErrorKind::ArchiveCorrupt, label + ": member data is truncated");
    std::string payload = tar.substr(data, size);
    pos = data + (size + kBlock - 1) / kBlock * kBlock;

    if (type == 'L') {
      long_name = field_string(payload.data(), payload.size());
      continue;
    }
    if (type == 'x') {
      if (auto p = pax_path(payload)) long_name = *p;
      continue;
    }
    if (type == 'g') continue;

    std::string name = field_string(h, 100);
    if (std::memcmp(h + 257, "ustar", 5) == 0) {
      const auto prefix = field_string(h + 345, 155);
      if (!prefix.empty()) name = prefix + "/" + name;
    }
    if (long_name) {
      name = *long_name;
      long_name.reset();
    }
    if (type == '0' || type == '\0' || type == '7') members.push_back({name, std::move(payload)});
  }
  if (pos + kBlock > tar.size() && pos < tar.size())
    throw Error(ErrorKind::ArchiveCorrupt, label + ": trailing partial tar block");
  return members;
}

}  // namespace simaudit
