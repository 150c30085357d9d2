#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>

namespace flatscan {

/// Serialize a double with 17 significant digits (enough to round-trip any
/// IEEE double), locale-independent. Used for every float written to disk.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& token, bool& ok) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t' ||
                          *(last - 1) == '\r'))
    --last;
  auto res = std::from_chars(first, last, v);
  ok = res.ec == std::errc() && res.ptr == last && first != last;
  return v;
}

/// Write a file atomically: write to a sibling temp path, then rename over
/// the target so readers never observe a partial file.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " + tmp.string());
    }
    out.write(contents.data(),
              static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace flatscan
