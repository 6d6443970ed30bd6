#pragma once

// Small binary-file and hashing helpers shared by the persistence code.
// All binary layouts are little-endian regardless of host order.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pelm/error.hpp"

namespace pelm::detail {

static_assert(std::endian::native == std::endian::little,
              "binary file layouts assume a little-endian host");

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* p, std::size_t n,
                       const std::string& what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    fail_validation("truncated file while reading " + what);
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  write_bytes(os, &v, sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& what) {
  T v{};
  read_bytes(is, &v, sizeof(T), what);
  return v;
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary = true) {
  std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
  if (!os) fail_io("cannot open for writing: " + p.string());
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& p, bool binary = true) {
  std::ifstream is(p, binary ? std::ios::binary : std::ios::in);
  if (!is) fail_io("cannot open for reading: " + p.string());
  return is;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is = open_in(p);
  std::string out((std::istreambuf_iterator<char>(is)),
                  std::istreambuf_iterator<char>());
  return out;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::uint64_t hash_file(const std::filesystem::path& p) {
  std::ifstream is = open_in(p);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    h = fnv1a(buf, static_cast<std::size_t>(is.gcount()), h);
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest round-trip decimal form, locale-independent.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace pelm::detail
