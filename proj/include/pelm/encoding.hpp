#pragma once

// Dense phase-mask encoding of sparse document vectors: zero-pad to a power
// of two, apply the fast Walsh-Hadamard transform, normalize into [0, pi]
// and reshape row-major onto a square grid of modulator modes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <vector>

#include "pelm/detail/io.hpp"
#include "pelm/error.hpp"

namespace pelm {

/// Square grid of phases in [0, pi], one per modulator mode.
struct phase_mask {
  int side = 0;
  std::vector<double> phases;  // row-major, side*side entries
};

/// Frozen encoding geometry and normalization bounds. The bounds are fitted
/// on the training split only; vectors outside them clamp.
struct encoding_config {
  std::size_t padded_length = 0;  // 2^d with d = ceil(log2 V)
  int side = 0;                   // floor(sqrt(padded_length))
  double lo = 0.0;
  double hi = 0.0;
};

inline std::size_t padded_pow2_length(std::size_t v) {
  if (v == 0) fail_internal("padded_pow2_length: empty vector");
  std::size_t n = 1;
  while (n < v) n <<= 1;
  return n;
}

inline int mask_side_for(std::size_t padded_length) {
  return static_cast<int>(std::floor(std::sqrt(static_cast<double>(padded_length))));
}

inline encoding_config make_encoding_config(std::size_t vocab_size) {
  encoding_config cfg;
  cfg.padded_length = padded_pow2_length(vocab_size);
  cfg.side = mask_side_for(cfg.padded_length);
  return cfg;
}

inline std::vector<double> pad_to_pow2(std::span<const double> v) {
  std::vector<double> out(padded_pow2_length(v.size()), 0.0);
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

/// In-place unnormalized Walsh-Hadamard transform (Sylvester order, +-1
/// entries), O(L log L). Length must be a power of two.
inline void fwht_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (n == 0 || (n & (n - 1)) != 0)
    fail_internal("fwht: length is not a power of two");
  for (std::size_t len = 1; len < n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += len << 1) {
      for (std::size_t j = i; j < i + len; ++j) {
        const double a = v[j];
        const double b = v[j + len];
        v[j] = a + b;
        v[j + len] = a - b;
      }
    }
  }
}

inline std::vector<double> fwht(std::vector<double> v) {
  fwht_inplace(v);
  return v;
}

/// Affine map onto [0, pi] with clamping, then row-major reshape to
/// side x side. Entries beyond side^2 are discarded.
inline phase_mask to_phase_mask(std::span<const double> w, const encoding_config& cfg) {
  if (!(cfg.lo < cfg.hi)) fail_internal("to_phase_mask: degenerate bounds");
  const std::size_t need = static_cast<std::size_t>(cfg.side) * cfg.side;
  if (w.size() < need) fail_internal("to_phase_mask: vector shorter than side^2");
  phase_mask mask;
  mask.side = cfg.side;
  mask.phases.resize(need);
  const double scale = std::numbers::pi / (cfg.hi - cfg.lo);
  for (std::size_t i = 0; i < need; ++i) {
    const double p = (w[i] - cfg.lo) * scale;
    mask.phases[i] = std::clamp(p, 0.0, std::numbers::pi);
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Mask cache: header (magic, version, side, count) + raw 64-bit LE phases.

namespace detail {
constexpr std::uint64_t mask_cache_magic = 0x314b534d4d4c4550ull;  // "PELMMSK1"
}

class mask_cache_writer {
 public:
  mask_cache_writer(const std::filesystem::path& path, int side)
      : os_(detail::open_out(path)), side_(side), path_(path) {
    detail::write_pod(os_, detail::mask_cache_magic);
    detail::write_pod(os_, static_cast<std::uint32_t>(side));
    detail::write_pod(os_, std::uint64_t{0});  // count; patched in close()
  }

  void append(const phase_mask& m) {
    if (m.side != side_) fail_internal("mask cache: side mismatch");
    detail::write_bytes(os_, m.phases.data(), m.phases.size() * sizeof(double));
    ++count_;
  }

  void close() {
    os_.seekp(sizeof(std::uint64_t) + sizeof(std::uint32_t));
    detail::write_pod(os_, count_);
    os_.close();
    if (!os_) fail_io("failed writing mask cache: " + path_.string());
  }

 private:
  std::ofstream os_;
  int side_;
  std::filesystem::path path_;
  std::uint64_t count_ = 0;
};

/// Random-access reader over a mask cache file.
class mask_cache_reader {
 public:
  explicit mask_cache_reader(const std::filesystem::path& path)
      : is_(detail::open_in(path)), path_(path) {
    const auto magic = detail::read_pod<std::uint64_t>(is_, "mask cache magic");
    if (magic != detail::mask_cache_magic)
      fail_validation("not a mask cache (bad magic): " + path.string());
    side_ = static_cast<int>(detail::read_pod<std::uint32_t>(is_, "mask cache side"));
    count_ = detail::read_pod<std::uint64_t>(is_, "mask cache count");
    if (side_ <= 0) fail_validation("mask cache: invalid side");
    const auto expected = header_bytes() +
        count_ * static_cast<std::uint64_t>(side_) * side_ * sizeof(double);
    is_.seekg(0, std::ios::end);
    if (static_cast<std::uint64_t>(is_.tellg()) != expected)
      fail_validation("mask cache size mismatch (corrupt?): " + path.string());
  }

  int side() const noexcept { return side_; }
  std::uint64_t count() const noexcept { return count_; }

  phase_mask at(std::uint64_t index) {
    if (index >= count_) fail_internal("mask cache: index out of range");
    const std::uint64_t stride =
        static_cast<std::uint64_t>(side_) * side_ * sizeof(double);
    is_.seekg(static_cast<std::streamoff>(header_bytes() + index * stride));
    phase_mask m;
    m.side = side_;
    m.phases.resize(static_cast<std::size_t>(side_) * side_);
    detail::read_bytes(is_, m.phases.data(), m.phases.size() * sizeof(double),
                       "mask cache payload");
    return m;
  }

 private:
  static constexpr std::uint64_t header_bytes() {
    return sizeof(std::uint64_t) + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  }

  std::ifstream is_;
  std::filesystem::path path_;
  int side_ = 0;
  std::uint64_t count_ = 0;
};

}  // namespace pelm
