#pragma once

// Coherent scalar-field simulation of the photonic feature map: phase
// encoding of (mask + embedding) on a modulator, unitary propagation to one
// or more detection planes, square-law detection with optional bit-depth
// quantization, and block binning of pixels into output channels.
//
// Propagation model ("angular-spectrum" mode): the modulator field is
// zero-padded onto the detector grid, transformed to the lens far field,
// then advanced by the longitudinal offset z of each plane by applying the
// quadratic Fresnel factor exp(-i pi lambda z f^2) in the spectral domain.
// Planes separated by more than the longitudinal speckle correlation length
// produce decorrelated intensity patterns. A seeded structured random
// unitary (phase diagonal followed by a DFT) is available as a fast,
// physics-free stand-in.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pelm/detail/io.hpp"
#include "pelm/encoding.hpp"
#include "pelm/error.hpp"
#include "pelm/fft.hpp"
#include "pelm/rng.hpp"

namespace pelm {

struct beam_geometry {
  double wavelength = 532e-9;  // meters
  double pitch = 12.5e-6;      // modulator mode spacing, meters
};

/// Fixed random bias pattern superimposed on every mask, i.i.d. uniform on
/// [0, pi]. One instance is shared by all samples and planes of a run.
struct embedding_matrix {
  int side = 0;
  std::vector<double> values;  // row-major
  std::uint64_t seed = 0;

  static embedding_matrix uniform(int side, std::uint64_t seed) {
    if (side <= 0) fail_config("embedding side must be positive");
    embedding_matrix w;
    w.side = side;
    w.seed = seed;
    w.values.resize(static_cast<std::size_t>(side) * side);
    rng gen(seed);
    for (double& v : w.values) v = gen.uniform(0.0, std::numbers::pi);
    return w;
  }
};

struct optical_field {
  int side = 0;
  beam_geometry geom;
  std::vector<std::complex<double>> grid;  // row-major

  double energy() const {
    double e = 0.0;
    for (const auto& z : grid) e += std::norm(z);
    return e;
  }
};

enum class propagation_mode { angular_spectrum, random_unitary };

inline propagation_mode parse_propagation_mode(const std::string& s) {
  if (s == "angular-spectrum") return propagation_mode::angular_spectrum;
  if (s == "random-unitary") return propagation_mode::random_unitary;
  fail_config("unknown propagation mode: " + s +
              " (expected angular-spectrum|random-unitary)");
}

inline std::string to_string(propagation_mode m) {
  return m == propagation_mode::angular_spectrum ? "angular-spectrum"
                                                 : "random-unitary";
}

/// One detection plane: longitudinal offset from the focal plane, detector
/// bit depth (0 = full precision), propagation mode and detector grid side
/// (0 = same as the input field).
struct plane_spec {
  int plane_id = 0;
  double distance = 0.0;  // meters
  int detector_bits = 0;
  propagation_mode mode = propagation_mode::angular_spectrum;
  int detector_grid = 0;

  void validate() const {
    if (detector_bits != 0 && detector_bits != 8 && detector_bits != 12)
      fail_config("detector_bits must be one of 0, 8, 12");
    if (mode == propagation_mode::angular_spectrum && distance <= 0.0)
      fail_config("plane distance must be positive in angular-spectrum mode");
    if (detector_grid < 0) fail_config("detector_grid must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Field synthesis

/// exp(i(x + w)) entrywise, after quantizing the displayed phase to the
/// modulator's 2^slm_bits levels over [0, 2pi). slm_bits = 0 disables
/// quantization.
inline optical_field synthesize_field(const phase_mask& x,
                                      const embedding_matrix& w,
                                      beam_geometry geom = {},
                                      int slm_bits = 8) {
  if (x.side != w.side) fail_validation("mask/embedding shape mismatch");
  optical_field f;
  f.side = x.side;
  f.geom = geom;
  f.grid.resize(x.phases.size());
  const double two_pi = 2.0 * std::numbers::pi;
  const double levels = slm_bits > 0 ? static_cast<double>(1ull << slm_bits) : 0.0;
  for (std::size_t i = 0; i < x.phases.size(); ++i) {
    double phi = x.phases[i] + w.values[i];
    if (slm_bits > 0) {
      double level = std::round(phi / two_pi * levels);
      if (level >= levels) level -= levels;  // 2pi wraps to 0
      phi = level * (two_pi / levels);
    }
    f.grid[i] = std::polar(1.0, phi);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Propagation

namespace detail {

inline std::uint64_t plane_stream_seed(const plane_spec& p) {
  // derived from the distance bit pattern so equal-z planes share a transform
  std::uint64_t s = std::bit_cast<std::uint64_t>(p.distance);
  return derive_seed(s, 0x52554e49u);
}

}  // namespace detail

/// Unitary transport of a field to one detection plane. Caches the FFT
/// plans and the spectral kernel so it can be reused across samples.
class plane_propagator {
 public:
  plane_propagator(int field_side, const plane_spec& plane, beam_geometry geom)
      : plane_(plane),
        in_side_(field_side),
        grid_(plane.detector_grid > 0 ? plane.detector_grid : field_side),
        fft_(grid_) {
    plane.validate();
    if (grid_ < field_side)
      fail_config("detector_grid smaller than the input field");
    const std::size_t n = static_cast<std::size_t>(grid_) * grid_;
    kernel_.resize(n);
    if (plane_.mode == propagation_mode::angular_spectrum) {
      // spectral chirp exp(-i pi lambda z (fx^2 + fy^2))
      std::vector<double> f2(static_cast<std::size_t>(grid_));
      for (int m = 0; m < grid_; ++m) {
        const int k = m <= grid_ / 2 ? m : m - grid_;
        const double f = static_cast<double>(k) /
                         (static_cast<double>(grid_) * geom.pitch);
        f2[static_cast<std::size_t>(m)] = f * f;
      }
      const double c = -std::numbers::pi * geom.wavelength * plane_.distance;
      for (int r = 0; r < grid_; ++r)
        for (int col = 0; col < grid_; ++col)
          kernel_[static_cast<std::size_t>(r) * grid_ + col] =
              std::polar(1.0, c * (f2[r] + f2[col]));
    } else {
      rng gen(detail::plane_stream_seed(plane_));
      for (auto& k : kernel_)
        k = std::polar(1.0, gen.uniform(0.0, 2.0 * std::numbers::pi));
    }
    work1_.resize(n);
    work2_.resize(n);
  }

  int detector_side() const noexcept { return grid_; }
  const plane_spec& plane() const noexcept { return plane_; }

  /// out must hold detector_side()^2 entries.
  void run(const optical_field& in, std::span<std::complex<double>> out) {
    if (in.side != in_side_) fail_validation("field side changed under propagator");
    const std::size_t n = static_cast<std::size_t>(grid_) * grid_;
    if (out.size() != n) fail_internal("propagator output size mismatch");
    // center the modulator field on the detector grid
    std::fill(work1_.begin(), work1_.end(), std::complex<double>{});
    const int off = (grid_ - in_side_) / 2;
    for (int r = 0; r < in_side_; ++r)
      std::copy_n(in.grid.data() + static_cast<std::size_t>(r) * in_side_,
                  in_side_,
                  work1_.data() + static_cast<std::size_t>(r + off) * grid_ + off);
    if (plane_.mode == propagation_mode::angular_spectrum) {
      fft_.forward(work1_, work2_);           // lens far field
      fft_.forward(work2_, work1_);           // its spectrum
      for (std::size_t i = 0; i < n; ++i) work1_[i] *= kernel_[i];
      fft_.inverse(work1_, out);              // back to the detection plane
    } else {
      for (std::size_t i = 0; i < n; ++i) work1_[i] *= kernel_[i];
      fft_.forward(work1_, out);
    }
  }

 private:
  plane_spec plane_;
  int in_side_;
  int grid_;
  fft2d fft_;
  std::vector<std::complex<double>> kernel_;
  std::vector<std::complex<double>> work1_, work2_;
};

/// One-shot propagation. For mapping whole datasets prefer map_dataset,
/// which reuses plans across samples.
inline optical_field propagate(const optical_field& field, const plane_spec& plane) {
  plane_propagator prop(field.side, plane, field.geom);
  optical_field out;
  out.side = prop.detector_side();
  out.geom = field.geom;
  out.grid.resize(static_cast<std::size_t>(out.side) * out.side);
  prop.run(field, out.grid);
  return out;
}

// ---------------------------------------------------------------------------
// Detection and binning

/// Square-law detection. With detector_bits = b > 0 the intensities are
/// normalized by `calibration_max` (per-plane maximum over a fixed
/// calibration batch), clamped to [0, 1] and rounded onto 2^b uniform
/// levels.
inline std::vector<double> detect(const optical_field& field,
                                  const plane_spec& plane,
                                  double calibration_max = 0.0) {
  std::vector<double> intensity(field.grid.size());
  for (std::size_t i = 0; i < field.grid.size(); ++i)
    intensity[i] = std::norm(field.grid[i]);
  if (plane.detector_bits > 0) {
    if (!(calibration_max > 0.0))
      fail_config("detector quantization requires a positive calibration maximum");
    const double levels = static_cast<double>((1ull << plane.detector_bits) - 1);
    for (double& v : intensity) {
      const double u = std::clamp(v / calibration_max, 0.0, 1.0);
      v = std::round(u * levels) / levels;
    }
  }
  return intensity;
}

/// Mean intensity over block x block tiles; trailing rows/columns that do
/// not fill a block are dropped. Channel count is (side / block)^2.
inline std::vector<double> bin_channels(std::span<const double> intensity,
                                        int side, int block) {
  if (block <= 0) fail_config("bin block must be positive");
  if (static_cast<std::size_t>(side) * side != intensity.size())
    fail_internal("bin_channels: side^2 != intensity size");
  const int nb = side / block;
  if (nb == 0) fail_config("bin block exceeds the grid side");
  std::vector<double> channels(static_cast<std::size_t>(nb) * nb, 0.0);
  const double inv = 1.0 / (static_cast<double>(block) * block);
  for (int br = 0; br < nb; ++br) {
    for (int bc = 0; bc < nb; ++bc) {
      double acc = 0.0;
      for (int r = br * block; r < (br + 1) * block; ++r)
        for (int c = bc * block; c < (bc + 1) * block; ++c)
          acc += intensity[static_cast<std::size_t>(r) * side + c];
      channels[static_cast<std::size_t>(br) * nb + bc] = acc * inv;
    }
  }
  return channels;
}

// ---------------------------------------------------------------------------
// Dataset mapping

/// Column provenance: which plane and which binned block produced it.
struct channel_ref {
  int plane_id = 0;
  int block_row = 0;
  int block_col = 0;
};

struct feature_matrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<float> data;  // row-major
  std::vector<channel_ref> channel_map;
  std::vector<plane_spec> planes;
  std::vector<double> calibration_max;  // per plane; 0 when unquantized
  int block = 1;
  int slm_bits = 8;
  double noise_std = 0.0;
  std::uint64_t embedding_seed = 0;
  std::uint64_t noise_seed = 0;
  std::uint64_t fingerprint = 0;

  float at(std::int64_t r, std::int64_t c) const {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + c];
  }
  std::span<const float> row(std::int64_t r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols,
            static_cast<std::size_t>(cols)};
  }
};

struct mapping_options {
  int block = 1;
  int slm_bits = 8;
  beam_geometry geom{};
  double noise_std = 0.0;  // additive Gaussian on intensities, 0 = off
  std::uint64_t noise_seed = 0;
  std::int64_t calibration_batch = 256;
  std::vector<std::int64_t> calibration_rows;  // overrides the default batch
  int threads = 0;                             // 0 = hardware concurrency
};

namespace detail {

inline void add_detector_noise(std::vector<double>& intensity,
                               double noise_std, std::uint64_t noise_seed,
                               std::int64_t row, std::size_t plane_index,
                               std::size_t n_planes) {
  if (noise_std <= 0.0) return;
  rng gen(derive_seed(noise_seed,
                      static_cast<std::uint64_t>(row) * n_planes + plane_index));
  for (double& v : intensity)
    v = std::max(0.0, v + noise_std * gen.gaussian());
}

inline void quantize_levels(std::span<double> values, int bits, double ref_max) {
  const double levels = static_cast<double>((1ull << bits) - 1);
  for (double& v : values) {
    const double u = std::clamp(v / ref_max, 0.0, 1.0);
    v = std::round(u * levels) / levels;
  }
}

}  // namespace detail

/// Map a dataset of masks through the multi-plane optical pipeline. Row i of
/// the result concatenates, plane by plane, the binned channels of
/// detect(propagate(synthesize_field(mask_i, w))).
///
/// With quantized planes, detection is calibrated per plane by the maximum
/// raw pixel intensity over a fixed batch of rows, pixels are rounded to the
/// detector levels, and the binned channel values are rounded onto the same
/// grid so every stored feature is one of the 2^b representable values.
///
/// Rows are independent; the computation is parallelized over samples with
/// the output laid out strictly in input order.
inline feature_matrix map_dataset(
    const std::function<phase_mask(std::int64_t)>& mask_at, std::int64_t count,
    const embedding_matrix& w, const std::vector<plane_spec>& planes,
    const mapping_options& opts = {}) {
  if (count <= 0) fail_validation("map_dataset: empty mask set");
  if (planes.empty()) fail_config("map_dataset: need at least one plane");
  for (const auto& p : planes) p.validate();

  feature_matrix fm;
  fm.rows = count;
  fm.planes = planes;
  fm.block = opts.block;
  fm.slm_bits = opts.slm_bits;
  fm.noise_std = opts.noise_std;
  fm.embedding_seed = w.seed;
  fm.noise_seed = opts.noise_seed;

  // channel layout
  std::vector<int> det_side(planes.size());
  std::vector<int> nb(planes.size());
  std::vector<std::int64_t> col_offset(planes.size() + 1, 0);
  for (std::size_t j = 0; j < planes.size(); ++j) {
    det_side[j] = planes[j].detector_grid > 0 ? planes[j].detector_grid : w.side;
    fm.planes[j].detector_grid = det_side[j];  // persist the resolved grid
    if (opts.block <= 0) fail_config("bin block must be positive");
    nb[j] = det_side[j] / opts.block;
    if (nb[j] == 0) fail_config("bin block exceeds the detector grid");
    col_offset[j + 1] =
        col_offset[j] + static_cast<std::int64_t>(nb[j]) * nb[j];
  }
  fm.cols = col_offset[planes.size()];
  fm.channel_map.reserve(static_cast<std::size_t>(fm.cols));
  for (std::size_t j = 0; j < planes.size(); ++j)
    for (int br = 0; br < nb[j]; ++br)
      for (int bc = 0; bc < nb[j]; ++bc)
        fm.channel_map.push_back({planes[j].plane_id, br, bc});
  fm.data.resize(static_cast<std::size_t>(fm.rows) *
                 static_cast<std::size_t>(fm.cols));

  const bool any_quantized =
      std::any_of(planes.begin(), planes.end(),
                  [](const plane_spec& p) { return p.detector_bits > 0; });

  struct worker_state {
    std::vector<plane_propagator> props;
    std::vector<std::complex<double>> field_out;
    std::vector<double> intensity;
  };
  const auto make_state = [&] {
    worker_state st;
    st.props.reserve(planes.size());
    for (const auto& p : planes) st.props.emplace_back(w.side, p, opts.geom);
    return st;
  };

  // raw per-plane intensities of one row
  const auto raw_intensity = [&](worker_state& st, std::int64_t row,
                                 std::size_t j, std::vector<double>& out) {
    const phase_mask mask = mask_at(row);
    const optical_field field =
        synthesize_field(mask, w, opts.geom, opts.slm_bits);
    const std::size_t n =
        static_cast<std::size_t>(det_side[j]) * det_side[j];
    st.field_out.resize(n);
    st.props[j].run(field, st.field_out);
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::norm(st.field_out[i]);
    detail::add_detector_noise(out, opts.noise_std, opts.noise_seed, row, j,
                               planes.size());
  };

  // calibration pass: per-plane max over the batch
  fm.calibration_max.assign(planes.size(), 0.0);
  if (any_quantized) {
    std::vector<std::int64_t> batch = opts.calibration_rows;
    if (batch.empty()) {
      const std::int64_t n = std::min<std::int64_t>(opts.calibration_batch, count);
      if (n <= 0) fail_config("calibration batch is empty");
      batch.resize(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) batch[static_cast<std::size_t>(i)] = i;
    }
    worker_state st = make_state();
    std::vector<double> intensity;
    for (std::int64_t row : batch) {
      if (row < 0 || row >= count) fail_config("calibration row out of range");
      for (std::size_t j = 0; j < planes.size(); ++j) {
        if (planes[j].detector_bits == 0) continue;
        raw_intensity(st, row, j, intensity);
        for (double v : intensity)
          fm.calibration_max[j] = std::max(fm.calibration_max[j], v);
      }
    }
    for (std::size_t j = 0; j < planes.size(); ++j)
      if (planes[j].detector_bits > 0 && !(fm.calibration_max[j] > 0.0))
        fail_validation("calibration produced a zero intensity maximum");
  }

  const auto process_row = [&](worker_state& st, std::int64_t row) {
    float* out_row =
        fm.data.data() + static_cast<std::size_t>(row) * fm.cols;
    const phase_mask mask = mask_at(row);
    const optical_field field =
        synthesize_field(mask, w, opts.geom, opts.slm_bits);
    for (std::size_t j = 0; j < planes.size(); ++j) {
      const std::size_t n =
          static_cast<std::size_t>(det_side[j]) * det_side[j];
      st.field_out.resize(n);
      st.props[j].run(field, st.field_out);
      st.intensity.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        st.intensity[i] = std::norm(st.field_out[i]);
      detail::add_detector_noise(st.intensity, opts.noise_std, opts.noise_seed,
                                 row, j, planes.size());
      const int bits = planes[j].detector_bits;
      if (bits > 0)
        detail::quantize_levels(st.intensity, bits, fm.calibration_max[j]);
      std::vector<double> channels =
          bin_channels(st.intensity, det_side[j], opts.block);
      // binned pixel means live in [0,1] here; snap them back onto the
      // detector's representable levels
      if (bits > 0) detail::quantize_levels(channels, bits, 1.0);
      float* dst = out_row + col_offset[j];
      for (std::size_t i = 0; i < channels.size(); ++i)
        dst[i] = static_cast<float>(channels[i]);
    }
  };

  int n_threads = opts.threads > 0
                      ? opts.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = static_cast<int>(
      std::min<std::int64_t>(n_threads, count));
  if (n_threads == 1) {
    worker_state st = make_state();
    for (std::int64_t row = 0; row < count; ++row) process_row(st, row);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          worker_state st = make_state();
          for (std::int64_t row = t; row < count; row += n_threads)
            process_row(st, row);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return fm;
}

/// Convenience overload over an in-memory mask list.
inline feature_matrix map_dataset(const std::vector<phase_mask>& masks,
                                  const embedding_matrix& w,
                                  const std::vector<plane_spec>& planes,
                                  const mapping_options& opts = {}) {
  return map_dataset(
      [&masks](std::int64_t i) { return masks[static_cast<std::size_t>(i)]; },
      static_cast<std::int64_t>(masks.size()), w, planes, opts);
}

// ---------------------------------------------------------------------------
// Persistence: binary payload + JSON sidecar

namespace detail {
constexpr std::uint64_t feature_magic = 0x3152544646504c45ull;  // "ELPFFTR1"
}

inline void save_feature_matrix(const std::filesystem::path& path,
                                const feature_matrix& fm) {
  auto os = detail::open_out(path);
  detail::write_pod(os, detail::feature_magic);
  detail::write_pod(os, std::uint32_t{1});
  detail::write_pod(os, static_cast<std::uint64_t>(fm.rows));
  detail::write_pod(os, static_cast<std::uint64_t>(fm.cols));
  detail::write_pod(os, static_cast<std::int32_t>(fm.block));
  detail::write_pod(os, static_cast<std::int32_t>(fm.slm_bits));
  detail::write_pod(os, fm.noise_std);
  detail::write_pod(os, fm.embedding_seed);
  detail::write_pod(os, fm.noise_seed);
  detail::write_pod(os, fm.fingerprint);
  detail::write_pod(os, static_cast<std::uint32_t>(fm.planes.size()));
  for (std::size_t j = 0; j < fm.planes.size(); ++j) {
    const auto& p = fm.planes[j];
    detail::write_pod(os, static_cast<std::int32_t>(p.plane_id));
    detail::write_pod(os, p.distance);
    detail::write_pod(os, static_cast<std::int32_t>(p.detector_bits));
    detail::write_pod(os, static_cast<std::int32_t>(
                              p.mode == propagation_mode::angular_spectrum ? 0 : 1));
    detail::write_pod(os, static_cast<std::int32_t>(p.detector_grid));
    detail::write_pod(os, fm.calibration_max[j]);
  }
  detail::write_bytes(os, fm.data.data(), fm.data.size() * sizeof(float));
  os.close();
  if (!os) fail_io("failed writing " + path.string());

  nlohmann::json side;
  side["rows"] = fm.rows;
  side["cols"] = fm.cols;
  side["block"] = fm.block;
  side["slm_bits"] = fm.slm_bits;
  side["noise_std"] = fm.noise_std;
  side["embedding_seed"] = fm.embedding_seed;
  side["noise_seed"] = fm.noise_seed;
  side["fingerprint"] = detail::hex64(fm.fingerprint);
  side["planes"] = nlohmann::json::array();
  for (std::size_t j = 0; j < fm.planes.size(); ++j) {
    const auto& p = fm.planes[j];
    side["planes"].push_back({{"plane_id", p.plane_id},
                              {"distance", p.distance},
                              {"detector_bits", p.detector_bits},
                              {"mode", to_string(p.mode)},
                              {"detector_grid", p.detector_grid},
                              {"calibration_max", fm.calibration_max[j]}});
  }
  auto channels = nlohmann::json::array();
  for (const auto& c : fm.channel_map)
    channels.push_back({c.plane_id, c.block_row, c.block_col});
  side["channel_map"] = std::move(channels);
  auto js = detail::open_out(path.string() + ".json", /*binary=*/false);
  js << side.dump(2) << '\n';
  if (!js) fail_io("failed writing sidecar for " + path.string());
}

inline feature_matrix load_feature_matrix(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  const auto magic = detail::read_pod<std::uint64_t>(is, "feature magic");
  if (magic != detail::feature_magic)
    fail_validation("not a feature matrix (bad magic): " + path.string());
  const auto version = detail::read_pod<std::uint32_t>(is, "feature version");
  if (version != 1)
    fail_validation("unsupported feature file version in " + path.string());
  feature_matrix fm;
  fm.rows = static_cast<std::int64_t>(detail::read_pod<std::uint64_t>(is, "rows"));
  fm.cols = static_cast<std::int64_t>(detail::read_pod<std::uint64_t>(is, "cols"));
  fm.block = detail::read_pod<std::int32_t>(is, "block");
  fm.slm_bits = detail::read_pod<std::int32_t>(is, "slm bits");
  fm.noise_std = detail::read_pod<double>(is, "noise std");
  fm.embedding_seed = detail::read_pod<std::uint64_t>(is, "embedding seed");
  fm.noise_seed = detail::read_pod<std::uint64_t>(is, "noise seed");
  fm.fingerprint = detail::read_pod<std::uint64_t>(is, "fingerprint");
  const auto n_planes = detail::read_pod<std::uint32_t>(is, "plane count");
  if (fm.rows <= 0 || fm.cols <= 0 || n_planes == 0)
    fail_validation("feature matrix header is corrupt: " + path.string());
  fm.planes.resize(n_planes);
  fm.calibration_max.resize(n_planes);
  std::int64_t cols_check = 0;
  for (std::uint32_t j = 0; j < n_planes; ++j) {
    auto& p = fm.planes[j];
    p.plane_id = detail::read_pod<std::int32_t>(is, "plane id");
    p.distance = detail::read_pod<double>(is, "plane distance");
    p.detector_bits = detail::read_pod<std::int32_t>(is, "plane bits");
    p.mode = detail::read_pod<std::int32_t>(is, "plane mode") == 0
                 ? propagation_mode::angular_spectrum
                 : propagation_mode::random_unitary;
    p.detector_grid = detail::read_pod<std::int32_t>(is, "plane grid");
    fm.calibration_max[j] = detail::read_pod<double>(is, "calibration max");
    if (fm.block <= 0 || p.detector_grid < 0)
      fail_validation("feature matrix header is corrupt: " + path.string());
    const std::int64_t nb = p.detector_grid / std::max(fm.block, 1);
    cols_check += nb * nb;
    for (int br = 0; br < nb; ++br)
      for (int bc = 0; bc < nb; ++bc)
        fm.channel_map.push_back({p.plane_id, br, bc});
  }
  if (cols_check != fm.cols)
    fail_validation("feature matrix channel layout mismatch: " + path.string());
  fm.data.resize(static_cast<std::size_t>(fm.rows) *
                 static_cast<std::size_t>(fm.cols));
  detail::read_bytes(is, fm.data.data(), fm.data.size() * sizeof(float),
                     "feature payload");
  char extra;
  is.read(&extra, 1);
  if (!is.eof()) fail_validation("trailing bytes in " + path.string());
  return fm;
}

}  // namespace pelm
