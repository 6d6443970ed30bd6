#pragma once

#include <complex>
#include <cstring>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "pelm/error.hpp"

namespace pelm {

/// Unitary 2-D DFT of a fixed square size, backed by FFTW.
///
/// Plans are created with FFTW_ESTIMATE so the chosen algorithm depends only
/// on the transform size, which keeps results bit-identical between runs on
/// one platform. The planner is serialized behind a global mutex; execution
/// on an instance's own buffer is safe from the owning thread.
class fft2d {
 public:
  explicit fft2d(int side) : side_(side) {
    if (side <= 0) fail_internal("fft2d: non-positive side");
    const std::size_t n = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_2d(side, side, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_2d(side, side, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd_ || !inv_) fail_internal("fft2d: plan creation failed");
  }

  fft2d(const fft2d&) = delete;
  fft2d& operator=(const fft2d&) = delete;

  ~fft2d() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(buf_);
  }

  int side() const noexcept { return side_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(side_) * static_cast<std::size_t>(side_);
  }

  /// out = DFT(in) / side  (unitary normalization).
  void forward(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) {
    execute(fwd_, in, out);
  }

  /// out = IDFT(in) * side / size = conj-transform with unitary normalization.
  void inverse(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) {
    execute(inv_, in, out);
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  void execute(fftw_plan plan, std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) {
    if (in.size() != size() || out.size() != size())
      fail_internal("fft2d: buffer size mismatch");
    std::memcpy(buf_, in.data(), sizeof(fftw_complex) * size());
    fftw_execute(plan);
    const double scale = 1.0 / static_cast<double>(side_);
    const auto* src = reinterpret_cast<const std::complex<double>*>(buf_);
    for (std::size_t i = 0; i < size(); ++i) out[i] = src[i] * scale;
  }

  int side_;
  fftw_complex* buf_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

}  // namespace pelm
