#include "filament/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "filament/error.hpp"

namespace filament {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct Fft::Impl {
  fftw_complex* buffer = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  explicit Impl(std::size_t n) {
    std::lock_guard lock(planner_mutex());
    buffer = fftw_alloc_complex(n);
    require(buffer != nullptr, ErrorCode::InvalidParameter, "FFT buffer allocation failed");
    const int len = static_cast<int>(n);
    fwd = fftw_plan_dft_1d(len, buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(len, buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    fftw_free(buffer);
  }

  void run(fftw_plan plan, std::span<std::complex<double>> data) {
    std::memcpy(buffer, data.data(), data.size_bytes());
    fftw_execute(plan);
    std::memcpy(static_cast<void*>(data.data()), buffer, data.size_bytes());
  }
};

Fft::Fft(std::size_t n) : n_(n) {
  require(n > 0, ErrorCode::InvalidParameter, "FFT length must be > 0");
  impl_ = std::make_unique<Impl>(n);
}

Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(std::span<std::complex<double>> data) {
  require(data.size() == n_, ErrorCode::GridMismatch, "FFT length mismatch");
  impl_->run(impl_->fwd, data);
}

void Fft::inverse(std::span<std::complex<double>> data) {
  require(data.size() == n_, ErrorCode::GridMismatch, "FFT length mismatch");
  impl_->run(impl_->bwd, data);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& z : data) z *= scale;
}

}  // namespace filament
