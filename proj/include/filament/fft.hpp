#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace filament {

// In-place complex FFT of fixed length backed by FFTW. Plans are created
// under a global lock (the FFTW planner is not thread safe); execution is
// reentrant per instance. `inverse` includes the 1/n normalization.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::size_t size() const { return n_; }
  void forward(std::span<std::complex<double>> data);
  void inverse(std::span<std::complex<double>> data);

 private:
  struct Impl;
  std::size_t n_ = 0;
  std::unique_ptr<Impl> impl_;
};

}  // namespace filament
