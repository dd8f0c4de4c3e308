#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace adsep::dsp {

// Real-input FFT of fixed size backed by an FFTW plan. Not shareable across
// threads; construct one per worker. Plan creation is serialised internally.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t num_bins() const { return size_ / 2 + 1; }

  // Onesided forward transform, no scaling: X[k] = sum_n x[n] e^{-2 pi i k n / N}.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);

  // Inverse of forward including the 1/N factor. Imaginary parts of the DC and
  // Nyquist bins are ignored.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t size_;
  double* real_buf_ = nullptr;
  void* complex_buf_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

// Full linear convolution, length a.size() + b.size() - 1.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

}  // namespace adsep::dsp
