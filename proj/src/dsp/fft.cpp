#include "adsep/dsp/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace adsep::dsp {
namespace {

// FFTW's planner and plan destruction are not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size < 2) throw std::invalid_argument("RealFft: size must be >= 2");
  std::lock_guard lock(planner_mutex());
  real_buf_ = fftw_alloc_real(size_);
  auto* cbuf = fftw_alloc_complex(num_bins());
  complex_buf_ = cbuf;
  const int n = static_cast<int>(size_);
  forward_plan_ = fftw_plan_dft_r2c_1d(n, real_buf_, cbuf, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(n, cbuf, real_buf_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_buf_);
  fftw_free(complex_buf_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.size() != size_ || out.size() != num_bins())
    throw std::invalid_argument("RealFft::forward: size mismatch");
  std::copy(in.begin(), in.end(), real_buf_);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  auto* cbuf = static_cast<fftw_complex*>(complex_buf_);
  for (std::size_t k = 0; k < num_bins(); ++k) out[k] = {cbuf[k][0], cbuf[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (in.size() != num_bins() || out.size() != size_)
    throw std::invalid_argument("RealFft::inverse: size mismatch");
  auto* cbuf = static_cast<fftw_complex*>(complex_buf_);
  for (std::size_t k = 0; k < num_bins(); ++k) {
    cbuf[k][0] = in[k].real();
    cbuf[k][1] = in[k].imag();
  }
  cbuf[0][1] = 0.0;
  if (size_ % 2 == 0) cbuf[num_bins() - 1][1] = 0.0;
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t n = 0; n < size_; ++n) out[n] = real_buf_[n] * scale;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::size_t n = 1;
  while (n < out_len) n <<= 1;
  if (n < 2) n = 2;
  RealFft fft(n);
  std::vector<double> buf(n, 0.0);
  std::vector<std::complex<double>> fa(fft.num_bins()), fb(fft.num_bins());
  std::copy(a.begin(), a.end(), buf.begin());
  fft.forward(buf, fa);
  std::fill(buf.begin(), buf.end(), 0.0);
  std::copy(b.begin(), b.end(), buf.begin());
  fft.forward(buf, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  fft.inverse(fa, buf);
  buf.resize(out_len);
  return buf;
}

}  // namespace adsep::dsp
