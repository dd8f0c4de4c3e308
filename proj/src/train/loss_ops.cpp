#include "adsep/train/loss_ops.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "adsep/graph/ops.hpp"

namespace adsep::train::inline ADSEP_REAL_NS {

using graph::Graph;
using graph::Real;
using graph::Shape;
using graph::Tensor;
using graph::Var;

namespace {

using RealComplex = std::complex<Real>;

// Direct-DFT inverse STFT and its adjoint, matching dsp::istft_channel. Only
// used when Real is wider than double, where FFTW's double plans would
// reintroduce double rounding.
struct DirectIstft {
  std::size_t n_fft, n_bins, hop, frames, length;
  std::vector<Real> window, cos_table, sin_table;
  Real norm;

  DirectIstft(const dsp::StftConfig& cfg, std::size_t frames_, std::size_t length_)
      : n_fft(cfg.fft_size), n_bins(cfg.num_bins()), hop(cfg.hop), frames(frames_),
        length(length_), window(n_fft), cos_table(n_fft), sin_table(n_fft) {
    const Real pi = std::numbers::pi_v<Real>;
    for (std::size_t n = 0; n < n_fft; ++n) {
      window[n] = std::sin(pi * static_cast<Real>(n) / static_cast<Real>(n_fft));
      const Real phase = 2 * pi * static_cast<Real>(n) / static_cast<Real>(n_fft);
      cos_table[n] = std::cos(phase);
      sin_table[n] = std::sin(phase);
    }
    Real gain = 0;
    for (std::size_t m = hop / 2; m < n_fft; m += hop) gain += window[m] * window[m];
    norm = 1 / gain;
  }

  Real edge_weight(std::size_t k) const { return (k == 0 || k == n_bins - 1) ? 1 : 2; }

  std::vector<Real> inverse(const std::vector<RealComplex>& bins) const {
    std::vector<Real> out(length, 0);
    const std::size_t half = n_fft / 2;
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t n = 0; n < n_fft; ++n) {
        const std::size_t m = t * hop + n;
        if (m < half || m - half >= length) continue;
        Real x = 0;
        for (std::size_t k = 0; k < n_bins; ++k) {
          const RealComplex b = bins[t * n_bins + k];
          const std::size_t idx = (k * n) % n_fft;
          // Imaginary parts of the DC and Nyquist bins do not contribute.
          const Real im = (k == 0 || k == n_bins - 1) ? Real(0) : b.imag();
          x += edge_weight(k) * (b.real() * cos_table[idx] - im * sin_table[idx]);
        }
        out[m - half] += window[n] * (x / static_cast<Real>(n_fft)) * norm;
      }
    }
    return out;
  }

  std::vector<RealComplex> adjoint(std::span<const Real> grad) const {
    std::vector<RealComplex> out(frames * n_bins);
    const std::size_t half = n_fft / 2;
    std::vector<Real> frame(n_fft);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t n = 0; n < n_fft; ++n) {
        const std::size_t m = t * hop + n;
        frame[n] = (m >= half && m - half < grad.size()) ? grad[m - half] * window[n] * norm : 0;
      }
      for (std::size_t k = 0; k < n_bins; ++k) {
        Real re = 0, im = 0;
        for (std::size_t n = 0; n < n_fft; ++n) {
          const std::size_t idx = (k * n) % n_fft;
          re += frame[n] * cos_table[idx];
          im -= frame[n] * sin_table[idx];
        }
        const Real scale = edge_weight(k) / static_cast<Real>(n_fft);
        out[t * n_bins + k] = {re * scale, im * scale};
      }
    }
    return out;
  }
};

template <class R>
std::vector<R> invert(const std::vector<std::complex<R>>& bins, const dsp::StftConfig& cfg,
                      std::size_t frames, std::size_t length) {
  if constexpr (std::is_same_v<R, double>)
    return dsp::istft_channel(bins, frames, cfg, length);
  else
    return DirectIstft(cfg, frames, length).inverse(bins);
}

template <class R>
std::vector<std::complex<R>> adjoint(std::span<const R> grad, const dsp::StftConfig& cfg,
                                     std::size_t frames) {
  if constexpr (std::is_same_v<R, double>)
    return dsp::istft_channel_adjoint(grad, frames, cfg);
  else
    return DirectIstft(cfg, frames, grad.size()).adjoint(grad);
}

}  // namespace

Var mask_istft(Var masks, const dsp::ComplexSpectrogram& mixture, std::size_t channel,
               std::size_t length) {
  const Shape ms = masks.shape();
  if (ms.size() != 3 || ms[1] != mixture.frames() || ms[2] != mixture.bins())
    throw std::invalid_argument("mask_istft: incompatible shapes " + graph::shape_string(ms) +
                                " and [" + std::to_string(mixture.frames()) + "," +
                                std::to_string(mixture.bins()) + "]");
  if (channel >= mixture.channels()) throw std::invalid_argument("mask_istft: bad channel");
  const std::size_t sources = ms[0], frames = ms[1], bins = ms[2];
  const dsp::StftConfig cfg = mixture.config();
  auto x = mixture.channel(channel);
  std::vector<RealComplex> xr(x.begin(), x.end());

  Tensor y({sources, length});
  const Tensor& m = masks.value();
  for (std::size_t s = 0; s < sources; ++s) {
    std::vector<RealComplex> prod(frames * bins);
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = m[s * frames * bins + i] * xr[i];
    auto w = invert<Real>(prod, cfg, frames, length);
    std::copy(w.begin(), w.end(), y.data().begin() + s * length);
  }

  return masks.graph->record(
      "mask_istft", std::move(y), {masks},
      [xr = std::move(xr), cfg, sources, frames, bins, length](Graph& g, std::size_t node) {
        Tensor* gm = g.grad_target(g.inputs(node)[0]);
        if (!gm) return;
        const Tensor& gy = g.grad(node);
        for (std::size_t s = 0; s < sources; ++s) {
          auto row = gy.data().subspan(s * length, length);
          const auto b = adjoint<Real>(row, cfg, frames);
          // d<g, istft(M X)>/dM = Re(X conj(B)).
          for (std::size_t i = 0; i < frames * bins; ++i)
            (*gm)[s * frames * bins + i] += std::real(xr[i] * std::conj(b[i]));
        }
      });
}

Var si_snr_node(Var estimate, std::span<const double> reference) {
  const Tensor& e = estimate.value();
  if (e.rank() != 1) throw std::invalid_argument("si_snr: estimate must be rank 1");
  auto terms = si_snr_terms<Real, double>(e.data(), reference);
  Tensor out = Tensor::scalar(terms.db);
  return estimate.graph->record(
      "si_snr", std::move(out), {estimate}, [terms = std::move(terms)](Graph& g, std::size_t node) {
        if (terms.floored || terms.capped) return;
        Tensor* ge = g.grad_target(g.inputs(node)[0]);
        if (!ge) return;
        // db = 10 log10(Pt / Pe), dPt = 2 s_t, dPe = 2 e.
        const Real gy = g.grad(node)[0];
        const Real k = gy * 10 / std::log(Real(10));
        const Real ct = 2 / terms.target_power;
        const Real ce = -2 / terms.error_power;
        for (std::size_t i = 0; i < terms.est.size(); ++i) {
          const Real st = terms.alpha * terms.ref[i];
          const Real err = terms.est[i] - st;
          (*ge)[i] += k * (ct * st + ce * err);
        }
      });
}

PitNode pit_loss_node(Var estimates, std::span<const std::vector<double>> references) {
  const Shape es = estimates.shape();
  if (es.size() != 2 || es[0] != 2 || references.size() != 2)
    throw std::invalid_argument("pit_loss: expected 2 x L estimates and two references");
  const std::size_t len = es[1];
  std::vector<Var> rows;
  Real s[2][2];
  for (std::size_t i = 0; i < 2; ++i) {
    rows.push_back(graph::reshape(graph::slice(estimates, 0, i, i + 1), {len}));
    for (std::size_t j = 0; j < 2; ++j)
      s[i][j] = si_snr_terms<Real, double>(rows[i].value().data(), references[j]).db;
  }
  PitNode out;
  if ((s[0][1] + s[1][0]) / 2 > (s[0][0] + s[1][1]) / 2) out.perm = {1, 0};
  Var total = graph::add(si_snr_node(rows[0], references[out.perm[0]]),
                         si_snr_node(rows[1], references[out.perm[1]]));
  out.loss = graph::scale(total, -0.5);
  return out;
}

}  // namespace adsep::train::inline ADSEP_REAL_NS
