#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adsep/common/error.hpp"

namespace adsep::train {

// The error energy is floored at kSiSnrEps * ||s_t||^2, which caps the value
// at +80 dB and leaves it exact below the cap; the ratio itself is floored at kSiSnrMinRatio (-80 dB) so an
// estimate orthogonal to the reference stays finite.
inline constexpr double kSiSnrEps = 1e-8;
inline constexpr double kSiSnrMinRatio = 1e-8;

// Intermediate quantities of one SI-SNR evaluation, generic over the scalar
// type so the graph op can share it.
template <class T>
struct SiSnrTerms {
  std::vector<T> est, ref;  // mean-removed
  T alpha = 0;              // projection coefficient <est, ref> / ||ref||^2
  T target_power = 0;       // ||alpha ref||^2
  T error_power = 0;        // ||est - alpha ref||^2
  T ratio = 0;              // before flooring
  bool capped = false;      // error energy below the eps floor
  bool floored = false;
  T db = 0;
};

template <class T, class U>
SiSnrTerms<T> si_snr_terms(std::span<const T> estimate, std::span<const U> reference) {
  if (estimate.size() != reference.size())
    throw std::invalid_argument("si_snr: estimate has " + std::to_string(estimate.size()) +
                                " samples, reference " + std::to_string(reference.size()));
  const std::size_t n = estimate.size();
  SiSnrTerms<T> r;
  r.est.assign(estimate.begin(), estimate.end());
  r.ref.assign(reference.begin(), reference.end());
  T mean_e = 0, mean_r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_e += r.est[i];
    mean_r += r.ref[i];
  }
  mean_e /= static_cast<T>(n);
  mean_r /= static_cast<T>(n);
  T dot = 0, ref_power = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r.est[i] -= mean_e;
    r.ref[i] -= mean_r;
    dot += r.est[i] * r.ref[i];
    ref_power += r.ref[i] * r.ref[i];
  }
  if (!(ref_power > 0)) throw DataError("si_snr: degenerate reference");
  r.alpha = dot / ref_power;
  for (std::size_t i = 0; i < n; ++i) {
    const T e = r.est[i] - r.alpha * r.ref[i];
    r.error_power += e * e;
  }
  r.target_power = r.alpha * r.alpha * ref_power;
  const T floor = static_cast<T>(kSiSnrEps) * r.target_power;
  r.capped = r.error_power < floor;
  // A zero estimate floors; NaN inputs must propagate, not floor.
  r.ratio = r.target_power == 0 ? T(0) : r.target_power / (r.capped ? floor : r.error_power);
  r.floored = r.ratio <= static_cast<T>(kSiSnrMinRatio);
  using std::log10;
  r.db = 10 * log10(r.floored ? static_cast<T>(kSiSnrMinRatio) : r.ratio);
  return r;
}

// Scale-invariant SNR in dB of `estimate` against `reference`.
// Throws DataError("si_snr: degenerate reference") for a constant reference.
double si_snr(std::span<const double> estimate, std::span<const double> reference);

// Assignment of estimates to references: estimate i is scored against
// reference perm[i].
using Permutation = std::array<std::size_t, 2>;

struct PitScore {
  double mean_si_snr = 0.0;  // of the winning assignment
  Permutation perm{0, 1};
  std::array<double, 2> per_source{};  // SI-SNR of estimate i under perm
};

// Best of the two assignments by mean SI-SNR; ties keep the identity.
PitScore pit_score(std::span<const std::vector<double>> estimates,
                   std::span<const std::vector<double>> references);

// Negative of the winning mean SI-SNR, with the winning assignment.
struct PitLoss {
  double loss = 0.0;
  Permutation perm{0, 1};
};
PitLoss pit_loss(std::span<const std::vector<double>> estimates,
                 std::span<const std::vector<double>> references);

}  // namespace adsep::train
