#include "adsep/train/sisnr.hpp"

namespace adsep::train {

double si_snr(std::span<const double> estimate, std::span<const double> reference) {
  return si_snr_terms<double, double>(estimate, reference).db;
}

PitScore pit_score(std::span<const std::vector<double>> estimates,
                   std::span<const std::vector<double>> references) {
  if (estimates.size() != 2 || references.size() != 2)
    throw std::invalid_argument("pit: exactly two estimates and two references are required");
  double s[2][2];
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) s[i][j] = si_snr(estimates[i], references[j]);
  PitScore out;
  const double identity = 0.5 * (s[0][0] + s[1][1]);
  const double swapped = 0.5 * (s[0][1] + s[1][0]);
  if (swapped > identity) {
    out.mean_si_snr = swapped;
    out.perm = {1, 0};
  } else {
    out.mean_si_snr = identity;
  }
  out.per_source = {s[0][out.perm[0]], s[1][out.perm[1]]};
  return out;
}

PitLoss pit_loss(std::span<const std::vector<double>> estimates,
                 std::span<const std::vector<double>> references) {
  const PitScore s = pit_score(estimates, references);
  return {-s.mean_si_snr, s.perm};
}

}  // namespace adsep::train
