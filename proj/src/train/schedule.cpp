#include "adsep/train/schedule.hpp"

#include <stdexcept>

namespace adsep::train {

PlateauScheduler::PlateauScheduler(double initial_lr, std::size_t patience, double factor)
    : lr_(initial_lr), patience_(patience), factor_(factor) {
  if (patience == 0) throw std::invalid_argument("plateau patience must be >= 1");
  if (!(factor > 0.0 && factor < 1.0))
    throw std::invalid_argument("lr decay factor must be in (0, 1)");
}

bool PlateauScheduler::observe(double score) {
  if (score > best_) {
    best_ = score;
    stale_ = 0;
    return false;
  }
  if (++stale_ < patience_) return false;
  lr_ *= factor_;
  stale_ = 0;
  ++decays_;
  return true;
}

void PlateauScheduler::restore(double lr, double best, std::size_t stale, std::size_t decays) {
  lr_ = lr;
  best_ = best;
  stale_ = stale;
  decays_ = decays;
}

}  // namespace adsep::train
