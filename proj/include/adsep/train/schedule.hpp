#pragma once

#include <cstddef>
#include <limits>

namespace adsep::train {

// Multiplies the learning rate by `factor` once the best validation score has
// not improved for `patience` consecutive epochs, then starts counting again.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, std::size_t patience, double factor);

  // Feeds one epoch's validation score (higher is better). Returns true when
  // this epoch triggered a decay.
  bool observe(double score);

  double lr() const { return lr_; }
  double best() const { return best_; }
  std::size_t stale_epochs() const { return stale_; }
  std::size_t decays() const { return decays_; }

  // For resuming.
  void restore(double lr, double best, std::size_t stale, std::size_t decays);

 private:
  double lr_;
  std::size_t patience_;
  double factor_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
  std::size_t decays_ = 0;
};

}  // namespace adsep::train
