#pragma once

#include <stdexcept>
#include <string>

namespace adsep {

// Malformed or missing input data (manifests, WAV files, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values produced during training or inference.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adsep
