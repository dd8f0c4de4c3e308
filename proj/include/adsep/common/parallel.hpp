#pragma once

#include <cstddef>
#include <functional>

namespace adsep {

// Number of workers used when a caller passes jobs == 0.
std::size_t default_jobs();

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
// to per-index slots by the caller; the first exception thrown is rethrown
// after all workers have joined.
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace adsep
