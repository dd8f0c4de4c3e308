#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "adsep/common/random.hpp"

namespace adsep::simroom {

using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfSound = 343.0;  // m/s

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Scenario sampling ranges, metres unless noted. Mics sit in a thin box on
// top of the table; sources stand on a ring around the table footprint.
struct SamplingRanges {
  Range room_x{4.0, 10.0};
  Range room_y{3.0, 8.0};
  Range room_z{2.5, 4.0};
  Range table_x{1.0, 3.0};
  Range table_y{0.8, 2.0};
  double table_height = 0.75;
  Range mic_height{0.75, 0.9};
  Range source_distance{0.3, 1.5};  // beyond the footprint edge, along a ray from its centre
  Range source_height{1.0, 1.3};
  Range beta{0.2, 0.8};
  double wall_margin = 0.2;  // minimum source-to-wall distance
  std::size_t candidate_mics = 10;
  std::size_t candidate_sources = 10;

  // Throws std::invalid_argument for inverted ranges, beta outside (0, 1) or a
  // table (plus source ring and wall margin) that cannot fit in the room.
  void validate() const;
};

struct Box {
  Vec3 origin{};
  Vec3 size{};

  bool contains(const Vec3& p) const;
  bool footprint_contains(const Vec3& p) const;
};

struct RoomScenario {
  Vec3 room{};  // (Lx, Ly, Lz), walls at 0 and L on every axis
  double beta = 0.5;
  Box table;  // mic volume: table footprint from table height to top mic height
  std::vector<Vec3> mics;
  std::vector<Vec3> sources;

  // Throws std::invalid_argument naming the first violated geometric invariant.
  void validate() const;
};

RoomScenario sample_scenario(Rng& rng, const SamplingRanges& ranges = {});

// Image-method impulse response from `source` to `mic`: every image with at
// most `max_order` wall reflections adds beta^order / (4 pi d) at a fractional
// delay of d/c seconds through an 8-tap Hann-windowed sinc. Uniform beta on
// all six walls. Taps past `length` are dropped.
std::vector<double> image_method_rir(const Vec3& room, double beta, const Vec3& mic,
                                     const Vec3& source, int max_order, std::size_t length,
                                     int sample_rate = 16000);

inline std::vector<double> image_method_rir(const RoomScenario& s, const Vec3& mic,
                                            const Vec3& source, int max_order,
                                            std::size_t length, int sample_rate = 16000) {
  return image_method_rir(s.room, s.beta, mic, source, max_order, length, sample_rate);
}

// Adds amp * h(n - tau) for the 8-tap windowed-sinc kernel h.
void add_fractional_impulse(std::span<double> out, double tau, double amp);

// Impulse responses for mics x sources, row-major with taps fastest.
class RirSet {
 public:
  RirSet() = default;
  RirSet(std::size_t mics, std::size_t sources, std::size_t length, int sample_rate = 16000);

  std::size_t mics() const { return mics_; }
  std::size_t sources() const { return sources_; }
  std::size_t length() const { return length_; }
  int sample_rate() const { return sample_rate_; }

  std::span<double> at(std::size_t mic, std::size_t source);
  std::span<const double> at(std::size_t mic, std::size_t source) const;

 private:
  std::size_t mics_ = 0, sources_ = 0, length_ = 0;
  int sample_rate_ = 16000;
  std::vector<double> taps_;
};

RirSet compute_rirs(const RoomScenario& scenario, std::span<const Vec3> mics,
                    std::span<const Vec3> sources, int max_order, std::size_t length,
                    int sample_rate = 16000, std::size_t jobs = 1);

}  // namespace adsep::simroom
