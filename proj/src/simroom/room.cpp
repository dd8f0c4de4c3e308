#include "adsep/simroom/room.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "adsep/common/parallel.hpp"

namespace adsep::simroom {
namespace {

void check_range(const Range& r, const char* name) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
    throw std::invalid_argument(std::string("sampling range ") + name + " is empty or not finite");
}

double draw(Rng& rng, const Range& r) { return r.hi > r.lo ? uniform(rng, r.lo, r.hi) : r.lo; }

std::string str(const Vec3& v) {
  std::ostringstream os;
  os << '(' << v[0] << ", " << v[1] << ", " << v[2] << ')';
  return os.str();
}

bool inside_room(const Vec3& room, const Vec3& p) {
  for (int i = 0; i < 3; ++i)
    if (!(p[i] >= 0.0 && p[i] <= room[i])) return false;
  return true;
}

double distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

}  // namespace

void SamplingRanges::validate() const {
  check_range(room_x, "room_x");
  check_range(room_y, "room_y");
  check_range(room_z, "room_z");
  check_range(table_x, "table_x");
  check_range(table_y, "table_y");
  check_range(mic_height, "mic_height");
  check_range(source_distance, "source_distance");
  check_range(source_height, "source_height");
  check_range(beta, "beta");
  if (!(beta.lo > 0.0 && beta.hi < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  if (!(table_x.lo > 0.0 && table_y.lo > 0.0)) throw std::invalid_argument("table size must be positive");
  if (!(source_distance.lo > 0.0)) throw std::invalid_argument("source distance must be positive");
  if (wall_margin < 0.0) throw std::invalid_argument("wall margin must be non-negative");
  if (mic_height.lo < table_height) throw std::invalid_argument("mics must not be below the table");
  if (candidate_mics == 0 || candidate_sources < 3)
    throw std::invalid_argument("need at least one candidate mic and three candidate sources");

  // Worst case: smallest room with the largest table.
  const double clear = 2.0 * (source_distance.lo + wall_margin);
  if (room_x.lo < table_x.hi + clear || room_y.lo < table_y.hi + clear)
    throw std::invalid_argument("infeasible ranges: a table of up to " + std::to_string(table_x.hi) +
                                " x " + std::to_string(table_y.hi) +
                                " m with its source ring does not fit a room of " +
                                std::to_string(room_x.lo) + " x " + std::to_string(room_y.lo) + " m");
  if (room_z.lo < std::max(mic_height.hi, source_height.hi) + wall_margin)
    throw std::invalid_argument("infeasible ranges: room too low for mic or source heights");
}

bool Box::contains(const Vec3& p) const {
  for (int i = 0; i < 3; ++i)
    if (!(p[i] >= origin[i] && p[i] <= origin[i] + size[i])) return false;
  return true;
}

bool Box::footprint_contains(const Vec3& p) const {
  for (int i = 0; i < 2; ++i)
    if (!(p[i] >= origin[i] && p[i] <= origin[i] + size[i])) return false;
  return true;
}

void RoomScenario::validate() const {
  for (int i = 0; i < 3; ++i)
    if (!(room[i] > 0.0)) throw std::invalid_argument("room dimensions must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  for (int i = 0; i < 3; ++i)
    if (!(table.origin[i] >= 0.0 && table.size[i] >= 0.0 && table.origin[i] + table.size[i] <= room[i]))
      throw std::invalid_argument("table box is not inside the room");
  for (const auto& m : mics)
    if (!table.contains(m)) throw std::invalid_argument("mic " + str(m) + " is outside the table box");
  for (const auto& s : sources) {
    if (!inside_room(room, s)) throw std::invalid_argument("source " + str(s) + " is outside the room");
    if (table.footprint_contains(s))
      throw std::invalid_argument("source " + str(s) + " is above the table footprint");
  }
}

RoomScenario sample_scenario(Rng& rng, const SamplingRanges& r) {
  r.validate();
  RoomScenario s;
  s.room = {draw(rng, r.room_x), draw(rng, r.room_y), draw(rng, r.room_z)};
  s.beta = draw(rng, r.beta);

  const double clear = r.source_distance.lo + r.wall_margin;
  const double sx = draw(rng, r.table_x), sy = draw(rng, r.table_y);
  s.table.size = {sx, sy, r.mic_height.hi - r.table_height};
  s.table.origin = {draw(rng, {clear, s.room[0] - sx - clear}), draw(rng, {clear, s.room[1] - sy - clear}),
                    r.table_height};

  for (std::size_t i = 0; i < r.candidate_mics; ++i)
    s.mics.push_back({draw(rng, {s.table.origin[0], s.table.origin[0] + sx}),
                      draw(rng, {s.table.origin[1], s.table.origin[1] + sy}), draw(rng, r.mic_height)});

  // Walk out from the table centre along a random bearing: leave the footprint,
  // then go on for the sampled distance, shortened if a wall margin is hit.
  const double cx = s.table.origin[0] + 0.5 * sx, cy = s.table.origin[1] + 0.5 * sy;
  for (std::size_t i = 0; i < r.candidate_sources; ++i) {
    const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double dx = std::cos(theta), dy = std::sin(theta);
    auto reach = [](double half, double d) { return std::abs(d) > 1e-12 ? half / std::abs(d) : 1e300; };
    const double exit = std::min(reach(0.5 * sx, dx), reach(0.5 * sy, dy));
    auto to_wall = [&](double c, double d, double len) {
      if (std::abs(d) <= 1e-12) return 1e300;
      return (d > 0 ? len - r.wall_margin - c : c - r.wall_margin) / std::abs(d);
    };
    const double limit = std::min(to_wall(cx, dx, s.room[0]), to_wall(cy, dy, s.room[1]));
    const double dist = std::min(draw(rng, r.source_distance), limit - exit);
    const double t = exit + dist;
    s.sources.push_back({cx + t * dx, cy + t * dy, draw(rng, r.source_height)});
  }
  s.validate();
  return s;
}

void add_fractional_impulse(std::span<double> out, double tau, double amp) {
  constexpr double pi = std::numbers::pi;
  const long base = static_cast<long>(std::floor(tau));
  const long len = static_cast<long>(out.size());
  for (long n = std::max(0L, base - 3); n <= std::min(len - 1, base + 4); ++n) {
    const double x = static_cast<double>(n) - tau;
    if (std::abs(x) >= 4.0) continue;
    double sinc = 1.0;
    if (x != 0.0) sinc = x == std::round(x) ? 0.0 : std::sin(pi * x) / (pi * x);
    out[static_cast<std::size_t>(n)] += amp * sinc * 0.5 * (1.0 + std::cos(pi * x / 4.0));
  }
}

std::vector<double> image_method_rir(const Vec3& room, double beta, const Vec3& mic, const Vec3& source,
                                     int max_order, std::size_t length, int sample_rate) {
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("image_method_rir: beta must lie in [0, 1)");
  if (max_order < 0) throw std::invalid_argument("image_method_rir: negative max_order");
  if (!inside_room(room, mic) || !inside_room(room, source))
    throw std::invalid_argument("image_method_rir: mic " + str(mic) + " or source " + str(source) +
                                " outside the room");
  if (distance(mic, source) < 1e-9) throw std::invalid_argument("image_method_rir: zero distance");

  std::vector<double> h(length, 0.0);
  const double samples_per_metre = sample_rate / kSpeedOfSound;
  const double horizon = static_cast<double>(length) + 4.0;
  // Along each axis image k = 2n - q sits at (1 - 2q) x + 2nL after |k| reflections.
  struct Image1d {
    double pos;
    int order;
  };
  std::array<std::vector<Image1d>, 3> axes;
  for (int a = 0; a < 3; ++a)
    for (int k = -max_order; k <= max_order; ++k) {
      const int q = ((k % 2) + 2) % 2;
      const int n = (k + q) / 2;
      axes[a].push_back({(1 - 2 * q) * source[a] + 2.0 * n * room[a], std::abs(k)});
    }
  for (const auto& ix : axes[0])
    for (const auto& iy : axes[1]) {
      if (ix.order + iy.order > max_order) continue;
      for (const auto& iz : axes[2]) {
        const int order = ix.order + iy.order + iz.order;
        if (order > max_order) continue;
        const double d = std::hypot(ix.pos - mic[0], iy.pos - mic[1], iz.pos - mic[2]);
        const double tau = d * samples_per_metre;
        if (tau >= horizon) continue;
        add_fractional_impulse(h, tau, std::pow(beta, order) / (4.0 * std::numbers::pi * d));
      }
    }
  return h;
}

RirSet::RirSet(std::size_t mics, std::size_t sources, std::size_t length, int sample_rate)
    : mics_(mics), sources_(sources), length_(length), sample_rate_(sample_rate),
      taps_(mics * sources * length, 0.0) {}

std::span<double> RirSet::at(std::size_t mic, std::size_t source) {
  return std::span<double>(taps_).subspan((mic * sources_ + source) * length_, length_);
}

std::span<const double> RirSet::at(std::size_t mic, std::size_t source) const {
  return std::span<const double>(taps_).subspan((mic * sources_ + source) * length_, length_);
}

RirSet compute_rirs(const RoomScenario& scenario, std::span<const Vec3> mics, std::span<const Vec3> sources,
                    int max_order, std::size_t length, int sample_rate, std::size_t jobs) {
  RirSet out(mics.size(), sources.size(), length, sample_rate);
  parallel_for(mics.size() * sources.size(), jobs, [&](std::size_t i) {
    const std::size_t m = i / sources.size(), s = i % sources.size();
    const auto h = image_method_rir(scenario, mics[m], sources[s], max_order, length, sample_rate);
    std::copy(h.begin(), h.end(), out.at(m, s).begin());
  });
  return out;
}

}  // namespace adsep::simroom
