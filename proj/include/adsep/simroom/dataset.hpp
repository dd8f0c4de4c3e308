#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "adsep/simroom/room.hpp"
#include "adsep/train/example.hpp"

namespace adsep::simroom {

struct DatasetConfig {
  std::size_t examples = 1;
  std::size_t channels = 7;
  int max_order = 10;
  std::size_t rir_length = 4096;
  double utterance_seconds = 2.0;
  Range overlap{0.0, 1.0};
  Range snr_db{13.0, 17.0};
  int sample_rate = 16000;
  double peak = 0.9;  // every written signal is scaled to at most this magnitude
  SamplingRanges ranges;
  std::filesystem::path source_dir;  // *.wav utterance pool; synthetic speech when empty
  std::filesystem::path noise_dir;   // *.wav noise pool; white noise when empty
  std::string id_prefix = "ex";
  std::uint64_t seed = 0;
  std::size_t jobs = 0;

  void validate() const;
};

struct SimulatedExample {
  train::TrainingExample example;
  RoomScenario scenario;
  std::vector<std::size_t> mic_indices;
  std::vector<std::size_t> source_indices;  // two talkers then the noise source
  std::uint64_t seed = 0;

  nlohmann::json scenario_summary(const DatasetConfig& cfg) const;
};

// Mono signals loaded from a directory of WAV files (sorted by name).
struct SignalPool {
  std::vector<std::vector<double>> signals;
  static SignalPool load(const std::filesystem::path& dir, int sample_rate);
  bool empty() const { return signals.empty(); }
};

// Example `index` of the dataset described by cfg, in memory. Depends only on
// (cfg, index), so datasets can be generated in parallel or in pieces.
SimulatedExample simulate_example(const DatasetConfig& cfg, std::size_t index,
                                  const SignalPool& sources = {}, const SignalPool& noises = {});

struct ManifestEntry {
  std::string id;
  std::vector<std::filesystem::path> channels;                // mixture, one mono WAV per mic
  std::vector<std::filesystem::path> references;              // channel-0 source images
  std::vector<std::vector<std::filesystem::path>> images;     // per source, per mic
  std::vector<std::pair<std::size_t, std::size_t>> activity;  // dry span per source
  nlohmann::json scenario;
  double overlap_ratio = 0.0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  std::size_t length = 0;
  int sample_rate = 16000;

  nlohmann::json to_json() const;
  static ManifestEntry from_json(const nlohmann::json& j);
};

// Simulates cfg.examples examples into out_dir (one sub-directory per
// example, 32-bit float WAVs) and writes out_dir/manifest.jsonl.
std::vector<ManifestEntry> build_dataset(const DatasetConfig& cfg,
                                         const std::filesystem::path& out_dir);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// Loads the WAVs of one entry; relative paths resolve against base_dir.
train::TrainingExample load_example(const ManifestEntry& entry,
                                    const std::filesystem::path& base_dir);

std::vector<train::TrainingExample> load_dataset(const std::filesystem::path& manifest,
                                                 std::size_t jobs = 0);

}  // namespace adsep::simroom
