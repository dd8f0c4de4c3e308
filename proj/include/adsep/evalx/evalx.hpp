#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adsep/enhance/enhance.hpp"
#include "adsep/graph/tensor.hpp"
#include "adsep/model/config.hpp"
#include "adsep/model/network.hpp"
#include "adsep/train/example.hpp"

namespace adsep::evalx {

// si_snr(estimate, reference) - si_snr(mixture, reference).
double si_snr_improvement(std::span<const double> estimate, std::span<const double> reference,
                          std::span<const double> mixture);

struct LoadedModel {
  model::ModelConfig config;
  graph::ParameterSet params;
  dsp::StftConfig stft;
};

LoadedModel load_model(const std::filesystem::path& checkpoint);

// Shared masks (one set) for multi-channel topologies; aligned per-channel
// masks (one set per channel) for the single-channel model.
std::vector<model::MaskSet> infer_masks(const dsp::ComplexSpectrogram& spec, const LoadedModel& m,
                                        graph::Precision precision = graph::Precision::f32);

enum class SystemKind {
  model,    // learned masks from a checkpoint (single-channel topologies run multi-stream)
  oracle,   // ideal ratio masks from the simulator's source images
  mixture,  // unprocessed reference channel
};

struct SystemSpec {
  std::string name;
  SystemKind kind = SystemKind::model;
  std::filesystem::path checkpoint;  // kind == model
  enhance::Mode mode = enhance::Mode::masking;
  enhance::RefPolicy policy = enhance::RefPolicy::max_snr;
  enhance::VadKind vad = enhance::VadKind::none;
  std::size_t channels = 0;  // 0: every channel of the utterance
};

struct EvalItem {
  train::TrainingExample example;
  // Closest mic to each talker (from the scenario geometry when known,
  // otherwise the mic where the talker's image is strongest).
  std::array<std::size_t, 2> near_mics{0, 0};
};

std::vector<EvalItem> load_eval_set(const std::filesystem::path& manifest, std::size_t jobs = 0);
EvalItem make_eval_item(train::TrainingExample ex);

// Seeded channel subset of size C holding every talker's near mic, in
// ascending mic order. Depends only on (item index, C, seed).
std::vector<std::size_t> select_channels(const EvalItem& item, std::size_t index, std::size_t channels,
                                         std::uint64_t seed);

struct EvalRow {
  std::string utt_id;
  std::string system;
  std::string mode;
  std::string policy;
  std::size_t channels = 0;
  std::size_t source = 0;  // talker index in the reference set
  double sisnri_db = 0.0;
  double sdr_db = 0.0;
  std::string assignment;  // estimate index per talker, e.g. "1-0"
};

struct AggregateRow {
  std::string system, mode, policy;
  std::size_t channels = 0;
  std::size_t rows = 0;
  double sisnri_db = 0.0;
  double sdr_db = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<AggregateRow> aggregate;  // one per system cell, in system order
};

struct MatrixOptions {
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  graph::Precision precision = graph::Precision::f32;
  dsp::StftConfig stft;  // used by oracle and mixture systems
};

// Scores every system on every utterance. Each estimate is scored against
// the talker's image at the estimate's reference mic; the estimate-to-talker
// assignment maximises the mean SI-SNR.
EvalReport run_matrix(std::span<const EvalItem> items, std::span<const SystemSpec> systems,
                      const MatrixOptions& opts);

std::vector<AggregateRow> aggregate(std::span<const EvalRow> rows, std::span<const SystemSpec> systems);

struct ReportPaths {
  std::filesystem::path rows;
  std::filesystem::path aggregate;
};

// Writes <prefix>_rows.csv and <prefix>_aggregate.csv.
ReportPaths write_report(const EvalReport& report, const std::filesystem::path& prefix);

// Splits "2..7" or "2,4,6" into channel counts.
std::vector<std::size_t> parse_channel_list(const std::string& s);

}  // namespace adsep::evalx
