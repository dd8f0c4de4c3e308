#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "adsep/dsp/stft.hpp"
#include "adsep/graph/graph.hpp"
#include "adsep/model/config.hpp"
#include "adsep/train/example.hpp"
#include "adsep/train/sisnr.hpp"

namespace adsep::train::inline ADSEP_REAL_NS {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 4;
  std::size_t max_epochs = 100;
  std::size_t plateau_patience = 3;
  double lr_decay_factor = 0.5;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  graph::Precision precision = graph::Precision::f32;
  std::size_t jobs = 0;  // 0: all cores

  void validate() const;
};

struct StepResult {
  double loss = 0.0;
  Permutation perm{0, 1};
  graph::GradientMap grads;
};

// Forward, channel-0 masking, inverse STFT, PIT SI-SNR loss and backward for
// one example. Throws NumericError naming the example on a non-finite loss.
StepResult training_step(const TrainingExample& example, const model::ModelConfig& cfg,
                         const graph::ParameterSet& params, const dsp::StftConfig& stft_cfg,
                         graph::Precision precision = graph::Precision::f32);

// Masked channel-0 estimates of both sources, mixture length.
std::vector<std::vector<double>> masked_estimates(const TrainingExample& example,
                                                  const model::ModelConfig& cfg,
                                                  const graph::ParameterSet& params,
                                                  const dsp::StftConfig& stft_cfg,
                                                  graph::Precision precision);

// Mean over examples of the PIT mean SI-SNR of the masked estimates.
double mean_si_snr(const std::vector<TrainingExample>& examples, const model::ModelConfig& cfg,
                   const graph::ParameterSet& params, const dsp::StftConfig& stft_cfg,
                   graph::Precision precision, std::size_t jobs);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_sisnr = 0.0;
  double lr = 0.0;
};

struct FitOptions {
  // Best-validation checkpoint; the latest state (with optimiser moments) is
  // kept next to it with a ".last" suffix.
  std::filesystem::path checkpoint;
  std::filesystem::path log;  // CSV, appended to
  bool resume = false;        // continue from "<checkpoint>.last"
  std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
  graph::ParameterSet best_params;
  graph::ParameterSet last_params;
  double best_val_sisnr = 0.0;
  std::vector<EpochRecord> history;  // epochs run by this call
};

std::filesystem::path last_checkpoint_path(const std::filesystem::path& checkpoint);

// STFT settings stored in a checkpoint's train_state. A missing entry means
// the default 50% hop for the model's bin count.
nlohmann::json stft_to_json(const dsp::StftConfig& c);
dsp::StftConfig stft_from_json(const nlohmann::json& j, const model::ModelConfig& cfg);

FitResult fit(const std::vector<TrainingExample>& train_set,
              const std::vector<TrainingExample>& val_set, const model::ModelConfig& cfg,
              graph::ParameterSet params, const dsp::StftConfig& stft_cfg,
              const TrainConfig& tcfg, const FitOptions& options);

}  // namespace adsep::train::inline ADSEP_REAL_NS
