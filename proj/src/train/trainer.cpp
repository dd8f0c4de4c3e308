#include "adsep/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "adsep/common/error.hpp"
#include "adsep/common/parallel.hpp"
#include "adsep/common/random.hpp"
#include "adsep/model/checkpoint.hpp"
#include "adsep/model/network.hpp"
#include "adsep/train/loss_ops.hpp"
#include "adsep/train/optim.hpp"
#include "adsep/train/schedule.hpp"

namespace adsep::train::inline ADSEP_REAL_NS {

namespace fs = std::filesystem;
using graph::Tensor;
using nlohmann::json;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (plateau_patience == 0) throw std::invalid_argument("plateau_patience must be >= 1");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0))
    throw std::invalid_argument("lr_decay_factor must be in (0, 1)");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
}

namespace {

void check_example(const TrainingExample& ex) {
  if (ex.references.size() != 2)
    throw DataError("example " + ex.id + ": expected 2 references");
  for (const auto& r : ex.references)
    if (r.size() != ex.mixture.length())
      throw DataError("example " + ex.id + ": reference length differs from the mixture");
}

}  // namespace

StepResult training_step(const TrainingExample& example, const model::ModelConfig& cfg,
                         const graph::ParameterSet& params, const dsp::StftConfig& stft_cfg,
                         graph::Precision precision) {
  check_example(example);
  const auto spec = dsp::stft(example.mixture, stft_cfg);
  graph::Graph g(precision);
  graph::Var masks = model::build_masks(g, spec, cfg, params);
  graph::Var waves = mask_istft(masks, spec, 0, example.mixture.length());
  PitNode pit = pit_loss_node(waves, example.references);
  StepResult out;
  out.loss = static_cast<double>(pit.loss.value().item());
  out.perm = pit.perm;
  if (!std::isfinite(out.loss))
    throw NumericError("non-finite loss on example " + example.id);
  g.backward(pit.loss);
  out.grads = g.parameter_gradients();
  return out;
}

std::vector<std::vector<double>> masked_estimates(const TrainingExample& example,
                                                  const model::ModelConfig& cfg,
                                                  const graph::ParameterSet& params,
                                                  const dsp::StftConfig& stft_cfg,
                                                  graph::Precision precision) {
  const auto spec = dsp::stft(example.mixture, stft_cfg);
  const model::MaskSet masks = model::forward(spec, cfg, params, precision);
  std::vector<std::vector<double>> out;
  auto x = spec.channel(0);
  for (std::size_t s = 0; s < masks.sources(); ++s) {
    auto m = masks.source(s);
    std::vector<dsp::Complex> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = m[i] * x[i];
    out.push_back(dsp::istft_channel(y, spec.frames(), stft_cfg, example.mixture.length()));
  }
  return out;
}

double mean_si_snr(const std::vector<TrainingExample>& examples, const model::ModelConfig& cfg,
                   const graph::ParameterSet& params, const dsp::StftConfig& stft_cfg,
                   graph::Precision precision, std::size_t jobs) {
  if (examples.empty()) throw std::invalid_argument("mean_si_snr: no examples");
  std::vector<double> scores(examples.size());
  parallel_for(examples.size(), jobs, [&](std::size_t i) {
    check_example(examples[i]);
    auto est = masked_estimates(examples[i], cfg, params, stft_cfg, precision);
    scores[i] = pit_score(est, examples[i].references).mean_si_snr;
  });
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

fs::path last_checkpoint_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p += ".last";
  return p;
}

json stft_to_json(const dsp::StftConfig& c) {
  return {{"fft_size", c.fft_size}, {"hop", c.hop}, {"sample_rate", c.sample_rate}};
}

dsp::StftConfig stft_from_json(const json& j, const model::ModelConfig& cfg) {
  dsp::StftConfig c;
  c.fft_size = 2 * (cfg.feature_dim - 1);
  c.hop = c.fft_size / 2;
  if (j.is_object()) {
    c.fft_size = j.value("fft_size", c.fft_size);
    c.hop = j.value("hop", c.fft_size / 2);
    c.sample_rate = j.value("sample_rate", c.sample_rate);
  }
  c.validate();
  if (c.num_bins() != cfg.feature_dim)
    throw DataError("stored STFT has " + std::to_string(c.num_bins()) + " bins but the model expects " +
                    std::to_string(cfg.feature_dim));
  return c;
}

namespace {

void write_log_header_if_new(const fs::path& log) {
  if (fs::exists(log) && fs::file_size(log) > 0) return;
  std::ofstream out(log);
  if (!out) throw DataError("cannot write training log " + log.string());
  out << "epoch,train_loss,val_sisnr,lr\n";
}

void append_log(const fs::path& log, const EpochRecord& r) {
  std::ofstream out(log, std::ios::app);
  if (!out) throw DataError("cannot append to training log " + log.string());
  out.precision(10);
  out << r.epoch << ',' << r.train_loss << ',' << r.val_sisnr << ',' << r.lr << '\n';
}

}  // namespace

FitResult fit(const std::vector<TrainingExample>& train_set,
              const std::vector<TrainingExample>& val_set, const model::ModelConfig& cfg,
              graph::ParameterSet params, const dsp::StftConfig& stft_cfg,
              const TrainConfig& tcfg, const FitOptions& options) {
  tcfg.validate();
  cfg.validate();
  stft_cfg.validate();
  if (train_set.empty() || val_set.empty())
    throw std::invalid_argument("fit: training and validation sets must be non-empty");
  model::check_parameters(cfg, params);
  for (auto& [name, t] : params) graph::round_to(t.data(), tcfg.precision);

  Adam adam;
  PlateauScheduler sched(tcfg.learning_rate, tcfg.plateau_patience, tcfg.lr_decay_factor);
  std::size_t start_epoch = 0;
  FitResult result;
  result.best_val_sisnr = -std::numeric_limits<double>::infinity();
  result.best_params = params;

  if (options.resume) {
    const auto last = model::load_checkpoint(last_checkpoint_path(options.checkpoint));
    if (!(last.model == cfg))
      throw DataError("resume: checkpoint model configuration differs from the requested one");
    params = last.params;
    model::check_parameters(cfg, params);
    const json& st = last.train_state;
    if (!st.is_object()) throw DataError("resume: checkpoint has no training state");
    adam.load_state(last.optimizer_state, st.at("adam_steps").get<std::uint64_t>());
    sched.restore(st.at("lr").get<double>(), st.at("best_val_sisnr").get<double>(),
                  st.at("stale_epochs").get<std::size_t>(), st.at("decays").get<std::size_t>());
    start_epoch = st.at("epoch").get<std::size_t>();
    result.best_val_sisnr = sched.best();
    if (fs::exists(options.checkpoint))
      result.best_params = model::load_checkpoint(options.checkpoint).params;
  }
  if (!options.log.empty()) write_log_header_if_new(options.log);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = start_epoch; epoch < tcfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(tcfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += tcfg.batch_size) {
      const std::size_t nb = std::min(tcfg.batch_size, order.size() - b0);
      std::vector<StepResult> steps(nb);
      parallel_for(nb, tcfg.jobs, [&](std::size_t i) {
        steps[i] = training_step(train_set[order[b0 + i]], cfg, params, stft_cfg, tcfg.precision);
      });
      // Fixed accumulation order keeps updates independent of the worker count.
      graph::GradientMap grads = std::move(steps[0].grads);
      loss_sum += steps[0].loss;
      for (std::size_t i = 1; i < nb; ++i) {
        loss_sum += steps[i].loss;
        for (auto& [name, g] : grads) {
          const Tensor& o = steps[i].grads.at(name);
          for (std::size_t k = 0; k < g.size(); ++k) g[k] += o[k];
        }
      }
      const graph::Real inv = graph::Real(1) / static_cast<graph::Real>(nb);
      for (auto& [name, g] : grads)
        for (auto& v : g.data()) v *= inv;
      clip_gradients(grads, tcfg.clip_norm);
      adam.step(params, grads, sched.lr());
      // 32-bit runs keep float32 weights, so checkpoints are lossless.
      for (auto& [name, t] : params) graph::round_to(t.data(), tcfg.precision);
      adam.round_state(tcfg.precision);
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.lr = sched.lr();  // rate used during this epoch
    rec.val_sisnr = mean_si_snr(val_set, cfg, params, stft_cfg, tcfg.precision, tcfg.jobs);
    if (!std::isfinite(rec.val_sisnr)) throw NumericError("non-finite validation SI-SNR");
    const bool improved = rec.val_sisnr > sched.best();
    sched.observe(rec.val_sisnr);

    model::Checkpoint ck;
    ck.model = cfg;
    ck.params = params;
    ck.train_state = {{"epoch", rec.epoch},
                      {"lr", sched.lr()},
                      {"best_val_sisnr", sched.best()},
                      {"stale_epochs", sched.stale_epochs()},
                      {"decays", sched.decays()},
                      {"adam_steps", adam.steps()},
                      {"seed", tcfg.seed},
                      {"stft", stft_to_json(stft_cfg)}};
    if (improved) {
      result.best_params = params;
      result.best_val_sisnr = rec.val_sisnr;
      if (!options.checkpoint.empty()) model::save_checkpoint(options.checkpoint, ck);
    }
    if (!options.checkpoint.empty()) {
      ck.optimizer_state = adam.state();
      model::save_checkpoint(last_checkpoint_path(options.checkpoint), ck);
    }
    if (!options.log.empty()) append_log(options.log, rec);
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  result.last_params = std::move(params);
  return result;
}

}  // namespace adsep::train::inline ADSEP_REAL_NS
