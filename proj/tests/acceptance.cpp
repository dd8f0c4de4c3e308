// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Artefacts go to ./acceptance_out (or argv[1]).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adsep/common/error.hpp"
#include "adsep/common/random.hpp"
#include "adsep/dsp/stft.hpp"
#include "adsep/enhance/beamform.hpp"
#include "adsep/enhance/enhance.hpp"
#include "adsep/evalx/evalx.hpp"
#include "adsep/graph/grad_check.hpp"
#include "adsep/model/checkpoint.hpp"
#include "adsep/model/network.hpp"
#include "adsep/simroom/dataset.hpp"
#include "adsep/simroom/room.hpp"
#include "adsep/train/loss_ops.hpp"
#include "adsep/train/schedule.hpp"
#include "adsep/train/sisnr.hpp"
#include "adsep/train/trainer.hpp"
#include "oracle.hpp"
#include "rir_oracle.hpp"

using namespace adsep;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

fs::path g_out;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

dsp::StftConfig tiny_stft() {
  dsp::StftConfig c;
  c.fft_size = 16;
  c.hop = 8;
  return c;
}

// N=9, E=4, D=2, H=8, two blocks.
model::ModelConfig tiny_model(model::Topology t = model::Topology::interleaved) {
  model::ModelConfig c;
  c.topology = t;
  c.feature_dim = 9;
  c.embed_dim = 4;
  c.num_heads = 2;
  c.hidden = 8;
  c.num_blocks = 2;
  c.single_channel_layers = 2;
  return c;
}

dsp::ComplexSpectrogram random_spec(std::size_t C, std::size_t T, const dsp::StftConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  dsp::ComplexSpectrogram s(C, T, cfg);
  for (auto& v : s.data()) v = {nd(rng), nd(rng)};
  return s;
}

std::vector<double> random_wave(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

double max_abs_diff(const model::MaskSet& a, const model::MaskSet& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// The bundled tiny recipe (configs/tiny.conf).
model::ModelConfig recipe_model(model::Topology t) {
  model::ModelConfig c;
  c.topology = t;
  c.feature_dim = 129;
  c.embed_dim = 8;
  c.num_heads = 2;
  c.hidden = 32;
  c.num_blocks = 2;
  return c;
}

train::TrainConfig recipe_training(std::size_t epochs) {
  train::TrainConfig t;
  t.learning_rate = 3e-3;
  t.batch_size = 4;
  t.max_epochs = epochs;
  t.plateau_patience = 10;
  t.clip_norm = 5.0;
  t.seed = 1;
  return t;
}

dsp::StftConfig recipe_stft() {
  dsp::StftConfig s;
  s.fft_size = 256;
  s.hop = 128;
  return s;
}

simroom::DatasetConfig desk_set(std::size_t n, std::size_t channels, std::uint64_t seed, const std::string& prefix) {
  simroom::DatasetConfig d;
  d.examples = n;
  d.channels = channels;
  d.utterance_seconds = 2.0;
  d.max_order = 3;
  d.rir_length = 2048;
  d.seed = seed;
  d.id_prefix = prefix;
  return d;
}

// --- 1 ----------------------------------------------------------------------

Outcome permutation_invariance() {
  std::mt19937_64 rng(101);
  double worst32 = 0.0, worst64 = 0.0;
  const auto stft = tiny_stft();
  for (auto topo : {model::Topology::interleaved, model::Topology::stacked}) {
    const auto cfg = tiny_model(topo);
    const auto params = model::init_parameters(cfg, 5);
    for (std::size_t C : {2, 3, 5, 8})
      for (int trial = 0; trial < 20; ++trial) {
        const auto spec = random_spec(C, 8, stft, rng);
        std::vector<std::size_t> perm(C);
        std::iota(perm.begin(), perm.end(), 0);
        do std::shuffle(perm.begin(), perm.end(), rng);
        while (std::is_sorted(perm.begin(), perm.end()));
        const auto shuffled = spec.select(perm);
        worst32 = std::max(worst32, max_abs_diff(model::forward(spec, cfg, params, graph::Precision::f32),
                                                 model::forward(shuffled, cfg, params, graph::Precision::f32)));
        worst64 = std::max(worst64, max_abs_diff(model::forward(spec, cfg, params, graph::Precision::f64),
                                                 model::forward(shuffled, cfg, params, graph::Precision::f64)));
      }
  }
  return {worst32 < 1e-5 && worst64 < 1e-10,
          "max mask deviation 32-bit " + fmt("%.2e", worst32) + " (< 1e-5), 64-bit " + fmt("%.2e", worst64) +
              " (< 1e-10); 20 inputs x C in {2,3,5,8} x {interleaved, stacked}"};
}

// --- 2 ----------------------------------------------------------------------

Outcome channel_count_flexibility() {
  const auto dir = g_out / "c2";
  fs::remove_all(dir);
  auto d = desk_set(2, 3, 21, "c2_");
  d.utterance_seconds = 0.25;
  d.rir_length = 512;
  simroom::build_dataset(d, dir / "data");
  const auto data = simroom::load_dataset(dir / "data" / "manifest.jsonl");
  const auto cfg = tiny_model();
  train::TrainConfig t;
  t.max_epochs = 2;
  train::FitOptions fo;
  fo.checkpoint = dir / "tiny.ckpt";
  train::fit(data, data, cfg, model::init_parameters(cfg, 2), tiny_stft(), t, fo);

  const auto lm = evalx::load_model(fo.checkpoint);
  std::mt19937_64 rng(22);
  std::size_t ok = 0;
  for (std::size_t C = 1; C <= 8; ++C) {
    const auto m = model::forward(random_spec(C, 12, lm.stft, rng), lm.config, lm.params);
    bool in_range = true;
    for (double v : m.data()) in_range = in_range && v >= 0.0 && v <= 1.0;
    ok += m.sources() == 2 && m.frames() == 12 && m.bins() == 9 && in_range;
  }
  return {ok == 8, std::to_string(ok) + "/8 channel counts gave 2 x 12 x 9 masks in [0,1] from one trained checkpoint"};
}

// --- 3 ----------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto cfg = tiny_model();
  const auto stft = tiny_stft();
  const std::size_t C = 3, L = 40;  // T = 1 + L / hop = 6
  std::mt19937_64 rng(31);
  dsp::MultiChannelWave mix(C, L);
  std::vector<std::vector<double>> refs{random_wave(L, rng), random_wave(L, rng)};
  std::uniform_real_distribution<double> gain(0.2, 1.0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t s = 0; s < 2; ++s) {
      const double g = c == 0 ? 1.0 : gain(rng);
      for (std::size_t n = c; n < L; ++n) mix(c, n) += g * refs[s][n - c];
    }
  const auto spec = dsp::stft(mix, stft);
  if (spec.frames() != 6) return {false, "test construction gave T != 6"};
  const auto params = model::init_parameters(cfg, 32);
  auto build = [&](graph::Graph& g, const graph::ParameterSet& ps) {
    const graph::Var masks = model::build_masks(g, spec, cfg, ps);
    return train::pit_loss_node(train::mask_istft(masks, spec, 0, L), refs).loss;
  };
  const auto r = graph::grad_check(build, params, 1e-5,
                                   oracle::evaluator<graph::ParameterSet>([&](const oracle::FlatParameters& p) {
                                     return oracle::training_loss(cfg, spec, refs, L, p);
                                   }));
  std::size_t count = 0;
  for (const auto& [name, t] : params) count += t.data().size();
  return {r.max_relative_error < 1e-4, "max relative error " + fmt("%.2e", r.max_relative_error) + " (< 1e-4) over " +
                                           std::to_string(count) + " parameters, worst at " + r.worst_parameter};
}

// --- 4 ----------------------------------------------------------------------

Outcome si_snr_properties() {
  const std::vector<double> s{1, -1, 1, -1}, e{1, -1, 0, 0};
  const double hand = train::si_snr(e, s);
  std::mt19937_64 rng(41);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto ref = random_wave(256, rng);
    auto est = random_wave(256, rng);
    for (std::size_t i = 0; i < est.size(); ++i) est[i] += 0.5 * ref[i];
    const double base = train::si_snr(est, ref);
    for (double a : {1e-3, 0.37, 5.0, 1e4}) {
      auto scaled = est;
      for (auto& v : scaled) v *= a;
      worst = std::max(worst, std::abs(train::si_snr(scaled, ref) - base));
    }
  }
  return {std::abs(hand) < 1e-9 && worst < 1e-6,
          "hand example " + fmt("%.2e", hand) + " dB (|.| < 1e-9); scale deviation " + fmt("%.2e", worst) +
              " dB (< 1e-6)"};
}

// --- 5 ----------------------------------------------------------------------

// Independent alignment scorer: MSE between unit-norm |m x_c| and channel 0's.
std::array<std::size_t, 2> brute_force_alignment(const dsp::ComplexSpectrogram& spec,
                                                 const std::vector<model::MaskSet>& masks, std::size_t c) {
  auto normalised = [&](std::size_t ch, std::size_t s) {
    std::vector<double> v;
    double norm = 0.0;
    for (std::size_t t = 0; t < spec.frames(); ++t)
      for (std::size_t f = 0; f < spec.bins(); ++f) {
        v.push_back(masks[ch](s, t, f) * std::abs(spec(ch, t, f)));
        norm += v.back() * v.back();
      }
    norm = std::sqrt(norm);
    if (norm > 0)
      for (auto& x : v) x /= norm;
    return v;
  };
  auto mse = [](const std::vector<double>& a, const std::vector<double>& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e += (a[i] - b[i]) * (a[i] - b[i]);
    return e / static_cast<double>(a.size());
  };
  const auto r0 = normalised(0, 0), r1 = normalised(0, 1), c0 = normalised(c, 0), c1 = normalised(c, 1);
  const double keep = mse(c0, r0) + mse(c1, r1), swap = mse(c1, r0) + mse(c0, r1);
  return swap < keep ? std::array<std::size_t, 2>{1, 0} : std::array<std::size_t, 2>{0, 1};
}

Outcome assignment_search() {
  std::mt19937_64 rng(51);
  std::size_t pit_ok = 0, align_ok = 0, swaps_seen = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::vector<double>> est{random_wave(64, rng), random_wave(64, rng)};
    const std::vector<std::vector<double>> ref{random_wave(64, rng), random_wave(64, rng)};
    for (std::size_t i = 0; i < 64; ++i) est[trial % 2][i] += 0.8 * ref[0][i];
    const double keep = 0.5 * (train::si_snr(est[0], ref[0]) + train::si_snr(est[1], ref[1]));
    const double swap = 0.5 * (train::si_snr(est[0], ref[1]) + train::si_snr(est[1], ref[0]));
    const auto p = train::pit_loss(est, ref);
    const train::Permutation want = swap > keep ? train::Permutation{1, 0} : train::Permutation{0, 1};
    pit_ok += p.perm == want && p.loss == -std::max(keep, swap);
  }
  const dsp::StftConfig cfg = tiny_stft();
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t C = 2 + static_cast<std::size_t>(trial % 4);
    const auto spec = random_spec(C, 5, cfg, rng);
    std::vector<model::MaskSet> masks;
    for (std::size_t c = 0; c < C; ++c) {
      model::MaskSet m(2, 5, spec.bins());
      for (std::size_t s = 0; s < 2; ++s)
        for (auto& v : m.source(s)) v = ud(rng);
      masks.push_back(m);
    }
    const auto a = enhance::align_streams(spec, masks);
    bool ok = a.perms[0] == std::array<std::size_t, 2>{0, 1};
    for (std::size_t c = 1; c < C; ++c) {
      ok = ok && a.perms[c] == brute_force_alignment(spec, masks, c);
      swaps_seen += a.perms[c][0] == 1;
    }
    align_ok += ok;
  }
  return {pit_ok == 1000 && align_ok == 1000,
          "PIT " + std::to_string(pit_ok) + "/1000, align_streams " + std::to_string(align_ok) +
              "/1000 trials equal brute force (" + std::to_string(swaps_seen) + " swapped channels)"};
}

// --- 6 ----------------------------------------------------------------------

Outcome stft_round_trip() {
  std::mt19937_64 rng(61);
  const dsp::StftConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const std::size_t L = 4000 + static_cast<std::size_t>(rng() % 20000);
    const auto w = dsp::MultiChannelWave::from_channels({random_wave(L, rng)});
    const auto back = dsp::istft(dsp::stft(w, cfg), cfg, L);
    double num = 0.0, den = 0.0;
    for (std::size_t n = cfg.fft_size; n + cfg.fft_size < L; ++n) {
      num += std::pow(back(0, n) - w(0, n), 2);
      den += w(0, n) * w(0, n);
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  return {worst < 1e-6, "worst interior relative L2 error " + fmt("%.2e", worst) + " (< 1e-6) over 10 waves"};
}

// --- 7 ----------------------------------------------------------------------

Outcome mvdr_distortionless() {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (Eigen::Index C : {2, 4, 7})
    for (int trial = 0; trial < 100; ++trial) {
      enhance::CVector d(C);
      for (Eigen::Index i = 0; i < C; ++i) d(i) = {nd(rng), nd(rng)};
      enhance::CMatrix a(C, C);
      for (Eigen::Index i = 0; i < C; ++i)
        for (Eigen::Index j = 0; j < C; ++j) a(i, j) = {nd(rng), nd(rng)};
      const enhance::CMatrix phi_n = a * a.adjoint() + 0.05 * enhance::CMatrix::Identity(C, C);
      const enhance::SpatialCovariances cov{{2.0 * d * d.adjoint()}, {phi_n}};
      const auto ref = static_cast<std::size_t>(trial % C);
      const enhance::CVector w = enhance::mvdr_weights(cov, ref)[0];
      worst = std::max(worst, std::abs(w.dot(d) - d(static_cast<Eigen::Index>(ref))));
    }
  return {worst < 1e-10, "max |w^H d - d_ref| " + fmt("%.2e", worst) + " (< 1e-10), C in {2,4,7}, 100 trials each"};
}

// --- 8 ----------------------------------------------------------------------

Outcome image_method() {
  Rng rng(81);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const simroom::Vec3 room{2.5 + 2 * u(rng), 2.0 + 2 * u(rng), 2.0 + u(rng)};
    auto inside = [&] {
      return simroom::Vec3{0.1 + (room[0] - 0.2) * u(rng), 0.1 + (room[1] - 0.2) * u(rng),
                           0.1 + (room[2] - 0.2) * u(rng)};
    };
    const auto mic = inside(), src = inside();
    const double beta = 0.1 + 0.8 * u(rng);
    for (int order = 0; order <= 2; ++order) {
      const auto h = simroom::image_method_rir(room, beta, mic, src, order, 1200);
      const auto ref = oracle::brute_force_rir(room, beta, mic, src, order, 1200, 16000);
      for (std::size_t n = 0; n < h.size(); ++n) worst = std::max(worst, std::abs(h[n] - ref[n]));
    }
  }
  std::size_t delay_ok = 0;
  double worst_delay = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto s = simroom::sample_scenario(rng);
    const auto& mic = s.mics[static_cast<std::size_t>(i) % s.mics.size()];
    const auto& src = s.sources[static_cast<std::size_t>(i) % s.sources.size()];
    const double d = std::hypot(mic[0] - src[0], mic[1] - src[1], mic[2] - src[2]);
    const auto h = simroom::image_method_rir(s, mic, src, 2, 2048);
    const double amp = 1.0 / (4 * std::numbers::pi * d);
    std::size_t first = 0;
    while (first < h.size() && std::abs(h[first]) < 0.5 * amp) ++first;
    const double err = std::abs(static_cast<double>(first) - d / simroom::kSpeedOfSound * 16000);
    worst_delay = std::max(worst_delay, err);
    delay_ok += err <= 1.0;
  }
  return {worst < 1e-10 && delay_ok == 100,
          "max deviation from brute force " + fmt("%.2e", worst) + " (< 1e-10) for orders 0-2; direct path within " +
              "1 sample in " + std::to_string(delay_ok) + "/100 geometries (worst " + fmt("%.2f", worst_delay) + ")"};
}

// --- 9, 10, 12 --------------------------------------------------------------

struct Overfit {
  fs::path checkpoint;
  std::size_t epochs = 0;
  bool done = false;
};
Overfit g_overfit;

double mean_sisnri(const std::vector<evalx::EvalItem>& items, const fs::path& ckpt) {
  evalx::SystemSpec sys{"model", evalx::SystemKind::model, ckpt};
  const auto report = evalx::run_matrix(items, std::vector{sys}, evalx::MatrixOptions{});
  return report.aggregate[0].sisnri_db;
}

Outcome overfit_run() {
  const auto t0 = Clock::now();
  const auto dir = g_out / "overfit";
  fs::remove_all(dir);
  simroom::build_dataset(desk_set(4, 4, 91, "train"), dir / "data");
  const auto manifest = dir / "data" / "manifest.jsonl";
  const auto data = simroom::load_dataset(manifest);
  const auto items = evalx::load_eval_set(manifest);
  const auto cfg = recipe_model(model::Topology::interleaved);
  const auto params = model::init_parameters(cfg, 1);
  train::FitOptions fo;
  fo.checkpoint = dir / "interleaved.ckpt";
  fo.log = dir / "interleaved.csv";
  // Chunks of 25 epochs; resume is bitwise identical to an uninterrupted run.
  double sisnri = -1e9;
  std::size_t epochs = 0;
  while (epochs < 300) {
    epochs += 25;
    fo.resume = epochs > 25;
    train::fit(data, data, cfg, params, recipe_stft(), recipe_training(epochs), fo);
    sisnri = mean_sisnri(items, fo.checkpoint);
    std::cerr << "  overfit: " << epochs << " epochs, SI-SNRi " << sisnri << " dB, " << seconds_since(t0) << " s\n";
    if (sisnri >= 5.0) break;
  }
  const double secs = seconds_since(t0);
  g_overfit = {fo.checkpoint, epochs, true};
  return {sisnri >= 5.0 && secs <= 1800.0,
          "mean SI-SNRi " + fmt("%.2f", sisnri) + " dB (>= 5) after " + std::to_string(epochs) +
              " epochs (<= 300); runtime " + fmt("%.0f", secs) + " s (<= 1800); 4 mixtures, C=4, 2 s"};
}

std::vector<evalx::EvalItem> g_test_items;

const std::vector<evalx::EvalItem>& test_set() {
  if (g_test_items.empty()) {
    const auto dir = g_out / "testset";
    fs::remove_all(dir);
    simroom::build_dataset(desk_set(50, 7, 1234, "test"), dir);
    g_test_items = evalx::load_eval_set(dir / "manifest.jsonl");
  }
  return g_test_items;
}

Outcome oracle_dominance() {
  if (!g_overfit.done) return {false, "needs the overfit checkpoint"};
  const auto& items = test_set();
  std::vector<evalx::SystemSpec> systems{{"model", evalx::SystemKind::model, g_overfit.checkpoint},
                                         {"oracle", evalx::SystemKind::oracle, {}}};
  evalx::MatrixOptions mo;
  mo.stft = recipe_stft();
  const auto report = evalx::run_matrix(items, systems, mo);
  const std::size_t U = items.size();
  std::size_t wins = 0;
  for (std::size_t i = 0; i < U; ++i) {
    const double model = 0.5 * (report.rows[2 * i].sisnri_db + report.rows[2 * i + 1].sisnri_db);
    const double oracle = 0.5 * (report.rows[2 * U + 2 * i].sisnri_db + report.rows[2 * U + 2 * i + 1].sisnri_db);
    wins += oracle >= model;
  }
  const double share = static_cast<double>(wins) / static_cast<double>(U);
  return {share >= 0.95, "oracle >= model on " + std::to_string(wins) + "/" + std::to_string(U) + " utterances (" +
                             fmt("%.0f", 100 * share) + "%, >= 95%); mean SI-SNRi oracle " +
                             fmt("%.2f", report.aggregate[1].sisnri_db) + " dB, model " +
                             fmt("%.2f", report.aggregate[0].sisnri_db) + " dB (masking, 7 mics)"};
}

Outcome harness_parity() {
  if (!g_overfit.done) return {false, "needs the overfit checkpoint"};
  const auto& items = test_set();
  // Stacked ablation trained with the same recipe for the same epochs.
  const auto dir = g_out / "overfit";
  const auto data = simroom::load_dataset(dir / "data" / "manifest.jsonl");
  const auto stacked_cfg = recipe_model(model::Topology::stacked);
  train::FitOptions fo;
  fo.checkpoint = dir / "stacked.ckpt";
  fo.log = dir / "stacked.csv";
  fs::remove(fo.log);
  train::fit(data, data, stacked_cfg, model::init_parameters(stacked_cfg, 1), recipe_stft(),
             recipe_training(g_overfit.epochs), fo);

  evalx::MatrixOptions mo;
  mo.stft = recipe_stft();
  std::vector<evalx::SystemSpec> sweep;
  for (std::size_t C = 2; C <= 7; ++C)
    for (auto kind : {evalx::SystemKind::model, evalx::SystemKind::oracle, evalx::SystemKind::mixture}) {
      evalx::SystemSpec s;
      s.name = kind == evalx::SystemKind::model ? "interleaved" : kind == evalx::SystemKind::oracle ? "oracle" : "mixture";
      s.kind = kind;
      s.checkpoint = kind == evalx::SystemKind::model ? g_overfit.checkpoint : fs::path();
      s.mode = enhance::Mode::mvdr;
      s.channels = C;
      sweep.push_back(s);
    }
  const auto sweep_report = evalx::run_matrix(items, sweep, mo);
  const auto sweep_paths = evalx::write_report(sweep_report, g_out / "sweep");

  std::vector<evalx::SystemSpec> ablation;
  for (auto mode : {enhance::Mode::masking, enhance::Mode::mvdr}) {
    ablation.push_back({"interleaved", evalx::SystemKind::model, g_overfit.checkpoint, mode});
    ablation.push_back({"stacked", evalx::SystemKind::model, fo.checkpoint, mode});
  }
  ablation.push_back({"mixture", evalx::SystemKind::mixture, {}});
  const auto ablation_report = evalx::run_matrix(items, ablation, mo);
  const auto ablation_paths = evalx::write_report(ablation_report, g_out / "ablation");

  bool finite = true;
  for (const auto* r : {&sweep_report, &ablation_report})
    for (const auto& row : r->rows) finite = finite && std::isfinite(row.sisnri_db) && std::isfinite(row.sdr_db);
  std::ostringstream detail;
  detail << "sweep C=2..7 -> " << sweep_report.aggregate.size() << " aggregate rows; ablation -> "
         << ablation_report.aggregate.size() << " rows; CSVs " << sweep_paths.aggregate.string() << ", "
         << ablation_paths.aggregate.string() << "\n";
  for (const auto& a : sweep_report.aggregate)
    if (a.system != "mixture")
      detail << "      sweep     " << a.system << " C=" << a.channels << "  SI-SNRi " << fmt("%6.2f", a.sisnri_db)
             << " dB\n";
  for (const auto& a : ablation_report.aggregate)
    detail << "      ablation  " << a.system << " " << a.mode << "  SI-SNRi " << fmt("%6.2f", a.sisnri_db) << " dB\n";
  std::string text = detail.str();
  text.pop_back();
  return {finite && sweep_report.aggregate.size() == 18 && ablation_report.aggregate.size() == 5, text};
}

// --- 11 ---------------------------------------------------------------------

Outcome scheduler_traces() {
  struct Trace {
    std::vector<double> scores;
    std::vector<std::size_t> decays;
  };
  // Patience 3: the learning rate halves on the third consecutive epoch
  // without a new best, after which the count restarts.
  const std::vector<Trace> traces{
      {{5, 5, 5, 5}, {4}},
      {{5, 6, 5, 5, 5}, {5}},
      {{1, 2, 3, 4, 5}, {}},
      {{5, 5, 5, 5, 5, 5, 5}, {4, 7}},
      {{5, 4, 4, 6, 4, 4, 4, 7}, {7}},
      {{1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2}, {4, 8, 11}},
  };
  std::size_t ok = 0;
  for (const auto& tr : traces) {
    train::PlateauScheduler s(1e-3, 3, 0.5);
    std::vector<std::size_t> got;
    for (std::size_t e = 0; e < tr.scores.size(); ++e)
      if (s.observe(tr.scores[e])) got.push_back(e + 1);
    ok += got == tr.decays && s.lr() == 1e-3 * std::pow(0.5, static_cast<double>(tr.decays.size()));
  }
  return {ok == traces.size(), std::to_string(ok) + "/" + std::to_string(traces.size()) +
                                   " injected validation traces decay at the hand-traced epochs"};
}

}  // namespace

int main(int argc, char** argv) {
  g_out = fs::absolute(argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out"));
  fs::create_directories(g_out);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"permutation invariance", permutation_invariance},
      {"channel-count flexibility", channel_count_flexibility},
      {"gradient correctness", gradient_correctness},
      {"SI-SNR properties", si_snr_properties},
      {"PIT and align_streams vs brute force", assignment_search},
      {"STFT round trip", stft_round_trip},
      {"MVDR distortionless response", mvdr_distortionless},
      {"image method", image_method},
      {"overfit run", overfit_run},
      {"oracle dominance", oracle_dominance},
      {"LR scheduler traces", scheduler_traces},
      {"harness parity (report only)", harness_parity},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << "  [" << fmt("%.1f", seconds_since(t0)) << " s]" << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
