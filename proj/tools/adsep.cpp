#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "adsep/common/error.hpp"
#include "adsep/dsp/wav_io.hpp"
#include "adsep/enhance/enhance.hpp"
#include "adsep/evalx/evalx.hpp"
#include "adsep/model/network.hpp"
#include "adsep/simroom/dataset.hpp"
#include "adsep/train/trainer.hpp"
#include "flat_config.hpp"

namespace fs = std::filesystem;
using namespace adsep;

namespace {

// Bad flag values or combinations; exit status 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_range(simroom::Range r) {
  std::ostringstream os;
  os << r.lo << "," << r.hi;
  return os.str();
}

simroom::Range parse_range(const std::string& flag, const std::string& s) {
  const auto comma = s.find(',');
  try {
    std::size_t a = 0, b = 0;
    const double lo = std::stod(s.substr(0, comma), &a);
    if (comma == std::string::npos) {
      if (a != s.size()) throw std::invalid_argument(s);
      return {lo, lo};
    }
    const std::string rest = s.substr(comma + 1);
    const double hi = std::stod(rest, &b);
    if (a != comma || b != rest.size()) throw std::invalid_argument(s);
    return {lo, hi};
  } catch (const std::exception&) {
    throw UsageError("--" + flag + ": expected 'lo,hi' or a single number, got '" + s + "'");
  }
}

graph::Precision parse_precision(const std::string& s) {
  if (s == "f32") return graph::Precision::f32;
  if (s == "f64") return graph::Precision::f64;
  throw UsageError("--precision: expected f32 or f64, got '" + s + "'");
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  std::string precision = "f32";
};

void add_common(CLI::App* sub, Common& c, bool precision = true) {
  sub->add_option("--config", c.config, "Flat 'key = value' file; keys are flag names, flags win");
  sub->add_option("--seed", c.seed, "Seed for every random choice");
  sub->add_option("--jobs", c.jobs, "Worker threads (0: all logical cores)");
  if (precision) sub->add_option("--precision", c.precision, "Runtime precision: f32 or f64");
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  simroom::DatasetConfig cfg;
  std::string out;
  std::string room_x, room_y, room_z, table_x, table_y, mic_height, source_distance, source_height, beta;
  std::string overlap, snr;
  std::string source_dir, noise_dir;
};

void add_simulate(CLI::App* sub, SimulateArgs& a) {
  auto& c = a.cfg;
  const simroom::SamplingRanges r;
  a.room_x = format_range(r.room_x);
  a.room_y = format_range(r.room_y);
  a.room_z = format_range(r.room_z);
  a.table_x = format_range(r.table_x);
  a.table_y = format_range(r.table_y);
  a.mic_height = format_range(r.mic_height);
  a.source_distance = format_range(r.source_distance);
  a.source_height = format_range(r.source_height);
  a.beta = format_range(r.beta);
  a.overlap = format_range(c.overlap);
  a.snr = format_range(c.snr_db);
  sub->add_option("--out", a.out, "Output directory (manifest.jsonl plus one folder per example)");
  sub->add_option("--n", c.examples, "Number of examples");
  sub->add_option("--channels", c.channels, "Microphones per example");
  sub->add_option("--max-order", c.max_order, "Image-method reflection order");
  sub->add_option("--rir-length", c.rir_length, "RIR length in samples");
  sub->add_option("--seconds", c.utterance_seconds, "Length of each talker's utterance");
  sub->add_option("--sample-rate", c.sample_rate, "Sample rate in Hz");
  sub->add_option("--peak", c.peak, "Peak magnitude of the written signals");
  sub->add_option("--overlap", a.overlap, "Overlap-ratio range lo,hi");
  sub->add_option("--snr", a.snr, "Speech-to-noise ratio range in dB, lo,hi");
  sub->add_option("--room-x", a.room_x, "Room length range in m");
  sub->add_option("--room-y", a.room_y, "Room width range in m");
  sub->add_option("--room-z", a.room_z, "Room height range in m");
  sub->add_option("--table-x", a.table_x, "Table footprint length range in m");
  sub->add_option("--table-y", a.table_y, "Table footprint width range in m");
  sub->add_option("--table-height", c.ranges.table_height, "Table height in m");
  sub->add_option("--mic-height", a.mic_height, "Microphone height range in m");
  sub->add_option("--source-distance", a.source_distance, "Talker distance beyond the table edge in m");
  sub->add_option("--source-height", a.source_height, "Talker height range in m");
  sub->add_option("--beta", a.beta, "Wall reflection coefficient range");
  sub->add_option("--wall-margin", c.ranges.wall_margin, "Minimum talker-to-wall distance in m");
  sub->add_option("--source-dir", a.source_dir, "Directory of utterance WAVs (synthetic speech when empty)");
  sub->add_option("--noise-dir", a.noise_dir, "Directory of noise WAVs (white noise when empty)");
  sub->add_option("--id-prefix", c.id_prefix, "Prefix of example ids");
}

int cmd_simulate(SimulateArgs& a, const Common& common) {
  if (a.out.empty()) throw UsageError("simulate: --out is required");
  auto& c = a.cfg;
  c.seed = common.seed;
  c.jobs = common.jobs;
  c.source_dir = a.source_dir;
  c.noise_dir = a.noise_dir;
  c.overlap = parse_range("overlap", a.overlap);
  c.snr_db = parse_range("snr", a.snr);
  c.ranges.room_x = parse_range("room-x", a.room_x);
  c.ranges.room_y = parse_range("room-y", a.room_y);
  c.ranges.room_z = parse_range("room-z", a.room_z);
  c.ranges.table_x = parse_range("table-x", a.table_x);
  c.ranges.table_y = parse_range("table-y", a.table_y);
  c.ranges.mic_height = parse_range("mic-height", a.mic_height);
  c.ranges.source_distance = parse_range("source-distance", a.source_distance);
  c.ranges.source_height = parse_range("source-height", a.source_height);
  c.ranges.beta = parse_range("beta", a.beta);
  c.validate();
  simroom::build_dataset(c, a.out);
  std::cout << (fs::path(a.out) / "manifest.jsonl").string() << "\n";
  return 0;
}

// --- train ------------------------------------------------------------------

struct ModelArgs {
  model::ModelConfig cfg;
  std::string topology = "interleaved";
  std::string input_feature = "magnitude";
  std::size_t fft_size = 0;
  std::size_t hop = 0;
};

void add_model(CLI::App* sub, ModelArgs& m) {
  auto& c = m.cfg;
  sub->add_option("--topology", m.topology, "interleaved, stacked or single-channel");
  sub->add_option("--input-feature", m.input_feature, "magnitude or magnitude+relational");
  sub->add_option("--feature-dim", c.feature_dim, "STFT bins N");
  sub->add_option("--embed-dim", c.embed_dim, "Attention dimension per head E");
  sub->add_option("--heads", c.num_heads, "Attention heads D");
  sub->add_option("--hidden", c.hidden, "BLSTM cells per direction H");
  sub->add_option("--blocks", c.num_blocks, "Spatio-temporal blocks");
  sub->add_option("--single-layers", c.single_channel_layers, "BLSTM layers of the single-channel model");
  sub->add_flag("--scale-attention", c.scale_attention, "Divide attention scores by sqrt(E)");
  sub->add_option("--fft-size", m.fft_size, "STFT size (0: 2(N-1))");
  sub->add_option("--hop", m.hop, "STFT hop (0: half the STFT size)");
}

model::ModelConfig resolve_model(ModelArgs& m) {
  m.cfg.topology = model::parse_topology(m.topology);
  m.cfg.input_feature = model::parse_input_feature(m.input_feature);
  m.cfg.validate();
  return m.cfg;
}

dsp::StftConfig resolve_stft(const ModelArgs& m) {
  dsp::StftConfig s;
  s.fft_size = m.fft_size ? m.fft_size : 2 * (m.cfg.feature_dim - 1);
  s.hop = m.hop ? m.hop : s.fft_size / 2;
  s.validate();
  if (s.num_bins() != m.cfg.feature_dim)
    throw UsageError("--fft-size " + std::to_string(s.fft_size) + " gives " + std::to_string(s.num_bins()) +
                     " bins but --feature-dim is " + std::to_string(m.cfg.feature_dim));
  return s;
}

struct TrainArgs {
  ModelArgs model;
  train::TrainConfig cfg;
  std::string train_manifest, val_manifest, checkpoint, log;
  bool resume = false;
};

void add_train(CLI::App* sub, TrainArgs& a) {
  add_model(sub, a.model);
  auto& c = a.cfg;
  sub->add_option("--train", a.train_manifest, "Training manifest (manifest.jsonl)");
  sub->add_option("--val", a.val_manifest, "Validation manifest (default: the training manifest)");
  sub->add_option("--checkpoint", a.checkpoint, "Best-validation checkpoint to write");
  sub->add_option("--log", a.log, "CSV training log (default: <checkpoint>.csv)");
  sub->add_flag("--resume", a.resume, "Continue from <checkpoint>.last with its optimiser state");
  sub->add_option("--learning-rate", c.learning_rate, "Adam learning rate");
  sub->add_option("--batch-size", c.batch_size, "Examples per update");
  sub->add_option("--epochs", c.max_epochs, "Maximum epochs");
  sub->add_option("--patience", c.plateau_patience, "Epochs without validation improvement before decay");
  sub->add_option("--decay", c.lr_decay_factor, "Learning-rate decay factor");
  sub->add_option("--clip-norm", c.clip_norm, "Global gradient-norm clip (0: off)");
}

int cmd_train(TrainArgs& a, const Common& common) {
  if (a.train_manifest.empty()) throw UsageError("train: --train is required");
  if (a.checkpoint.empty()) throw UsageError("train: --checkpoint is required");
  const auto cfg = resolve_model(a.model);
  const auto stft = resolve_stft(a.model);
  a.cfg.seed = common.seed;
  a.cfg.jobs = common.jobs;
  a.cfg.precision = parse_precision(common.precision);
  a.cfg.validate();
  const auto train_set = simroom::load_dataset(a.train_manifest, common.jobs);
  const auto val_set = a.val_manifest.empty() ? train_set : simroom::load_dataset(a.val_manifest, common.jobs);
  train::FitOptions opts;
  opts.checkpoint = a.checkpoint;
  opts.log = a.log.empty() ? fs::path(a.checkpoint + ".csv") : fs::path(a.log);
  opts.resume = a.resume;
  opts.on_epoch = [](const train::EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << "  loss " << r.train_loss << "  val_sisnr " << r.val_sisnr << "  lr " << r.lr
              << "\n";
  };
  const auto res = train::fit(train_set, val_set, cfg, model::init_parameters(cfg, common.seed), stft, a.cfg, opts);
  std::cout << a.checkpoint << "\n" << opts.log.string() << "\n";
  std::cerr << "best validation SI-SNR " << res.best_val_sisnr << " dB\n";
  return 0;
}

// --- separate ---------------------------------------------------------------

struct EnhanceArgs {
  std::string mode = "mvdr";
  std::string policy = "max-snr";
  std::string vad = "none";
  double loading = enhance::kDefaultLoading;
};

void add_enhance(CLI::App* sub, EnhanceArgs& e) {
  sub->add_option("--mode", e.mode, "masking or mvdr");
  sub->add_option("--ref-policy", e.policy, "max-snr, random or oracle");
  sub->add_option("--vad", e.vad, "none, oracle or energy");
  sub->add_option("--loading", e.loading, "MVDR diagonal loading relative to trace/C");
}

struct SeparateArgs {
  EnhanceArgs enh;
  std::string checkpoint, manifest, utterance, out_dir = "separated";
  std::vector<std::string> inputs;
  bool save_masks = false;
};

void add_separate(CLI::App* sub, SeparateArgs& a) {
  sub->add_option("--checkpoint", a.checkpoint, "Trained model");
  sub->add_option("--input", a.inputs, "Mono WAV per microphone (or one multi-channel WAV)")->delimiter(',');
  sub->add_option("--manifest", a.manifest, "Read the mixture from a manifest instead (enables oracle options)");
  sub->add_option("--utterance", a.utterance, "Manifest example id (default: the first)");
  sub->add_option("--out-dir", a.out_dir, "Output directory");
  add_enhance(sub, a.enh);
  sub->add_flag("--save-masks", a.save_masks, "Also write the masks as raw little-endian float32 (masks.f32)");
}

int cmd_separate(SeparateArgs& a, const Common& common) {
  if (a.checkpoint.empty()) throw UsageError("separate: --checkpoint is required");
  if (a.inputs.empty() == a.manifest.empty()) throw UsageError("separate: give either --input or --manifest");
  enhance::EnhanceOptions eo;
  eo.mode = enhance::parse_mode(a.enh.mode);
  eo.policy = enhance::parse_policy(a.enh.policy);
  eo.vad = enhance::parse_vad(a.enh.vad);
  eo.loading = a.enh.loading;
  eo.seed = common.seed;
  const bool needs_oracle = eo.policy == enhance::RefPolicy::oracle || eo.vad == enhance::VadKind::oracle;
  if (needs_oracle && a.manifest.empty())
    throw UsageError("separate: oracle reference policy or VAD needs --manifest (clean source images)");

  const auto lm = evalx::load_model(a.checkpoint);
  dsp::MultiChannelWave wave;
  std::optional<enhance::OracleData> oracle;
  nlohmann::json source;
  if (!a.manifest.empty()) {
    const auto entries = simroom::read_manifest(a.manifest);
    auto it = entries.begin();
    if (!a.utterance.empty())
      it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.id == a.utterance; });
    if (it == entries.end())
      throw DataError(a.manifest + ": no example '" + (a.utterance.empty() ? std::string("(any)") : a.utterance) + "'");
    const auto ex = simroom::load_example(*it, fs::path(a.manifest).parent_path());
    wave = ex.mixture;
    if (needs_oracle) oracle = enhance::OracleData::from_example(ex);
    source = {{"manifest", a.manifest}, {"utterance", it->id}};
  } else {
    std::vector<fs::path> paths(a.inputs.begin(), a.inputs.end());
    wave = paths.size() == 1 ? dsp::read_wav(paths[0]) : dsp::read_channels(paths);
    source = {{"inputs", a.inputs}};
  }
  wave.check_finite();

  std::vector<std::string> warnings;
  auto warn = [&](const std::string& w) {
    std::cerr << "warning: " << w << "\n";
    warnings.push_back(w);
  };
  if (wave.sample_rate() != lm.stft.sample_rate)
    warn("input sample rate " + std::to_string(wave.sample_rate()) + " Hz differs from the model's " +
         std::to_string(lm.stft.sample_rate) + " Hz");
  if (eo.mode == enhance::Mode::mvdr && wave.channels() == 1)
    warn("one input channel: the MVDR beamformer degenerates to a passthrough (w = 1) and returns the "
         "unprocessed channel for both sources; use --mode masking or two or more microphones to separate");

  eo.length = wave.length();
  const auto spec = dsp::stft(wave, lm.stft);
  const auto masks = evalx::infer_masks(spec, lm, parse_precision(common.precision));
  const auto res = enhance::enhance_utterance(spec, masks, eo, oracle ? &*oracle : nullptr);
  for (const auto& s : res.sources)
    if (!std::all_of(s.begin(), s.end(), [](double v) { return std::isfinite(v); }))
      throw NumericError("separate: non-finite output samples");

  const fs::path out(a.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError(out.string() + ": cannot create directory: " + ec.message());
  std::vector<std::string> outputs;
  for (std::size_t k = 0; k < res.sources.size(); ++k) {
    const auto p = out / ("source" + std::to_string(k) + ".wav");
    dsp::write_wav(p, dsp::MultiChannelWave::from_channels({res.sources[k]}, wave.sample_rate()));
    outputs.push_back(p.string());
  }
  auto side = res.sidecar(eo);
  side["checkpoint"] = a.checkpoint;
  side["source"] = source;
  side["channels"] = wave.channels();
  side["outputs"] = outputs;
  side["warnings"] = warnings;
  side["mask_sets"] = masks.size();
  side["mask_shape"] = {masks[0].sources(), masks[0].frames(), masks[0].bins()};
  nlohmann::json means = nlohmann::json::array();
  for (const auto& m : masks) {
    std::vector<double> per;
    for (std::size_t s = 0; s < m.sources(); ++s) {
      const auto v = m.source(s);
      double sum = 0.0;
      for (double x : v) sum += x;
      per.push_back(sum / static_cast<double>(v.size()));
    }
    means.push_back(per);
  }
  side["mask_mean"] = means;
  if (a.save_masks) {
    const auto p = out / "masks.f32";
    std::ofstream os(p, std::ios::binary);
    for (const auto& m : masks)
      for (double x : m.data()) {
        const float f = static_cast<float>(x);
        os.write(reinterpret_cast<const char*>(&f), sizeof f);
      }
    if (!os) throw DataError(p.string() + ": write failed");
    side["masks_file"] = p.string();
  }
  const auto side_path = out / "separate.json";
  std::ofstream os(side_path);
  os << side.dump(2) << "\n";
  if (!os) throw DataError(side_path.string() + ": write failed");
  for (const auto& p : outputs) std::cout << p << "\n";
  std::cout << side_path.string() << "\n";
  return 0;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string test, out = "report", channels, sweep;
  std::vector<std::string> systems;
  std::vector<std::string> modes{"masking", "mvdr"};
  std::vector<std::string> policies{"max-snr"};
  std::string vad = "none";
  bool oracle = true, mixture = true;
  std::size_t fft_size = 512, hop = 256;
};

void add_evaluate(CLI::App* sub, EvaluateArgs& a) {
  sub->add_option("--test", a.test, "Test manifest (manifest.jsonl)");
  sub->add_option("--system", a.systems, "Checkpoint to evaluate, as name=path or path; repeatable")->delimiter(',');
  sub->add_option("--modes", a.modes, "Enhancement modes, comma separated")->delimiter(',');
  sub->add_option("--ref-policies", a.policies, "Reference policies, comma separated")->delimiter(',');
  sub->add_option("--vad", a.vad, "none, oracle or energy");
  sub->add_option("--channels", a.channels, "Channel counts, e.g. 4 or 2,4 (default: all channels)");
  sub->add_option("--sweep-channels", a.sweep, "Channel-count sweep, e.g. 2..7 (subsets keep each talker's near mic)");
  sub->add_flag("--oracle,!--no-oracle", a.oracle, "Include the ideal-ratio-mask system");
  sub->add_flag("--mixture,!--no-mixture", a.mixture, "Include the unprocessed-mixture system");
  sub->add_option("--fft-size", a.fft_size, "STFT size for oracle/mixture rows when no checkpoint is given");
  sub->add_option("--hop", a.hop, "STFT hop for oracle/mixture rows when no checkpoint is given");
  sub->add_option("--out", a.out, "Report prefix: writes <out>_rows.csv and <out>_aggregate.csv");
}

int cmd_evaluate(EvaluateArgs& a, const Common& common) {
  if (a.test.empty()) throw UsageError("evaluate: --test is required");
  if (!a.channels.empty() && !a.sweep.empty()) throw UsageError("evaluate: give --channels or --sweep-channels, not both");
  std::vector<std::size_t> counts{0};
  const std::string list = a.sweep.empty() ? a.channels : a.sweep;
  if (!list.empty()) counts = evalx::parse_channel_list(list);
  std::vector<enhance::Mode> modes;
  for (const auto& m : a.modes) modes.push_back(enhance::parse_mode(m));
  std::vector<enhance::RefPolicy> policies;
  for (const auto& p : a.policies) policies.push_back(enhance::parse_policy(p));
  const auto vad = enhance::parse_vad(a.vad);

  struct Named {
    std::string name;
    fs::path path;
  };
  std::vector<Named> models;
  for (const auto& s : a.systems) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      models.push_back({fs::path(s).stem().string(), s});
    else
      models.push_back({s.substr(0, eq), s.substr(eq + 1)});
  }
  evalx::MatrixOptions mo;
  mo.seed = common.seed;
  mo.jobs = common.jobs;
  mo.precision = parse_precision(common.precision);
  if (!models.empty()) {
    mo.stft = evalx::load_model(models[0].path).stft;
  } else {
    mo.stft.fft_size = a.fft_size;
    mo.stft.hop = a.hop;
    mo.stft.validate();
  }
  std::vector<evalx::SystemSpec> systems;
  for (std::size_t C : counts) {
    auto add = [&](std::string name, evalx::SystemKind kind, fs::path path, enhance::Mode mode,
                   enhance::RefPolicy policy) {
      evalx::SystemSpec s;
      s.name = std::move(name);
      s.kind = kind;
      s.checkpoint = std::move(path);
      s.mode = mode;
      s.policy = policy;
      s.vad = vad;
      s.channels = C;
      systems.push_back(std::move(s));
    };
    for (const auto& m : models)
      for (auto mode : modes)
        for (auto policy : policies) add(m.name, evalx::SystemKind::model, m.path, mode, policy);
    if (a.oracle)
      for (auto mode : modes)
        for (auto policy : policies) add("oracle", evalx::SystemKind::oracle, {}, mode, policy);
    if (a.mixture) add("mixture", evalx::SystemKind::mixture, {}, enhance::Mode::masking, enhance::RefPolicy::max_snr);
  }
  if (systems.empty()) throw UsageError("evaluate: nothing to evaluate (no --system, oracle and mixture disabled)");

  const auto items = evalx::load_eval_set(a.test, common.jobs);
  const auto report = evalx::run_matrix(items, systems, mo);
  const auto paths = evalx::write_report(report, a.out);
  for (const auto& r : report.aggregate)
    std::cerr << r.system << "  " << r.mode << "  " << r.policy << "  C=" << r.channels << "  SI-SNRi " << r.sisnri_db
              << " dB  SDR " << r.sdr_db << " dB\n";
  std::cout << paths.rows.string() << "\n" << paths.aggregate.string() << "\n";
  return 0;
}

// --- config injection -------------------------------------------------------

bool on_command_line(const std::vector<std::string>& args, const std::string& name) {
  const std::string flag = "--" + name;
  for (const auto& s : args)
    if (s == flag || s.rfind(flag + "=", 0) == 0) return true;
  if (name.rfind("no-", 0) != 0)
    for (const auto& s : args)
      if (s == "--no-" + name) return true;
  return false;
}

std::string config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

// Turns file entries into flags placed before the user's own, skipping keys
// the command line already sets. Keys must name a flag of some subcommand.
std::vector<std::string> apply_config(const CLI::App& app, std::vector<std::string> args) {
  const auto path = config_path(args);
  if (path.empty()) return args;
  const auto file = cli::read_flat_config(path);
  std::set<std::string> known;
  for (const auto* sub : app.get_subcommands({}))
    for (const auto* opt : sub->get_options())
      for (const auto& n : opt->get_lnames()) known.insert(n);
  known.erase("config");
  known.erase("help");
  for (const auto& [k, v] : file)
    if (!known.count(k)) throw UsageError(path + ": unknown key '" + k + "'");

  const auto at = std::find_if(args.begin(), args.end(), [](const std::string& s) { return s.empty() || s[0] != '-'; });
  if (at == args.end()) return args;
  const CLI::App* sub = nullptr;
  for (const auto* s : app.get_subcommands({}))
    if (s->get_name() == *at) sub = s;
  if (!sub) return args;
  std::vector<std::string> injected;
  for (const auto& [k, v] : file) {
    const auto* opt = sub->get_option_no_throw("--" + k);
    if (!opt || on_command_line(args, k)) continue;
    injected.push_back("--" + k + "=" + v);
  }
  args.insert(at + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel-count- and order-invariant multichannel speech separation"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common common;
  SimulateArgs sim_args;
  TrainArgs train_args;
  SeparateArgs sep_args;
  EvaluateArgs eval_args;
  auto* sim = app.add_subcommand("simulate", "Simulate a multichannel two-talker dataset");
  auto* trn = app.add_subcommand("train", "Train a separation model");
  auto* sep = app.add_subcommand("separate", "Separate one recording");
  auto* evl = app.add_subcommand("evaluate", "Score systems on a test manifest");
  add_common(sim, common, false);
  for (auto* s : {trn, sep, evl}) add_common(s, common);
  add_simulate(sim, sim_args);
  add_train(trn, train_args);
  add_separate(sep, sep_args);
  add_evaluate(evl, eval_args);
  app.footer(
      "Exit status: 0 success, 1 usage error, 2 data error, 3 numeric failure.\n"
      "Config files hold one 'key = value' per line; keys are flag names without '--'.");

  try {
    auto args = apply_config(app, std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_args, common);
    if (*trn) return cmd_train(train_args, common);
    if (*sep) return cmd_separate(sep_args, common);
    if (*evl) return cmd_evaluate(eval_args, common);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
