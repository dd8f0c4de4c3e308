#include "adsep/simroom/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "adsep/common/error.hpp"
#include "adsep/common/parallel.hpp"
#include "adsep/dsp/wav_io.hpp"
#include "adsep/simroom/mixture.hpp"

namespace adsep::simroom {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double draw(Rng& rng, const Range& r) { return r.hi > r.lo ? uniform(rng, r.lo, r.hi) : r.lo; }

json vec(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir.string() + ": cannot create directory: " + ec.message());
}

void write_mono(const fs::path& path, std::span<const double> samples, int fs) {
  dsp::MultiChannelWave w(1, samples.size(), fs);
  std::copy(samples.begin(), samples.end(), w.channel(0).begin());
  dsp::write_wav(path, w, dsp::WavFormat::float32);
}

std::vector<double> crop(const std::vector<double>& s, std::size_t n) {
  return {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(std::min(n, s.size()))};
}

}  // namespace

void DatasetConfig::validate() const {
  ranges.validate();
  if (channels == 0 || channels > ranges.candidate_mics)
    throw std::invalid_argument("requested " + std::to_string(channels) + " mics but a scenario has " +
                                std::to_string(ranges.candidate_mics) + " candidates");
  if (max_order < 0) throw std::invalid_argument("max_order must be >= 0");
  if (rir_length == 0) throw std::invalid_argument("rir_length must be > 0");
  if (!(utterance_seconds > 0.0)) throw std::invalid_argument("utterance_seconds must be > 0");
  if (!(overlap.lo >= 0.0 && overlap.hi <= 1.0 && overlap.lo <= overlap.hi))
    throw std::invalid_argument("overlap range must lie in [0, 1]");
  if (!(snr_db.lo <= snr_db.hi) || !std::isfinite(snr_db.lo) || !std::isfinite(snr_db.hi))
    throw std::invalid_argument("snr range is empty or not finite");
  if (!(peak > 0.0 && peak <= 1.0)) throw std::invalid_argument("peak must lie in (0, 1]");
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be > 0");
}

json SimulatedExample::scenario_summary(const DatasetConfig& cfg) const {
  json mics = json::array(), srcs = json::array();
  for (auto i : mic_indices) mics.push_back(vec(scenario.mics[i]));
  for (std::size_t k = 0; k < 2; ++k) srcs.push_back(vec(scenario.sources[source_indices[k]]));
  return {{"room", vec(scenario.room)},
          {"beta", scenario.beta},
          {"table", {{"origin", vec(scenario.table.origin)}, {"size", vec(scenario.table.size)}}},
          {"mics", mics},
          {"sources", srcs},
          {"noise_source", vec(scenario.sources[source_indices[2]])},
          {"max_order", cfg.max_order},
          {"rir_length", cfg.rir_length}};
}

SignalPool SignalPool::load(const fs::path& dir, int sample_rate) {
  SignalPool pool;
  if (dir.empty()) return pool;
  if (!fs::is_directory(dir)) throw DataError(dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError(dir.string() + ": no .wav files");
  for (const auto& f : files) {
    auto w = dsp::read_wav(f);
    if (w.sample_rate() != sample_rate)
      throw DataError(f.string() + ": sample rate " + std::to_string(w.sample_rate()) + ", expected " +
                      std::to_string(sample_rate));
    pool.signals.emplace_back(w.channel(0).begin(), w.channel(0).end());
  }
  return pool;
}

SimulatedExample simulate_example(const DatasetConfig& cfg, std::size_t index, const SignalPool& sources,
                                  const SignalPool& noises) {
  cfg.validate();
  SimulatedExample out;
  out.seed = derive_seed(cfg.seed, index);
  Rng rng(out.seed);
  out.scenario = sample_scenario(rng, cfg.ranges);

  std::vector<std::size_t> mics(out.scenario.mics.size()), srcs(out.scenario.sources.size());
  std::iota(mics.begin(), mics.end(), 0);
  std::iota(srcs.begin(), srcs.end(), 0);
  std::shuffle(mics.begin(), mics.end(), rng);
  std::shuffle(srcs.begin(), srcs.end(), rng);
  out.mic_indices.assign(mics.begin(), mics.begin() + static_cast<std::ptrdiff_t>(cfg.channels));
  out.source_indices.assign(srcs.begin(), srcs.begin() + 3);

  const double overlap = draw(rng, cfg.overlap);
  const double snr = draw(rng, cfg.snr_db);
  const auto n = static_cast<std::size_t>(std::llround(cfg.utterance_seconds * cfg.sample_rate));
  std::vector<std::vector<double>> utterances;
  if (sources.empty()) {
    for (int s = 0; s < 2; ++s) utterances.push_back(synthetic_utterance(rng, n, cfg.sample_rate));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, sources.signals.size() - 1);
    for (int s = 0; s < 2; ++s) utterances.push_back(crop(sources.signals[pick(rng)], n));
  }
  std::vector<double> noise;
  if (noises.empty()) {
    noise = white_noise(rng, n);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, noises.signals.size() - 1);
    noise = noises.signals[pick(rng)];
  }

  std::vector<Vec3> mic_pos, src_pos;
  for (auto i : out.mic_indices) mic_pos.push_back(out.scenario.mics[i]);
  for (auto i : out.source_indices) src_pos.push_back(out.scenario.sources[i]);
  const RirSet rirs = compute_rirs(out.scenario, mic_pos, src_pos, cfg.max_order, cfg.rir_length, cfg.sample_rate);
  out.example = render_mixture(utterances, rirs, overlap, noise, snr);

  // One common gain keeps every ratio intact.
  double top = 0.0;
  for (double v : out.example.mixture.data()) top = std::max(top, std::abs(v));
  for (const auto& img : out.example.source_images)
    for (double v : img.data()) top = std::max(top, std::abs(v));
  if (top > 0.0) {
    const double g = cfg.peak / top;
    for (auto& v : out.example.mixture.data()) v *= g;
    for (auto& img : out.example.source_images)
      for (auto& v : img.data()) v *= g;
    for (auto& r : out.example.references)
      for (auto& v : r) v *= g;
  }
  char id[32];
  std::snprintf(id, sizeof id, "%05zu", index);
  out.example.id = cfg.id_prefix + id;
  return out;
}

json ManifestEntry::to_json() const {
  auto strings = [](const std::vector<fs::path>& ps) {
    json a = json::array();
    for (const auto& p : ps) a.push_back(p.generic_string());
    return a;
  };
  json imgs = json::array();
  for (const auto& per_source : images) imgs.push_back(strings(per_source));
  json act = json::array();
  for (const auto& [b, e] : activity) act.push_back({b, e});
  return {{"id", id},
          {"channels", strings(channels)},
          {"references", strings(references)},
          {"images", imgs},
          {"activity", act},
          {"scenario", scenario},
          {"overlap_ratio", overlap_ratio},
          {"snr_db", snr_db},
          {"seed", seed},
          {"length", length},
          {"sample_rate", sample_rate}};
}

ManifestEntry ManifestEntry::from_json(const json& j) {
  ManifestEntry e;
  e.id = j.at("id").get<std::string>();
  for (const auto& p : j.at("channels")) e.channels.emplace_back(p.get<std::string>());
  for (const auto& p : j.at("references")) e.references.emplace_back(p.get<std::string>());
  if (j.contains("images"))
    for (const auto& per_source : j.at("images")) {
      e.images.emplace_back();
      for (const auto& p : per_source) e.images.back().emplace_back(p.get<std::string>());
    }
  if (j.contains("activity"))
    for (const auto& a : j.at("activity")) e.activity.emplace_back(a.at(0).get<std::size_t>(), a.at(1).get<std::size_t>());
  e.scenario = j.value("scenario", json::object());
  e.overlap_ratio = j.value("overlap_ratio", 0.0);
  e.snr_db = j.value("snr_db", 0.0);
  e.seed = j.value("seed", std::uint64_t{0});
  e.length = j.value("length", std::size_t{0});
  e.sample_rate = j.value("sample_rate", 16000);
  if (e.channels.empty()) throw DataError("manifest entry '" + e.id + "' lists no channels");
  if (e.references.size() != 2) throw DataError("manifest entry '" + e.id + "' needs two references");
  return e;
}

std::vector<ManifestEntry> build_dataset(const DatasetConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  make_dirs(out_dir);
  const SignalPool sources = SignalPool::load(cfg.source_dir, cfg.sample_rate);
  const SignalPool noises = SignalPool::load(cfg.noise_dir, cfg.sample_rate);

  std::vector<ManifestEntry> entries(cfg.examples);
  parallel_for(cfg.examples, cfg.jobs, [&](std::size_t i) {
    const SimulatedExample sim = simulate_example(cfg, i, sources, noises);
    const auto& ex = sim.example;
    const fs::path rel = ex.id;
    make_dirs(out_dir / rel);
    ManifestEntry& e = entries[i];
    e.id = ex.id;
    const int rate = ex.mixture.sample_rate();
    for (std::size_t c = 0; c < ex.mixture.channels(); ++c) {
      e.channels.push_back(rel / ("mix_ch" + std::to_string(c) + ".wav"));
      write_mono(out_dir / e.channels.back(), ex.mixture.channel(c), rate);
    }
    for (std::size_t s = 0; s < 2; ++s) {
      e.references.push_back(rel / ("ref" + std::to_string(s) + ".wav"));
      write_mono(out_dir / e.references.back(), ex.references[s], rate);
      e.images.emplace_back();
      for (std::size_t c = 0; c < ex.mixture.channels(); ++c) {
        e.images.back().push_back(rel / ("src" + std::to_string(s) + "_ch" + std::to_string(c) + ".wav"));
        write_mono(out_dir / e.images.back().back(), ex.source_images[s].channel(c), rate);
      }
    }
    e.activity = ex.activity;
    e.scenario = sim.scenario_summary(cfg);
    e.overlap_ratio = ex.overlap_ratio;
    e.snr_db = ex.snr_db;
    e.seed = sim.seed;
    e.length = ex.mixture.length();
    e.sample_rate = rate;
  });

  const fs::path manifest = out_dir / "manifest.jsonl";
  const fs::path tmp = out_dir / "manifest.jsonl.tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    for (const auto& e : entries) os << e.to_json().dump() << '\n';
    if (!os) throw DataError(tmp.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, manifest, ec);
  if (ec) throw DataError(manifest.string() + ": " + ec.message());
  return entries;
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError(path.string() + ": cannot open manifest");
  std::vector<ManifestEntry> out;
  std::string line;
  for (std::size_t no = 1; std::getline(is, line); ++no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ManifestEntry::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

train::TrainingExample load_example(const ManifestEntry& entry, const fs::path& base_dir) {
  auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base_dir / p; };
  auto resolve_all = [&](const std::vector<fs::path>& ps) {
    std::vector<fs::path> out;
    for (const auto& p : ps) out.push_back(resolve(p));
    return out;
  };
  train::TrainingExample ex;
  ex.id = entry.id;
  ex.mixture = dsp::read_channels(resolve_all(entry.channels));
  const std::size_t length = ex.mixture.length();
  for (const auto& r : entry.references) {
    const auto w = dsp::read_wav(resolve(r));
    if (w.length() != length) throw DataError(resolve(r).string() + ": length differs from the mixture");
    ex.references.emplace_back(w.channel(0).begin(), w.channel(0).end());
  }
  for (const auto& per_source : entry.images) {
    auto img = dsp::read_channels(resolve_all(per_source));
    if (img.length() != length || img.channels() != ex.mixture.channels())
      throw DataError("manifest entry '" + entry.id + "': source image shape differs from the mixture");
    ex.source_images.push_back(std::move(img));
  }
  ex.activity = entry.activity;
  ex.overlap_ratio = entry.overlap_ratio;
  ex.snr_db = entry.snr_db;
  return ex;
}

std::vector<train::TrainingExample> load_dataset(const fs::path& manifest, std::size_t jobs) {
  const auto entries = read_manifest(manifest);
  std::vector<train::TrainingExample> out(entries.size());
  const fs::path base = manifest.parent_path();
  parallel_for(entries.size(), jobs, [&](std::size_t i) { out[i] = load_example(entries[i], base); });
  return out;
}

}  // namespace adsep::simroom
