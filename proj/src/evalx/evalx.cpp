#include "adsep/evalx/evalx.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "adsep/common/error.hpp"
#include "adsep/common/parallel.hpp"
#include "adsep/common/random.hpp"
#include "adsep/model/checkpoint.hpp"
#include "adsep/model/network.hpp"
#include "adsep/simroom/dataset.hpp"
#include "adsep/train/sisnr.hpp"
#include "adsep/train/trainer.hpp"

namespace adsep::evalx {
namespace fs = std::filesystem;

double si_snr_improvement(std::span<const double> estimate, std::span<const double> reference,
                          std::span<const double> mixture) {
  return train::si_snr(estimate, reference) - train::si_snr(mixture, reference);
}

LoadedModel load_model(const fs::path& checkpoint) {
  auto ckpt = model::load_checkpoint(checkpoint);
  model::check_parameters(ckpt.model, ckpt.params);
  LoadedModel m{ckpt.model, std::move(ckpt.params), {}};
  m.stft = train::stft_from_json(ckpt.train_state.is_object() ? ckpt.train_state.value("stft", nlohmann::json())
                                                              : nlohmann::json(),
                                 ckpt.model);
  return m;
}

std::vector<model::MaskSet> infer_masks(const dsp::ComplexSpectrogram& spec, const LoadedModel& m,
                                        graph::Precision precision) {
  if (m.config.topology != model::Topology::single_channel) return {model::forward(spec, m.config, m.params, precision)};
  std::vector<model::MaskSet> per;
  for (std::size_t c = 0; c < spec.channels(); ++c)
    per.push_back(model::stream_forward(spec, c, m.config, m.params, precision));
  return enhance::align_streams(spec, per).masks;
}

EvalItem make_eval_item(train::TrainingExample ex) {
  EvalItem item;
  if (ex.source_images.size() == 2) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& img = ex.source_images[k];
      std::vector<double> energy(img.channels(), 0.0);
      for (std::size_t c = 0; c < img.channels(); ++c)
        for (double v : img.channel(c)) energy[c] += v * v;
      item.near_mics[k] = static_cast<std::size_t>(std::max_element(energy.begin(), energy.end()) - energy.begin());
    }
  }
  item.example = std::move(ex);
  return item;
}

std::vector<EvalItem> load_eval_set(const fs::path& manifest, std::size_t jobs) {
  const auto entries = simroom::read_manifest(manifest);
  std::vector<EvalItem> items(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    items[i] = make_eval_item(simroom::load_example(entries[i], manifest.parent_path()));
    const auto& sc = entries[i].scenario;
    if (sc.contains("mics") && sc.contains("sources") && sc["sources"].size() == 2) {
      for (std::size_t k = 0; k < 2; ++k) {
        double best = 1e300;
        for (std::size_t c = 0; c < sc["mics"].size(); ++c) {
          double d2 = 0.0;
          for (int a = 0; a < 3; ++a) {
            const double diff = sc["mics"][c][a].get<double>() - sc["sources"][k][a].get<double>();
            d2 += diff * diff;
          }
          if (d2 < best) {
            best = d2;
            items[i].near_mics[k] = c;
          }
        }
      }
    }
  });
  return items;
}

std::vector<std::size_t> select_channels(const EvalItem& item, std::size_t index, std::size_t channels,
                                         std::uint64_t seed) {
  const std::size_t total = item.example.mixture.channels();
  if (channels == 0 || channels > total)
    throw DataError("utterance '" + item.example.id + "' has " + std::to_string(total) + " channels, " +
                    std::to_string(channels) + " requested");
  std::vector<std::size_t> chosen{item.near_mics[0]};
  if (item.near_mics[1] != item.near_mics[0] && channels >= 2) chosen.push_back(item.near_mics[1]);
  std::vector<std::size_t> rest;
  for (std::size_t c = 0; c < total; ++c)
    if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) rest.push_back(c);
  Rng rng(derive_seed(derive_seed(seed, index), channels));
  std::shuffle(rest.begin(), rest.end(), rng);
  for (std::size_t i = 0; chosen.size() < channels; ++i) chosen.push_back(rest[i]);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

namespace {

train::TrainingExample subset(const train::TrainingExample& ex, std::span<const std::size_t> channels) {
  train::TrainingExample out;
  out.id = ex.id;
  out.mixture = ex.mixture.select(channels);
  for (const auto& img : ex.source_images) out.source_images.push_back(img.select(channels));
  if (out.source_images.size() == 2) {
    for (const auto& img : out.source_images) out.references.emplace_back(img.channel(0).begin(), img.channel(0).end());
  } else if (channels[0] == 0) {
    out.references = ex.references;
  }
  out.activity = ex.activity;
  out.overlap_ratio = ex.overlap_ratio;
  out.snr_db = ex.snr_db;
  return out;
}

// Talker k's image at mic c of the (sub)example.
std::vector<double> target(const train::TrainingExample& ex, std::size_t k, std::size_t c) {
  if (ex.source_images.size() == 2) {
    const auto ch = ex.source_images[k].channel(c);
    return {ch.begin(), ch.end()};
  }
  if (c == 0 && ex.references.size() == 2) return ex.references[k];
  throw DataError("utterance '" + ex.id + "': no clean image for mic " + std::to_string(c) +
                  "; source images are required for this system");
}

std::vector<EvalRow> score(const train::TrainingExample& ex, const SystemSpec& sys, std::size_t channels,
                           const std::vector<std::vector<double>>& est, const std::array<std::size_t, 2>& ref_mic) {
  double s[2][2];
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) s[i][j] = train::si_snr(est[i], target(ex, j, ref_mic[i]));
  // assign[j]: estimate index scored against talker j.
  std::array<std::size_t, 2> assign{0, 1};
  if (0.5 * (s[1][0] + s[0][1]) > 0.5 * (s[0][0] + s[1][1])) assign = {1, 0};
  std::vector<EvalRow> rows;
  for (std::size_t j = 0; j < 2; ++j) {
    const std::size_t i = assign[j];
    const auto ref = target(ex, j, ref_mic[i]);
    const auto mix = ex.mixture.channel(ref_mic[i]);
    EvalRow r;
    r.utt_id = ex.id;
    r.system = sys.name;
    r.mode = sys.kind == SystemKind::mixture ? "none" : enhance::to_string(sys.mode);
    r.policy = sys.kind == SystemKind::mixture ? "none" : enhance::to_string(sys.policy);
    r.channels = channels;
    r.source = j;
    r.sisnri_db = s[i][j] - train::si_snr(mix, ref);
    r.sdr_db = enhance::sdr_db(est[i], ref);
    r.assignment = std::to_string(assign[0]) + "-" + std::to_string(assign[1]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<EvalRow> evaluate_one(const EvalItem& item, std::size_t index, const SystemSpec& sys,
                                  const LoadedModel* lm, const MatrixOptions& opts) {
  const auto& full = item.example;
  const std::size_t total = full.mixture.channels();
  const std::size_t C = sys.channels ? sys.channels : total;
  std::vector<std::size_t> chans(total);
  std::iota(chans.begin(), chans.end(), 0);
  if (C != total) chans = select_channels(item, index, C, opts.seed);
  const auto ex = subset(full, chans);
  const std::size_t L = ex.mixture.length();

  if (sys.kind == SystemKind::mixture) {
    const auto ch0 = ex.mixture.channel(0);
    const std::vector<std::vector<double>> est(2, std::vector<double>(ch0.begin(), ch0.end()));
    return score(ex, sys, C, est, {0, 0});
  }
  const dsp::StftConfig& cfg = lm ? lm->stft : opts.stft;
  const auto spec = dsp::stft(ex.mixture, cfg);
  std::vector<model::MaskSet> masks;
  if (sys.kind == SystemKind::oracle) {
    masks.push_back(enhance::ideal_ratio_masks(ex, cfg, 0));
  } else {
    masks = infer_masks(spec, *lm, opts.precision);
  }
  enhance::EnhanceOptions eo;
  eo.mode = sys.mode;
  eo.policy = sys.policy;
  eo.vad = sys.vad;
  eo.seed = derive_seed(opts.seed, index);
  eo.length = L;
  const auto oracle = enhance::OracleData::from_example(ex);
  const auto res = enhance::enhance_utterance(spec, masks, eo, &oracle);
  return score(ex, sys, C, res.sources, {res.references[0].channel, res.references[1].channel});
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

}  // namespace

EvalReport run_matrix(std::span<const EvalItem> items, std::span<const SystemSpec> systems,
                      const MatrixOptions& opts) {
  std::map<fs::path, LoadedModel> models;
  for (const auto& sys : systems) {
    if (sys.kind == SystemKind::model && !models.count(sys.checkpoint))
      models.emplace(sys.checkpoint, load_model(sys.checkpoint));
    for (const auto& item : items)
      if (sys.channels > item.example.mixture.channels())
        throw DataError("system '" + sys.name + "' needs " + std::to_string(sys.channels) + " channels but '" +
                        item.example.id + "' has " + std::to_string(item.example.mixture.channels()));
  }
  const std::size_t cells = items.size() * systems.size();
  std::vector<std::vector<EvalRow>> slots(cells);
  parallel_for(cells, opts.jobs, [&](std::size_t n) {
    const std::size_t s = n / items.size(), i = n % items.size();
    const auto& sys = systems[s];
    const LoadedModel* lm = sys.kind == SystemKind::model ? &models.at(sys.checkpoint) : nullptr;
    slots[n] = evaluate_one(items[i], i, sys, lm, opts);
  });
  EvalReport report;
  for (auto& slot : slots)
    for (auto& r : slot) report.rows.push_back(std::move(r));
  report.aggregate = aggregate(report.rows, systems);
  return report;
}

std::vector<AggregateRow> aggregate(std::span<const EvalRow> rows, std::span<const SystemSpec> systems) {
  std::vector<AggregateRow> out;
  for (const auto& sys : systems) {
    AggregateRow a;
    a.system = sys.name;
    a.mode = sys.kind == SystemKind::mixture ? "none" : enhance::to_string(sys.mode);
    a.policy = sys.kind == SystemKind::mixture ? "none" : enhance::to_string(sys.policy);
    bool first = true;
    for (const auto& r : rows) {
      if (r.system != a.system || r.mode != a.mode || r.policy != a.policy) continue;
      if (sys.channels && r.channels != sys.channels) continue;
      if (first) a.channels = r.channels;
      first = false;
      ++a.rows;
      a.sisnri_db += r.sisnri_db;
      a.sdr_db += r.sdr_db;
    }
    if (a.rows) {
      a.sisnri_db /= static_cast<double>(a.rows);
      a.sdr_db /= static_cast<double>(a.rows);
    }
    if (sys.channels) a.channels = sys.channels;
    out.push_back(a);
  }
  return out;
}

ReportPaths write_report(const EvalReport& report, const fs::path& prefix) {
  ReportPaths paths{prefix, prefix};
  paths.rows += "_rows.csv";
  paths.aggregate += "_aggregate.csv";
  if (prefix.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(prefix.parent_path(), ec);
    if (ec) throw DataError(prefix.parent_path().string() + ": cannot create directory: " + ec.message());
  }
  {
    std::ofstream os(paths.rows);
    if (!os) throw DataError(paths.rows.string() + ": cannot write");
    os.precision(10);
    os << "utt_id,system,mode,policy,C,source,sisnri_db,sdr_db,assignment\n";
    for (const auto& r : report.rows)
      os << csv_field(r.utt_id) << ',' << csv_field(r.system) << ',' << r.mode << ',' << r.policy << ','
         << r.channels << ',' << r.source << ',' << r.sisnri_db << ',' << r.sdr_db << ',' << r.assignment << '\n';
    if (!os) throw DataError(paths.rows.string() + ": write failed");
  }
  {
    std::ofstream os(paths.aggregate);
    if (!os) throw DataError(paths.aggregate.string() + ": cannot write");
    os.precision(10);
    os << "system,mode,policy,C,rows,sisnri_db,sdr_db\n";
    for (const auto& a : report.aggregate)
      os << csv_field(a.system) << ',' << a.mode << ',' << a.policy << ',' << a.channels << ',' << a.rows << ','
         << a.sisnri_db << ',' << a.sdr_db << '\n';
    if (!os) throw DataError(paths.aggregate.string() + ": write failed");
  }
  return paths;
}

std::vector<std::size_t> parse_channel_list(const std::string& s) {
  std::vector<std::size_t> out;
  auto number = [&](const std::string& t) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(t, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != t.size() || t.empty() || v == 0) throw std::invalid_argument("bad channel count '" + t + "' in '" + s + "'");
    return static_cast<std::size_t>(v);
  };
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const std::size_t lo = number(s.substr(0, dots)), hi = number(s.substr(dots + 2));
    if (lo > hi) throw std::invalid_argument("empty channel range '" + s + "'");
    for (std::size_t c = lo; c <= hi; ++c) out.push_back(c);
    return out;
  }
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    out.push_back(number(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace adsep::evalx
