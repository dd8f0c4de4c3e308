#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flat_config.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "adsep_test_cli";

struct Run {
  int status = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Run run_cli(const std::string& args) {
  fs::create_directories(kRoot);
  const auto out = kRoot / "stdout.txt", err = kRoot / "stderr.txt";
  const std::string cmd = std::string(ADSEP_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

const std::string kConfig = std::string(ADSEP_SOURCE_DIR) + "/configs/tiny.conf";

// Small, fast variant of the bundled recipe.
const std::string kSmall = "--config " + kConfig + " --seconds 0.5 --rir-length 1024";
const std::string kSmallModel = "--config " + kConfig + " --feature-dim 65 --hidden 8 --embed-dim 4";

// Simulated once and shared by the later cases.
const fs::path& small_data() {
  static const fs::path dir = [] {
    const auto d = kRoot / "small";
    fs::remove_all(d);
    const auto r = run_cli("simulate " + kSmall + " --seed 3 --out " + d.string());
    REQUIRE(r.status == 0);
    return d;
  }();
  return dir;
}

const fs::path& small_checkpoint() {
  static const fs::path ckpt = [] {
    const auto c = kRoot / "small.ckpt";
    fs::remove(c);
    const auto r = run_cli("train " + kSmallModel + " --train " + (small_data() / "manifest.jsonl").string() +
                         " --checkpoint " + c.string() + " --epochs 2 --seed 1");
    REQUIRE(r.status == 0);
    return c;
  }();
  return ckpt;
}

}  // namespace

TEST_CASE("flat config parsing") {
  const auto cfg = adsep::cli::parse_flat_config(
      "# comment\n\nlearning_rate = 1e-3  # trailing\nid-prefix = \"a#b\"\nout=dir\n", "x.conf");
  CHECK(cfg.size() == 3);
  CHECK(cfg.at("learning-rate") == "1e-3");
  CHECK(cfg.at("id-prefix") == "a#b");
  CHECK(cfg.at("out") == "dir");
  CHECK_THROWS_WITH_AS(adsep::cli::parse_flat_config("a = 1\nnonsense\n", "x.conf"), "x.conf:2: expected 'key = value'",
                       std::invalid_argument);
  CHECK_THROWS_AS(adsep::cli::parse_flat_config("a = 1\na = 2\n", "x.conf"), std::invalid_argument);
  CHECK_THROWS_AS(adsep::cli::parse_flat_config(" = 2\n", "x.conf"), std::invalid_argument);
}

TEST_CASE("usage errors exit 1, help exits 0") {
  CHECK(run_cli("").status == 1);
  CHECK(run_cli("frobnicate").status == 1);
  CHECK(run_cli("simulate --n notanumber --out x").status == 1);
  CHECK(run_cli("simulate").status == 1);
  CHECK(run_cli("simulate --beta 0.9,0.1 --out " + (kRoot / "never").string()).status == 1);
  const auto help = run_cli("train --help");
  CHECK(help.status == 0);
  CHECK(help.out.find("--learning-rate FLOAT [0.001]") != std::string::npos);

  fs::create_directories(kRoot);
  std::ofstream(kRoot / "bad.conf") << "n = 2\nno-such-key = 1\n";
  const auto r = run_cli("simulate --config " + (kRoot / "bad.conf").string() + " --out " + (kRoot / "never").string());
  CHECK(r.status == 1);
  CHECK(r.err.find("no-such-key") != std::string::npos);
  CHECK_FALSE(fs::exists(kRoot / "never"));
}

TEST_CASE("simulate: deterministic, flags win over the config, errors name the path") {
  const auto a = kRoot / "sim_a", b = kRoot / "sim_b";
  fs::remove_all(a);
  fs::remove_all(b);
  auto ra = run_cli("simulate " + kSmall + " --n 2 --seed 7 --out " + a.string());
  auto rb = run_cli("simulate " + kSmall + " --n 2 --seed 7 --out " + b.string());
  REQUIRE(ra.status == 0);
  REQUIRE(rb.status == 0);
  CHECK(lines(ra.out) == std::vector<std::string>{(a / "manifest.jsonl").string()});
  CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
  CHECK(lines(slurp(a / "manifest.jsonl")).size() == 2);  // config says 4, the flag says 2
  CHECK(slurp(a / "ex00001" / "mix_ch3.wav") == slurp(b / "ex00001" / "mix_ch3.wav"));

  std::ofstream(kRoot / "blocker") << "file";
  const auto bad = kRoot / "blocker" / "out";
  const auto r = run_cli("simulate " + kSmall + " --n 1 --out " + bad.string());
  CHECK(r.status == 2);
  CHECK(r.err.find((kRoot / "blocker").string()) != std::string::npos);
}

TEST_CASE("simulate: 50 examples with 7 channels") {
  const auto d = kRoot / "sim50";
  fs::remove_all(d);
  const auto r = run_cli("simulate " + kSmall + " --n 50 --channels 7 --seed 2 --out " + d.string());
  REQUIRE(r.status == 0);
  const auto entries = lines(slurp(d / "manifest.jsonl"));
  REQUIRE(entries.size() == 50);
  for (const auto& e : entries) CHECK(nlohmann::json::parse(e).at("channels").size() == 7);
}

TEST_CASE("train: log, loss trend, resume and malformed manifests") {
  const auto manifest = (small_data() / "manifest.jsonl").string();
  const auto ckpt = kRoot / "trend.ckpt";
  fs::remove(ckpt);
  fs::remove(kRoot / "trend.ckpt.last");
  fs::remove(kRoot / "trend.ckpt.csv");
  auto r = run_cli("train " + kSmallModel + " --train " + manifest + " --checkpoint " + ckpt.string() +
                 " --epochs 8 --seed 4");
  REQUIRE(r.status == 0);
  CHECK(lines(r.out) == std::vector<std::string>{ckpt.string(), ckpt.string() + ".csv"});
  auto log = lines(slurp(ckpt.string() + ".csv"));
  REQUIRE(log.size() == 9);
  const auto loss = [&](std::size_t row) {
    std::stringstream ss(log[row]);
    std::string cell;
    std::getline(ss, cell, ',');
    std::getline(ss, cell, ',');
    return std::stod(cell);
  };
  CHECK(loss(8) < loss(1));

  r = run_cli("train " + kSmallModel + " --train " + manifest + " --checkpoint " + ckpt.string() +
            " --epochs 10 --seed 4 --resume");
  REQUIRE(r.status == 0);
  log = lines(slurp(ckpt.string() + ".csv"));
  REQUIRE(log.size() == 11);
  CHECK(log[10].rfind("10,", 0) == 0);
  CHECK(r.err.find("epoch 9 ") != std::string::npos);
  CHECK(r.err.find("epoch 1 ") == std::string::npos);

  auto text = slurp(manifest);
  const auto first = text.find('\n');
  std::ofstream(kRoot / "broken.jsonl") << text.substr(0, first + 1) << "{not json\n";
  r = run_cli("train " + kSmallModel + " --train " + (kRoot / "broken.jsonl").string() + " --checkpoint " +
            (kRoot / "broken.ckpt").string() + " --epochs 1");
  CHECK(r.status == 2);
  CHECK(r.err.find("broken.jsonl:2") != std::string::npos);
}

TEST_CASE("train: non-finite loss exits 3") {
  const auto ckpt = small_checkpoint();
  const auto nan_ckpt = kRoot / "nan.ckpt";
  fs::copy_file(ckpt, nan_ckpt, fs::copy_options::overwrite_existing);
  fs::copy_file(ckpt.string() + ".last", nan_ckpt.string() + ".last", fs::copy_options::overwrite_existing);
  auto bytes = slurp(nan_ckpt.string() + ".last");
  std::uint64_t header = 0;
  std::memcpy(&header, bytes.data() + 8, 8);
  const float nan = std::nanf("");
  for (std::size_t p = 16 + header; p + 4 <= bytes.size(); p += 4) std::memcpy(bytes.data() + p, &nan, 4);
  std::ofstream(nan_ckpt.string() + ".last", std::ios::binary) << bytes;
  const auto r = run_cli("train " + kSmallModel + " --train " + (small_data() / "manifest.jsonl").string() +
                       " --checkpoint " + nan_ckpt.string() + " --epochs 3 --resume");
  CHECK(r.status == 3);
  CHECK(r.err.find("ex0000") != std::string::npos);
}

TEST_CASE("separate: outputs, sidecar, one-channel warning and channel-order invariance") {
  const auto ckpt = small_checkpoint().string();
  const auto ex = small_data() / "ex00000";
  std::string fwd, rev;
  for (int c = 0; c < 4; ++c) {
    fwd += (fwd.empty() ? "" : ",") + (ex / ("mix_ch" + std::to_string(c) + ".wav")).string();
    rev += (rev.empty() ? "" : ",") + (ex / ("mix_ch" + std::to_string(3 - c) + ".wav")).string();
  }
  const auto out_f = kRoot / "sep_fwd", out_r = kRoot / "sep_rev", out_1 = kRoot / "sep_one";
  auto r = run_cli("separate --checkpoint " + ckpt + " --mode mvdr --save-masks --input " + fwd + " --out-dir " +
                 out_f.string());
  REQUIRE(r.status == 0);
  CHECK(lines(r.out).size() == 3);
  CHECK(fs::exists(out_f / "source0.wav"));
  CHECK(fs::exists(out_f / "source1.wav"));
  const auto side = nlohmann::json::parse(slurp(out_f / "separate.json"));
  CHECK(side.at("channels") == 4);
  CHECK(side.at("sources").size() == 2);
  CHECK(side.at("warnings").empty());
  CHECK(side.at("sources")[0].at("scores").size() == 4);

  r = run_cli("separate --checkpoint " + ckpt + " --mode mvdr --save-masks --input " + rev + " --out-dir " +
            out_r.string());
  REQUIRE(r.status == 0);
  const auto mf = slurp(out_f / "masks.f32"), mr = slurp(out_r / "masks.f32");
  REQUIRE(mf.size() == mr.size());
  REQUIRE(!mf.empty());
  float worst = 0;
  for (std::size_t p = 0; p < mf.size(); p += 4) {
    float a, b;
    std::memcpy(&a, mf.data() + p, 4);
    std::memcpy(&b, mr.data() + p, 4);
    worst = std::max(worst, std::abs(a - b));
  }
  CHECK(worst < 1e-5f);

  r = run_cli("separate --checkpoint " + ckpt + " --mode mvdr --input " + (ex / "mix_ch0.wav").string() +
            " --out-dir " + out_1.string());
  REQUIRE(r.status == 0);
  CHECK(r.err.find("passthrough") != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(out_1 / "separate.json")).at("warnings").size() == 1);

  r = run_cli("separate --checkpoint " + ckpt + " --ref-policy oracle --input " + fwd + " --out-dir " + out_1.string());
  CHECK(r.status == 1);
  r = run_cli("separate --checkpoint " + ckpt + " --ref-policy oracle --vad oracle --manifest " +
            (small_data() / "manifest.jsonl").string() + " --utterance ex00001 --out-dir " + out_1.string());
  CHECK(r.status == 0);
  r = run_cli("separate --checkpoint " + (kRoot / "missing.ckpt").string() + " --input " + fwd);
  CHECK(r.status == 2);
}

TEST_CASE("evaluate: sweep rows, reproducibility and printed paths") {
  const auto ckpt = small_checkpoint().string();
  const auto manifest = (small_data() / "manifest.jsonl").string();
  const auto prefix = kRoot / "eval" / "sweep";
  const std::string args = "evaluate --test " + manifest + " --system tiny=" + ckpt +
                           " --modes mvdr --sweep-channels 2..4 --seed 9 --out " + prefix.string();
  auto r = run_cli(args);
  REQUIRE(r.status == 0);
  CHECK(lines(r.out) == std::vector<std::string>{prefix.string() + "_rows.csv", prefix.string() + "_aggregate.csv"});
  const auto agg = lines(slurp(prefix.string() + "_aggregate.csv"));
  REQUIRE(agg.size() == 1 + 3 * 3);  // (tiny, oracle, mixture) x C in {2,3,4}
  for (const char* c : {",2,", ",3,", ",4,"}) {
    std::size_t n = 0;
    for (const auto& l : agg)
      if (l.find(std::string("tiny,mvdr,max-snr") + c) == 0) ++n;
    CHECK(n == 1);
  }
  const auto rows_first = slurp(prefix.string() + "_rows.csv");
  CHECK(lines(rows_first).size() == 1 + 9 * 4 * 2);
  r = run_cli(args);
  REQUIRE(r.status == 0);
  CHECK(slurp(prefix.string() + "_rows.csv") == rows_first);

  CHECK(run_cli("evaluate --test " + manifest + " --channels 5 --out " + prefix.string()).status == 2);
  CHECK(run_cli("evaluate --test " + manifest + " --channels 2 --sweep-channels 2..3").status == 1);
}
