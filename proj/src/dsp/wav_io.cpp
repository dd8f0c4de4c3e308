#include "adsep/dsp/wav_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "adsep/common/error.hpp"

namespace adsep::dsp {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw DataError(path.string() + ": " + what);
}

}  // namespace

MultiChannelWave read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    fail(path, "not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const auto size = read_le<std::uint32_t>(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a truncated data chunk, as some writers never patch sizes.
      if (id != "data") fail(path, "chunk '" + id + "' runs past end of file");
    }
    if (id == "fmt ") {
      if (size < 16) fail(path, "fmt chunk too small");
      format = read_le<std::uint16_t>(bytes.data() + body);
      channels = read_le<std::uint16_t>(bytes.data() + body + 2);
      rate = read_le<std::uint32_t>(bytes.data() + body + 4);
      bits = read_le<std::uint16_t>(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) fail(path, "extensible fmt chunk too small");
        format = read_le<std::uint16_t>(bytes.data() + body + 24);
      }
    } else if (id == "data") {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0) fail(path, "missing fmt chunk");
  if (data == nullptr) fail(path, "missing data chunk");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32)
    fail(path, "unsupported sample format " + std::to_string(format) + "/" +
                   std::to_string(bits) + " bits (need PCM16 or float32)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  MultiChannelWave wave(channels, frames, static_cast<int>(rate));
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const char* p = data + (n * channels + c) * bytes_per_sample;
      wave(c, n) = pcm16 ? read_le<std::int16_t>(p) / 32768.0
                         : static_cast<double>(read_le<float>(p));
    }
  }
  return wave;
}

void write_wav(const std::filesystem::path& path, const MultiChannelWave& wave,
               WavFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  const std::uint16_t channels = static_cast<std::uint16_t>(wave.channels());
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
  const std::uint32_t rate = static_cast<std::uint32_t>(wave.sample_rate());
  const std::uint32_t block = channels * bits / 8;
  const std::uint32_t data_size = static_cast<std::uint32_t>(wave.length() * block);

  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat);
  write_le<std::uint16_t>(out, channels);
  write_le<std::uint32_t>(out, rate);
  write_le<std::uint32_t>(out, rate * block);
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(block));
  write_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_size);
  for (std::size_t n = 0; n < wave.length(); ++n) {
    for (std::size_t c = 0; c < wave.channels(); ++c) {
      const double v = wave(c, n);
      if (format == WavFormat::pcm16) {
        const double scaled = std::round(std::clamp(v, -1.0, 1.0) * 32767.0);
        write_le<std::int16_t>(out, static_cast<std::int16_t>(scaled));
      } else {
        write_le<float>(out, static_cast<float>(v));
      }
    }
  }
  if (!out) fail(path, "write failed");
}

MultiChannelWave read_channels(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw DataError("read_channels: no input files");
  std::vector<std::vector<double>> rows;
  int rate = 0;
  for (const auto& p : paths) {
    auto w = read_wav(p);
    if (w.channels() != 1) fail(p, "expected a mono file, found " + std::to_string(w.channels()) +
                                      " channels");
    if (rate == 0) rate = w.sample_rate();
    if (w.sample_rate() != rate) fail(p, "sample rate differs from the first channel");
    if (!rows.empty() && w.length() != rows.front().size())
      fail(p, "length differs from the first channel");
    auto ch = w.channel(0);
    rows.emplace_back(ch.begin(), ch.end());
  }
  return MultiChannelWave::from_channels(rows, rate);
}

}  // namespace adsep::dsp
