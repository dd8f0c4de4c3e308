#pragma once

#include <filesystem>
#include <vector>

#include "adsep/dsp/wave.hpp"

namespace adsep::dsp {

enum class WavFormat { pcm16, float32 };

// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples.
// Interleaved multi-channel files are de-interleaved. Throws DataError with
// the path on any malformed or unsupported file.
MultiChannelWave read_wav(const std::filesystem::path& path);

// Writes all channels interleaved into one file.
void write_wav(const std::filesystem::path& path, const MultiChannelWave& wave,
               WavFormat format = WavFormat::float32);

// Reads mono files and stacks them as channels. All files must share length
// and sample rate.
MultiChannelWave read_channels(const std::vector<std::filesystem::path>& paths);

}  // namespace adsep::dsp
