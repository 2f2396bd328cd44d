#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cmaudit {

// Mono audio. Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;
  std::string id;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Reads 16-bit mono linear PCM from a RIFF/WAVE file. Samples are k / 32768
// and the id is the file stem. Throws ParseError on anything else.
Waveform read_pcm(const std::filesystem::path& path);

// Writes 16-bit mono PCM (canonical 44-byte header).
void write_pcm(const Waveform& w, const std::filesystem::path& path);

// Round half away from zero, saturating to [-32768, 32767].
std::int16_t quantize_sample(double x);

// Applies the 16-bit storage quantization in memory, so that the result equals
// read_pcm(write_pcm(w)).
Waveform quantize_16bit(Waveform w);

// Clamps every sample into [-1, 1].
void clip_in_place(std::vector<double>& samples);

// Mean square of the samples (0 for an empty waveform).
double mean_square(const std::vector<double>& samples);

}  // namespace cmaudit
