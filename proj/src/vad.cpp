#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cmaudit/interventions.hpp"

namespace cmaudit {

VadResult detect_nonspeech(const Waveform& w, double margin_db) {
  VadResult result;
  result.frame_len =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(kVadFrameSeconds * w.sample_rate_hz)));
  const std::size_t n = w.size();
  const std::size_t frames = (n + result.frame_len - 1) / result.frame_len;

  std::vector<double> energy_db(frames);
  double loudest = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t begin = f * result.frame_len;
    const std::size_t end = std::min(n, begin + result.frame_len);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += w.samples[i] * w.samples[i];
    energy_db[f] = 10.0 * std::log10(acc / static_cast<double>(end - begin));
    loudest = std::max(loudest, energy_db[f]);
  }
  result.speech.resize(frames);
  const double threshold = loudest - margin_db;
  for (std::size_t f = 0; f < frames; ++f) result.speech[f] = energy_db[f] > threshold;
  return result;
}

Waveform zero_nonspeech(const Waveform& w, double proportion, Rng& rng, double margin_db) {
  const VadResult vad = detect_nonspeech(w, margin_db);
  std::vector<std::size_t> nonspeech;
  for (std::size_t f = 0; f < vad.speech.size(); ++f)
    if (!vad.speech[f]) nonspeech.push_back(f);
  const std::size_t count = floor_count(std::clamp(proportion, 0.0, 1.0), nonspeech.size());
  rng.shuffle(nonspeech);

  Waveform out = w;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t begin = nonspeech[k] * vad.frame_len;
    const std::size_t end = std::min(out.size(), begin + vad.frame_len);
    std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(begin),
              out.samples.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
  }
  return out;
}

Waveform zero_nonspeech(const Waveform& w, double proportion, std::uint64_t seed,
                        double margin_db) {
  Rng rng(seed);
  return zero_nonspeech(w, proportion, rng, margin_db);
}

}  // namespace cmaudit
