#include <cmath>

#include "cmaudit/error.hpp"
#include "cmaudit/interventions.hpp"

namespace cmaudit {

Waveform add_white_noise(const Waveform& w, double snr_db, Rng& rng) {
  const double signal_power = mean_square(w.samples);
  if (!(signal_power > 0.0)) throw Error("white noise: signal '" + w.id + "' has zero power, SNR undefined");
  std::vector<double> noise(w.size());
  for (double& n : noise) n = rng.normal();
  const double noise_power = mean_square(noise);
  const double gain = std::sqrt(signal_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
  Waveform out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += gain * noise[i];
  clip_in_place(out.samples);
  return out;
}

Waveform add_white_noise(const Waveform& w, double snr_db, std::uint64_t seed) {
  Rng rng(seed);
  return add_white_noise(w, snr_db, rng);
}

}  // namespace cmaudit
