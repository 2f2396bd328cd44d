#include <cmath>
#include <numbers>

#include "cmaudit/error.hpp"
#include "cmaudit/interventions.hpp"

namespace cmaudit {
namespace {

constexpr double kBlockSeconds = 0.4;
constexpr double kStepSeconds = 0.1;  // 75% overlap
constexpr double kAbsoluteGate = -70.0;
constexpr double kRelativeGate = -10.0;

double block_loudness(double mean_square) { return -0.691 + 10.0 * std::log10(mean_square); }

std::vector<double> filter(const std::vector<double>& x, const Biquad& q) {
  std::vector<double> y(x.size());
  double s1 = 0.0, s2 = 0.0;  // transposed direct form II
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double out = q.b0 * x[i] + s1;
    s1 = q.b1 * x[i] - q.a1 * out + s2;
    s2 = q.b2 * x[i] - q.a2 * out;
    y[i] = out;
  }
  return y;
}

}  // namespace

std::array<Biquad, 2> k_weighting(int sample_rate_hz) {
  // Analog prototypes of the 48 kHz reference filters, mapped to the target
  // rate with the bilinear transform (same parameterization as libebur128).
  const double fs = static_cast<double>(sample_rate_hz);
  std::array<Biquad, 2> stages{};
  {
    const double f0 = 1681.974450955533;
    const double gain_db = 3.999843853973347;
    const double q = 0.7071752369554196;
    const double k = std::tan(std::numbers::pi * f0 / fs);
    const double vh = std::pow(10.0, gain_db / 20.0);
    const double vb = std::pow(vh, 0.4996667741545416);
    const double a0 = 1.0 + k / q + k * k;
    stages[0] = {(vh + vb * k / q + k * k) / a0, 2.0 * (k * k - vh) / a0,
                 (vh - vb * k / q + k * k) / a0, 2.0 * (k * k - 1.0) / a0,
                 (1.0 - k / q + k * k) / a0};
  }
  {
    const double f0 = 38.13547087602444;
    const double q = 0.5003270373238773;
    const double k = std::tan(std::numbers::pi * f0 / fs);
    const double a0 = 1.0 + k / q + k * k;
    stages[1] = {1.0, -2.0, 1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
  }
  return stages;
}

double measure_loudness(const Waveform& w) {
  const auto block = static_cast<std::size_t>(std::lround(kBlockSeconds * w.sample_rate_hz));
  const auto step = static_cast<std::size_t>(std::lround(kStepSeconds * w.sample_rate_hz));
  if (w.size() < block)
    throw Error("loudness: '" + w.id + "' is shorter than one 400 ms block");

  const auto stages = k_weighting(w.sample_rate_hz);
  const std::vector<double> weighted = filter(filter(w.samples, stages[0]), stages[1]);

  // Prefix sums of squares give every block's power in O(1).
  std::vector<double> prefix(weighted.size() + 1, 0.0);
  for (std::size_t i = 0; i < weighted.size(); ++i)
    prefix[i + 1] = prefix[i] + weighted[i] * weighted[i];

  const std::size_t num_blocks = 1 + (w.size() - block) / step;
  std::vector<double> power(num_blocks);
  for (std::size_t j = 0; j < num_blocks; ++j)
    power[j] = (prefix[j * step + block] - prefix[j * step]) / static_cast<double>(block);

  double sum = 0.0;
  std::size_t count = 0;
  for (double z : power) {
    if (z > 0.0 && block_loudness(z) > kAbsoluteGate) {
      sum += z;
      ++count;
    }
  }
  if (count == 0) throw UnmeasurableError("loudness: '" + w.id + "' is below the absolute gate");
  const double relative_gate = block_loudness(sum / count) + kRelativeGate;

  sum = 0.0;
  count = 0;
  for (double z : power) {
    if (z > 0.0) {
      const double l = block_loudness(z);
      if (l > kAbsoluteGate && l > relative_gate) {
        sum += z;
        ++count;
      }
    }
  }
  if (count == 0) throw UnmeasurableError("loudness: '" + w.id + "' has no block above the gates");
  return block_loudness(sum / count);
}

Waveform loudness_normalize(const Waveform& w, double target_lufs) {
  const double measured = measure_loudness(w);
  const double gain = std::pow(10.0, (target_lufs - measured) / 20.0);
  Waveform out = w;
  for (double& x : out.samples) x *= gain;
  clip_in_place(out.samples);
  return out;
}

}  // namespace cmaudit
