#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <numbers>

#include "cmaudit/error.hpp"
#include "cmaudit/interventions.hpp"
#include "fft.hpp"

namespace cmaudit {
namespace {

constexpr int kFrame = 512;
constexpr int kHop = kFrame / 2;
// Magnitude step = frame peak * kStepScale / bitrate.
constexpr double kStepScale = 0.5;

// Cutoff per bitrate, Hz. 256 kbps keeps everything up to Nyquist.
constexpr std::array<double, kCodecBitrates.size()> kCutoffHz = {
    2000.0, 2750.0, 3500.0, 4000.0, 4500.0, 5000.0, 5500.0, 6000.0,
    6500.0, 7000.0, 7500.0, 11000.0, 14000.0, 17000.0, 1e12};

std::size_t bitrate_index(int bitrate_kbps) {
  const auto it = std::find(kCodecBitrates.begin(), kCodecBitrates.end(), bitrate_kbps);
  if (it == kCodecBitrates.end())
    throw Error("codec: unsupported bitrate " + std::to_string(bitrate_kbps) + " kbps");
  return static_cast<std::size_t>(it - kCodecBitrates.begin());
}

// Zeros every bin above cutoff over the whole signal (one transform).
void brickwall(std::vector<double>& x, double cutoff_hz, int sample_rate_hz) {
  const int n = static_cast<int>(x.size());
  if (n < 2) return;
  const detail::RealFft fft(n);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.bins()));
  fft.forward(x, spec);
  const double bin_hz = static_cast<double>(sample_rate_hz) / n;
  for (std::size_t k = 0; k < spec.size(); ++k)
    if (static_cast<double>(k) * bin_hz > cutoff_hz) spec[k] = 0.0;
  fft.inverse(spec, x);
}

}  // namespace

double codec_cutoff_hz(int bitrate_kbps, int sample_rate_hz) {
  return std::min(kCutoffHz[bitrate_index(bitrate_kbps)], 0.5 * sample_rate_hz);
}

Waveform codec_degrade(const Waveform& w, int bitrate_kbps) {
  const double cutoff = codec_cutoff_hz(bitrate_kbps, w.sample_rate_hz);
  const bool band_limited = cutoff < 0.5 * w.sample_rate_hz;
  const std::size_t n = w.size();

  // Pad by one hop on the left and enough on the right that every input sample
  // is covered by two frames.
  const std::size_t frames = (n + kHop - 1) / kHop + 1;
  std::vector<double> padded(frames * kHop + kHop, 0.0);
  std::copy(w.samples.begin(), w.samples.end(), padded.begin() + kHop);
  std::vector<double> out(padded.size(), 0.0);

  // sqrt-periodic-Hann analysis and synthesis; squares sum to one at 50% overlap.
  std::array<double, kFrame> window{};
  for (int i = 0; i < kFrame; ++i) window[i] = std::sin(std::numbers::pi * i / kFrame);

  const detail::RealFft fft(kFrame);
  const double bin_hz = static_cast<double>(w.sample_rate_hz) / kFrame;
  std::vector<double> frame(kFrame);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.bins()));
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * kHop;
    for (int i = 0; i < kFrame; ++i) frame[i] = padded[start + i] * window[i];
    fft.forward(frame, spec);

    double peak = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
      if (static_cast<double>(k) * bin_hz > cutoff)
        spec[k] = 0.0;
      else
        peak = std::max(peak, std::abs(spec[k]));
    }
    if (peak > 0.0) {
      const double step = peak * kStepScale / bitrate_kbps;
      for (auto& c : spec) {
        const double mag = std::abs(c);
        if (mag == 0.0) continue;
        c *= (step * std::round(mag / step)) / mag;
      }
    }
    fft.inverse(spec, frame);
    for (int i = 0; i < kFrame; ++i) out[start + i] += frame[i] * window[i];
  }

  Waveform result = w;
  std::copy(out.begin() + kHop, out.begin() + kHop + static_cast<std::ptrdiff_t>(n),
            result.samples.begin());
  if (band_limited) brickwall(result.samples, cutoff, w.sample_rate_hz);
  clip_in_place(result.samples);
  return result;
}

Waveform codec_degrade_external(const Waveform& w, int bitrate_kbps,
                                const std::string& command_template) {
  namespace fs = std::filesystem;
  bitrate_index(bitrate_kbps);
  static std::atomic<unsigned long> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("cmaudit-codec-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  const fs::path in = dir / "in.wav";
  const fs::path out = dir / "out.wav";
  write_pcm(w, in);

  std::string cmd = command_template;
  auto substitute = [&cmd](const std::string& key, const std::string& value) {
    for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size()))
      cmd.replace(pos, key.size(), value);
  };
  substitute("{in}", "'" + in.string() + "'");
  substitute("{out}", "'" + out.string() + "'");
  substitute("{kbps}", std::to_string(bitrate_kbps));
  const int status = std::system(cmd.c_str());
  if (status != 0) {
    fs::remove_all(dir);
    throw Error("codec: external command failed (status " + std::to_string(status) + "): " + cmd);
  }
  Waveform decoded = read_pcm(out);
  fs::remove_all(dir);
  if (decoded.sample_rate_hz != w.sample_rate_hz)
    throw Error("codec: external decoder changed the sample rate");
  decoded.samples.resize(w.size(), 0.0);
  decoded.id = w.id;
  clip_in_place(decoded.samples);
  return decoded;
}

}  // namespace cmaudit
