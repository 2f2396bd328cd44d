#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cmaudit/audio.hpp"
#include "cmaudit/rng.hpp"
#include "cmaudit/seed.hpp"

namespace cmaudit {

enum class InterventionKind { codec, white_noise, loudness_norm, nonspeech_zero, mu_law };

std::string_view to_string(InterventionKind kind);
InterventionKind parse_intervention_kind(std::string_view name);

// Control-variable distributions.
struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};
struct Dirac {
  double value = 0.0;
};
// Uniform choice over a finite set (codec bitrates).
struct Choice {
  std::vector<double> values;
};
using ParamDist = std::variant<Uniform, Dirac, Choice>;

double sample(const ParamDist& dist, Rng& rng);
bool in_support(const ParamDist& dist, double z);

// Bitrates accepted by codec_degrade, in kbps.
inline constexpr std::array<int, 15> kCodecBitrates = {16,  24,  32,  40,  48,  56,  64, 80,
                                                       96, 112, 128, 160, 192, 224, 256};

struct InterventionSpec {
  InterventionKind kind = InterventionKind::mu_law;
  ParamDist dist = Dirac{255.0};
  // Label used in seeds, directories and reports; defaults to the kind name.
  std::string name;
  // Frames quieter than (loudest frame - vad_margin_db) are non-speech.
  double vad_margin_db = 40.0;
  // When set, codec_degrade runs this shell command instead of the built-in
  // proxy. Placeholders: {in} {out} {kbps}.
  std::optional<std::string> external_codec_command;

  std::string label() const;
  // Throws Error if the distribution is malformed or outside the kind's range.
  void validate() const;

  // Defaults for the five interventions.
  static InterventionSpec codec();
  static InterventionSpec white_noise();
  static InterventionSpec loudness_norm();
  static InterventionSpec nonspeech_zero();
  static InterventionSpec mu_law();
};

struct AppliedIntervention {
  std::string utt_id;
  InterventionKind kind = InterventionKind::mu_law;
  double z = 0.0;
};

// ---- mu-law --------------------------------------------------------------

// Companding, mid-tread quantization of the compressed value onto the grid
// k / 128 (k in [-128, 127]), then expansion.
Waveform mu_law(const Waveform& w, int mu = 255);

double mu_law_compress(double x, int mu);
double mu_law_expand(double y, int mu);
inline constexpr double kMuLawStep = 1.0 / 128.0;

// ---- additive white noise ------------------------------------------------

// Gaussian noise scaled so that the pre-clip SNR against the full-file mean
// square is exactly snr_db; result is clipped to [-1, 1].
Waveform add_white_noise(const Waveform& w, double snr_db, Rng& rng);
Waveform add_white_noise(const Waveform& w, double snr_db, std::uint64_t seed);

// ---- loudness (BS.1770 integrated loudness) --------------------------------

struct Biquad {
  double b0, b1, b2, a1, a2;
};
// K-weighting stages (high shelf, then high pass) for the given sample rate.
std::array<Biquad, 2> k_weighting(int sample_rate_hz);

// Integrated loudness in LUFS. Throws Error for input shorter than 400 ms and
// UnmeasurableError if all blocks are gated out.
double measure_loudness(const Waveform& w);

// Constant gain to reach target_lufs, then clip.
Waveform loudness_normalize(const Waveform& w, double target_lufs);

// ---- voice activity / non-speech zeroing --------------------------------

inline constexpr double kVadFrameSeconds = 0.025;

struct VadResult {
  std::vector<bool> speech;  // one entry per 25 ms frame
  std::size_t frame_len = 0; // samples per frame
};

// Energy VAD on non-overlapping 25 ms frames; the trailing partial frame is
// labeled from its own mean energy.
VadResult detect_nonspeech(const Waveform& w, double margin_db = 40.0);

// Zeros floor(proportion * K) of the K detected non-speech frames, picked
// uniformly at random.
Waveform zero_nonspeech(const Waveform& w, double proportion, Rng& rng,
                        double margin_db = 40.0);
Waveform zero_nonspeech(const Waveform& w, double proportion, std::uint64_t seed,
                        double margin_db = 40.0);

// ---- codec proxy ---------------------------------------------------------

// Cutoff frequency for a bitrate, clamped to Nyquist. Throws for bitrates not
// in kCodecBitrates.
double codec_cutoff_hz(int bitrate_kbps, int sample_rate_hz);

// Band-limiting plus spectral magnitude quantization over a 512-point STFT with
// 50% overlap-add; a linear-phase low-pass then removes leakage above the
// cutoff. Same length as the input.
Waveform codec_degrade(const Waveform& w, int bitrate_kbps);

// Runs an external encoder/decoder command (placeholders {in} {out} {kbps}),
// then pads or trims the decoded audio to the input length.
Waveform codec_degrade_external(const Waveform& w, int bitrate_kbps,
                                const std::string& command_template);

// ---- dispatch ------------------------------------------------------------

struct InterventionResult {
  Waveform waveform;
  AppliedIntervention applied;
};

// Samples z from the spec's distribution using the derived seed and applies
// the matching intervention. The first draw of the stream is always z.
InterventionResult apply(const Waveform& w, const InterventionSpec& spec,
                         const SeedContext& ctx);

// The z apply() would sample for this seed context.
double sample_control(const InterventionSpec& spec, const SeedContext& ctx);

}  // namespace cmaudit
