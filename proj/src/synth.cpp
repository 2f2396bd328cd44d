#include "cmaudit/synth.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>

#include "cmaudit/error.hpp"
#include "cmaudit/rng.hpp"
#include "cmaudit/seed.hpp"

namespace cmaudit {
namespace {

double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }

// Harmonic complex with a slow f0 contour and a syllable-rate envelope.
std::vector<double> voiced_segment(std::size_t n, int fs, const ClassRecipe& recipe,
                                   const SynthCorpusSpec& spec, Rng& rng) {
  const double f0 = rng.uniform(spec.f0_min_hz, spec.f0_max_hz);
  const double tilt = recipe.tilt_db_per_octave + recipe.tilt_jitter_db * rng.normal();
  const double vibrato_hz = rng.uniform(3.0, 6.0);
  const double vibrato_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double syllable_hz = rng.uniform(3.0, 5.0);
  const double syllable_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  const double f0_peak = f0 * (1.0 + recipe.f0_jitter);
  const int harmonics = std::max(
      1, std::min(recipe.max_harmonics, static_cast<int>(std::floor(0.95 * 0.5 * fs / f0_peak))));
  std::vector<double> amp(static_cast<std::size_t>(harmonics));
  std::vector<std::complex<double>> offset(static_cast<std::size_t>(harmonics));
  for (int k = 0; k < harmonics; ++k) {
    amp[static_cast<std::size_t>(k)] = db_to_amp(tilt * std::log2(k + 1.0));
    const double phase = recipe.random_phase ? rng.uniform(0.0, 2.0 * std::numbers::pi) : 0.0;
    offset[static_cast<std::size_t>(k)] = std::polar(1.0, phase);
  }

  std::vector<double> x(n);
  std::complex<double> rotor(1.0, 0.0);
  const std::size_t fade = static_cast<std::size_t>(0.01 * fs);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double inst_f0 =
        f0 * (1.0 + recipe.f0_jitter * std::sin(2.0 * std::numbers::pi * vibrato_hz * t + vibrato_phase));
    rotor *= std::polar(1.0, 2.0 * std::numbers::pi * inst_f0 / fs);
    rotor /= std::abs(rotor);
    std::complex<double> power = 1.0;
    double acc = 0.0;
    for (int k = 0; k < harmonics; ++k) {
      power *= rotor;
      acc += amp[static_cast<std::size_t>(k)] * (offset[static_cast<std::size_t>(k)] * power).imag();
    }
    const double s = std::sin(std::numbers::pi * syllable_hz * t + syllable_phase);
    double env = 0.3 + 0.7 * s * s;
    if (i < fade) env *= static_cast<double>(i) / fade;
    if (n - i <= fade) env *= static_cast<double>(n - i) / fade;
    x[i] = env * acc;
  }
  const double rms = std::sqrt(mean_square(x));
  const double target = db_to_amp(rng.uniform(spec.level_dbfs - spec.level_spread_db,
                                               spec.level_dbfs + spec.level_spread_db));
  if (rms > 0.0)
    for (double& v : x) v *= target / rms;
  return x;
}

std::string utt_name(Subset subset, std::size_t index) {
  const char tag = subset == Subset::train ? 'T' : subset == Subset::dev ? 'D' : 'E';
  char buf[32];
  std::snprintf(buf, sizeof buf, "SYN_%c_%07zu", tag, index);
  return buf;
}

}  // namespace

void SynthCorpusSpec::validate() const {
  if (train_bona == 0 || train_spoof == 0 || eval_bona == 0 || eval_spoof == 0)
    throw Error("synthetic corpus: every train/eval cell needs at least one file");
  if (!(speech_min_s > 0 && speech_min_s <= speech_max_s)) throw Error("synthetic corpus: bad speech duration range");
  if (!(silence_min_s >= 0 && silence_min_s <= silence_max_s)) throw Error("synthetic corpus: bad silence range");
  if (sample_rate_hz <= 0) throw Error("synthetic corpus: bad sample rate");
  if (!(f0_min_hz > 0 && f0_min_hz <= f0_max_hz)) throw Error("synthetic corpus: bad f0 range");
  if (bona.tilt_db_per_octave == spoof.tilt_db_per_octave && bona.random_phase == spoof.random_phase)
    throw Error("synthetic corpus: class recipes must differ");
}

SynthCorpus gen_corpus(const SynthCorpusSpec& spec) {
  spec.validate();
  SynthCorpus corpus;
  const std::array<std::tuple<Subset, std::size_t, std::size_t>, 3> cells = {{
      {Subset::train, spec.train_bona, spec.train_spoof},
      {Subset::dev, spec.dev_bona, spec.dev_spoof},
      {Subset::eval, spec.eval_bona, spec.eval_spoof},
  }};
  const int fs = spec.sample_rate_hz;
  for (const auto& [subset, n_bona, n_spoof] : cells) {
    std::size_t index = 0;
    std::size_t bona_left = n_bona, spoof_left = n_spoof;
    for (std::size_t i = 0; i < n_bona + n_spoof; ++i) {
      // Interleave classes so ids carry no class information.
      const bool bona = bona_left > 0 && (spoof_left == 0 || i % 2 == 0);
      (bona ? bona_left : spoof_left)--;
      TrialRecord r;
      r.utt_id = utt_name(subset, index++);
      r.y_trn = subset;
      r.y_cls = bona ? ClassLabel::bona : ClassLabel::spoof;
      char speaker[16];
      std::snprintf(speaker, sizeof speaker, "SYN_%04zu", i % 20);
      r.speaker_id = speaker;
      if (!bona) r.attack_id = "S01";

      Rng rng(derive_seed({spec.seed, r.utt_id, "synth", ""}));
      const auto speech = static_cast<std::size_t>(rng.uniform(spec.speech_min_s, spec.speech_max_s) * fs);
      const auto lead = static_cast<std::size_t>(rng.uniform(spec.silence_min_s, spec.silence_max_s) * fs);
      const auto trail = static_cast<std::size_t>(rng.uniform(spec.silence_min_s, spec.silence_max_s) * fs);
      const std::vector<double> voiced = voiced_segment(speech, fs, bona ? spec.bona : spec.spoof, spec, rng);

      Waveform w;
      w.id = r.utt_id;
      w.sample_rate_hz = fs;
      w.samples.assign(lead + speech + trail, 0.0);
      std::copy(voiced.begin(), voiced.end(), w.samples.begin() + static_cast<std::ptrdiff_t>(lead));
      const double floor = db_to_amp(spec.noise_floor_dbfs);
      for (double& v : w.samples) v += floor * rng.normal();
      clip_in_place(w.samples);
      corpus.records.push_back(std::move(r));
      corpus.waveforms.push_back(quantize_16bit(std::move(w)));
    }
  }
  return corpus;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  const auto audio = dir / "audio";
  std::filesystem::create_directories(audio);
  for (const auto& w : corpus.waveforms) write_pcm(w, audio / (w.id + ".wav"));
  for (Subset subset : {Subset::train, Subset::dev, Subset::eval}) {
    std::vector<TrialRecord> part;
    for (const auto& r : corpus.records)
      if (r.y_trn == subset) part.push_back(r);
    if (!part.empty()) write_protocol(part, dir / ("protocol." + std::string(to_string(subset)) + ".txt"));
  }
}

std::vector<RegressionRow> gen_scores(const SynthScoreSpec& spec, const std::vector<InterventionConfig>& configs) {
  const auto& c = spec.planted;
  if (!(c.sigma_eps >= 0.0)) throw Error("gen_scores: sigma_eps must be non-negative");
  std::vector<RegressionRow> rows;
  rows.reserve(configs.size() * 2 * spec.trials_per_cell);
  for (const auto& cfg : configs) {
    Rng rng(derive_seed({spec.seed, "scores", "", cfg.name}));
    for (ClassLabel y : {ClassLabel::spoof, ClassLabel::bona}) {
      const Deltas dl = deltas(y, cfg);
      const double mean = c.mu + (y == ClassLabel::bona ? c.d : 0.0) + c.beta_bona * dl.bona +
                          c.beta_spf * dl.spf;
      for (std::size_t i = 0; i < spec.trials_per_cell; ++i)
        rows.push_back({mean + c.sigma_eps * rng.normal(), y, dl.bona, dl.spf, cfg.name});
    }
  }
  return rows;
}

}  // namespace cmaudit
