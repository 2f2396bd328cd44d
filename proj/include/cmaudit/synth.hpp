#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cmaudit/audio.hpp"
#include "cmaudit/protocol.hpp"
#include "cmaudit/regression.hpp"

namespace cmaudit {

// Per-class generator settings.
struct ClassRecipe {
  double tilt_db_per_octave = -6.0;
  // Standard deviation of the per-file tilt around tilt_db_per_octave.
  double tilt_jitter_db = 2.0;
  int max_harmonics = 40;
  // Depth of the slow f0 modulation, as a fraction of f0.
  double f0_jitter = 0.05;
  bool random_phase = false;
};

struct SynthCorpusSpec {
  std::size_t train_bona = 200;
  std::size_t train_spoof = 200;
  std::size_t dev_bona = 0;
  std::size_t dev_spoof = 0;
  std::size_t eval_bona = 200;
  std::size_t eval_spoof = 200;
  double speech_min_s = 0.8;
  double speech_max_s = 1.2;
  // Leading and trailing silence, each drawn independently.
  double silence_min_s = 0.2;
  double silence_max_s = 0.5;
  int sample_rate_hz = 16000;
  double f0_min_hz = 100.0;
  double f0_max_hz = 250.0;
  // RMS of the voiced segment, uniform in level_dbfs +- level_spread_db.
  double level_dbfs = -26.0;
  double level_spread_db = 3.0;
  // RMS of the white background noise present throughout the file.
  double noise_floor_dbfs = -80.0;
  ClassRecipe bona{-6.0, 2.0, 40, 0.05, false};
  ClassRecipe spoof{-3.0, 2.0, 40, 0.05, true};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthCorpus {
  std::vector<TrialRecord> records;
  std::vector<Waveform> waveforms;  // parallel to records
};

SynthCorpus gen_corpus(const SynthCorpusSpec& spec);

// Writes dir/audio/<utt>.wav and one protocol per non-empty subset,
// dir/protocol.<subset>.txt.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

struct PlantedCoefficients {
  double mu = 0.0;
  double d = 1.0;
  double beta_bona = 0.0;
  double beta_spf = 0.0;
  double sigma_eps = 1.0;
};

struct SynthScoreSpec {
  PlantedCoefficients planted;
  std::size_t trials_per_cell = 1000;  // per configuration and class
  std::uint64_t seed = 0;
};

// For each configuration and class: s ~ Normal(mu + d*y + beta_bona*delta_bona
// + beta_spf*delta_spf, sigma_eps^2).
std::vector<RegressionRow> gen_scores(const SynthScoreSpec& spec,
                                      const std::vector<InterventionConfig>& configs =
                                          InterventionConfig::table());

}  // namespace cmaudit
