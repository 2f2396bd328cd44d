#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmaudit/eval.hpp"
#include "cmaudit/features.hpp"
#include "cmaudit/gmm.hpp"
#include "cmaudit/interventions.hpp"
#include "cmaudit/protocol.hpp"
#include "cmaudit/regression.hpp"
#include "cmaudit/synth.hpp"

namespace cmaudit {

// ---- configuration -------------------------------------------------------------

struct CorpusSource {
  // Either a synthetic corpus (generated by synth-data) ...
  std::optional<SynthCorpusSpec> synthetic;
  // Use the master seed for generation unless the spec carried its own seed.
  bool synthetic_seed_from_master = true;
  // ... or protocol files plus a directory of <utt_id><audio_ext> files.
  std::vector<std::pair<Subset, std::filesystem::path>> protocols;
  std::filesystem::path audio_dir;
  std::string audio_ext = ".wav";
};

enum class CmMode { gmm, external };

struct CmSettings {
  CmMode mode = CmMode::gmm;
  GmmTrainOptions gmm;
  LfccConfig features;
  bool cache_features = false;
};

struct PipelineConfig {
  CorpusSource corpus;
  std::vector<InterventionSpec> interventions;
  std::vector<InterventionConfig> configurations;
  CmSettings cm;
  std::optional<std::uint64_t> master_seed;
  std::filesystem::path output_dir;
  int jobs = 1;

  std::uint64_t seed() const;
  // Throws Error when a path is missing, a name does not resolve, or no seed
  // was given.
  void validate() const;
};

// JSON config; relative paths resolve against base_dir.
PipelineConfig parse_pipeline_config(std::string_view json_text,
                                     const std::filesystem::path& base_dir = ".");
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
// A complete example config using the synthetic corpus and all five
// interventions.
std::string example_pipeline_config();

// ---- workspace layout ------------------------------------------------------------

inline constexpr std::string_view kBaseline = "baseline";

// One train/score/evaluate run. The unperturbed baseline is a single cell with
// intervention "baseline" and configuration O.
struct ExperimentCell {
  std::string intervention;
  std::string configuration;
  bool is_baseline() const { return intervention == kBaseline; }
};

class Workspace {
 public:
  explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path corpus_dir() const { return root_ / "corpus"; }
  std::filesystem::path dataset_dir(const ExperimentCell& c) const {
    return root_ / "perturbed" / c.intervention / c.configuration;
  }
  std::filesystem::path dataset_audio_dir(const ExperimentCell& c) const { return dataset_dir(c) / "audio"; }
  std::filesystem::path manifest_path(const ExperimentCell& c) const { return dataset_dir(c) / "manifest.csv"; }
  std::filesystem::path model_dir(const ExperimentCell& c) const {
    return root_ / "models" / c.intervention / c.configuration;
  }
  std::filesystem::path feature_dir(const ExperimentCell& c) const {
    return root_ / "features" / c.intervention / c.configuration;
  }
  std::filesystem::path score_dir(const ExperimentCell& c) const {
    return root_ / "scores" / c.intervention / c.configuration;
  }
  std::filesystem::path score_path(const ExperimentCell& c) const { return score_dir(c) / "scores.txt"; }
  std::filesystem::path sidecar_path(const ExperimentCell& c) const { return score_dir(c) / "scores.csv"; }
  std::filesystem::path results_dir() const { return root_ / "results"; }

 private:
  std::filesystem::path root_;
};

// Baseline (if O is configured) followed by every (intervention, non-O config).
std::vector<ExperimentCell> experiment_cells(const PipelineConfig& cfg);
// Every (intervention, config) pair including O, plus the baseline.
std::vector<ExperimentCell> dataset_cells(const PipelineConfig& cfg);

struct Corpus {
  std::vector<TrialRecord> records;
  std::filesystem::path audio_dir;
  std::string audio_ext = ".wav";

  std::filesystem::path audio_path(const std::string& utt_id) const {
    return audio_dir / (utt_id + audio_ext);
  }
};

Corpus load_corpus(const PipelineConfig& cfg);

// ---- stages ------------------------------------------------------------------------

void run_synth_data(const PipelineConfig& cfg);

struct PerturbSummary {
  ExperimentCell cell;
  std::size_t files = 0;
  std::size_t intervened = 0;
};
// Materializes every dataset cell under perturbed/ with a manifest. Files that
// are not intervened are hard-linked to the source (copied if linking fails).
std::vector<PerturbSummary> run_perturb(const PipelineConfig& cfg);

struct TrainSummary {
  ExperimentCell cell;
  std::vector<double> bona_log_likelihood;
  std::vector<double> spoof_log_likelihood;
  std::size_t bona_frames = 0;
  std::size_t spoof_frames = 0;
};
// Trains bona fide and spoof GMMs on the train subset of every experiment cell.
std::vector<TrainSummary> run_train(const PipelineConfig& cfg);

// Scores the eval subset of every experiment cell. Baseline scores are also
// written under each intervention's O directory so that every analysis group
// is self-contained.
void run_score(const PipelineConfig& cfg);

struct EerRow {
  std::string intervention;  // "baseline" for the unperturbed row
  std::string configuration;
  double eer = 0.0;
};
std::vector<EerRow> run_eval(const PipelineConfig& cfg);

// Average of the full model's fitted values over one (configuration, class)
// cell, next to the class-conditional mean the model implies for that cell.
struct CellMean {
  std::string configuration;
  ClassLabel y_cls = ClassLabel::spoof;
  double fitted_mean = 0.0;
  double model_mean = 0.0;
};

struct InterventionAnalysis {
  std::string intervention;
  std::size_t trials = 0;
  RegressionFit full;
  RegressionFit constrained;
  ConfigModelReport models;
  std::vector<CellMean> cell_means;
};

// z-normalizes per (intervention, configuration), builds regression rows with
// deltas() and fits both models for every intervention present. Throws
// RankDeficiencyError with a hint when configuration O is missing.
std::vector<InterventionAnalysis> run_analysis(const std::vector<ScoredTrial>& trials,
                                               const std::vector<InterventionConfig>& configs);

// Reads every score directory, runs the analysis and writes the reports.
std::vector<InterventionAnalysis> run_fit(const PipelineConfig& cfg);

// Writes results/report.md combining the EER table and the regression reports.
void run_report(const PipelineConfig& cfg);

// Joins an external "utt_id score" file with protocol labels.
std::vector<ScoredTrial> ingest_external_scores(const std::filesystem::path& score_path,
                                                const std::vector<TrialRecord>& protocol,
                                                const std::string& configuration,
                                                const std::string& intervention);
// Ingests and writes the scores into the workspace score directory of
// (intervention, configuration).
std::vector<ScoredTrial> run_ingest(const PipelineConfig& cfg, const std::filesystem::path& score_path,
                                    const std::string& configuration, const std::string& intervention);

// synth-data (if synthetic), perturb, train, score, eval, fit, report.
void run_all(const PipelineConfig& cfg);

}  // namespace cmaudit
