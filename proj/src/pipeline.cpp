#include "cmaudit/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "cmaudit/error.hpp"
#include "cmaudit/reports.hpp"
#include "cmaudit/seed.hpp"
#include "parallel.hpp"

namespace cmaudit {
namespace fs = std::filesystem;

namespace {

const InterventionSpec& find_intervention(const PipelineConfig& cfg, const std::string& name) {
  for (const auto& s : cfg.interventions)
    if (s.label() == name) return s;
  throw Error("unknown intervention '" + name + "'");
}

const InterventionConfig& find_configuration(const PipelineConfig& cfg, const std::string& name) {
  for (const auto& c : cfg.configurations)
    if (c.name == name) return c;
  throw Error("unknown configuration '" + name + "'");
}

bool has_configuration(const PipelineConfig& cfg, const std::string& name) {
  return std::any_of(cfg.configurations.begin(), cfg.configurations.end(),
                     [&](const InterventionConfig& c) { return c.name == name; });
}

void link_or_copy(const fs::path& src, const fs::path& dst) {
  std::error_code ec;
  fs::create_hard_link(src, dst, ec);
  if (ec) fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
}

FeatureMatrix features_for(const PipelineConfig& cfg, const Workspace& ws, const ExperimentCell& cell,
                           const std::string& utt_id) {
  const fs::path cache = ws.feature_dir(cell) / (utt_id + ".feat");
  if (cfg.cm.cache_features) {
    if (auto hit = load_features(cache, cfg.cm.features.fingerprint())) return *std::move(hit);
  }
  const Waveform w = read_pcm(ws.dataset_audio_dir(cell) / (utt_id + ".wav"));
  FeatureMatrix f = lfcc(w, cfg.cm.features);
  if (cfg.cm.cache_features) {
    fs::create_directories(cache.parent_path());
    save_features(f, cache);
  }
  return f;
}

Eigen::MatrixXd stack(const std::vector<FeatureMatrix>& parts) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& p : parts) {
    rows += p.num_frames();
    cols = p.dim();
  }
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.num_frames()) = p.frames;
    at += p.num_frames();
  }
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<ExperimentCell> score_cells(const PipelineConfig& cfg) {
  std::vector<ExperimentCell> cells;
  for (const auto& s : cfg.interventions)
    for (const auto& c : cfg.configurations) cells.push_back({s.label(), c.name});
  return cells;
}

}  // namespace

std::vector<ExperimentCell> experiment_cells(const PipelineConfig& cfg) {
  std::vector<ExperimentCell> cells;
  if (has_configuration(cfg, "O")) cells.push_back({std::string(kBaseline), "O"});
  for (const auto& s : cfg.interventions)
    for (const auto& c : cfg.configurations)
      if (c.name != "O") cells.push_back({s.label(), c.name});
  return cells;
}

std::vector<ExperimentCell> dataset_cells(const PipelineConfig& cfg) {
  std::vector<ExperimentCell> cells;
  if (has_configuration(cfg, "O")) cells.push_back({std::string(kBaseline), "O"});
  for (const auto& c : score_cells(cfg)) cells.push_back(c);
  return cells;
}

Corpus load_corpus(const PipelineConfig& cfg) {
  Corpus corpus;
  if (cfg.corpus.synthetic) {
    const Workspace ws(cfg.output_dir);
    corpus.audio_dir = ws.corpus_dir() / "audio";
    corpus.audio_ext = ".wav";
    for (Subset subset : {Subset::train, Subset::dev, Subset::eval}) {
      const fs::path p = ws.corpus_dir() / ("protocol." + std::string(to_string(subset)) + ".txt");
      if (!fs::exists(p)) {
        if (subset == Subset::dev) continue;
        throw Error("synthetic corpus not found at " + ws.corpus_dir().string() + " (run synth-data first)");
      }
      auto part = parse_protocol(p, subset);
      corpus.records.insert(corpus.records.end(), part.begin(), part.end());
    }
  } else {
    corpus.audio_dir = cfg.corpus.audio_dir;
    corpus.audio_ext = cfg.corpus.audio_ext;
    for (const auto& [subset, path] : cfg.corpus.protocols) {
      auto part = parse_protocol(path, subset);
      corpus.records.insert(corpus.records.end(), part.begin(), part.end());
    }
  }
  std::set<std::string> ids;
  for (const auto& r : corpus.records)
    if (!ids.insert(r.utt_id).second) throw Error("corpus: utt_id " + r.utt_id + " appears in two protocols");
  if (corpus.records.empty()) throw Error("corpus: no trials");
  return corpus;
}

void run_synth_data(const PipelineConfig& cfg) {
  cfg.validate();
  if (!cfg.corpus.synthetic) throw Error("synth-data: the config has no synthetic corpus section");
  SynthCorpusSpec spec = *cfg.corpus.synthetic;
  if (cfg.corpus.synthetic_seed_from_master) spec.seed = cfg.seed();
  const Workspace ws(cfg.output_dir);
  fs::remove_all(ws.corpus_dir());
  write_corpus(gen_corpus(spec), ws.corpus_dir());
}

std::vector<PerturbSummary> run_perturb(const PipelineConfig& cfg) {
  cfg.validate();
  const Workspace ws(cfg.output_dir);
  const Corpus corpus = load_corpus(cfg);
  std::vector<PerturbSummary> summaries;
  for (const auto& cell : dataset_cells(cfg)) {
    const InterventionSpec& spec =
        cell.is_baseline() ? cfg.interventions.front() : find_intervention(cfg, cell.intervention);
    const InterventionConfig& config = find_configuration(cfg, cell.configuration);
    PerturbationPlan p = plan(corpus.records, config, spec, cfg.seed());
    if (cell.is_baseline()) p.intervention = std::string(kBaseline);

    fs::remove_all(ws.dataset_dir(cell));
    fs::create_directories(ws.dataset_audio_dir(cell));
    write_plan_manifest(p, ws.manifest_path(cell));

    const fs::path audio = ws.dataset_audio_dir(cell);
    detail::parallel_for(p.trials.size(), cfg.jobs, [&](std::size_t i) {
      const PlannedTrial& t = p.trials[i];
      const fs::path src = corpus.audio_path(t.utt_id);
      const fs::path dst = audio / (t.utt_id + ".wav");
      if (!t.intervention) {
        link_or_copy(src, dst);
        return;
      }
      Waveform w = read_pcm(src);
      w.id = t.utt_id;
      const InterventionResult r = apply(w, spec, {cfg.seed(), t.utt_id, spec.label(), config.name});
      if (r.applied.z != t.intervention->z)
        throw Error("perturb: control value for " + t.utt_id + " differs from the plan");
      write_pcm(r.waveform, dst);
    });

    PerturbSummary s{cell, p.trials.size(), 0};
    for (Cell c : kCells) s.intervened += p.planned_count(c);
    summaries.push_back(s);
  }
  return summaries;
}

std::vector<TrainSummary> run_train(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.cm.mode != CmMode::gmm) throw Error("train: cm.mode is 'external'; nothing to train");
  const Workspace ws(cfg.output_dir);
  const Corpus corpus = load_corpus(cfg);
  const auto cells = experiment_cells(cfg);
  std::vector<TrainSummary> summaries(cells.size());

  detail::parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    const ExperimentCell& cell = cells[i];
    if (!fs::is_directory(ws.dataset_audio_dir(cell)))
      throw Error("train: no dataset for (" + cell.intervention + ", " + cell.configuration +
                  "); run perturb first");
    std::vector<FeatureMatrix> bona, spoof;
    for (const auto& r : corpus.records) {
      if (r.y_trn != Subset::train) continue;
      (r.is_bona() ? bona : spoof).push_back(features_for(cfg, ws, cell, r.utt_id));
    }
    if (bona.empty() || spoof.empty())
      throw Error("train: the training subset needs both bona fide and spoof files");

    GmmTrainOptions opts = cfg.cm.gmm;
    TrainSummary& s = summaries[i];
    s.cell = cell;
    const Eigen::MatrixXd bona_frames = stack(bona);
    const Eigen::MatrixXd spoof_frames = stack(spoof);
    s.bona_frames = static_cast<std::size_t>(bona_frames.rows());
    s.spoof_frames = static_cast<std::size_t>(spoof_frames.rows());
    try {
      opts.seed = derive_seed({cfg.seed(), "gmm:bona", cell.intervention, cell.configuration});
      GmmTrainResult b = train_gmm(bona_frames, opts);
      opts.seed = derive_seed({cfg.seed(), "gmm:spoof", cell.intervention, cell.configuration});
      GmmTrainResult sp = train_gmm(spoof_frames, opts);
      fs::create_directories(ws.model_dir(cell));
      save_gmm(b.model, ws.model_dir(cell) / "bona.gmm");
      save_gmm(sp.model, ws.model_dir(cell) / "spoof.gmm");
      s.bona_log_likelihood = std::move(b.log_likelihood);
      s.spoof_log_likelihood = std::move(sp.log_likelihood);
    } catch (const Error& e) {
      throw Error("train (" + cell.intervention + ", " + cell.configuration + "): " + e.what());
    }
    std::ofstream log(ws.model_dir(cell) / "train_log.csv");
    log << "iteration,bona_avg_loglik,spoof_avg_loglik\n";
    const std::size_t n = std::max(s.bona_log_likelihood.size(), s.spoof_log_likelihood.size());
    for (std::size_t k = 0; k < n; ++k) {
      log << k << ',' << (k < s.bona_log_likelihood.size() ? fmt17(s.bona_log_likelihood[k]) : "") << ','
          << (k < s.spoof_log_likelihood.size() ? fmt17(s.spoof_log_likelihood[k]) : "") << '\n';
    }
  });
  return summaries;
}

void run_score(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.cm.mode != CmMode::gmm) throw Error("score: cm.mode is 'external'; use ingest-scores");
  const Workspace ws(cfg.output_dir);
  const Corpus corpus = load_corpus(cfg);
  const auto cells = experiment_cells(cfg);

  detail::parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    const ExperimentCell& cell = cells[i];
    const GmmModel bona = load_gmm(ws.model_dir(cell) / "bona.gmm");
    const GmmModel spoof = load_gmm(ws.model_dir(cell) / "spoof.gmm");
    std::vector<ScoredTrial> trials;
    for (const auto& r : corpus.records) {
      if (r.y_trn != Subset::eval) continue;
      const CmScore s = score(r.utt_id, features_for(cfg, ws, cell, r.utt_id), bona, spoof);
      trials.push_back({r.utt_id, s.score, r.y_cls, cell.configuration, cell.intervention});
    }
    std::vector<ExperimentCell> targets = {cell};
    if (cell.is_baseline())
      for (const auto& s : cfg.interventions) targets.push_back({s.label(), "O"});
    for (const auto& target : targets) {
      for (auto& t : trials) t.intervention = target.intervention;
      fs::create_directories(ws.score_dir(target));
      write_score_file(trials, ws.score_path(target));
      write_sidecar(trials, ws.sidecar_path(target));
    }
  });
}

std::vector<EerRow> run_eval(const PipelineConfig& cfg) {
  cfg.validate();
  const Workspace ws(cfg.output_dir);
  std::vector<ExperimentCell> cells;
  if (has_configuration(cfg, "O")) cells.push_back({std::string(kBaseline), "O"});
  for (const auto& c : score_cells(cfg)) cells.push_back(c);

  std::vector<EerRow> rows;
  for (const auto& cell : cells) {
    if (!fs::exists(ws.score_path(cell))) continue;
    const auto trials = read_scored_trials(ws.score_path(cell), ws.sidecar_path(cell));
    rows.push_back({cell.intervention, cell.configuration, eer(labeled(trials))});
  }
  if (rows.empty()) throw Error("eval: no score files under " + (ws.root() / "scores").string());
  fs::create_directories(ws.results_dir());
  write_eer_csv(rows, ws.results_dir() / "eer.csv");
  write_text(ws.results_dir() / "eer.md", eer_markdown(rows));
  return rows;
}

std::vector<InterventionAnalysis> run_analysis(const std::vector<ScoredTrial>& trials,
                                               const std::vector<InterventionConfig>& configs) {
  std::map<std::string, const InterventionConfig*> by_name;
  for (const auto& c : configs) by_name[c.name] = &c;

  std::vector<std::string> order;
  for (const auto& t : trials) {
    if (t.intervention == kBaseline) continue;
    if (std::find(order.begin(), order.end(), t.intervention) == order.end()) order.push_back(t.intervention);
    if (!by_name.count(t.configuration)) throw Error("analysis: unknown configuration '" + t.configuration + "'");
  }

  std::vector<InterventionAnalysis> out;
  for (const auto& intervention : order) {
    std::vector<ScoredTrial> group;
    for (const auto& t : trials)
      if (t.intervention == intervention) group.push_back(t);
    const auto normalized = znorm(group);

    std::vector<RegressionRow> rows;
    std::vector<InterventionConfig> present;
    for (const auto& t : normalized) {
      const InterventionConfig& c = *by_name.at(t.configuration);
      const Deltas d = deltas(t.y_cls, c);
      rows.push_back({t.score, t.y_cls, d.bona, d.spf, c.name});
    }
    for (const auto& c : configs)
      if (std::any_of(rows.begin(), rows.end(), [&](const RegressionRow& r) { return r.configuration == c.name; }))
        present.push_back(c);

    InterventionAnalysis a;
    a.intervention = intervention;
    a.trials = rows.size();
    try {
      a.full = fit_full(rows);
      a.constrained = fit_constrained(rows);
    } catch (const RankDeficiencyError& e) {
      const bool has_o = std::any_of(present.begin(), present.end(),
                                     [](const InterventionConfig& c) { return c.name == "O"; });
      throw RankDeficiencyError("analysis (" + intervention + "): " + e.what() +
                                (has_o ? "" : "; include scores for configuration O together with at least one biased configuration"));
    }
    a.models = config_report(a.full, present);
    for (const auto& c : present) {
      for (ClassLabel y : {ClassLabel::spoof, ClassLabel::bona}) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows) {
          if (r.configuration != c.name || r.y_cls != y) continue;
          sum += a.full.predict(r.y_cls, r.delta_bona, r.delta_spf);
          ++n;
        }
        if (n == 0) continue;
        const ConfigModel* m = a.models.find(c.name);
        a.cell_means.push_back({c.name, y, sum / static_cast<double>(n),
                                y == ClassLabel::bona ? m->mean_bona : m->mean_spoof});
      }
    }
    out.push_back(std::move(a));
  }
  if (out.empty()) throw Error("analysis: no intervention scores to analyse");
  return out;
}

std::vector<InterventionAnalysis> run_fit(const PipelineConfig& cfg) {
  cfg.validate();
  const Workspace ws(cfg.output_dir);
  std::vector<ScoredTrial> trials;
  for (const auto& cell : score_cells(cfg)) {
    if (!fs::exists(ws.score_path(cell))) continue;
    auto part = read_scored_trials(ws.score_path(cell), ws.sidecar_path(cell));
    trials.insert(trials.end(), part.begin(), part.end());
  }
  const auto analyses = run_analysis(trials, cfg.configurations);
  fs::create_directories(ws.results_dir());
  write_regression_csv(analyses, ws.results_dir() / "regression.csv");
  write_text(ws.results_dir() / "regression.md", regression_markdown(analyses));
  write_text(ws.results_dir() / "config_models.md", config_models_markdown(analyses));
  return analyses;
}

void run_report(const PipelineConfig& cfg) {
  const auto rows = run_eval(cfg);
  const auto analyses = run_fit(cfg);
  const Workspace ws(cfg.output_dir);
  std::string text = "# Shortcut-learning audit\n\n## Equal error rates\n\n" + eer_markdown(rows) +
                     "\n## Score regression\n\n" + regression_markdown(analyses) +
                     "\n## Class-conditional models\n\n" + config_models_markdown(analyses);
  write_text(ws.results_dir() / "report.md", text);
}

std::vector<ScoredTrial> ingest_external_scores(const fs::path& score_path,
                                                const std::vector<TrialRecord>& protocol,
                                                const std::string& configuration,
                                                const std::string& intervention) {
  std::map<std::string, const TrialRecord*> index;
  for (const auto& r : protocol) index[r.utt_id] = &r;
  std::vector<ScoredTrial> out;
  for (const auto& [id, s] : read_score_file(score_path)) {
    auto it = index.find(id);
    if (it == index.end()) throw Error("ingest: utt_id '" + id + "' is not in the protocol");
    out.push_back({id, s, it->second->y_cls, configuration, intervention});
  }
  return out;
}

std::vector<ScoredTrial> run_ingest(const PipelineConfig& cfg, const fs::path& score_path,
                                    const std::string& configuration, const std::string& intervention) {
  cfg.validate();
  find_configuration(cfg, configuration);
  if (intervention != kBaseline) find_intervention(cfg, intervention);
  const Corpus corpus = load_corpus(cfg);
  auto trials = ingest_external_scores(score_path, corpus.records, configuration, intervention);
  const Workspace ws(cfg.output_dir);
  const ExperimentCell cell{intervention, configuration};
  fs::create_directories(ws.score_dir(cell));
  write_score_file(trials, ws.score_path(cell));
  write_sidecar(trials, ws.sidecar_path(cell));
  return trials;
}

void run_all(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.corpus.synthetic) run_synth_data(cfg);
  run_perturb(cfg);
  if (cfg.cm.mode == CmMode::gmm) {
    run_train(cfg);
    run_score(cfg);
  }
  run_report(cfg);
}

}  // namespace cmaudit
