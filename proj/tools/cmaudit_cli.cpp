// cmaudit: command-line driver for the audit pipeline.
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cmaudit/error.hpp"
#include "cmaudit/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("-o,--out", c.out, "output directory (overrides the config)");
  cmd->add_option("-j,--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

cmaudit::PipelineConfig load(const Common& c) {
  auto cfg = cmaudit::load_pipeline_config(c.config);
  if (c.seed) cfg.master_seed = c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.jobs > 0) cfg.jobs = c.jobs;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shortcut-learning audit for spoofing countermeasures"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth-data", "generate the synthetic corpus");
  auto* perturb = app.add_subcommand("perturb", "build the perturbed datasets");
  auto* train = app.add_subcommand("train", "train the GMM countermeasures");
  auto* score = app.add_subcommand("score", "score the eval subset");
  auto* eval = app.add_subcommand("eval", "EER table");
  auto* fit = app.add_subcommand("fit", "score regression and per-configuration models");
  auto* report = app.add_subcommand("report", "EER table, regression and models in one report");
  auto* run = app.add_subcommand("run", "all stages in order");
  for (auto* cmd : {synth, perturb, train, score, eval, fit, report, run}) add_common(cmd, common);

  auto* ingest = app.add_subcommand("ingest-scores", "import scores from an external countermeasure");
  add_common(ingest, common);
  std::string score_file, configuration, intervention;
  ingest->add_option("--scores", score_file, "two-column score file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--configuration", configuration, "configuration name")->required();
  ingest->add_option("--intervention", intervention, "intervention name")->required();

  auto* example = app.add_subcommand("example-config", "print an example config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (example->parsed()) {
      std::cout << cmaudit::example_pipeline_config();
      return 0;
    }
    const auto cfg = load(common);
    if (synth->parsed()) {
      cmaudit::run_synth_data(cfg);
    } else if (perturb->parsed()) {
      for (const auto& s : cmaudit::run_perturb(cfg))
        std::printf("%s/%s: %zu files, %zu intervened\n", s.cell.intervention.c_str(),
                    s.cell.configuration.c_str(), s.files, s.intervened);
    } else if (train->parsed()) {
      for (const auto& s : cmaudit::run_train(cfg))
        std::printf("%s/%s: bona %zu frames, %zu iterations; spoof %zu frames, %zu iterations\n",
                    s.cell.intervention.c_str(), s.cell.configuration.c_str(), s.bona_frames,
                    s.bona_log_likelihood.size() - 1, s.spoof_frames, s.spoof_log_likelihood.size() - 1);
    } else if (score->parsed()) {
      cmaudit::run_score(cfg);
    } else if (eval->parsed()) {
      for (const auto& r : cmaudit::run_eval(cfg))
        std::printf("%-16s %-3s %6.2f%%\n", r.intervention.c_str(), r.configuration.c_str(), 100.0 * r.eer);
    } else if (fit->parsed()) {
      for (const auto& a : cmaudit::run_fit(cfg))
        std::printf("%-16s mu=%.4f d=%.4f beta*=%.4f sigma=%.4f\n", a.intervention.c_str(),
                    a.constrained.mu.estimate, a.constrained.d.estimate, a.constrained.beta_star(),
                    a.constrained.sigma_eps);
    } else if (report->parsed()) {
      cmaudit::run_report(cfg);
    } else if (ingest->parsed()) {
      const auto trials = cmaudit::run_ingest(cfg, score_file, configuration, intervention);
      std::printf("ingested %zu scores\n", trials.size());
    } else if (run->parsed()) {
      cmaudit::run_all(cfg);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cmaudit: %s\n", e.what());
    return 1;
  }
  return 0;
}
