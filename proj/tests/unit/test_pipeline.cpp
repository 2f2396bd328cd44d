#include <doctest.h>

#include <fstream>
#include <iterator>

#include "cmaudit/error.hpp"
#include "cmaudit/pipeline.hpp"
#include "cmaudit/synth.hpp"
#include "test_support.hpp"

using namespace cmaudit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

PipelineConfig tiny_config(const fs::path& out) {
  auto cfg = parse_pipeline_config(R"({
    "master_seed": 5,
    "corpus": {"synthetic": {"train_bona": 3, "train_spoof": 3, "eval_bona": 3, "eval_spoof": 3,
                             "speech_min_s": 0.3, "speech_max_s": 0.4}},
    "interventions": ["mu_law", "white_noise"],
    "configurations": ["O", "B"],
    "cm": {"components": 2, "max_iterations": 5}
  })");
  cfg.output_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_pipeline_config(example_pipeline_config());
  CHECK(cfg.seed() == 2024);
  CHECK(cfg.interventions.size() == 5);
  CHECK(cfg.configurations.size() == 5);
  CHECK(cfg.cm.gmm.num_components == 64);
  CHECK(cfg.corpus.synthetic.has_value());

  CHECK_THROWS_AS(parse_pipeline_config(R"({"master_seed": 1, "corpus": {"synthetic": {}}, "colour": 1})"), ParseError);
  CHECK_THROWS_AS(parse_pipeline_config(R"({"master_seed": 1, "corpus": {"synthetic": {"train_bonafide": 3}}})"),
                  ParseError);
  CHECK_THROWS_AS(parse_pipeline_config("{not json"), ParseError);

  auto no_seed = parse_pipeline_config(R"({"corpus": {"synthetic": {}}})");
  CHECK_THROWS_AS(no_seed.validate(), Error);
  no_seed.master_seed = 3;
  CHECK_NOTHROW(no_seed.validate());

  const auto custom = parse_pipeline_config(R"({"master_seed": 1, "corpus": {"synthetic": {}},
      "configurations": ["O", "0 1 0 1", {"name": "half", "indicator": "0.5 0 0.5 0"}],
      "interventions": [{"kind": "white_noise", "name": "loud_noise", "dist": {"uniform": [0, 5]}}]})");
  CHECK(custom.configurations[1].name == "A");
  CHECK(custom.configurations[2].name == "half");
  CHECK(custom.interventions[0].label() == "loud_noise");

  CHECK_THROWS_AS(parse_pipeline_config(R"({"master_seed": 1, "corpus": {"protocols": {"train": "/nonexistent"},
      "audio_dir": "/nonexistent"}})").validate(), Error);
}

TEST_CASE("experiment cells share one baseline") {
  const auto cfg = parse_pipeline_config(example_pipeline_config());
  const auto cells = experiment_cells(cfg);
  CHECK(cells.size() == 1 + 5 * 4);
  CHECK(cells.front().is_baseline());
  CHECK(dataset_cells(cfg).size() == 1 + 5 * 5);
}

TEST_CASE("perturbation leaves O byte-identical and touches only planned files") {
  test::TempDir dir("pipeline");
  const auto cfg = tiny_config(dir.path());
  run_synth_data(cfg);
  const Corpus corpus = load_corpus(cfg);
  CHECK(corpus.records.size() == 12);

  std::map<std::string, std::string> before;
  for (const auto& r : corpus.records) before[r.utt_id] = slurp(corpus.audio_path(r.utt_id));

  const auto summaries = run_perturb(cfg);
  CHECK(summaries.size() == 1 + 2 * 2);
  const Workspace ws(cfg.output_dir);
  for (const auto& s : summaries) {
    CAPTURE(s.cell.intervention);
    CAPTURE(s.cell.configuration);
    CHECK(line_count(ws.manifest_path(s.cell)) == 1 + corpus.records.size());
    for (const auto& r : corpus.records) {
      const std::string bytes = slurp(ws.dataset_audio_dir(s.cell) / (r.utt_id + ".wav"));
      const bool changed = bytes != before[r.utt_id];
      if (s.cell.configuration == "O") CHECK_FALSE(changed);
      // B intervenes on every spoof file, train and test.
      if (s.cell.configuration == "B") CHECK(changed == !r.is_bona());
    }
  }
  // The source corpus must be untouched.
  for (const auto& r : corpus.records) CHECK(slurp(corpus.audio_path(r.utt_id)) == before[r.utt_id]);

  // Re-running over existing (possibly hard-linked) outputs must not write through links.
  run_perturb(cfg);
  for (const auto& r : corpus.records) CHECK(slurp(corpus.audio_path(r.utt_id)) == before[r.utt_id]);
}

TEST_CASE("ingested scores feed the same analysis as built-in scores") {
  test::TempDir dir("pipeline");
  auto cfg = tiny_config(dir.path());
  run_synth_data(cfg);
  const Corpus corpus = load_corpus(cfg);

  std::vector<ScoredTrial> direct;
  int k = 0;
  for (const char* config : {"O", "B"}) {
    std::ofstream out(dir.path() / (std::string(config) + ".txt"));
    out.precision(17);
    for (const auto& r : corpus.records) {
      if (r.y_trn != Subset::eval) continue;
      const double s = 0.3 * (k++ % 5) + (r.is_bona() ? 1.0 : 0.0) + (config[0] == 'B' && !r.is_bona() ? 0.4 : 0.0);
      out << r.utt_id << ' ' << s << '\n';
      direct.push_back({r.utt_id, s, r.y_cls, config, "mu_law"});
    }
  }
  std::vector<ScoredTrial> ingested;
  for (const char* config : {"O", "B"}) {
    auto part = run_ingest(cfg, dir.path() / (std::string(config) + ".txt"), config, "mu_law");
    ingested.insert(ingested.end(), part.begin(), part.end());
  }
  const auto a = run_analysis(direct, cfg.configurations);
  const auto b = run_analysis(ingested, cfg.configurations);
  REQUIRE(a.size() == 1);
  CHECK(a[0].full.beta_spf.estimate == b[0].full.beta_spf.estimate);
  CHECK(a[0].constrained.beta_spf.estimate == b[0].constrained.beta_spf.estimate);

  std::ofstream(dir.path() / "bad.txt") << "NOT_AN_ID 0.5\n";
  try {
    run_ingest(cfg, dir.path() / "bad.txt", "O", "mu_law");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("NOT_AN_ID") != std::string::npos);
  }
  CHECK_THROWS_AS(run_ingest(cfg, dir.path() / "O.txt", "Z", "mu_law"), Error);
}

TEST_CASE("analysis without configuration O names the remedy") {
  SynthScoreSpec spec;
  spec.trials_per_cell = 10;
  std::vector<ScoredTrial> trials;
  int i = 0;
  for (const auto& r : gen_scores(spec, {InterventionConfig::named("A")}))
    trials.push_back({"u" + std::to_string(i++), r.s, r.y_cls, r.configuration, "codec"});
  try {
    run_analysis(trials, InterventionConfig::table());
    FAIL("no error");
  } catch (const RankDeficiencyError& e) {
    CHECK(std::string(e.what()).find("configuration O") != std::string::npos);
  }
}

TEST_CASE("tiny end-to-end run produces every report") {
  test::TempDir dir("pipeline");
  const auto cfg = tiny_config(dir.path());
  run_all(cfg);
  const Workspace ws(cfg.output_dir);
  for (const char* f : {"eer.csv", "eer.md", "regression.csv", "regression.md", "config_models.md", "report.md"})
    CHECK(fs::exists(ws.results_dir() / f));
  CHECK(line_count(ws.results_dir() / "eer.csv") == 1 + 1 + 2 * 2);
  for (const auto& cell : experiment_cells(cfg)) {
    CHECK(fs::exists(ws.model_dir(cell) / "bona.gmm"));
    CHECK(fs::exists(ws.model_dir(cell) / "train_log.csv"));
  }
  CHECK(slurp(ws.score_path({"mu_law", "O"})) == slurp(ws.score_path({std::string(kBaseline), "O"})));
}
