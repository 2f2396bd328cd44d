#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cmaudit/error.hpp"
#include "cmaudit/pipeline.hpp"

namespace cmaudit {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void only_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ParseError("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("config: bad value for '") + key + "': " + e.what());
    }
  }
}

fs::path resolve_path(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

ClassRecipe parse_recipe(const json& j, ClassRecipe r, const std::string& where) {
  only_keys(j, {"tilt_db_per_octave", "tilt_jitter_db", "max_harmonics", "f0_jitter", "random_phase"}, where);
  read(j, "tilt_db_per_octave", r.tilt_db_per_octave);
  read(j, "tilt_jitter_db", r.tilt_jitter_db);
  read(j, "max_harmonics", r.max_harmonics);
  read(j, "f0_jitter", r.f0_jitter);
  read(j, "random_phase", r.random_phase);
  return r;
}

SynthCorpusSpec parse_synthetic(const json& j) {
  only_keys(j,
            {"train_bona", "train_spoof", "dev_bona", "dev_spoof", "eval_bona", "eval_spoof", "speech_min_s",
             "speech_max_s", "silence_min_s", "silence_max_s", "sample_rate_hz", "f0_min_hz", "f0_max_hz",
             "level_dbfs", "level_spread_db", "noise_floor_dbfs", "bona", "spoof", "seed"},
            "corpus.synthetic");
  SynthCorpusSpec s;
  read(j, "train_bona", s.train_bona);
  read(j, "train_spoof", s.train_spoof);
  read(j, "dev_bona", s.dev_bona);
  read(j, "dev_spoof", s.dev_spoof);
  read(j, "eval_bona", s.eval_bona);
  read(j, "eval_spoof", s.eval_spoof);
  read(j, "speech_min_s", s.speech_min_s);
  read(j, "speech_max_s", s.speech_max_s);
  read(j, "silence_min_s", s.silence_min_s);
  read(j, "silence_max_s", s.silence_max_s);
  read(j, "sample_rate_hz", s.sample_rate_hz);
  read(j, "f0_min_hz", s.f0_min_hz);
  read(j, "f0_max_hz", s.f0_max_hz);
  read(j, "level_dbfs", s.level_dbfs);
  read(j, "level_spread_db", s.level_spread_db);
  read(j, "noise_floor_dbfs", s.noise_floor_dbfs);
  if (j.contains("bona")) s.bona = parse_recipe(j["bona"], s.bona, "corpus.synthetic.bona");
  if (j.contains("spoof")) s.spoof = parse_recipe(j["spoof"], s.spoof, "corpus.synthetic.spoof");
  read(j, "seed", s.seed);
  return s;
}

ParamDist parse_dist(const json& j, const std::string& where) {
  only_keys(j, {"uniform", "dirac", "choice"}, where);
  if (j.size() != 1) throw ParseError("config: " + where + " needs exactly one of uniform/dirac/choice");
  try {
    if (j.contains("uniform")) {
      const auto v = j["uniform"].get<std::vector<double>>();
      if (v.size() != 2) throw ParseError("config: " + where + ".uniform must be [lo, hi]");
      return Uniform{v[0], v[1]};
    }
    if (j.contains("dirac")) return Dirac{j["dirac"].get<double>()};
    return Choice{j["choice"].get<std::vector<double>>()};
  } catch (const json::exception& e) {
    throw ParseError("config: bad distribution in " + where + ": " + e.what());
  }
}

InterventionSpec parse_intervention(const json& j, std::size_t index) {
  const std::string where = "interventions[" + std::to_string(index) + "]";
  if (j.is_string()) {
    InterventionSpec s;
    s.kind = parse_intervention_kind(j.get<std::string>());
    return s.kind == InterventionKind::codec            ? InterventionSpec::codec()
           : s.kind == InterventionKind::white_noise    ? InterventionSpec::white_noise()
           : s.kind == InterventionKind::loudness_norm  ? InterventionSpec::loudness_norm()
           : s.kind == InterventionKind::nonspeech_zero ? InterventionSpec::nonspeech_zero()
                                                        : InterventionSpec::mu_law();
  }
  only_keys(j, {"kind", "name", "dist", "vad_margin_db", "external_codec_command"}, where);
  if (!j.contains("kind")) throw ParseError("config: " + where + " needs a kind");
  InterventionSpec s = parse_intervention(j["kind"], index);
  read(j, "name", s.name);
  if (j.contains("dist")) s.dist = parse_dist(j["dist"], where + ".dist");
  read(j, "vad_margin_db", s.vad_margin_db);
  if (j.contains("external_codec_command")) s.external_codec_command = j["external_codec_command"].get<std::string>();
  return s;
}

InterventionConfig parse_configuration(const json& j, std::size_t index) {
  if (j.is_string()) return InterventionConfig::resolve(j.get<std::string>());
  const std::string where = "configurations[" + std::to_string(index) + "]";
  only_keys(j, {"name", "indicator"}, where);
  if (!j.contains("name") || !j.contains("indicator")) throw ParseError("config: " + where + " needs name and indicator");
  InterventionConfig c = InterventionConfig::parse_indicator(j["indicator"].get<std::string>(), j["name"].get<std::string>());
  if (c.name != j["name"].get<std::string>())
    throw ParseError("config: " + where + " duplicates named configuration " + c.name);
  return c;
}

}  // namespace

std::uint64_t PipelineConfig::seed() const {
  if (!master_seed) throw Error("config: master_seed is not set");
  return *master_seed;
}

void PipelineConfig::validate() const {
  if (!master_seed) throw Error("config: master_seed must be set (or pass --seed)");
  if (output_dir.empty()) throw Error("config: output_dir must be set");
  if (!corpus.synthetic) {
    if (corpus.protocols.empty()) throw Error("config: corpus needs a synthetic spec or protocol files");
    for (const auto& [subset, path] : corpus.protocols)
      if (!fs::exists(path)) throw Error("config: protocol file " + path.string() + " does not exist");
    if (!fs::is_directory(corpus.audio_dir))
      throw Error("config: audio_dir " + corpus.audio_dir.string() + " is not a directory");
  } else {
    corpus.synthetic->validate();
  }
  if (interventions.empty()) throw Error("config: no interventions");
  std::set<std::string> names;
  for (const auto& s : interventions) {
    s.validate();
    if (s.label() == kBaseline) throw Error("config: intervention name 'baseline' is reserved");
    if (!names.insert(s.label()).second) throw Error("config: duplicate intervention name " + s.label());
  }
  if (configurations.empty()) throw Error("config: no configurations");
  names.clear();
  for (const auto& c : configurations) {
    c.validate();
    if (!names.insert(c.name).second) throw Error("config: duplicate configuration " + c.name);
  }
  if (cm.gmm.num_components < 1) throw Error("config: cm.components must be positive");
  if (jobs < 1) throw Error("config: jobs must be at least 1");
}

PipelineConfig parse_pipeline_config(std::string_view json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  only_keys(j, {"master_seed", "output_dir", "jobs", "corpus", "interventions", "configurations", "cm"}, "config");
  PipelineConfig cfg;
  if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
  std::string out = "cmaudit-out";
  read(j, "output_dir", out);
  cfg.output_dir = resolve_path(base_dir, out);
  read(j, "jobs", cfg.jobs);

  if (!j.contains("corpus")) throw ParseError("config: missing corpus section");
  const json& c = j["corpus"];
  only_keys(c, {"synthetic", "protocols", "audio_dir", "audio_ext"}, "corpus");
  if (c.contains("synthetic")) {
    cfg.corpus.synthetic = parse_synthetic(c["synthetic"]);
    cfg.corpus.synthetic_seed_from_master = !c["synthetic"].contains("seed");
  }
  if (c.contains("protocols")) {
    only_keys(c["protocols"], {"train", "dev", "eval"}, "corpus.protocols");
    for (const auto& [key, value] : c["protocols"].items()) {
      const Subset subset = key == "train" ? Subset::train : key == "dev" ? Subset::dev : Subset::eval;
      cfg.corpus.protocols.emplace_back(subset, resolve_path(base_dir, value.get<std::string>()));
    }
    std::string audio;
    read(c, "audio_dir", audio);
    cfg.corpus.audio_dir = resolve_path(base_dir, audio);
    read(c, "audio_ext", cfg.corpus.audio_ext);
  }
  if (cfg.corpus.synthetic && !cfg.corpus.protocols.empty())
    throw ParseError("config: corpus must be either synthetic or protocol-based, not both");

  if (j.contains("interventions")) {
    std::size_t i = 0;
    for (const auto& item : j["interventions"]) cfg.interventions.push_back(parse_intervention(item, i++));
  } else {
    cfg.interventions = {InterventionSpec::codec(), InterventionSpec::white_noise(),
                         InterventionSpec::loudness_norm(), InterventionSpec::nonspeech_zero(),
                         InterventionSpec::mu_law()};
  }
  if (j.contains("configurations")) {
    std::size_t i = 0;
    for (const auto& item : j["configurations"]) cfg.configurations.push_back(parse_configuration(item, i++));
  } else {
    cfg.configurations = InterventionConfig::table();
  }

  if (j.contains("cm")) {
    const json& m = j["cm"];
    only_keys(m, {"mode", "components", "max_iterations", "tolerance", "variance_floor_rel", "cache_features", "lfcc"}, "cm");
    std::string mode = "gmm";
    read(m, "mode", mode);
    if (mode == "gmm")
      cfg.cm.mode = CmMode::gmm;
    else if (mode == "external")
      cfg.cm.mode = CmMode::external;
    else
      throw ParseError("config: cm.mode must be 'gmm' or 'external'");
    read(m, "components", cfg.cm.gmm.num_components);
    read(m, "max_iterations", cfg.cm.gmm.max_iterations);
    read(m, "tolerance", cfg.cm.gmm.tolerance);
    read(m, "variance_floor_rel", cfg.cm.gmm.variance_floor_rel);
    read(m, "cache_features", cfg.cm.cache_features);
    if (m.contains("lfcc")) {
      const json& l = m["lfcc"];
      only_keys(l, {"frame_len_s", "frame_hop_s", "fft_size", "num_filters", "num_ceps", "deltas", "log_floor_rel"}, "cm.lfcc");
      read(l, "frame_len_s", cfg.cm.features.frame_len_s);
      read(l, "frame_hop_s", cfg.cm.features.frame_hop_s);
      read(l, "fft_size", cfg.cm.features.fft_size);
      read(l, "num_filters", cfg.cm.features.num_filters);
      read(l, "num_ceps", cfg.cm.features.num_ceps);
      read(l, "deltas", cfg.cm.features.with_deltas);
      read(l, "log_floor_rel", cfg.cm.features.log_floor_rel);
    }
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_pipeline_config(buf.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::string example_pipeline_config() {
  return R"({
  "master_seed": 2024,
  "output_dir": "cmaudit-out",
  "jobs": 1,
  "corpus": {
    "synthetic": {
      "train_bona": 200, "train_spoof": 200,
      "eval_bona": 200, "eval_spoof": 200,
      "speech_min_s": 0.8, "speech_max_s": 1.2,
      "silence_min_s": 0.2, "silence_max_s": 0.5,
      "level_dbfs": -26.0, "level_spread_db": 3.0,
      "noise_floor_dbfs": -80.0,
      "bona":  {"tilt_db_per_octave": -6.0, "tilt_jitter_db": 2.0, "random_phase": false},
      "spoof": {"tilt_db_per_octave": -3.0, "tilt_jitter_db": 2.0, "random_phase": true}
    }
  },
  "interventions": [
    {"kind": "codec", "dist": {"choice": [16, 24, 32, 40, 48, 56, 64, 80, 96, 112, 128, 160, 192, 224, 256]}},
    {"kind": "white_noise", "dist": {"uniform": [0, 30]}},
    {"kind": "loudness_norm", "dist": {"uniform": [-31, -13]}},
    {"kind": "nonspeech_zero", "dist": {"dirac": 1.0}, "vad_margin_db": 40},
    {"kind": "mu_law", "dist": {"dirac": 255}}
  ],
  "configurations": ["O", "A", "B", "C", "D"],
  "cm": {
    "mode": "gmm",
    "components": 64,
    "max_iterations": 50,
    "tolerance": 1e-4,
    "variance_floor_rel": 1e-3,
    "lfcc": {"frame_len_s": 0.02, "frame_hop_s": 0.01, "fft_size": 512,
             "num_filters": 20, "num_ceps": 20, "deltas": true, "log_floor_rel": 1e-10}
  }
}
)";
}

}  // namespace cmaudit
