#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cmaudit/audio.hpp"
#include "cmaudit/error.hpp"
#include "cmaudit/eval.hpp"
#include "cmaudit/features.hpp"
#include "cmaudit/gmm.hpp"
#include "cmaudit/interventions.hpp"
#include "cmaudit/pipeline.hpp"
#include "cmaudit/protocol.hpp"
#include "cmaudit/regression.hpp"
#include "cmaudit/seed.hpp"
#include "cmaudit/synth.hpp"

namespace py = pybind11;
using namespace cmaudit;

namespace {

using Samples = py::array_t<double, py::array::c_style | py::array::forcecast>;

Waveform to_waveform(const Samples& samples, int sample_rate_hz) {
  if (samples.ndim() != 1) throw py::value_error("expected a 1-D sample array");
  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples.assign(samples.data(), samples.data() + samples.size());
  return w;
}

py::array_t<double> to_array(const Waveform& w) {
  py::array_t<double> out(static_cast<py::ssize_t>(w.size()));
  std::copy(w.samples.begin(), w.samples.end(), out.mutable_data());
  return out;
}

std::vector<LabeledScore> labeled_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw py::value_error("scores and labels differ in length");
  std::vector<LabeledScore> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw py::value_error("labels must be 0 (spoof) or 1 (bona fide)");
    out.push_back({std::to_string(i), scores[i], static_cast<ClassLabel>(labels[i])});
  }
  return out;
}

py::dict coef(const Coefficient& c) {
  py::dict d;
  d["estimate"] = c.estimate;
  d["std_error"] = c.std_error;
  return d;
}

py::dict fit_dict(const RegressionFit& f) {
  py::dict d;
  d["mu"] = coef(f.mu);
  d["d"] = coef(f.d);
  d["beta_bona"] = coef(f.beta_bona);
  d["beta_spf"] = coef(f.beta_spf);
  d["sigma_eps"] = f.sigma_eps;
  d["rss"] = f.rss;
  d["n"] = f.n;
  d["constrained"] = f.constrained;
  return d;
}

std::vector<RegressionRow> rows_from(const std::vector<double>& s, const std::vector<int>& y,
                                     const std::vector<double>& delta_bona, const std::vector<double>& delta_spf) {
  if (y.size() != s.size() || delta_bona.size() != s.size() || delta_spf.size() != s.size())
    throw py::value_error("regression columns differ in length");
  std::vector<RegressionRow> rows(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    rows[i] = {s[i], static_cast<ClassLabel>(y[i]), delta_bona[i], delta_spf[i], ""};
  return rows;
}

PipelineConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed,
                           std::optional<std::filesystem::path> out) {
  auto cfg = load_pipeline_config(path);
  if (seed) cfg.master_seed = seed;
  if (out) cfg.output_dir = *out;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Shortcut-learning audit toolkit for spoofing countermeasures";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("derive_seed", [](std::uint64_t master, const std::string& utt, const std::string& intervention,
                          const std::string& configuration) {
    return derive_seed({master, utt, intervention, configuration});
  }, py::arg("master_seed"), py::arg("utt_id"), py::arg("intervention") = "", py::arg("configuration") = "");

  m.def("read_pcm", [](const std::filesystem::path& p) {
    const Waveform w = read_pcm(p);
    return py::make_tuple(to_array(w), w.sample_rate_hz);
  }, py::arg("path"), "Read a 16-bit mono WAVE file; returns (samples, sample_rate_hz).");
  m.def("write_pcm", [](const Samples& x, int fs, const std::filesystem::path& p) { write_pcm(to_waveform(x, fs), p); },
        py::arg("samples"), py::arg("sample_rate_hz"), py::arg("path"));

  m.def("mu_law", [](const Samples& x, int mu) { return to_array(mu_law(to_waveform(x, 16000), mu)); },
        py::arg("samples"), py::arg("mu") = 255);
  m.def("add_white_noise", [](const Samples& x, double snr_db, std::uint64_t seed) {
    return to_array(add_white_noise(to_waveform(x, 16000), snr_db, seed));
  }, py::arg("samples"), py::arg("snr_db"), py::arg("seed"));
  m.def("measure_loudness", [](const Samples& x, int fs) { return measure_loudness(to_waveform(x, fs)); },
        py::arg("samples"), py::arg("sample_rate_hz") = 16000);
  m.def("loudness_normalize", [](const Samples& x, double target, int fs) {
    return to_array(loudness_normalize(to_waveform(x, fs), target));
  }, py::arg("samples"), py::arg("target_lufs"), py::arg("sample_rate_hz") = 16000);
  m.def("detect_nonspeech", [](const Samples& x, int fs, double margin_db) {
    return detect_nonspeech(to_waveform(x, fs), margin_db).speech;
  }, py::arg("samples"), py::arg("sample_rate_hz") = 16000, py::arg("margin_db") = 40.0,
     "Per-25 ms frame speech labels (True = speech).");
  m.def("zero_nonspeech", [](const Samples& x, double proportion, std::uint64_t seed, int fs) {
    return to_array(zero_nonspeech(to_waveform(x, fs), proportion, seed));
  }, py::arg("samples"), py::arg("proportion"), py::arg("seed"), py::arg("sample_rate_hz") = 16000);
  m.def("codec_degrade", [](const Samples& x, int kbps, int fs) {
    return to_array(codec_degrade(to_waveform(x, fs), kbps));
  }, py::arg("samples"), py::arg("bitrate_kbps"), py::arg("sample_rate_hz") = 16000);
  m.attr("codec_bitrates") = std::vector<int>(kCodecBitrates.begin(), kCodecBitrates.end());

  m.def("lfcc", [](const Samples& x, int fs, bool with_deltas) {
    LfccConfig cfg;
    cfg.with_deltas = with_deltas;
    return lfcc(to_waveform(x, fs), cfg).frames;
  }, py::arg("samples"), py::arg("sample_rate_hz") = 16000, py::arg("with_deltas") = true,
     "LFCC features, frames x 60 (or 20 without deltas).");

  py::class_<GmmModel>(m, "GmmModel")
      .def_readonly("weights", &GmmModel::weights)
      .def_readonly("means", &GmmModel::means)
      .def_readonly("variances", &GmmModel::variances)
      .def("log_likelihood", &GmmModel::log_likelihood, py::arg("frames"));
  m.def("train_gmm", [](const Eigen::MatrixXd& frames, int m_, int max_iter, double tol, std::uint64_t seed) {
    GmmTrainOptions o;
    o.num_components = m_;
    o.max_iterations = max_iter;
    o.tolerance = tol;
    o.seed = seed;
    GmmTrainResult r;
    {
      py::gil_scoped_release release;
      r = train_gmm(frames, o);
    }
    return py::make_tuple(r.model, r.log_likelihood);
  }, py::arg("frames"), py::arg("num_components") = 64, py::arg("max_iterations") = 50,
     py::arg("tolerance") = 1e-4, py::arg("seed") = 0,
     "Returns (model, per-iteration average log-likelihood).");
  m.def("llr_score", &llr_score, py::arg("frames"), py::arg("bona"), py::arg("spoof"));

  m.def("eer", [](const std::vector<double>& s, const std::vector<int>& y) { return eer(labeled_scores(s, y)); },
        py::arg("scores"), py::arg("labels"));

  m.def("deltas", [](int y, const std::string& config) {
    const Deltas d = deltas(static_cast<ClassLabel>(y), InterventionConfig::resolve(config));
    return py::make_tuple(d.bona, d.spf);
  }, py::arg("label"), py::arg("configuration"));
  m.def("fit_full", [](const std::vector<double>& s, const std::vector<int>& y, const std::vector<double>& db,
                       const std::vector<double>& ds) { return fit_dict(fit_full(rows_from(s, y, db, ds))); },
        py::arg("scores"), py::arg("labels"), py::arg("delta_bona"), py::arg("delta_spf"));
  m.def("fit_constrained", [](const std::vector<double>& s, const std::vector<int>& y, const std::vector<double>& db,
                              const std::vector<double>& ds) { return fit_dict(fit_constrained(rows_from(s, y, db, ds))); },
        py::arg("scores"), py::arg("labels"), py::arg("delta_bona"), py::arg("delta_spf"));
  m.def("gen_scores", [](double mu, double d, double beta_bona, double beta_spf, double sigma, std::size_t n,
                         std::uint64_t seed) {
    SynthScoreSpec spec;
    spec.planted = {mu, d, beta_bona, beta_spf, sigma};
    spec.trials_per_cell = n;
    spec.seed = seed;
    py::dict out;
    std::vector<double> s, db, ds;
    std::vector<int> y;
    std::vector<std::string> cfg;
    for (const auto& r : gen_scores(spec)) {
      s.push_back(r.s);
      y.push_back(static_cast<int>(r.y_cls));
      db.push_back(r.delta_bona);
      ds.push_back(r.delta_spf);
      cfg.push_back(r.configuration);
    }
    out["scores"] = s;
    out["labels"] = y;
    out["delta_bona"] = db;
    out["delta_spf"] = ds;
    out["configuration"] = cfg;
    return out;
  }, py::arg("mu"), py::arg("d"), py::arg("beta_bona"), py::arg("beta_spf"), py::arg("sigma_eps"),
     py::arg("trials_per_cell") = 1000, py::arg("seed") = 0,
     "Scores drawn per configuration O..D and class from the planted linear model.");

  m.def("example_config", &example_pipeline_config);
  auto stage = [&m](const char* name, auto fn, const char* doc) {
    m.def(name, [fn](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
                     std::optional<std::filesystem::path> out) {
      const auto cfg = load_config(config, seed, out);
      py::gil_scoped_release release;
      fn(cfg);
    }, py::arg("config"), py::arg("seed") = py::none(), py::arg("output_dir") = py::none(), doc);
  };
  stage("synth_data", [](const PipelineConfig& c) { run_synth_data(c); }, "Generate the synthetic corpus.");
  stage("perturb", [](const PipelineConfig& c) { run_perturb(c); }, "Materialize the perturbed datasets.");
  stage("train", [](const PipelineConfig& c) { run_train(c); }, "Train the GMM countermeasures.");
  stage("score", [](const PipelineConfig& c) { run_score(c); }, "Score the eval subset.");
  stage("report", [](const PipelineConfig& c) { run_report(c); }, "Write the EER, regression and model reports.");
  stage("run", [](const PipelineConfig& c) { run_all(c); }, "Run every stage.");
  m.def("eer_table", [](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
                   std::optional<std::filesystem::path> out) {
    std::vector<py::tuple> rows;
    for (const auto& r : run_eval(load_config(config, seed, out)))
      rows.push_back(py::make_tuple(r.intervention, r.configuration, r.eer));
    return rows;
  }, py::arg("config"), py::arg("seed") = py::none(), py::arg("output_dir") = py::none(),
     "EER table as (intervention, configuration, eer) tuples.");
}
