#include "cmaudit/reports.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmaudit/error.hpp"

namespace cmaudit {
namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double eer) { return fmt("%.2f", 100.0 * eer); }

std::string est(const Coefficient& c) { return fmt("%.4f", c.estimate) + " (" + fmt("%.4f", c.std_error) + ")"; }

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::remove(path);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void write_eer_csv(const std::vector<EerRow>& rows, const fs::path& path) {
  auto out = open_out(path);
  out << "intervention,configuration,eer\n";
  for (const auto& r : rows) out << r.intervention << ',' << r.configuration << ',' << fmt("%.17g", r.eer) << '\n';
}

std::string eer_markdown(const std::vector<EerRow>& rows) {
  std::ostringstream os;
  os << "| intervention | configuration | EER (%) |\n|---|---|---:|\n";
  for (const auto& r : rows) os << "| " << r.intervention << " | " << r.configuration << " | " << pct(r.eer) << " |\n";
  return os.str();
}

void write_regression_csv(const std::vector<InterventionAnalysis>& analyses, const fs::path& path) {
  auto out = open_out(path);
  out << "intervention,model,n,mu,mu_se,d,d_se,beta_bona,beta_bona_se,beta_spf,beta_spf_se,sigma_eps,rss\n";
  for (const auto& a : analyses) {
    for (const RegressionFit* f : {&a.full, &a.constrained}) {
      out << a.intervention << ',' << (f->constrained ? "constrained" : "full") << ',' << f->n;
      for (const Coefficient* c : {&f->mu, &f->d, &f->beta_bona, &f->beta_spf})
        out << ',' << fmt("%.17g", c->estimate) << ',' << fmt("%.17g", c->std_error);
      out << ',' << fmt("%.17g", f->sigma_eps) << ',' << fmt("%.17g", f->rss) << '\n';
    }
  }
}

std::string regression_markdown(const std::vector<InterventionAnalysis>& analyses) {
  std::ostringstream os;
  os << "Constrained model, estimates with standard errors in parentheses.\n\n"
     << "| intervention | N | mu | d | beta* | sigma_eps |\n|---|---:|---:|---:|---:|---:|\n";
  for (const auto& a : analyses) {
    const auto& f = a.constrained;
    os << "| " << a.intervention << " | " << f.n << " | " << est(f.mu) << " | " << est(f.d) << " | "
       << est(f.beta_spf) << " | " << fmt("%.4f", f.sigma_eps) << " |\n";
  }
  os << "\nFull model.\n\n"
     << "| intervention | N | mu | d | beta_bona | beta_spf | sigma_eps |\n|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& a : analyses) {
    const auto& f = a.full;
    os << "| " << a.intervention << " | " << f.n << " | " << est(f.mu) << " | " << est(f.d) << " | "
       << est(f.beta_bona) << " | " << est(f.beta_spf) << " | " << fmt("%.4f", f.sigma_eps) << " |\n";
  }
  return os.str();
}

std::string config_models_markdown(const std::vector<InterventionAnalysis>& analyses) {
  std::ostringstream os;
  for (const auto& a : analyses) {
    os << "### " << a.intervention << "\n\n"
       << "| configuration | E[s|spoof] | E[s|bona] | difference | EER vs O |\n|---|---|---|---|---|\n";
    for (const auto& m : a.models.models) {
      os << "| " << m.configuration << " | " << m.spoof_expr << " = " << fmt("%.4f", m.mean_spoof) << " | "
         << m.bona_expr << " = " << fmt("%.4f", m.mean_bona) << " | " << m.difference_expr << " = "
         << fmt("%.4f", m.difference()) << " | " << m.predicted_eer_vs_o << " |\n";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace cmaudit
