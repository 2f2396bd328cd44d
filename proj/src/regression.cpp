#include "cmaudit/regression.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>

#include "cmaudit/error.hpp"

namespace cmaudit {
namespace {

constexpr double kRankThreshold = 1e-10;

struct OlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd std_error;
  double rss = 0.0;
  double sigma = 0.0;
};

Eigen::Index rank_of(const Eigen::MatrixXd& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankThreshold);
  return qr.rank();
}

OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
              const std::vector<std::string>& names) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (n <= p)
    throw RankDeficiencyError("regression: " + std::to_string(n) + " rows cannot identify " +
                              std::to_string(p) + " coefficients");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankThreshold);
  const Eigen::Index rank = qr.rank();
  if (rank < p) {
    // A column belongs to a collinear set when dropping it leaves the rank unchanged.
    std::string involved;
    for (Eigen::Index j = 0; j < p; ++j) {
      Eigen::MatrixXd reduced(n, p - 1);
      reduced << x.leftCols(j), x.rightCols(p - j - 1);
      if (rank_of(reduced) == rank) involved += (involved.empty() ? "" : ", ") + names[static_cast<std::size_t>(j)];
    }
    throw RankDeficiencyError("regression: design matrix has rank " + std::to_string(rank) + " < " +
                              std::to_string(p) + "; collinear columns: " + involved);
  }
  OlsResult r;
  r.beta = qr.solve(y);
  // Two steps of iterative refinement on the residual.
  for (int step = 0; step < 2; ++step) r.beta += qr.solve(y - x * r.beta);
  r.rss = (y - x * r.beta).squaredNorm();
  r.sigma = std::sqrt(r.rss / static_cast<double>(n - p));

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd upper = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      upper.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd perm = qr.colsPermutation();
  const Eigen::MatrixXd unscaled = perm * (r_inv * r_inv.transpose()) * perm.transpose();
  r.std_error = r.sigma * unscaled.diagonal().cwiseSqrt();
  return r;
}

double y_value(ClassLabel y) { return y == ClassLabel::bona ? 1.0 : 0.0; }

void check_rows(const std::vector<RegressionRow>& rows) {
  for (const auto& r : rows)
    if (!std::isfinite(r.s) || !std::isfinite(r.delta_bona) || !std::isfinite(r.delta_spf))
      throw Error("regression: non-finite row");
}

std::string term(double coef, const char* name) {
  if (coef == 0.0) return "";
  if (coef == 1.0) return std::string(" + ") + name;
  if (coef == -1.0) return std::string(" - ") + name;
  char buf[64];
  std::snprintf(buf, sizeof buf, " %c %g*%s", coef < 0 ? '-' : '+', std::abs(coef), name);
  return buf;
}

}  // namespace

double RegressionFit::predict(ClassLabel y, double delta_bona, double delta_spf) const {
  return mu.estimate + d.estimate * y_value(y) + beta_bona.estimate * delta_bona +
         beta_spf.estimate * delta_spf;
}

RegressionFit fit_full(const std::vector<RegressionRow>& rows) {
  check_rows(rows);
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, 4);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    x.row(i) << 1.0, y_value(r.y_cls), r.delta_bona, r.delta_spf;
    s(i) = r.s;
  }
  const OlsResult o = ols(x, s, {"intercept", "y_cls", "delta_bona", "delta_spf"});
  RegressionFit fit;
  fit.mu = {o.beta(0), o.std_error(0)};
  fit.d = {o.beta(1), o.std_error(1)};
  fit.beta_bona = {o.beta(2), o.std_error(2)};
  fit.beta_spf = {o.beta(3), o.std_error(3)};
  fit.sigma_eps = o.sigma;
  fit.rss = o.rss;
  fit.n = rows.size();
  fit.num_params = 4;
  return fit;
}

RegressionFit fit_constrained(const std::vector<RegressionRow>& rows) {
  check_rows(rows);
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    x.row(i) << 1.0, y_value(r.y_cls), r.delta_spf - r.delta_bona;
    s(i) = r.s;
  }
  const OlsResult o = ols(x, s, {"intercept", "y_cls", "delta_spf - delta_bona"});
  RegressionFit fit;
  fit.mu = {o.beta(0), o.std_error(0)};
  fit.d = {o.beta(1), o.std_error(1)};
  fit.beta_spf = {o.beta(2), o.std_error(2)};
  fit.beta_bona = {-o.beta(2), o.std_error(2)};
  fit.sigma_eps = o.sigma;
  fit.rss = o.rss;
  fit.n = rows.size();
  fit.num_params = 3;
  fit.constrained = true;
  return fit;
}

const ConfigModel* ConfigModelReport::find(const std::string& configuration) const {
  for (const auto& m : models)
    if (m.configuration == configuration) return &m;
  return nullptr;
}

ConfigModelReport config_report(const RegressionFit& fit, const std::vector<InterventionConfig>& configs) {
  ConfigModelReport report;
  for (const auto& cfg : configs) {
    const Deltas spoof = deltas(ClassLabel::spoof, cfg);
    const Deltas bona = deltas(ClassLabel::bona, cfg);
    ConfigModel m;
    m.configuration = cfg.name;
    m.mean_spoof = fit.predict(ClassLabel::spoof, spoof.bona, spoof.spf);
    m.mean_bona = fit.predict(ClassLabel::bona, bona.bona, bona.spf);
    m.spoof_expr = "mu" + term(spoof.bona, "beta_bona") + term(spoof.spf, "beta_spf");
    m.bona_expr = "mu + d" + term(bona.bona, "beta_bona") + term(bona.spf, "beta_spf");
    // Order the difference terms as "d + beta_spf - beta_bona" for A/B style rows.
    const double cb = bona.bona - spoof.bona;
    const double cs = bona.spf - spoof.spf;
    m.difference_expr = cs >= 0 ? "d" + term(cs, "beta_spf") + term(cb, "beta_bona")
                                 : "d" + term(cb, "beta_bona") + term(cs, "beta_spf");
    const double shift = m.difference() - fit.d.estimate;
    const double tol = 1e-12 * (1.0 + std::abs(fit.d.estimate));
    m.predicted_eer_vs_o = shift > tol ? "lower" : shift < -tol ? "higher" : "unchanged";
    report.models.push_back(std::move(m));
  }
  return report;
}

}  // namespace cmaudit
