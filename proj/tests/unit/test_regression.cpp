#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cmaudit/error.hpp"
#include "cmaudit/regression.hpp"
#include "cmaudit/rng.hpp"
#include "cmaudit/synth.hpp"

using namespace cmaudit;

namespace {

// Solves the normal equations (X'X) b = X'y directly.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

Eigen::MatrixXd design(const std::vector<RegressionRow>& rows, bool constrained) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), constrained ? 3 : 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = r.y_cls == ClassLabel::bona ? 1.0 : 0.0;
    if (constrained)
      x.row(static_cast<Eigen::Index>(i)) << 1.0, y, r.delta_spf - r.delta_bona;
    else
      x.row(static_cast<Eigen::Index>(i)) << 1.0, y, r.delta_bona, r.delta_spf;
  }
  return x;
}

Eigen::VectorXd response(const std::vector<RegressionRow>& rows) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) s(static_cast<Eigen::Index>(i)) = rows[i].s;
  return s;
}

std::vector<RegressionRow> only(const std::vector<RegressionRow>& rows, std::initializer_list<const char*> names) {
  std::vector<RegressionRow> out;
  for (const auto& r : rows)
    for (const char* n : names)
      if (r.configuration == n) out.push_back(r);
  return out;
}

void check_within(const Coefficient& c, double truth, double k) {
  CAPTURE(c.estimate);
  CAPTURE(truth);
  CHECK(std::abs(c.estimate - truth) <= k * c.std_error);
}

}  // namespace

TEST_CASE("noiseless data is fitted exactly") {
  SynthScoreSpec spec;
  spec.planted = {0.0, 1.0, -0.5, 0.5, 0.0};
  spec.trials_per_cell = 50;
  const auto rows = gen_scores(spec);
  const RegressionFit f = fit_full(rows);
  CHECK(std::abs(f.mu.estimate) <= 1e-12);
  CHECK(std::abs(f.d.estimate - 1.0) <= 1e-12);
  CHECK(std::abs(f.beta_bona.estimate + 0.5) <= 1e-12);
  CHECK(std::abs(f.beta_spf.estimate - 0.5) <= 1e-12);
  CHECK(f.sigma_eps <= 1e-12);
  const RegressionFit c = fit_constrained(rows);
  CHECK(std::abs(c.beta_star() - 0.5) <= 1e-12);
  CHECK(c.beta_bona.estimate == -c.beta_spf.estimate);
}

TEST_CASE("planted coefficients are recovered within three standard errors") {
  SynthScoreSpec spec;
  spec.planted = {-0.05, 0.5, -0.5, 0.5, 0.7};
  spec.trials_per_cell = 10000;
  spec.seed = 31;
  const auto rows = gen_scores(spec);
  CHECK(rows.size() == 100000);
  const RegressionFit f = fit_full(rows);
  check_within(f.mu, -0.05, 3);
  check_within(f.d, 0.5, 3);
  check_within(f.beta_bona, -0.5, 3);
  check_within(f.beta_spf, 0.5, 3);
  CHECK(std::abs(f.sigma_eps - 0.7) < 0.01);
  const RegressionFit c = fit_constrained(rows);
  check_within(c.mu, -0.05, 3);
  check_within(c.d, 0.5, 3);
  check_within(c.beta_spf, 0.5, 3);
}

TEST_CASE("OLS equals the normal-equations solution on random instances") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RegressionRow> rows;
    const int n = 12 + static_cast<int>(rng.uniform_index(40));
    for (int i = 0; i < n; ++i) {
      RegressionRow r;
      r.s = rng.normal();
      r.y_cls = i % 2 ? ClassLabel::bona : ClassLabel::spoof;
      r.delta_bona = i % 3 == 0 ? 0.0 : rng.uniform();
      r.delta_spf = rng.uniform();
      rows.push_back(r);
    }
    const Eigen::VectorXd b = normal_equations(design(rows, false), response(rows));
    const RegressionFit f = fit_full(rows);
    CHECK(std::abs(f.mu.estimate - b(0)) <= 1e-10);
    CHECK(std::abs(f.d.estimate - b(1)) <= 1e-10);
    CHECK(std::abs(f.beta_bona.estimate - b(2)) <= 1e-10);
    CHECK(std::abs(f.beta_spf.estimate - b(3)) <= 1e-10);

    // Standard errors: sigma^2 (X'X)^-1 with sigma^2 = RSS / (N - 4).
    const Eigen::MatrixXd x = design(rows, false);
    const Eigen::VectorXd resid = response(rows) - x * b;
    const double s2 = resid.squaredNorm() / (n - 4);
    const Eigen::MatrixXd cov = s2 * (x.transpose() * x).inverse();
    CHECK(std::abs(f.d.std_error - std::sqrt(cov(1, 1))) <= 1e-10);
    CHECK(std::abs(f.beta_spf.std_error - std::sqrt(cov(3, 3))) <= 1e-10);
    CHECK(std::abs(f.sigma_eps - std::sqrt(s2)) <= 1e-10);
  }
}

TEST_CASE("constrained fit is the least-squares projection and never beats the full fit") {
  SynthScoreSpec spec;
  spec.planted = {0.1, 0.8, -0.2, 0.9, 0.3};  // violates antisymmetry
  spec.trials_per_cell = 200;
  spec.seed = 9;
  const auto rows = gen_scores(spec);
  const RegressionFit full = fit_full(rows), c = fit_constrained(rows);
  const Eigen::VectorXd b = normal_equations(design(rows, true), response(rows));
  CHECK(std::abs(c.beta_star() - b(2)) <= 1e-10);
  CHECK(c.rss >= full.rss);
  CHECK(c.sigma_eps > full.sigma_eps);
}

TEST_CASE("rank deficiency is reported with the collinear columns") {
  SynthScoreSpec spec;
  spec.trials_per_cell = 20;
  const auto rows = gen_scores(spec);
  CHECK_THROWS_AS(fit_full(only(rows, {"O"})), RankDeficiencyError);
  CHECK_THROWS_AS(fit_constrained(only(rows, {"O"})), RankDeficiencyError);
  try {
    fit_full(only(rows, {"A"}));
    FAIL("no error");
  } catch (const RankDeficiencyError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("delta_bona") != std::string::npos);
    CHECK(msg.find("delta_spf") != std::string::npos);
  }
  CHECK_NOTHROW(fit_full(only(rows, {"O", "A"})));
  CHECK_NOTHROW(fit_full(only(rows, {"O", "C"})));
}

TEST_CASE("config report algebra") {
  RegressionFit f;
  f.mu.estimate = -0.1;
  f.d.estimate = 0.4;
  f.beta_spf.estimate = 0.59;
  f.beta_bona.estimate = -0.59;
  const auto r = config_report(f);
  CHECK(r.find("O")->difference() == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(r.find("A")->difference() == doctest::Approx(1.58));
  CHECK(r.find("B")->difference() == doctest::Approx(1.58));
  CHECK(r.find("C")->difference() == doctest::Approx(-0.78));
  CHECK(r.find("D")->difference() == doctest::Approx(-0.78));
  CHECK(r.find("A")->mean_spoof == doctest::Approx(-0.69));
  CHECK(r.find("A")->mean_bona == doctest::Approx(0.89));
  CHECK(r.find("A")->predicted_eer_vs_o == "lower");
  CHECK(r.find("C")->predicted_eer_vs_o == "higher");
  CHECK(r.find("O")->predicted_eer_vs_o == "unchanged");
  CHECK(r.find("A")->spoof_expr == "mu + beta_bona");
  CHECK(r.find("A")->bona_expr == "mu + d + beta_spf");

  f.beta_bona.estimate = 0.59;
  const auto flat = config_report(f);
  for (const auto& m : flat.models) CHECK(m.difference() == doctest::Approx(0.4));
}

TEST_CASE("cell means of fitted values equal the per-configuration model") {
  SynthScoreSpec spec;
  spec.planted = {0.2, 0.7, -0.3, 0.6, 1.0};
  spec.trials_per_cell = 300;
  spec.seed = 12;
  const auto rows = gen_scores(spec);
  for (const RegressionFit& f : {fit_full(rows), fit_constrained(rows)}) {
    const auto report = config_report(f);
    for (const auto& m : report.models) {
      for (ClassLabel y : {ClassLabel::spoof, ClassLabel::bona}) {
        double sum = 0;
        int n = 0;
        for (const auto& r : rows)
          if (r.configuration == m.configuration && r.y_cls == y) {
            sum += f.predict(r.y_cls, r.delta_bona, r.delta_spf);
            ++n;
          }
        const double model = y == ClassLabel::bona ? m.mean_bona : m.mean_spoof;
        CHECK(std::abs(sum / n - model) <= 1e-10);
      }
    }
  }
}
