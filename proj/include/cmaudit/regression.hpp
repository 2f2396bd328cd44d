#pragma once

#include <string>
#include <vector>

#include "cmaudit/protocol.hpp"

namespace cmaudit {

struct RegressionRow {
  double s = 0.0;
  ClassLabel y_cls = ClassLabel::spoof;
  double delta_bona = 0.0;
  double delta_spf = 0.0;
  std::string configuration;
};

struct Coefficient {
  double estimate = 0.0;
  double std_error = 0.0;
};

struct RegressionFit {
  Coefficient mu;
  Coefficient d;
  Coefficient beta_bona;
  Coefficient beta_spf;
  double sigma_eps = 0.0;  // residual std, denominator N - p
  double rss = 0.0;
  std::size_t n = 0;
  // Number of estimated mean parameters (4 full, 3 constrained).
  int num_params = 4;
  bool constrained = false;

  // beta_spf for the constrained model, where beta_bona = -beta_spf.
  double beta_star() const { return beta_spf.estimate; }
  double predict(ClassLabel y, double delta_bona, double delta_spf) const;
};

// OLS on [1, y, delta_bona, delta_spf] via column-pivoted Householder QR.
// Throws RankDeficiencyError naming the collinear columns.
RegressionFit fit_full(const std::vector<RegressionRow>& rows);

// OLS on [1, y, delta_spf - delta_bona]; beta_spf = beta*, beta_bona = -beta*.
RegressionFit fit_constrained(const std::vector<RegressionRow>& rows);

struct ConfigModel {
  std::string configuration;
  double mean_spoof = 0.0;  // E[s | y = 0]
  double mean_bona = 0.0;   // E[s | y = 1]
  std::string spoof_expr;   // e.g. "mu + beta_bona"
  std::string bona_expr;
  std::string difference_expr;
  double difference() const { return mean_bona - mean_spoof; }
  // "lower", "higher" or "unchanged" relative to configuration O.
  std::string predicted_eer_vs_o;
};

struct ConfigModelReport {
  std::vector<ConfigModel> models;
  const ConfigModel* find(const std::string& configuration) const;
};

// Class-conditional means implied by the fit for each configuration.
ConfigModelReport config_report(const RegressionFit& fit,
                                const std::vector<InterventionConfig>& configs =
                                    InterventionConfig::table());

}  // namespace cmaudit
