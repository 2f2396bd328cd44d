#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cmaudit/features.hpp"

namespace cmaudit {

// Diagonal-covariance Gaussian mixture.
struct GmmModel {
  Eigen::VectorXd weights;    // M
  Eigen::MatrixXd means;      // M x D
  Eigen::MatrixXd variances;  // M x D

  Eigen::Index num_components() const { return weights.size(); }
  Eigen::Index dim() const { return means.cols(); }

  // Per-frame log p(x_t), stabilized with log-sum-exp. frames is T x D.
  Eigen::VectorXd log_likelihood(const Eigen::MatrixXd& frames) const;
  // Per-frame, per-component log(w_k N(x_t | k)), T x M.
  Eigen::MatrixXd component_log_densities(const Eigen::MatrixXd& frames) const;
  // Throws Error if weights/variances break the model invariants.
  void validate() const;
};

struct GmmTrainOptions {
  int num_components = 64;
  int max_iterations = 50;
  // Stop when (ll_new - ll_old) / |ll_old| drops below this.
  double tolerance = 1e-4;
  // Variance floor as a fraction of the global per-dimension variance.
  double variance_floor_rel = 1e-3;
  std::uint64_t seed = 0;
};

struct GmmTrainResult {
  GmmModel model;
  // Average per-frame log-likelihood of the training data, one entry for the
  // k-means++ initialization and one after each EM update.
  std::vector<double> log_likelihood;
};

// k-means++ seeding followed by EM. frames is N x D pooled from one class.
GmmTrainResult train_gmm(const Eigen::MatrixXd& frames, const GmmTrainOptions& opts);

// Mean over frames of log p(o_t | bona) - log p(o_t | spoof).
double llr_score(const Eigen::MatrixXd& frames, const GmmModel& bona, const GmmModel& spoof);

struct CmScore {
  std::string utt_id;
  double score = 0.0;
};
CmScore score(const std::string& utt_id, const FeatureMatrix& features, const GmmModel& bona,
              const GmmModel& spoof);

// Text format, version 1:
//   cmaudit-gmm 1
//   <M> <D>
//   w <weight>                (M lines)
//   m <D values>              (M lines)
//   v <D values>              (M lines)
// Numbers are printed with 17 significant digits so models round-trip exactly.
void save_gmm(const GmmModel& model, std::ostream& out);
void save_gmm(const GmmModel& model, const std::filesystem::path& path);
GmmModel load_gmm(std::istream& in);
GmmModel load_gmm(const std::filesystem::path& path);

}  // namespace cmaudit
