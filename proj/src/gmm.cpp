#include "cmaudit/gmm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "cmaudit/error.hpp"
#include "cmaudit/rng.hpp"

namespace cmaudit {
namespace {

// exp() below this underflows into subnormals, which are very slow in the
// products that follow; such terms are flushed to zero instead.
constexpr double kMinExponent = -700.0;

Eigen::ArrayXXd safe_exp(const Eigen::ArrayXXd& a) {
  return (a > kMinExponent).select(a.exp(), 0.0);
}

Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd m = a.rowwise().maxCoeff();
  const Eigen::VectorXd sums = safe_exp((a.colwise() - m).array()).rowwise().sum();
  Eigen::VectorXd out(a.rows());
  for (Eigen::Index t = 0; t < a.rows(); ++t) out(t) = std::isfinite(m(t)) ? m(t) + std::log(sums(t)) : m(t);
  return out;
}

// Weights of components that collected no mass.
constexpr double kMinWeight = 1e-12;

void normalize_weights(Eigen::VectorXd& w) {
  w = w.cwiseMax(kMinWeight);
  w /= w.sum();
}

// k-means++ seeding with standardized squared distances, then one hard
// assignment pass to derive initial parameters.
GmmModel kmeanspp_init(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& global_var,
                       const Eigen::RowVectorXd& floor, int m, Rng& rng) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd xs = x * global_var.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::MatrixXd centers(m, x.cols());
  Eigen::VectorXd nearest = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());

  auto update_nearest = [&](Eigen::Index c) {
    nearest = nearest.cwiseMin((xs.rowwise() - centers.row(c)).rowwise().squaredNorm());
  };

  centers.row(0) = xs.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
  update_nearest(0);
  for (int c = 1; c < m; ++c) {
    const double total = nearest.sum();
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = xs.row(pick);
    update_nearest(c);
  }

  // |x - c|^2 up to the per-row constant |x|^2.
  Eigen::MatrixXd score = -2.0 * (xs * centers.transpose());
  score.rowwise() += centers.rowwise().squaredNorm().transpose();
  std::vector<Eigen::Index> assign(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) score.row(i).minCoeff(&assign[static_cast<std::size_t>(i)]);
  centers = centers * global_var.cwiseSqrt().asDiagonal();

  GmmModel g;
  g.weights = Eigen::VectorXd::Zero(m);
  g.means = Eigen::MatrixXd::Zero(m, x.cols());
  g.variances = Eigen::MatrixXd::Zero(m, x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = assign[static_cast<std::size_t>(i)];
    g.weights(c) += 1.0;
    g.means.row(c) += x.row(i);
  }
  for (int c = 0; c < m; ++c) {
    if (g.weights(c) > 0.0)
      g.means.row(c) /= g.weights(c);
    else
      g.means.row(c) = centers.row(c);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = assign[static_cast<std::size_t>(i)];
    g.variances.row(c) += (x.row(i) - g.means.row(c)).array().square().matrix();
  }
  for (int c = 0; c < m; ++c) {
    if (g.weights(c) >= 2.0)
      g.variances.row(c) = (g.variances.row(c) / g.weights(c)).cwiseMax(floor);
    else
      g.variances.row(c) = global_var;
  }
  g.weights /= static_cast<double>(n);
  normalize_weights(g.weights);
  return g;
}

}  // namespace

Eigen::MatrixXd GmmModel::component_log_densities(const Eigen::MatrixXd& frames) const {
  if (frames.cols() != dim())
    throw Error("GMM: feature dimension " + std::to_string(frames.cols()) +
                " does not match model dimension " + std::to_string(dim()));
  const Eigen::MatrixXd precision = variances.cwiseInverse();
  const Eigen::MatrixXd quad = -0.5 * precision;
  const Eigen::MatrixXd lin = means.cwiseProduct(precision);
  Eigen::RowVectorXd constant(num_components());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (Eigen::Index k = 0; k < num_components(); ++k) {
    constant(k) = std::log(weights(k)) -
                  0.5 * (variances.row(k).array().log().sum() + dim() * log2pi) -
                  0.5 * (means.row(k).array().square() * precision.row(k).array()).sum();
  }
  Eigen::MatrixXd out = frames.array().square().matrix() * quad.transpose();
  out.noalias() += frames * lin.transpose();
  out.rowwise() += constant;
  return out;
}

Eigen::VectorXd GmmModel::log_likelihood(const Eigen::MatrixXd& frames) const {
  return row_logsumexp(component_log_densities(frames));
}

void GmmModel::validate() const {
  const auto m = num_components();
  if (m < 1 || means.rows() != m || variances.rows() != m || variances.cols() != means.cols())
    throw Error("GMM: inconsistent parameter shapes");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw Error("GMM: weights do not sum to one");
  if ((weights.array() <= 0.0).any()) throw Error("GMM: non-positive weight");
  if ((variances.array() <= 0.0).any()) throw Error("GMM: non-positive variance");
  if (!weights.allFinite() || !means.allFinite() || !variances.allFinite())
    throw Error("GMM: non-finite parameters");
}

GmmTrainResult train_gmm(const Eigen::MatrixXd& frames, const GmmTrainOptions& opts) {
  const Eigen::Index n = frames.rows();
  const int m = opts.num_components;
  if (m < 1) throw Error("GMM: need at least one component");
  if (n <= m)
    throw Error("GMM: " + std::to_string(n) + " frames are too few for " + std::to_string(m) +
                " components");
  if (!frames.allFinite()) throw Error("GMM: training frames contain non-finite values");

  const Eigen::RowVectorXd global_mean = frames.colwise().mean();
  const Eigen::MatrixXd x = frames.rowwise() - global_mean;
  const Eigen::RowVectorXd global_var = x.array().square().colwise().mean();
  for (Eigen::Index d = 0; d < x.cols(); ++d)
    if (!(global_var(d) > 0.0))
      throw Error("GMM: feature dimension " + std::to_string(d) + " has zero variance");
  const Eigen::RowVectorXd floor = opts.variance_floor_rel * global_var;
  const Eigen::MatrixXd x2 = x.array().square();

  Rng rng(opts.seed);
  GmmTrainResult result;
  GmmModel g = kmeanspp_init(x, global_var, floor, m, rng);

  for (int iter = 0;; ++iter) {
    Eigen::MatrixXd resp = g.component_log_densities(x);
    const Eigen::VectorXd ll = row_logsumexp(resp);
    const double avg = ll.mean();
    result.log_likelihood.push_back(avg);
    if (iter > 0) {
      const double prev = result.log_likelihood[result.log_likelihood.size() - 2];
      if ((avg - prev) / std::abs(prev) < opts.tolerance) break;
    }
    if (iter == opts.max_iterations) break;

    resp.colwise() -= ll;
    resp = safe_exp(resp.array());
    const Eigen::VectorXd mass = resp.colwise().sum().transpose();
    const Eigen::MatrixXd first = resp.transpose() * x;
    const Eigen::MatrixXd second = resp.transpose() * x2;
    for (int k = 0; k < m; ++k) {
      if (mass(k) <= std::numeric_limits<double>::min()) continue;  // keep previous parameters
      g.means.row(k) = first.row(k) / mass(k);
      g.variances.row(k) =
          (second.row(k) / mass(k) - g.means.row(k).array().square().matrix()).cwiseMax(floor);
    }
    g.weights = mass / static_cast<double>(n);
    normalize_weights(g.weights);
  }

  g.means.rowwise() += global_mean;
  result.model = std::move(g);
  return result;
}

double llr_score(const Eigen::MatrixXd& frames, const GmmModel& bona, const GmmModel& spoof) {
  if (frames.rows() == 0) throw Error("score: no frames");
  if (bona.dim() != spoof.dim()) throw Error("score: bona fide and spoof models differ in dimension");
  return (bona.log_likelihood(frames) - spoof.log_likelihood(frames)).mean();
}

CmScore score(const std::string& utt_id, const FeatureMatrix& features, const GmmModel& bona,
              const GmmModel& spoof) {
  return {utt_id, llr_score(features.frames, bona, spoof)};
}

// ---- serialization -----------------------------------------------------------

namespace {
std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void save_gmm(const GmmModel& model, std::ostream& out) {
  model.validate();
  out << "cmaudit-gmm 1\n" << model.num_components() << ' ' << model.dim() << '\n';
  for (Eigen::Index k = 0; k < model.num_components(); ++k) out << "w " << fmt17(model.weights(k)) << '\n';
  for (const Eigen::MatrixXd* block : {&model.means, &model.variances}) {
    const char tag = block == &model.means ? 'm' : 'v';
    for (Eigen::Index k = 0; k < block->rows(); ++k) {
      out << tag;
      for (Eigen::Index d = 0; d < block->cols(); ++d) out << ' ' << fmt17((*block)(k, d));
      out << '\n';
    }
  }
}

void save_gmm(const GmmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model " + path.string());
  save_gmm(model, out);
}

GmmModel load_gmm(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "cmaudit-gmm" || version != 1)
    throw ParseError("not a cmaudit-gmm version 1 model");
  Eigen::Index m = 0, d = 0;
  if (!(in >> m >> d) || m < 1 || d < 1) throw ParseError("bad GMM dimensions");
  GmmModel g;
  g.weights.resize(m);
  g.means.resize(m, d);
  g.variances.resize(m, d);
  auto expect = [&](char tag) {
    std::string t;
    if (!(in >> t) || t.size() != 1 || t[0] != tag)
      throw ParseError(std::string("GMM model: expected '") + tag + "' record");
  };
  auto read_value = [&](double& v) {
    std::string tok;
    if (!(in >> tok)) throw ParseError("GMM model: truncated");
    std::size_t used = 0;
    v = std::stod(tok, &used);
    if (used != tok.size()) throw ParseError("GMM model: bad number '" + tok + "'");
  };
  for (Eigen::Index k = 0; k < m; ++k) {
    expect('w');
    read_value(g.weights(k));
  }
  for (Eigen::MatrixXd* block : {&g.means, &g.variances}) {
    const char tag = block == &g.means ? 'm' : 'v';
    for (Eigen::Index k = 0; k < m; ++k) {
      expect(tag);
      for (Eigen::Index j = 0; j < d; ++j) read_value((*block)(k, j));
    }
  }
  g.validate();
  return g;
}

GmmModel load_gmm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model " + path.string());
  return load_gmm(in);
}

}  // namespace cmaudit
