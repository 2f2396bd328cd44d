#include "cmaudit/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>

#include "cmaudit/error.hpp"
#include "cmaudit/seed.hpp"
#include "fft.hpp"

namespace cmaudit {
namespace {

// Absolute floor so that an all-zero signal still has finite log energies.
constexpr double kAbsoluteFloor = 1e-30;

std::size_t samples_of(double seconds, int sample_rate_hz) {
  return static_cast<std::size_t>(std::lround(seconds * sample_rate_hz));
}

Eigen::MatrixXd dct_matrix(int num_filters, int num_ceps) {
  // Orthonormal DCT-II, num_ceps x num_filters.
  Eigen::MatrixXd m(num_ceps, num_filters);
  for (int k = 0; k < num_ceps; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / num_filters);
    for (int n = 0; n < num_filters; ++n)
      m(k, n) = scale * std::cos(std::numbers::pi * k * (n + 0.5) / num_filters);
  }
  return m;
}

Eigen::MatrixXd regression_delta(const Eigen::MatrixXd& c) {
  const Eigen::Index t = c.rows();
  Eigen::MatrixXd d(t, c.cols());
  for (Eigen::Index i = 0; i < t; ++i) {
    const Eigen::Index prev = std::max<Eigen::Index>(i - 1, 0);
    const Eigen::Index next = std::min<Eigen::Index>(i + 1, t - 1);
    d.row(i) = 0.5 * (c.row(next) - c.row(prev));
  }
  return d;
}

void check(const LfccConfig& cfg) {
  if (cfg.frame_len_s <= 0 || cfg.frame_hop_s <= 0 || cfg.num_filters < 1 || cfg.num_ceps < 1 ||
      cfg.num_ceps > cfg.num_filters || cfg.fft_size < 2 || !(cfg.log_floor_rel > 0))
    throw Error("invalid LFCC configuration");
}

}  // namespace

std::uint64_t LfccConfig::fingerprint() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "lfcc:%.17g:%.17g:%d:%d:%d:%d:%.17g", frame_len_s, frame_hop_s,
                fft_size, num_filters, num_ceps, with_deltas ? 1 : 0, log_floor_rel);
  return derive_seed({0, buf, "", ""});
}

std::size_t num_lfcc_frames(std::size_t num_samples, int sample_rate_hz, const LfccConfig& cfg) {
  const std::size_t len = samples_of(cfg.frame_len_s, sample_rate_hz);
  const std::size_t hop = samples_of(cfg.frame_hop_s, sample_rate_hz);
  if (num_samples < len || len == 0 || hop == 0) return 0;
  return 1 + (num_samples - len) / hop;
}

Eigen::MatrixXd linear_filterbank(const LfccConfig& cfg, int sample_rate_hz) {
  const int bins = cfg.fft_size / 2 + 1;
  const double nyquist = 0.5 * sample_rate_hz;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.num_filters, bins);
  const double spacing = nyquist / (cfg.num_filters + 1);
  for (int m = 0; m < cfg.num_filters; ++m) {
    const double lo = m * spacing, center = (m + 1) * spacing, hi = (m + 2) * spacing;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / cfg.fft_size;
      if (f > lo && f < hi) fb(m, k) = f <= center ? (f - lo) / (center - lo) : (hi - f) / (hi - center);
    }
  }
  return fb;
}

Eigen::MatrixXd log_filterbank_energies(const Waveform& w, const LfccConfig& cfg) {
  check(cfg);
  const std::size_t len = samples_of(cfg.frame_len_s, w.sample_rate_hz);
  const std::size_t hop = samples_of(cfg.frame_hop_s, w.sample_rate_hz);
  if (len > static_cast<std::size_t>(cfg.fft_size))
    throw Error("LFCC frame of " + std::to_string(len) + " samples exceeds the FFT size");
  const std::size_t frames = num_lfcc_frames(w.size(), w.sample_rate_hz, cfg);
  if (frames == 0) throw Error("LFCC: '" + w.id + "' is shorter than one analysis frame");

  std::vector<double> window(len);
  for (std::size_t i = 0; i < len; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (len - 1));

  const detail::RealFft fft(cfg.fft_size);
  const Eigen::MatrixXd fb = linear_filterbank(cfg, w.sample_rate_hz);
  Eigen::MatrixXd power(static_cast<Eigen::Index>(frames), fft.bins());
  std::vector<double> buf(static_cast<std::size_t>(cfg.fft_size), 0.0);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.bins()));
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < len; ++i) buf[i] = w.samples[t * hop + i] * window[i];
    fft.forward(buf, spec);
    for (int k = 0; k < fft.bins(); ++k) power(static_cast<Eigen::Index>(t), k) = std::norm(spec[k]);
  }
  Eigen::MatrixXd energies = power * fb.transpose();
  const double floor = std::max(kAbsoluteFloor, cfg.log_floor_rel * energies.maxCoeff());
  return energies.unaryExpr([floor](double e) { return std::log(std::max(e, floor)); });
}

FeatureMatrix lfcc(const Waveform& w, const LfccConfig& cfg) {
  const Eigen::MatrixXd logfb = log_filterbank_energies(w, cfg);
  const Eigen::MatrixXd ceps = logfb * dct_matrix(cfg.num_filters, cfg.num_ceps).transpose();
  FeatureMatrix out;
  out.frame_len_s = cfg.frame_len_s;
  out.frame_hop_s = cfg.frame_hop_s;
  out.fingerprint = cfg.fingerprint();
  if (!cfg.with_deltas) {
    out.frames = ceps;
    return out;
  }
  const Eigen::MatrixXd d1 = regression_delta(ceps);
  const Eigen::MatrixXd d2 = regression_delta(d1);
  out.frames.resize(ceps.rows(), 3 * ceps.cols());
  out.frames << ceps, d1, d2;
  return out;
}

// ---- cache -------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'C', 'M', 'A', 'F', 'E', 'A', 'T', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  std::memcpy(&v, b, sizeof(T));
  return true;
}
}  // namespace

void save_features(const FeatureMatrix& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write feature cache " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, f.fingerprint);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(f.frames.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(f.frames.cols()));
  put<double>(out, f.frame_hop_s);
  put<double>(out, f.frame_len_s);
  for (Eigen::Index r = 0; r < f.frames.rows(); ++r)
    for (Eigen::Index c = 0; c < f.frames.cols(); ++c) put<double>(out, f.frames(r, c));
  if (!out) throw Error("write failed for " + path.string());
}

std::optional<FeatureMatrix> load_features(const std::filesystem::path& path,
                                           std::uint64_t expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    return std::nullopt;
  FeatureMatrix f;
  std::uint64_t rows = 0, cols = 0;
  if (!get(in, f.fingerprint) || f.fingerprint != expected_fingerprint) return std::nullopt;
  if (!get(in, rows) || !get(in, cols) || !get(in, f.frame_hop_s) || !get(in, f.frame_len_s))
    return std::nullopt;
  f.frames.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < f.frames.rows(); ++r)
    for (Eigen::Index c = 0; c < f.frames.cols(); ++c)
      if (!get(in, f.frames(r, c))) return std::nullopt;
  return f;
}

}  // namespace cmaudit
