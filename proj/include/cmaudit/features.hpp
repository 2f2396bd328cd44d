#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "cmaudit/audio.hpp"

namespace cmaudit {

struct LfccConfig {
  double frame_len_s = 0.020;
  double frame_hop_s = 0.010;
  int fft_size = 512;
  int num_filters = 20;
  int num_ceps = 20;
  bool with_deltas = true;
  // Filterbank energies are floored at this fraction of the utterance maximum.
  double log_floor_rel = 1e-10;

  int dim() const { return with_deltas ? 3 * num_ceps : num_ceps; }
  std::uint64_t fingerprint() const;
};

struct FeatureMatrix {
  Eigen::MatrixXd frames;  // T x D
  double frame_len_s = 0.0;
  double frame_hop_s = 0.0;
  std::uint64_t fingerprint = 0;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

// Number of full analysis frames; 0 if the input is shorter than one frame.
std::size_t num_lfcc_frames(std::size_t num_samples, int sample_rate_hz,
                            const LfccConfig& cfg = {});

// Triangular filters spaced linearly from 0 Hz to Nyquist, num_filters x
// (fft_size / 2 + 1).
Eigen::MatrixXd linear_filterbank(const LfccConfig& cfg, int sample_rate_hz);

// Log filterbank energies (T x num_filters) before the DCT.
Eigen::MatrixXd log_filterbank_energies(const Waveform& w, const LfccConfig& cfg = {});

// Hamming window, power spectrum, linear filterbank, floored natural log,
// orthonormal DCT-II, then first and second differences (c[t+1] - c[t-1]) / 2
// with edge replication.
FeatureMatrix lfcc(const Waveform& w, const LfccConfig& cfg = {});

// Feature cache: magic "CMAFEAT1", fingerprint (u64), rows and cols (u64),
// hop/len (f64), row-major f64 data; all little-endian.
void save_features(const FeatureMatrix& f, const std::filesystem::path& path);
// nullopt if the file is missing or its fingerprint differs.
std::optional<FeatureMatrix> load_features(const std::filesystem::path& path,
                                           std::uint64_t expected_fingerprint);

}  // namespace cmaudit
