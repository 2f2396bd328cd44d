#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cmaudit/protocol.hpp"

namespace cmaudit {

struct LabeledScore {
  std::string utt_id;
  double score = 0.0;
  ClassLabel y_cls = ClassLabel::spoof;
};

struct OperatingPoint {
  double threshold = 0.0;
  double miss = 0.0;         // bona fide with score < threshold
  double false_alarm = 0.0;  // spoof with score >= threshold
};

// Operating points at every distinct score value plus +inf, in increasing
// threshold order.
std::vector<OperatingPoint> operating_points(const std::vector<LabeledScore>& scores);

// Equal error rate. Walks the operating points until miss - fa becomes
// non-negative; an exact zero returns that point, otherwise the rate is
// linearly interpolated between the two adjacent points where the sign flips.
// Throws Error unless both classes are present.
double eer(const std::vector<LabeledScore>& scores);

// A trial tagged with its analysis group.
struct ScoredTrial {
  std::string utt_id;
  double score = 0.0;
  ClassLabel y_cls = ClassLabel::spoof;
  std::string configuration;
  std::string intervention;
};

using GroupKey = std::pair<std::string, std::string>;  // (intervention, configuration)

// z = (s - mean) / std within each (intervention, configuration) group, using
// the population standard deviation over both classes. Order is preserved.
// Throws Error for groups with fewer than two trials or zero spread.
std::vector<ScoredTrial> znorm(const std::vector<ScoredTrial>& trials);

std::vector<LabeledScore> labeled(const std::vector<ScoredTrial>& trials);

// Score file: "utt_id score" per line, scores printed with 17 significant digits.
void write_score_file(const std::vector<ScoredTrial>& trials, const std::filesystem::path& path);
// Returns (utt_id, score) pairs in file order. Scores accept the usual decimal
// and scientific notation (strtod grammar); NaN/inf and duplicates are rejected.
std::vector<std::pair<std::string, double>> read_score_file(const std::filesystem::path& path);

// Sidecar CSV with header "utt_id,y_cls,configuration,intervention".
void write_sidecar(const std::vector<ScoredTrial>& trials, const std::filesystem::path& path);

// Joins a score file with its sidecar.
std::vector<ScoredTrial> read_scored_trials(const std::filesystem::path& score_path,
                                            const std::filesystem::path& sidecar_path);

}  // namespace cmaudit
