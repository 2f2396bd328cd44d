#include "cmaudit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cmaudit/error.hpp"

namespace cmaudit {

std::vector<OperatingPoint> operating_points(const std::vector<LabeledScore>& scores) {
  std::size_t num_bona = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw Error("EER: non-finite score for '" + s.utt_id + "'");
    num_bona += s.y_cls == ClassLabel::bona;
  }
  const std::size_t num_spoof = scores.size() - num_bona;
  if (num_bona == 0 || num_spoof == 0) throw Error("EER: need scores from both classes");

  std::vector<std::pair<double, bool>> sorted;
  sorted.reserve(scores.size());
  for (const auto& s : scores) sorted.emplace_back(s.score, s.y_cls == ClassLabel::bona);
  std::sort(sorted.begin(), sorted.end());

  // At threshold = sorted[i].first, everything before i is below the threshold.
  std::vector<OperatingPoint> points;
  std::size_t bona_below = 0, spoof_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    points.push_back({sorted[i].first, static_cast<double>(bona_below) / num_bona,
                      static_cast<double>(num_spoof - spoof_below) / num_spoof});
    const double v = sorted[i].first;
    for (; i < sorted.size() && sorted[i].first == v; ++i) (sorted[i].second ? bona_below : spoof_below)++;
  }
  points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  return points;
}

double eer(const std::vector<LabeledScore>& scores) {
  const auto points = operating_points(scores);
  // miss - fa starts at -1 (lowest threshold) and ends at +1 (+inf).
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double diff = points[i].miss - points[i].false_alarm;
    if (diff == 0.0) return points[i].miss;
    if (diff > 0.0) {
      const OperatingPoint& a = points[i - 1];
      const OperatingPoint& b = points[i];
      const double da = a.miss - a.false_alarm;
      const double t = da / (da - diff);
      return a.miss + t * (b.miss - a.miss);
    }
  }
  return 1.0;  // unreachable: the last point has miss - fa = 1
}

std::vector<ScoredTrial> znorm(const std::vector<ScoredTrial>& trials) {
  struct Stats {
    double sum = 0.0;
    std::size_t n = 0;
    double mean = 0.0;
    double sq = 0.0;
  };
  std::map<GroupKey, Stats> groups;
  for (const auto& t : trials) {
    auto& g = groups[{t.intervention, t.configuration}];
    g.sum += t.score;
    ++g.n;
  }
  for (auto& [key, g] : groups) g.mean = g.sum / static_cast<double>(g.n);
  for (const auto& t : trials) {
    auto& g = groups[{t.intervention, t.configuration}];
    g.sq += (t.score - g.mean) * (t.score - g.mean);
  }
  for (const auto& [key, g] : groups) {
    const std::string name = "(" + key.first + ", " + key.second + ")";
    if (g.n < 2) throw Error("znorm: group " + name + " has fewer than two scores");
    if (!(g.sq > 0.0)) throw Error("znorm: group " + name + " has zero variance");
  }
  std::vector<ScoredTrial> out = trials;
  for (auto& t : out) {
    const auto& g = groups[{t.intervention, t.configuration}];
    t.score = (t.score - g.mean) / std::sqrt(g.sq / static_cast<double>(g.n));
  }
  return out;
}

std::vector<LabeledScore> labeled(const std::vector<ScoredTrial>& trials) {
  std::vector<LabeledScore> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back({t.utt_id, t.score, t.y_cls});
  return out;
}

// ---- files -------------------------------------------------------------------

void write_score_file(const std::vector<ScoredTrial>& trials, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write scores " + path.string());
  char buf[40];
  for (const auto& t : trials) {
    std::snprintf(buf, sizeof buf, "%.17g", t.score);
    out << t.utt_id << ' ' << buf << '\n';
  }
}

std::vector<std::pair<std::string, double>> read_score_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open score file " + path.string());
  std::vector<std::pair<std::string, double>> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (tok.size() != 2) throw ParseError(where + "expected 'utt_id score'");
    char* end = nullptr;
    const double v = std::strtod(tok[1].c_str(), &end);
    if (end != tok[1].c_str() + tok[1].size()) throw ParseError(where + "bad score '" + tok[1] + "'");
    if (!std::isfinite(v)) throw ParseError(where + "non-finite score for " + tok[0]);
    if (!seen.insert(tok[0]).second) throw ParseError(where + "duplicate utt_id " + tok[0]);
    out.emplace_back(tok[0], v);
  }
  return out;
}

void write_sidecar(const std::vector<ScoredTrial>& trials, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write sidecar " + path.string());
  out << "utt_id,y_cls,configuration,intervention\n";
  for (const auto& t : trials)
    out << t.utt_id << ',' << static_cast<int>(t.y_cls) << ',' << t.configuration << ','
        << t.intervention << '\n';
}

std::vector<ScoredTrial> read_scored_trials(const std::filesystem::path& score_path,
                                            const std::filesystem::path& sidecar_path) {
  const auto scores = read_score_file(score_path);
  std::ifstream in(sidecar_path);
  if (!in) throw Error("cannot open sidecar " + sidecar_path.string());
  std::map<std::string, ScoredTrial> meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 4 || (cols[1] != "0" && cols[1] != "1"))
      throw ParseError(sidecar_path.string() + ":" + std::to_string(line_no) + ": malformed row");
    ScoredTrial t{cols[0], 0.0, cols[1] == "1" ? ClassLabel::bona : ClassLabel::spoof, cols[2], cols[3]};
    if (!meta.emplace(cols[0], t).second)
      throw ParseError(sidecar_path.string() + ": duplicate utt_id " + cols[0]);
  }
  std::vector<ScoredTrial> out;
  out.reserve(scores.size());
  for (const auto& [id, s] : scores) {
    auto it = meta.find(id);
    if (it == meta.end()) throw Error("sidecar " + sidecar_path.string() + " has no row for " + id);
    ScoredTrial t = it->second;
    t.score = s;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace cmaudit
