#include "cmaudit/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cmaudit/error.hpp"

namespace cmaudit {

std::string_view to_string(Subset subset) {
  switch (subset) {
    case Subset::train: return "train";
    case Subset::dev: return "dev";
    case Subset::eval: return "eval";
  }
  return "unknown";
}

std::string_view to_string(Cell cell) {
  switch (cell) {
    case Cell::train_spoof: return "train_spoof";
    case Cell::train_bona: return "train_bona";
    case Cell::test_spoof: return "test_spoof";
    case Cell::test_bona: return "test_bona";
  }
  return "unknown";
}

Cell cell_of(const TrialRecord& r) {
  if (r.train_side()) return r.is_bona() ? Cell::train_bona : Cell::train_spoof;
  return r.is_bona() ? Cell::test_bona : Cell::test_spoof;
}

// ---- configurations ------------------------------------------------------

const std::vector<InterventionConfig>& InterventionConfig::table() {
  static const std::vector<InterventionConfig> rows = {
      {"O", {0, 0, 0, 0}}, {"A", {0, 1, 0, 1}}, {"B", {1, 0, 1, 0}},
      {"C", {0, 1, 1, 0}}, {"D", {1, 0, 0, 1}},
  };
  return rows;
}

InterventionConfig InterventionConfig::named(std::string_view name) {
  for (const auto& c : table())
    if (c.name == name) return c;
  throw Error("unknown configuration '" + std::string(name) + "' (expected O, A, B, C or D)");
}

bool InterventionConfig::is_named() const {
  for (const auto& c : table())
    if (c.name == name) return c.p == p;
  return false;
}

std::string InterventionConfig::indicator() const {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%g", p[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

InterventionConfig InterventionConfig::parse_indicator(std::string_view text, std::string custom_name) {
  std::string s(text);
  std::vector<double> values;
  if (s.find_first_of(" \t,") == std::string::npos && s.size() == 4 &&
      std::all_of(s.begin(), s.end(), [](char c) { return c == '0' || c == '1'; })) {
    for (char c : s) values.push_back(c - '0');
  } else {
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ParseError("bad indicator value '" + tok + "'");
      values.push_back(v);
    }
  }
  if (values.size() != 4)
    throw ParseError("indicator '" + std::string(text) + "' must have four entries");
  InterventionConfig cfg{std::move(custom_name), {values[0], values[1], values[2], values[3]}};
  for (const auto& row : table())
    if (row.p == cfg.p) cfg.name = row.name;
  cfg.validate();
  return cfg;
}

InterventionConfig InterventionConfig::resolve(std::string_view text) {
  for (const auto& c : table())
    if (c.name == text) return c;
  return parse_indicator(text, std::string(text));
}

void InterventionConfig::validate() const {
  if (name.empty()) throw Error("configuration needs a name");
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0))
      throw Error("configuration '" + name + "': probabilities must lie in [0, 1]");
  for (const auto& row : table())
    if (row.name == name && row.p != p)
      throw Error("configuration '" + name + "' must be (" + row.indicator() + ")");
}

// ---- protocol files --------------------------------------------------------

std::vector<TrialRecord> parse_protocol_text(std::string_view text, Subset subset,
                                             const std::string& source) {
  std::vector<TrialRecord> records;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (tok.size() != 5)
      throw ParseError(where + "expected 5 fields (speaker utt - attack key), got " +
                       std::to_string(tok.size()));
    TrialRecord r;
    if (tok[0] != "-") r.speaker_id = tok[0];
    r.utt_id = tok[1];
    if (tok[3] != "-") r.attack_id = tok[3];
    if (tok[4] == "bonafide")
      r.y_cls = ClassLabel::bona;
    else if (tok[4] == "spoof")
      r.y_cls = ClassLabel::spoof;
    else
      throw ParseError(where + "key must be 'bonafide' or 'spoof', got '" + tok[4] + "'");
    r.y_trn = subset;
    if (!seen.insert(r.utt_id).second) throw ParseError(where + "duplicate utt_id " + r.utt_id);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<TrialRecord> parse_protocol(const std::filesystem::path& path, std::optional<Subset> subset) {
  if (!subset) {
    // ASVspoof names look like ASVspoof2019.LA.cm.train.trn.txt.
    const std::string name = path.filename().string();
    std::vector<Subset> hits;
    std::string token;
    auto flush = [&]() {
      if (token == "train") hits.push_back(Subset::train);
      if (token == "dev") hits.push_back(Subset::dev);
      if (token == "eval") hits.push_back(Subset::eval);
      token.clear();
    };
    for (char c : name) {
      if (std::isalnum(static_cast<unsigned char>(c)))
        token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      else
        flush();
    }
    flush();
    if (hits.size() != 1)
      throw ParseError(path.string() + ": cannot infer subset (train/dev/eval) from file name");
    subset = hits.front();
  }
  std::ifstream in(path);
  if (!in) throw Error("cannot open protocol " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_protocol_text(buf.str(), *subset, path.string());
}

void write_protocol(const std::vector<TrialRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write protocol " + path.string());
  for (const auto& r : records) {
    out << r.speaker_id.value_or("-") << ' ' << r.utt_id << " - " << r.attack_id.value_or("-")
        << ' ' << (r.is_bona() ? "bonafide" : "spoof") << '\n';
  }
}

// ---- planning ------------------------------------------------------------

std::size_t PerturbationPlan::planned_count(Cell c) const {
  return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(), [c](const PlannedTrial& t) {
    return t.cell == c && t.intervention.has_value();
  }));
}

std::size_t PerturbationPlan::size_of(Cell c) const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [c](const PlannedTrial& t) { return t.cell == c; }));
}

const PlannedTrial* PerturbationPlan::find(std::string_view utt_id) const {
  auto it = std::lower_bound(trials.begin(), trials.end(), utt_id,
                             [](const PlannedTrial& t, std::string_view id) { return t.utt_id < id; });
  return it != trials.end() && it->utt_id == utt_id ? &*it : nullptr;
}

PerturbationPlan plan(const std::vector<TrialRecord>& records, const InterventionConfig& config,
                      const InterventionSpec& spec, std::uint64_t master_seed) {
  if (records.empty()) throw Error("plan: no records");
  config.validate();
  spec.validate();
  PerturbationPlan result{config.name, spec.label(), {}};
  result.trials.reserve(records.size());
  for (const auto& r : records) result.trials.push_back({r.utt_id, cell_of(r), std::nullopt});
  std::sort(result.trials.begin(), result.trials.end(),
            [](const PlannedTrial& a, const PlannedTrial& b) { return a.utt_id < b.utt_id; });
  for (std::size_t i = 1; i < result.trials.size(); ++i)
    if (result.trials[i].utt_id == result.trials[i - 1].utt_id)
      throw Error("plan: duplicate utt_id " + result.trials[i].utt_id);

  for (Cell cell : kCells) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < result.trials.size(); ++i)
      if (result.trials[i].cell == cell) members.push_back(i);
    const std::size_t count = floor_count(config.prob(cell), members.size());
    if (count == 0) continue;
    Rng rng(derive_seed({master_seed, "cell:" + std::string(to_string(cell)), spec.label(), config.name}));
    rng.shuffle(members);
    for (std::size_t k = 0; k < count; ++k) {
      PlannedTrial& t = result.trials[members[k]];
      const double z = sample_control(spec, {master_seed, t.utt_id, spec.label(), config.name});
      t.intervention = AppliedIntervention{t.utt_id, spec.kind, z};
    }
  }
  return result;
}

void write_plan_manifest(const PerturbationPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << "utt_id,cell,intervened,kind,z,config\n";
  char buf[64];
  for (const auto& t : plan.trials) {
    out << t.utt_id << ',' << to_string(t.cell) << ',';
    if (t.intervention) {
      std::snprintf(buf, sizeof buf, "%.17g", t.intervention->z);
      out << "1," << to_string(t.intervention->kind) << ',' << buf;
    } else {
      out << "0,,";
    }
    out << ',' << plan.configuration << '\n';
  }
}

// ---- regression covariates -------------------------------------------------

Deltas deltas(ClassLabel y_cls, const InterventionConfig& config) {
  const double p_test = config.prob(y_cls == ClassLabel::bona ? Cell::test_bona : Cell::test_spoof);
  return {std::abs(p_test - config.prob(Cell::train_bona)),
          std::abs(p_test - config.prob(Cell::train_spoof))};
}

Deltas deltas(const TrialRecord& record, const InterventionConfig& config) {
  if (record.y_trn != Subset::eval)
    throw Error("deltas: '" + record.utt_id + "' is not an evaluation trial");
  return deltas(record.y_cls, config);
}

}  // namespace cmaudit
