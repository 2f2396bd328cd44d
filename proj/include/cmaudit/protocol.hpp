#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmaudit/interventions.hpp"

namespace cmaudit {

enum class ClassLabel : int { spoof = 0, bona = 1 };
enum class Subset { train, dev, eval };

std::string_view to_string(Subset subset);

struct TrialRecord {
  std::string utt_id;
  std::optional<std::string> speaker_id;
  std::optional<std::string> attack_id;
  ClassLabel y_cls = ClassLabel::spoof;
  Subset y_trn = Subset::train;

  bool is_bona() const { return y_cls == ClassLabel::bona; }
  // Dev is treated like train.
  bool train_side() const { return y_trn != Subset::eval; }
};

// The four (class x subset) cells, in indicator order.
enum class Cell { train_spoof = 0, train_bona = 1, test_spoof = 2, test_bona = 3 };
inline constexpr std::array<Cell, 4> kCells = {Cell::train_spoof, Cell::train_bona,
                                               Cell::test_spoof, Cell::test_bona};

std::string_view to_string(Cell cell);
Cell cell_of(const TrialRecord& r);

struct InterventionConfig {
  std::string name;
  // Intervention probability per cell, indexed by Cell.
  std::array<double, 4> p{};

  double prob(Cell c) const { return p[static_cast<int>(c)]; }
  // "0 1 0 1" style; values printed with %g.
  std::string indicator() const;
  bool is_named() const;

  // O, A, B, C, D.
  static InterventionConfig named(std::string_view name);
  static const std::vector<InterventionConfig>& table();
  // Parses "0 1 0 1" (or "0101"). Patterns that match a named row get its name;
  // others get custom_name.
  static InterventionConfig parse_indicator(std::string_view text,
                                            std::string custom_name = "custom");
  // Resolves a name (O..D) or an indicator string.
  static InterventionConfig resolve(std::string_view text);
  void validate() const;
};

// Parses an ASVspoof-style CM protocol: "speaker utt - attack key" per line.
// The subset is taken from `subset`, or inferred from a train/dev/eval token in
// the file name.
std::vector<TrialRecord> parse_protocol(const std::filesystem::path& path,
                                        std::optional<Subset> subset = std::nullopt);
std::vector<TrialRecord> parse_protocol_text(std::string_view text, Subset subset,
                                             const std::string& source = "<memory>");
void write_protocol(const std::vector<TrialRecord>& records,
                    const std::filesystem::path& path);

struct PlannedTrial {
  std::string utt_id;
  Cell cell = Cell::train_spoof;
  std::optional<AppliedIntervention> intervention;
};

struct PerturbationPlan {
  std::string configuration;
  std::string intervention;
  // Sorted by utt_id.
  std::vector<PlannedTrial> trials;

  std::size_t planned_count(Cell c) const;
  std::size_t size_of(Cell c) const;
  const PlannedTrial* find(std::string_view utt_id) const;
};

// Per cell: shuffle the sorted utterance ids with a seed derived from the cell
// and pick the first floor(p * N); sample z for each picked file from the same
// stream apply() uses.
PerturbationPlan plan(const std::vector<TrialRecord>& records,
                      const InterventionConfig& config, const InterventionSpec& spec,
                      std::uint64_t master_seed);

// Plan manifest: utt_id,cell,intervened,kind,z,config
void write_plan_manifest(const PerturbationPlan& plan, const std::filesystem::path& path);

struct Deltas {
  double bona = 0.0;
  double spf = 0.0;
};

// |p_test(class of r) - p_train_bona| and |p_test(class of r) - p_train_spf|.
// Throws Error for records outside the eval subset.
Deltas deltas(const TrialRecord& record, const InterventionConfig& config);
Deltas deltas(ClassLabel y_cls, const InterventionConfig& config);

}  // namespace cmaudit
