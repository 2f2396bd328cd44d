#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "cmaudit/error.hpp"
#include "cmaudit/protocol.hpp"
#include "test_support.hpp"

using namespace cmaudit;

namespace {

std::vector<TrialRecord> make_records(std::size_t per_cell) {
  std::vector<TrialRecord> out;
  int k = 0;
  for (Subset s : {Subset::train, Subset::eval})
    for (ClassLabel y : {ClassLabel::spoof, ClassLabel::bona})
      for (std::size_t i = 0; i < per_cell; ++i) {
        TrialRecord r;
        r.utt_id = "U" + std::to_string(100000 + k++);
        r.y_cls = y;
        r.y_trn = s;
        out.push_back(r);
      }
  return out;
}

}  // namespace

TEST_CASE("ASVspoof protocol line parses to a train bona fide trial") {
  const auto recs = parse_protocol_text("LA_0079 LA_T_1138215 - - bonafide\n", Subset::train);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].utt_id == "LA_T_1138215");
  CHECK(recs[0].speaker_id == "LA_0079");
  CHECK(recs[0].y_cls == ClassLabel::bona);
  CHECK(recs[0].y_trn == Subset::train);
  CHECK_FALSE(recs[0].attack_id.has_value());

  const auto spoof = parse_protocol_text("LA_0079 LA_E_1 - A07 spoof\n", Subset::eval);
  CHECK(spoof[0].y_cls == ClassLabel::spoof);
  CHECK(spoof[0].attack_id == "A07");
}

TEST_CASE("malformed protocol lines name their line number") {
  try {
    parse_protocol_text("LA_0079 LA_T_1 - - bonafide\nLA_0079 LA_T_2 - bonafide\n", Subset::train, "p.txt");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("p.txt:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_protocol_text("a b - - maybe\n", Subset::train), ParseError);
  CHECK_THROWS_AS(parse_protocol_text("a b - - spoof\nc b - - spoof\n", Subset::train), ParseError);
}

TEST_CASE("subset is inferred from the protocol file name") {
  test::TempDir dir("protocol");
  std::ofstream(dir.path() / "ASVspoof2019.LA.cm.dev.trl.txt") << "S1 LA_D_1 - A01 spoof\n";
  const auto recs = parse_protocol(dir.path() / "ASVspoof2019.LA.cm.dev.trl.txt");
  CHECK(recs[0].y_trn == Subset::dev);
  CHECK(recs[0].train_side());
  CHECK(cell_of(recs[0]) == Cell::train_spoof);
}

TEST_CASE("named configurations bind to their indicator rows") {
  CHECK(InterventionConfig::named("O").indicator() == "0 0 0 0");
  CHECK(InterventionConfig::named("A").indicator() == "0 1 0 1");
  CHECK(InterventionConfig::named("B").indicator() == "1 0 1 0");
  CHECK(InterventionConfig::named("C").indicator() == "0 1 1 0");
  CHECK(InterventionConfig::named("D").indicator() == "1 0 0 1");
  for (const auto& c : InterventionConfig::table()) {
    CHECK(InterventionConfig::parse_indicator(c.indicator()).name == c.name);
    CHECK(InterventionConfig::resolve(c.name).p == c.p);
  }
  CHECK(InterventionConfig::parse_indicator("0101").name == "A");
  const auto custom = InterventionConfig::parse_indicator("0.5 0 0.5 0", "half");
  CHECK(custom.name == "half");
  CHECK(custom.prob(Cell::train_spoof) == 0.5);
  CHECK_THROWS_AS(InterventionConfig::parse_indicator("0 1 2 0"), Error);
  CHECK_THROWS_AS(InterventionConfig::named("E"), Error);
}

TEST_CASE("plan sizes are floor(p * N) in every cell") {
  const auto recs = make_records(37);
  const auto spec = InterventionSpec::white_noise();
  std::vector<InterventionConfig> configs = InterventionConfig::table();
  configs.push_back(InterventionConfig::parse_indicator("0.5 0.3 0.77 0.01", "mixed"));
  for (const auto& c : configs) {
    CAPTURE(c.name);
    const auto p = plan(recs, c, spec, 1234);
    CHECK(p.trials.size() == recs.size());
    for (Cell cell : kCells) {
      CHECK(p.size_of(cell) == 37);
      CHECK(p.planned_count(cell) == floor_count(c.prob(cell), 37));
    }
  }
}

TEST_CASE("config A plans every train-bona file and no train-spoof file") {
  const auto recs = make_records(100);
  const auto p = plan(recs, InterventionConfig::named("A"), InterventionSpec::mu_law(), 1);
  CHECK(p.planned_count(Cell::train_bona) == 100);
  CHECK(p.planned_count(Cell::train_spoof) == 0);
  const auto o = plan(recs, InterventionConfig::named("O"), InterventionSpec::mu_law(), 1);
  for (Cell c : kCells) CHECK(o.planned_count(c) == 0);
}

TEST_CASE("p = 0.5 over 11 files plans exactly 5") {
  const auto recs = make_records(11);
  const auto p = plan(recs, InterventionConfig::parse_indicator("0.5 0.5 0.5 0.5", "half"),
                      InterventionSpec::codec(), 3);
  for (Cell c : kCells) CHECK(p.planned_count(c) == 5);
}

TEST_CASE("plan is reproducible and independent of record order") {
  auto recs = make_records(40);
  const auto cfg = InterventionConfig::parse_indicator("0.5 0.25 0.5 0.75", "mix");
  const auto a = plan(recs, cfg, InterventionSpec::white_noise(), 77);
  std::reverse(recs.begin(), recs.end());
  const auto b = plan(recs, cfg, InterventionSpec::white_noise(), 77);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].utt_id == b.trials[i].utt_id);
    CHECK(a.trials[i].intervention.has_value() == b.trials[i].intervention.has_value());
    if (a.trials[i].intervention) CHECK(a.trials[i].intervention->z == b.trials[i].intervention->z);
  }
  const auto c = plan(recs, cfg, InterventionSpec::white_noise(), 78);
  bool differs = false;
  for (std::size_t i = 0; i < a.trials.size(); ++i)
    differs = differs || a.trials[i].intervention.has_value() != c.trials[i].intervention.has_value();
  CHECK(differs);
}

TEST_CASE("deltas follow the indicator table") {
  TrialRecord bona{"b", {}, {}, ClassLabel::bona, Subset::eval};
  TrialRecord spoof{"s", {}, {}, ClassLabel::spoof, Subset::eval};
  const auto A = InterventionConfig::named("A");
  CHECK(deltas(bona, A).bona == 0.0);
  CHECK(deltas(bona, A).spf == 1.0);
  CHECK(deltas(spoof, A).bona == 1.0);
  CHECK(deltas(spoof, A).spf == 0.0);
  for (const auto& r : {bona, spoof}) {
    CHECK(deltas(r, InterventionConfig::named("O")).bona == 0.0);
    CHECK(deltas(r, InterventionConfig::named("O")).spf == 0.0);
  }
  // Own-class delta: 0 for A and B, 1 for C and D.
  for (const char* name : {"A", "B", "C", "D"}) {
    const auto c = InterventionConfig::named(name);
    const double own_b = deltas(bona, c).bona, own_s = deltas(spoof, c).spf;
    const double expected = (name[0] == 'A' || name[0] == 'B') ? 0.0 : 1.0;
    CHECK(own_b == expected);
    CHECK(own_s == expected);
  }
  TrialRecord train = bona;
  train.y_trn = Subset::train;
  CHECK_THROWS_AS(deltas(train, A), Error);
}

TEST_CASE("protocol round trip through write_protocol") {
  test::TempDir dir("protocol");
  auto recs = make_records(3);
  recs[0].speaker_id = "SPK1";
  recs[1].attack_id = "A03";
  std::vector<TrialRecord> train(recs.begin(), recs.begin() + 6);
  write_protocol(train, dir.path() / "protocol.train.txt");
  const auto back = parse_protocol(dir.path() / "protocol.train.txt");
  REQUIRE(back.size() == train.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].utt_id == train[i].utt_id);
    CHECK(back[i].y_cls == train[i].y_cls);
    CHECK(back[i].attack_id == train[i].attack_id);
  }
  CHECK(back[0].speaker_id == "SPK1");
}
