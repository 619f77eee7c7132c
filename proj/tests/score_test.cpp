#include "scoregraph/score.h"

#include <algorithm>

#include <gtest/gtest.h>

#include "scoregraph/error.h"
#include "test_util.h"

namespace scoregraph {
namespace {

TEST(ParseNoteJson, SingleNote) {
  const Score s = parse_note_json(
      R"({"divisions_per_quarter": 4, "notes": [{"onset": 0, "duration": 4, "pitch": 60}]})");
  ASSERT_EQ(s.notes.size(), 1u);
  EXPECT_EQ(s.notes[0].id, 0);
  EXPECT_EQ(s.notes[0].onset, 0);
  EXPECT_EQ(s.notes[0].duration, 4);
  EXPECT_EQ(s.notes[0].pitch, 60);
  EXPECT_EQ(s.divisions_per_quarter, 4);
  // Missing time signatures default to 4/4 at 0.
  ASSERT_EQ(s.time_sigs.size(), 1u);
  EXPECT_EQ(s.time_sigs[0], (TimeSigEvent{0, 4, 4}));
}

TEST(ParseNoteJson, EqualOnsetsOrderedByPitch) {
  const Score s = parse_note_json(R"({"divisions_per_quarter": 4, "notes": [
      {"onset": 0, "duration": 1, "pitch": 64},
      {"onset": 0, "duration": 1, "pitch": 60}]})");
  ASSERT_EQ(s.notes.size(), 2u);
  EXPECT_EQ(s.notes[0].pitch, 60);
  EXPECT_EQ(s.notes[1].pitch, 64);
  EXPECT_EQ(s.notes[0].id, 0);
  EXPECT_EQ(s.notes[1].id, 1);
}

TEST(ParseNoteJson, PitchOutOfRangeNamesTheNote) {
  try {
    parse_note_json(R"({"divisions_per_quarter": 4, "notes": [
        {"onset": 0, "duration": 1, "pitch": 60},
        {"onset": 1, "duration": 1, "pitch": 128}]})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.note_ids(), std::vector<std::int64_t>{1});
    EXPECT_NE(std::string(e.what()).find("pitch"), std::string::npos);
  }
}

TEST(ParseNoteJson, NegativeValuesListEveryOffender) {
  try {
    parse_note_json(R"({"divisions_per_quarter": 4, "notes": [
        {"onset": -1, "duration": 1, "pitch": 60},
        {"onset": 1, "duration": 1, "pitch": 60},
        {"onset": 1, "duration": -2, "pitch": 60}]})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.note_ids(), (std::vector<std::int64_t>{0, 2}));
  }
}

TEST(ParseNoteJson, MalformedJsonReportsLine) {
  try {
    parse_note_json("{\n \"divisions_per_quarter\": 4,\n \"notes\": [ oops ]\n}", "bad.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3:"), std::string::npos) << e.what();
  }
}

TEST(ParseNoteJson, FieldErrorsCarryPath) {
  try {
    parse_note_json(R"({"divisions_per_quarter": 4, "notes": [{"onset": 0, "pitch": 60}]})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("notes[0].duration"), std::string::npos);
  }
  EXPECT_THROW(parse_note_json(R"({"divisions_per_quarter": 0, "notes": []})"), ParseError);
  EXPECT_THROW(parse_note_json(R"({"divisions_per_quarter": 4, "notes": [
      {"onset": 0, "duration": 1.5, "pitch": 60}]})"),
               ParseError);
  EXPECT_THROW(parse_note_json(R"({"divisions_per_quarter": 4,
      "time_signatures": [{"at": 0, "num": 3, "den": 3}], "notes": []})"),
               ValidationError);
}

TEST(ParseNoteJson, TimeSignaturesSortedWithDefaultInserted) {
  const Score s = parse_note_json(R"({"divisions_per_quarter": 4,
      "time_signatures": [{"at": 32, "num": 3, "den": 4}, {"at": 16, "num": 6, "den": 8}],
      "notes": []})");
  ASSERT_EQ(s.time_sigs.size(), 3u);
  EXPECT_EQ(s.time_sigs[0], (TimeSigEvent{0, 4, 4}));
  EXPECT_EQ(s.time_sigs[1], (TimeSigEvent{16, 6, 8}));
  EXPECT_EQ(s.time_sigs[2], (TimeSigEvent{32, 3, 4}));
}

TEST(SortScore, OrdersByOnsetThenPitch) {
  Score s;
  s.notes = {{0, 4, 1, 60}, {1, 0, 1, 64}, {2, 0, 1, 60}};
  const auto result = sort_score(s);
  ASSERT_EQ(result.score.notes.size(), 3u);
  EXPECT_EQ(result.score.notes[0].onset, 0);
  EXPECT_EQ(result.score.notes[0].pitch, 60);
  EXPECT_EQ(result.score.notes[1].onset, 0);
  EXPECT_EQ(result.score.notes[1].pitch, 64);
  EXPECT_EQ(result.score.notes[2].onset, 4);
  EXPECT_EQ(result.original_ids, (std::vector<std::int64_t>{2, 1, 0}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(result.score.notes[i].id, static_cast<std::int64_t>(i));
}

TEST(SortScore, SortedInputGivesIdentityRemap) {
  const Score s = testing::make_score({{0, 1, 60}, {0, 1, 64}, {2, 1, 60}});
  const auto result = sort_score(s);
  EXPECT_EQ(result.score, s);
  EXPECT_EQ(result.original_ids, (std::vector<std::int64_t>{0, 1, 2}));
}

TEST(SortScore, StableForIdenticalOnsetAndPitch) {
  Score s;
  Note a{0, 0, 3, 60};
  Note b{1, 0, 7, 60};
  s.notes = {a, b};
  const auto result = sort_score(s);
  EXPECT_EQ(result.score.notes[0].duration, 3);
  EXPECT_EQ(result.score.notes[1].duration, 7);
}

TEST(SortScore, IdempotentPermutation) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Score s = testing::random_score(rng, 80);
    // Shuffle note order and ids.
    for (std::size_t i = s.notes.size(); i > 1; --i) {
      std::swap(s.notes[i - 1], s.notes[rng.uniform(i)]);
    }
    const auto once = sort_score(s);
    const auto twice = sort_score(once.score);
    EXPECT_EQ(once.score, twice.score);
    auto key = [](const Note& n) { return std::tuple(n.onset, n.duration, n.pitch); };
    std::vector<std::tuple<Tick, Tick, int>> before, after;
    for (const auto& n : s.notes) before.push_back(key(n));
    for (const auto& n : once.score.notes) after.push_back(key(n));
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    EXPECT_EQ(before, after);
  }
}

TEST(ValidateScore, ValidScoreHasNoViolations) {
  EXPECT_TRUE(validate_score(testing::make_score({{0, 1, 60}, {1, 2, 62}})).empty());
}

TEST(ValidateScore, NegativeDuration) {
  Score s = testing::make_score({{0, 1, 60}, {1, 2, 62}});
  s.notes[1].duration = -1;
  const auto v = validate_score(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "duration");
  EXPECT_EQ(v[0].note_id, 1);
}

TEST(ValidateScore, OneViolationPerDuplicatePair) {
  Score s = testing::make_score({{0, 1, 60}, {1, 2, 62}, {2, 1, 64}});
  s.notes[1].id = 0;
  auto v = validate_score(s);
  // id 0 duplicated once; id 1 is then missing from the dense range but id 2 is
  // still in range, so only the pair is reported.
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "id");
  s.notes[2].id = 0;
  v = validate_score(s);
  EXPECT_EQ(v.size(), 3u);  // three pairs among three notes sharing id 0
}

TEST(ValidateScore, ScoreLevelFields) {
  Score s = testing::make_score({{0, 1, 60}});
  s.divisions_per_quarter = 0;
  s.time_sigs = {{4, 3, 5}};
  const auto v = validate_score(s);
  EXPECT_EQ(v.size(), 3u);
}

TEST(NoteJson, ParseSerializeParseIsIdentity) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Score s = testing::random_score(rng, 60);
    const Score first = parse_note_json(serialize_note_json(s), "x");
    const Score second = parse_note_json(serialize_note_json(first), "x");
    EXPECT_EQ(first, second);
    EXPECT_EQ(first.notes.size(), s.notes.size());
    EXPECT_EQ(first.time_sigs, s.time_sigs);
  }
}

}  // namespace
}  // namespace scoregraph
