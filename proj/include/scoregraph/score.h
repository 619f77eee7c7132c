/**
 * @file score.h
 * @brief Canonical in-memory score: integer-timed notes plus a time-signature map.
 *
 * All times are integers in per-score divisions (MIDI ticks or the note-list
 * document's divisions). Graph construction compares onsets and offsets
 * exactly, so no floating point time is ever stored.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scoregraph {

using Tick = std::int64_t;

struct Note {
  std::int64_t id = 0;
  Tick onset = 0;
  Tick duration = 0;
  int pitch = 0;
  std::optional<int> voice;
  std::optional<int> channel;

  Tick offset() const noexcept { return onset + duration; }
  bool operator==(const Note&) const = default;
};

struct TimeSigEvent {
  Tick at = 0;
  int numerator = 4;
  int denominator = 4;

  bool operator==(const TimeSigEvent&) const = default;
};

struct Score {
  std::vector<Note> notes;
  int divisions_per_quarter = 1;
  std::vector<TimeSigEvent> time_sigs;
  std::string source_name;

  bool operator==(const Score&) const = default;
};

struct Violation {
  std::string field;
  std::optional<std::int64_t> note_id;
  std::string message;
};

struct SortResult {
  Score score;
  /// original_ids[new_id] is the id the note carried before sorting.
  std::vector<std::int64_t> original_ids;
};

/// Orders notes by (onset, pitch, id), stable, and renumbers ids densely.
SortResult sort_score(Score score);

/// Empty iff every Note and Score invariant holds.
std::vector<Violation> validate_score(const Score& score);

/// Sorts time signatures by position (later duplicates win) and inserts a
/// 4/4 event at division 0 when none starts there.
void normalize_time_sigs(Score& score);

/// Parses the canonical note-list JSON document. Throws ParseError on
/// malformed input and ValidationError on out-of-range note values.
Score parse_note_json(std::string_view text, std::string source_name = {});

/// Inverse of parse_note_json for a normalized score.
std::string serialize_note_json(const Score& score);

std::string format_violations(std::span<const Violation> violations);

}  // namespace scoregraph
