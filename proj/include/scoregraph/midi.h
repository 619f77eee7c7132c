/**
 * @file midi.h
 * @brief Standard MIDI File (format 0/1) import.
 */

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scoregraph/score.h"

namespace scoregraph {

struct MidiImport {
  Score score;
  std::vector<std::string> warnings;
};

/// Merges all tracks into one sorted Score with times in ticks and
/// divisions_per_quarter set to the file's PPQ. Only note-on/off,
/// time-signature and end-of-track events are interpreted.
///
/// Same pitch+channel overlaps are matched FIFO. A note-on left open at the
/// end of its track is closed at that track's final tick; a note-off with no
/// open note is ignored. Both cases add a warning. Throws ParseError on a bad
/// header, SMPTE timing, format 2, or a truncated/invalid event stream.
MidiImport parse_midi(std::span<const std::uint8_t> bytes, std::string source_name = {});

}  // namespace scoregraph
