// Shared helpers for the scoregraph test suites.

#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "scoregraph/graph.h"
#include "scoregraph/rng.h"
#include "scoregraph/score.h"
#include "scoregraph/synthetic.h"

namespace scoregraph::testing {

/// Sorted score from (onset, duration, pitch) triples.
inline Score make_score(std::initializer_list<std::tuple<Tick, Tick, int>> notes,
                        int divisions_per_quarter = 4) {
  Score score;
  score.divisions_per_quarter = divisions_per_quarter;
  std::int64_t id = 0;
  for (const auto& [onset, duration, pitch] : notes) {
    Note n;
    n.id = id++;
    n.onset = onset;
    n.duration = duration;
    n.pitch = pitch;
    score.notes.push_back(n);
  }
  normalize_time_sigs(score);
  return sort_score(std::move(score)).score;
}

/// Score whose notes sit at the given onsets (duration 1, pitch rising in a group).
inline Score score_from_onsets(const std::vector<Tick>& onsets, Tick duration = 1) {
  Score score;
  score.divisions_per_quarter = 4;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    Note n;
    n.id = static_cast<std::int64_t>(i);
    n.onset = onsets[i];
    n.duration = duration;
    n.pitch = 60 + static_cast<int>(i % 12);
    score.notes.push_back(n);
  }
  normalize_time_sigs(score);
  return sort_score(std::move(score)).score;
}

/// Random score in the shape used by the oracle tests: 1..max_notes notes,
/// chords, zero durations, rests.
inline Score random_score(Rng& rng, std::size_t max_notes) {
  const auto n = 1 + static_cast<std::size_t>(rng.uniform(max_notes));
  SyntheticOptions opts;
  opts.max_chord = 1 + static_cast<int>(rng.uniform(6));
  opts.zero_duration_rate = 0.1;
  return make_synthetic_score(n, rng, opts);
}

inline std::vector<std::uint8_t> vlq(std::uint32_t v) {
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(v & 0x7F)};
  while (v >>= 7) out.insert(out.begin(), static_cast<std::uint8_t>(0x80 | (v & 0x7F)));
  return out;
}

/// Builds one MTrk body event by event.
class TrackBuilder {
 public:
  TrackBuilder& raw(std::uint32_t delta, std::initializer_list<std::uint8_t> bytes) {
    auto d = vlq(delta);
    data_.insert(data_.end(), d.begin(), d.end());
    data_.insert(data_.end(), bytes.begin(), bytes.end());
    return *this;
  }
  TrackBuilder& on(std::uint32_t delta, int pitch, int velocity = 100, int channel = 0) {
    return raw(delta, {static_cast<std::uint8_t>(0x90 | channel), static_cast<std::uint8_t>(pitch),
                       static_cast<std::uint8_t>(velocity)});
  }
  TrackBuilder& off(std::uint32_t delta, int pitch, int channel = 0) {
    return raw(delta, {static_cast<std::uint8_t>(0x80 | channel), static_cast<std::uint8_t>(pitch),
                       64});
  }
  TrackBuilder& time_sig(std::uint32_t delta, int num, int den_pow2) {
    return raw(delta, {0xFF, 0x58, 0x04, static_cast<std::uint8_t>(num),
                       static_cast<std::uint8_t>(den_pow2), 24, 8});
  }
  TrackBuilder& end(std::uint32_t delta = 0) { return raw(delta, {0xFF, 0x2F, 0x00}); }
  const std::vector<std::uint8_t>& bytes() const { return data_; }

 private:
  std::vector<std::uint8_t> data_;
};

inline void put_be(std::vector<std::uint8_t>& out, std::uint32_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::vector<std::uint8_t> midi_file(int format, int ppq,
                                           const std::vector<TrackBuilder>& tracks) {
  std::vector<std::uint8_t> out{'M', 'T', 'h', 'd'};
  put_be(out, 6, 4);
  put_be(out, static_cast<std::uint32_t>(format), 2);
  put_be(out, static_cast<std::uint32_t>(tracks.size()), 2);
  put_be(out, static_cast<std::uint32_t>(ppq), 2);
  for (const auto& t : tracks) {
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_be(out, static_cast<std::uint32_t>(t.bytes().size()), 4);
    out.insert(out.end(), t.bytes().begin(), t.bytes().end());
  }
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  static std::mt19937_64 gen{std::random_device{}()};
  auto dir = std::filesystem::temp_directory_path() /
             ("scoregraph_" + name + "_" + std::to_string(gen()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace scoregraph::testing
