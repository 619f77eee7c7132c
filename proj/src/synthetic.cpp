#include "scoregraph/synthetic.h"

#include <algorithm>
#include <array>

namespace scoregraph {

Score make_synthetic_score(std::size_t notes, Rng& rng, const SyntheticOptions& options) {
  constexpr std::array<Tick, 8> kLengths = {1, 1, 2, 2, 3, 4, 6, 8};  // in sixteenths
  Score score;
  score.divisions_per_quarter = options.divisions_per_quarter;
  const Tick sixteenth = std::max(1, options.divisions_per_quarter / 4);

  Tick t = 0;
  while (score.notes.size() < notes) {
    const auto chord = std::min<std::size_t>(
        1 + rng.uniform(static_cast<std::uint64_t>(std::max(1, options.max_chord))),
        notes - score.notes.size());
    const auto root = 36 + static_cast<int>(rng.uniform(48));
    for (std::size_t c = 0; c < chord; ++c) {
      Note note;
      note.id = static_cast<std::int64_t>(score.notes.size());
      note.onset = t;
      note.pitch = std::min(127, root + static_cast<int>(rng.uniform(13)));
      note.duration = rng.uniform_real() < options.zero_duration_rate
                          ? 0
                          : kLengths[rng.uniform(kLengths.size())] * sixteenth;
      note.voice = static_cast<int>(c);
      score.notes.push_back(note);
    }
    Tick step = kLengths[rng.uniform(kLengths.size())] * sixteenth;
    if (rng.uniform_real() < options.rest_rate) step += (1 + static_cast<Tick>(rng.uniform(8))) * sixteenth * 2;
    t += step;
  }

  score.time_sigs.push_back({0, 4, 4});
  if (options.meter_changes && t > 0) {
    // Change meter at a couple of arbitrary positions.
    const Tick quarter = options.divisions_per_quarter;
    for (int i = 0; i < 2; ++i) {
      const Tick at = static_cast<Tick>(rng.uniform(static_cast<std::uint64_t>(t))) / quarter * quarter;
      if (at == 0) continue;
      const bool triple = rng.uniform(2) == 0;
      score.time_sigs.push_back({at, triple ? 3 : 6, triple ? 4 : 8});
    }
  }
  normalize_time_sigs(score);
  return sort_score(std::move(score)).score;
}

}  // namespace scoregraph
